"""Synthetic project corpora with controllable link signal.

Two families:

* shared_token_corpus: each linked pair shares one rare signal token drawn
  from a pool reused across projects, so the linking rule is project
  independent and lexically visible (cosine separates it perfectly).
* correspondence_corpus: the issue carries ``req<k>`` and its real commit
  carries ``impl<k>``; there is no lexical overlap on the signal, only a
  learnable token correspondence, plus a noisy topic-overlap cue that gives
  lexical models partial signal. A few extra symbols appear only late in
  the timeline so temporally-new data is slightly harder.

Dates are laid out one pair per day and signal symbols rotate, so within
any negative-sampling window the issue and commit symbols of non-linked
pairs never coincide. Commit messages reference their issue id, which is
what makes true-link extraction find exactly the planted links.
"""

from __future__ import annotations

import hashlib
import random
from datetime import date, timedelta

from linkkit.corpus import Commit, Issue
from linkkit.preprocess import normalize_commit_status, normalize_issue_type

START = date(2020, 1, 6)

_TYPE_CHOICES = ("Bug", "Improvement", "New Feature", "Task", "Epic")
_STATUS_CHOICES = ("Fixed", "closed", "Done")


def _sha(key: str, i: int) -> str:
    return hashlib.sha1(f"{key}-{i}".encode("utf-8")).hexdigest()


def _make_issue(key, i, title, creator, created, source="jira", rng=None):
    type_raw = rng.choice(_TYPE_CHOICES)
    return Issue(
        issue_id=f"{key}-{i}",
        title=title,
        description="",
        type_raw=type_raw,
        type_norm=normalize_issue_type(type_raw),
        creator=creator,
        created_date=created,
        updated_date=created + timedelta(days=rng.randrange(0, 3)),
        source=source,
    )


def _make_commit(key, i, message, author, authored, rng=None):
    status_raw = rng.choice(_STATUS_CHOICES)
    return Commit(
        sha=_sha(key, i),
        message=message,
        author=author,
        committer=f"integrator{i % 3}",
        authored_date=authored,
        committed_date=authored + timedelta(days=rng.randrange(0, 2)),
        status_raw=status_raw,
        status_norm=normalize_commit_status(status_raw),
    )


def shared_token_corpus(key: str, n_links: int = 100, seed: int = 0,
                        start: date = START, pool_size: int = 40,
                        ) -> tuple[list[Issue], list[Commit]]:
    """Linked pairs share one rare pool token; the pool is global."""
    rng = random.Random(f"{key}-{seed}")
    pool = [f"sig{k}" for k in range(pool_size)]
    issue_fill = [f"iword{w}" for w in range(30)]
    commit_fill = [f"cword{w}" for w in range(30)]
    issues, commits = [], []
    for i in range(n_links):
        day = start + timedelta(days=i)
        token = pool[i % pool_size]
        title = f"problem with {token} path " + " ".join(rng.sample(issue_fill, 3))
        message = (
            f"handle {token} case " + " ".join(rng.sample(commit_fill, 3))
            + f"\n\nRefs {key}-{i}"
        )
        issues.append(_make_issue(key, i, title, f"user{i % 7}", day, rng=rng))
        commits.append(_make_commit(key, i, message, f"dev{i % 5}", day, rng=rng))
    return issues, commits


def correspondence_corpus(key: str = "PGK", n_links: int = 650, seed: int = 0,
                          start: date = START, n_symbols: int = 30,
                          n_late_symbols: int = 3,
                          ) -> tuple[list[Issue], list[Commit]]:
    """req/impl correspondence signal, topic-overlap side channel, mild drift.

    Topics drift slowly with time, so temporally-near false pairs share
    topics almost as often as linked pairs and the lexical cue stays weak.
    Symbols rotate, so in-window negatives never have matching symbols.
    """
    rng = random.Random(f"{key}-{seed}")
    topics = [f"topic{t}" for t in range(12)]
    issue_fill = [f"iword{w}" for w in range(40)]
    commit_fill = [f"cword{w}" for w in range(40)]
    late_start = int(n_links * 0.88)

    issues, commits = [], []
    for i in range(n_links):
        day = start + timedelta(days=i)
        if i >= late_start and i % 11 == 0:
            k = n_symbols + (i % n_late_symbols)
        else:
            k = i % n_symbols
        block_topic = topics[(i // 16) % 12]
        topic_i = block_topic if rng.random() < 0.8 else rng.choice(topics)
        topic_c = topic_i if rng.random() < 0.7 else rng.choice(topics)
        title = (
            f"please add req{k} support {topic_i} "
            + " ".join(rng.sample(issue_fill, 4))
        )
        message = (
            f"implement impl{k} handler {topic_c} "
            + " ".join(rng.sample(commit_fill, 4))
            + f"\n\nRefs {key}-{i}"
        )
        authored = day + timedelta(days=rng.randrange(0, 7))
        issues.append(_make_issue(key, i, title, f"user{i % 7}", day, rng=rng))
        commits.append(_make_commit(key, i, message, f"dev{i % 5}", authored, rng=rng))
    return issues, commits


def random_grid_corpus(key: str, n_issues: int, n_commits: int, seed: int,
                       day_span: int = 30, start: date = START,
                       ref_rate: float = 0.3) -> tuple[list[Issue], list[Commit]]:
    """Unstructured corpus for oracle-equality and property tests."""
    rng = random.Random(seed)
    issues, commits = [], []
    for i in range(n_issues):
        day = start + timedelta(days=rng.randrange(day_span))
        issues.append(_make_issue(
            key, i, f"issue number {i} " + " ".join(rng.sample("abcdefgh", 2)),
            f"person{rng.randrange(6)}", day, rng=rng,
        ))
    for j in range(n_commits):
        day = start + timedelta(days=rng.randrange(day_span))
        message = f"change set {j}"
        if rng.random() < ref_rate and issues:
            target = rng.randrange(n_issues)
            message += f"\n\nRefs {key}-{target}"
        commits.append(_make_commit(
            key, j, message, f"person{rng.randrange(6)}", day, rng=rng,
        ))
    return issues, commits
