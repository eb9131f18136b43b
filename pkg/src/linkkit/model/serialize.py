"""Deterministic pair-to-text serialization for the encoder input.

Each pair renders to an issue half and a commit half. Free text (the
normalized title and commit message) may be truncated to fit the encoder
budget, proportionally to the two sides' lengths; the bracketed metadata
tokens are never truncated.
"""

from __future__ import annotations

import math

from ..corpus import Commit, Issue, LinkPair
from ..errors import TrainingError
from ..preprocess import normalize_text

DEFAULT_SEP_TOKEN = "</s>"


def _issue_free_text(issue: Issue, include_description: bool) -> str:
    text = normalize_text(issue.title)
    if include_description and issue.description:
        text = (text + " " + normalize_text(issue.description)).strip()
    return text


def _issue_metadata(issue: Issue) -> list[str]:
    return [
        f"[type={issue.type_norm}]",
        f"[creator={issue.creator}]",
        f"[created={issue.created_date.isoformat()}]",
        f"[updated={issue.updated_date.isoformat()}]",
    ]


def _commit_metadata(commit: Commit) -> list[str]:
    return [
        f"[author={commit.author}]",
        f"[committer={commit.committer}]",
        f"[authored={commit.authored_date.isoformat()}]",
        f"[status={commit.status_norm}]",
    ]


def _compose(prefix: str, free_words: list[str], metadata: list[str]) -> str:
    return " ".join([prefix, *free_words, *metadata])


def render_halves(issue: Issue, commit: Commit, include_description: bool = False,
                  tokenizer=None, max_input_length: int | None = None,
                  with_metadata: bool = True) -> tuple[str, str]:
    """Render the issue and commit halves, fitting the token budget if given.

    When the pair encoding of both halves exceeds max_input_length, free
    text is cut word by word from the tail of each side, proportionally to
    the sides' word counts, until the encoding fits or no free text is
    left. Metadata brackets always survive.

    with_metadata=False renders the bare normalized free texts; the lexical
    baseline uses that form because its metadata travels in the one-hot
    vector instead.
    """
    issue_words = _issue_free_text(issue, include_description).split()
    commit_words = normalize_text(commit.message).split()
    if not with_metadata:
        return " ".join(issue_words), " ".join(commit_words)
    issue_meta = _issue_metadata(issue)
    commit_meta = _commit_metadata(commit)

    while True:
        issue_half = _compose("issue:", issue_words, issue_meta)
        commit_half = _compose("commit:", commit_words, commit_meta)
        if tokenizer is None or max_input_length is None:
            return issue_half, commit_half
        total = len(tokenizer(issue_half, commit_half)["input_ids"])
        if total <= max_input_length or not (issue_words or commit_words):
            return issue_half, commit_half
        overflow = total - max_input_length
        n_issue, n_commit = len(issue_words), len(commit_words)
        cut_issue = min(n_issue, math.ceil(overflow * n_issue / (n_issue + n_commit)))
        cut_commit = min(n_commit, math.ceil(overflow * n_commit / (n_issue + n_commit)))
        if cut_issue == 0 and cut_commit == 0:
            cut_issue, cut_commit = int(n_issue >= n_commit), int(n_commit > n_issue)
        issue_words = issue_words[:n_issue - cut_issue]
        commit_words = commit_words[:n_commit - cut_commit]


def serialize_pair(issue: Issue, commit: Commit, sep_token: str = DEFAULT_SEP_TOKEN,
                   include_description: bool = False, tokenizer=None,
                   max_input_length: int | None = None) -> str:
    """Single-string serialization with the encoder's pair separator."""
    issue_half, commit_half = render_halves(
        issue, commit, include_description=include_description,
        tokenizer=tokenizer, max_input_length=max_input_length,
    )
    return f"{issue_half} {sep_token} {commit_half}"


def serialize_pairs(pairs: list[LinkPair], include_description: bool = False,
                    tokenizer=None, max_input_length: int | None = None,
                    with_metadata: bool = True) -> tuple[list[str], list[str]]:
    """Halves for a batch of pairs; failures name the offending pair."""
    issue_halves, commit_halves = [], []
    for pair in pairs:
        try:
            ih, ch = render_halves(
                pair.issue, pair.commit, include_description=include_description,
                tokenizer=tokenizer, max_input_length=max_input_length,
                with_metadata=with_metadata,
            )
        except Exception as exc:
            raise TrainingError(f"failed to serialize pair {pair.pair_id}: {exc}") from exc
        issue_halves.append(ih)
        commit_halves.append(ch)
    return issue_halves, commit_halves
