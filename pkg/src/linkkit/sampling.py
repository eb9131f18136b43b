"""Constrained negative sampling and balanced dataset construction.

False links are drawn from the issue x commit cross product filtered by
four constraints: same project (guaranteed by input), at most window_days
between commit author date and issue creation date, no id reference from
the commit to the issue, and different author/creator identities. An equal
number of false links is then sampled uniformly without replacement.
"""

from __future__ import annotations

import logging
import random
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from datetime import timedelta
from typing import NamedTuple

from .corpus import (
    FALSE_LINK,
    Commit,
    DatasetManifest,
    Issue,
    LinkPair,
    ProjectDataset,
    Provenance,
    make_pair,
    utc_now_iso,
)
from .errors import DataError, ValidationError
from .ingestion import ReferencePattern, derive_patterns, match_references

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplingConfig:
    window_days: int = 7
    seed: int = 0
    max_candidates_per_issue: int | None = None

    def __post_init__(self):
        if self.window_days < 0:
            raise ValidationError(f"window_days must be >= 0, got {self.window_days}")


class FalseLinkSample(NamedTuple):
    pairs: list[LinkPair]
    imbalanced: bool


def candidate_false_pairs(issues: list[Issue], commits: list[Commit],
                          true_links: list[LinkPair], cfg: SamplingConfig,
                          patterns: list[ReferencePattern] | None = None,
                          ) -> set[tuple[str, str]]:
    """Exactly the (issue_id, commit_sha) pairs satisfying all four constraints."""
    if patterns is None:
        patterns = derive_patterns(issues)
    true_keys = {(p.issue_id, p.commit_sha) for p in true_links}
    referenced = {c.sha: set(match_references(c.message, patterns)) for c in commits}

    ordered = sorted(commits, key=lambda c: (c.authored_date, c.sha))
    authored = [c.authored_date for c in ordered]
    window = timedelta(days=cfg.window_days)

    result: set[tuple[str, str]] = set()
    for issue in issues:
        lo = bisect_left(authored, issue.created_date - window)
        hi = bisect_right(authored, issue.created_date + window)
        eligible = []
        for commit in ordered[lo:hi]:
            if commit.author.strip() == issue.creator.strip():
                continue
            if issue.issue_id in referenced[commit.sha]:
                continue
            if (issue.issue_id, commit.sha) in true_keys:
                continue
            eligible.append(commit)
        if cfg.max_candidates_per_issue is not None:
            eligible = eligible[: cfg.max_candidates_per_issue]
        result.update((issue.issue_id, c.sha) for c in eligible)
    return result


def sample_false_links(candidates: set[tuple[str, str]], n_true: int,
                       cfg: SamplingConfig, issues: list[Issue],
                       commits: list[Commit]) -> FalseLinkSample:
    """Seed-deterministic uniform selection of min(n_true, |candidates|) pairs.

    Returns all candidates with the imbalance flag set when the pool is too
    small to balance the dataset.
    """
    ordered = sorted(candidates)
    k = min(n_true, len(ordered))
    chosen = random.Random(cfg.seed).sample(ordered, k) if k else []

    issue_by_id = {i.issue_id: i for i in issues}
    commit_by_sha = {c.sha: c for c in commits}
    pairs = [
        make_pair(
            issue_by_id[issue_id], commit_by_sha[sha], FALSE_LINK,
            Provenance(method="negative_sample", seed=cfg.seed),
        )
        for issue_id, sha in chosen
    ]
    pairs.sort(key=lambda p: (p.pair_date, p.issue_id, p.commit_sha))

    imbalanced = len(ordered) < n_true
    if imbalanced:
        logger.warning(
            "candidate pool (%d) smaller than true-link count (%d); dataset imbalanced",
            len(ordered), n_true,
        )
    return FalseLinkSample(pairs=pairs, imbalanced=imbalanced)


def build_balanced_dataset(issues: list[Issue], commits: list[Commit],
                           cfg: SamplingConfig, project: str,
                           built_at: str | None = None,
                           patterns: list[ReferencePattern] | None = None,
                           ) -> ProjectDataset:
    """Extracted true links plus sampled false links, with a build manifest.

    Equals the composition of extract_true_links, candidate_false_pairs and
    sample_false_links. Raises DataError when no true links exist.
    """
    from .ingestion import extract_true_links

    if patterns is None:
        patterns = derive_patterns(issues)
    true_links = extract_true_links(issues, commits, patterns)
    if not true_links:
        raise DataError(f"project {project}: zero true links, nothing to learn")
    candidates = candidate_false_pairs(issues, commits, true_links, cfg, patterns)
    sample = sample_false_links(candidates, len(true_links), cfg, issues, commits)

    manifest = DatasetManifest(
        project=project,
        n_true=len(true_links),
        n_false=len(sample.pairs),
        window_days=cfg.window_days,
        seed=cfg.seed,
        built_at=built_at or utc_now_iso(),
        source_counts={"issues": len(issues), "commits": len(commits)},
    )
    return ProjectDataset(
        project=project,
        pairs=tuple(true_links) + tuple(sample.pairs),
        manifest=manifest,
    )


def check_false_link_constraints(pair: LinkPair, issues: list[Issue],
                                 commits: list[Commit], true_links: list[LinkPair],
                                 cfg: SamplingConfig,
                                 patterns: list[ReferencePattern] | None = None,
                                 ) -> list[str]:
    """Re-check the four sampling constraints for one pair against the corpus.

    Returns a list of violated-constraint descriptions; empty means valid.
    """
    if patterns is None:
        patterns = derive_patterns(issues)
    issue_by_id = {i.issue_id: i for i in issues}
    commit_by_sha = {c.sha: c for c in commits}
    violations = []

    issue = issue_by_id.get(pair.issue_id)
    commit = commit_by_sha.get(pair.commit_sha)
    if issue is None or commit is None:
        return [f"pair ({pair.issue_id}, {pair.commit_sha}) not in corpus"]

    gap = abs((commit.authored_date - issue.created_date).days)
    if gap > cfg.window_days:
        violations.append(f"temporal gap {gap}d exceeds window {cfg.window_days}d")
    if pair.issue_id in match_references(commit.message, patterns):
        violations.append("commit references the issue")
    if (pair.issue_id, pair.commit_sha) in {(p.issue_id, p.commit_sha) for p in true_links}:
        violations.append("pair is a known true link")
    if commit.author.strip() == issue.creator.strip():
        violations.append("commit author equals issue creator")
    return violations
