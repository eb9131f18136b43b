"""Random, temporal and project-fold splits, plus the leakage audit.

The temporal policy sorts pairs by (pair_date, issue_id, commit_sha) and
takes the oldest 80% for training, the next 10% for validation and the
newest 10% for testing. Sizes are floor-based, carved out in train, val
order with the test partition absorbing the remainder. The audit passes
when no training or validation pair is newer than any test pair; equal
days are allowed because dates are day-granular.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import ProjectDataset
from .errors import AuditError, DataError, SchemaError, ValidationError


@dataclass(frozen=True)
class AuditReport:
    policy: str
    leaked_pairs: tuple[tuple[str, str], ...]
    passed: bool

    def __post_init__(self):
        if self.passed != (len(self.leaked_pairs) == 0):
            raise ValidationError("audit passed flag inconsistent with leaked_pairs")


@dataclass(frozen=True)
class SplitPlan:
    policy: str
    ratios: tuple[float, float, float]
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]
    seed: int | None
    audit: AuditReport

    def partitions(self) -> dict[str, tuple[str, ...]]:
        return {"train": self.train, "val": self.val, "test": self.test}


@dataclass(frozen=True)
class Fold:
    fold_index: int
    train_projects: tuple[str, ...]
    test_projects: tuple[str, ...]


def _check_ratios(ratios) -> tuple[float, float, float]:
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3:
        raise ValidationError(f"need 3 ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise ValidationError(f"ratios must be non-negative: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValidationError(f"ratios must sum to 1, got {sum(ratios)!r}")
    return ratios


def _partition_sizes(n: int, ratios) -> tuple[int, int, int]:
    n_train = math.floor(n * ratios[0])
    n_val = math.floor(n * ratios[1])
    return n_train, n_val, n - n_train - n_val


def random_split(dataset: ProjectDataset, ratios=(0.8, 0.1, 0.1),
                 seed: int = 0) -> SplitPlan:
    """Seed-deterministic shuffle, then contiguous partition."""
    ratios = _check_ratios(ratios)
    if not dataset.pairs:
        raise DataError(f"project {dataset.project}: cannot split an empty dataset")
    ids = [p.pair_id for p in dataset.pairs]
    random.Random(seed).shuffle(ids)
    n_train, n_val, _ = _partition_sizes(len(ids), ratios)
    plan = SplitPlan(
        policy="random",
        ratios=ratios,
        train=tuple(ids[:n_train]),
        val=tuple(ids[n_train:n_train + n_val]),
        test=tuple(ids[n_train + n_val:]),
        seed=seed,
        audit=_EMPTY_AUDIT,
    )
    return _with_audit(plan, dataset)


def temporal_split(dataset: ProjectDataset, ratios=(0.8, 0.1, 0.1)) -> SplitPlan:
    """Chronological partition; oldest data trains, newest data tests.

    Ties on the day are broken by (issue_id, commit_sha) so the plan is
    fully determined by the dataset. The attached audit always passes.
    """
    ratios = _check_ratios(ratios)
    if not dataset.pairs:
        raise DataError(f"project {dataset.project}: cannot split an empty dataset")
    for pair in dataset.pairs:
        if pair.pair_date is None:
            raise DataError(f"pair {pair.pair_id} has no pair_date")
    ordered = sorted(dataset.pairs, key=lambda p: (p.pair_date, p.issue_id, p.commit_sha))
    ids = [p.pair_id for p in ordered]
    n_train, n_val, _ = _partition_sizes(len(ids), ratios)
    plan = SplitPlan(
        policy="temporal",
        ratios=ratios,
        train=tuple(ids[:n_train]),
        val=tuple(ids[n_train:n_train + n_val]),
        test=tuple(ids[n_train + n_val:]),
        seed=None,
        audit=_EMPTY_AUDIT,
    )
    plan = _with_audit(plan, dataset)
    if not plan.audit.passed:
        raise AuditError(
            f"temporal split failed its own audit for {dataset.project}",
            report=plan.audit,
        )
    return plan


def audit_leakage(plan: SplitPlan, dataset: ProjectDataset) -> AuditReport:
    """Report every test pair older than the newest train/val pair.

    Passes iff max(train+val pair_date) <= min(test pair_date); same-day
    overlap is allowed since all dates are day-truncated.
    """
    dates = {p.pair_id: p.pair_date for p in dataset.pairs}
    for pid in (*plan.train, *plan.val, *plan.test):
        if pid not in dates:
            raise DataError(f"plan references unknown pair {pid}")
    fit_ids = plan.train + plan.val
    if not fit_ids or not plan.test:
        return AuditReport(policy=plan.policy, leaked_pairs=(), passed=True)
    fit_max = max(dates[pid] for pid in fit_ids)
    leaked = tuple(
        (pid, fit_max.isoformat())
        for pid in plan.test
        if dates[pid] < fit_max
    )
    return AuditReport(policy=plan.policy, leaked_pairs=leaked, passed=not leaked)


_EMPTY_AUDIT = AuditReport(policy="unaudited", leaked_pairs=(), passed=True)


def _with_audit(plan: SplitPlan, dataset: ProjectDataset) -> SplitPlan:
    audit = audit_leakage(plan, dataset)
    return SplitPlan(
        policy=plan.policy, ratios=plan.ratios, train=plan.train,
        val=plan.val, test=plan.test, seed=plan.seed, audit=audit,
    )


def project_folds(projects: list[str], seed: int = 0, n_folds: int = 5) -> list[Fold]:
    """Seed-deterministic assignment of projects to cross-validation folds.

    Each fold holds |projects| / n_folds test projects; across all folds
    every project is tested exactly once.
    """
    if len(set(projects)) != len(projects):
        raise ValidationError("duplicate project names")
    if n_folds < 1:
        raise ValidationError(f"n_folds must be >= 1, got {n_folds}")
    if len(projects) % n_folds != 0:
        divisors = [d for d in range(2, len(projects) + 1) if len(projects) % d == 0]
        raise ValidationError(
            f"{len(projects)} projects not divisible into {n_folds} folds; "
            f"try n_folds in {divisors}"
        )
    shuffled = list(projects)
    random.Random(seed).shuffle(shuffled)
    per_fold = len(projects) // n_folds
    folds = []
    for i in range(n_folds):
        test = shuffled[i * per_fold:(i + 1) * per_fold]
        train = [p for p in shuffled if p not in test]
        folds.append(Fold(
            fold_index=i,
            train_projects=tuple(sorted(train)),
            test_projects=tuple(sorted(test)),
        ))
    return folds


# --- persistence ------------------------------------------------------------

def write_split_plan(plan: SplitPlan, path: Path) -> None:
    payload = {
        "policy": plan.policy,
        "ratios": list(plan.ratios),
        "seed": plan.seed,
        "train": list(plan.train),
        "val": list(plan.val),
        "test": list(plan.test),
        "audit": {
            "policy": plan.audit.policy,
            "leaked_pairs": [list(lp) for lp in plan.audit.leaked_pairs],
            "passed": plan.audit.passed,
        },
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def read_split_plan(path: Path) -> SplitPlan:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    for key in ("policy", "ratios", "train", "val", "test", "audit"):
        if key not in raw:
            raise SchemaError(f"{path}: missing field {key!r}")
    audit = AuditReport(
        policy=raw["audit"]["policy"],
        leaked_pairs=tuple(tuple(lp) for lp in raw["audit"]["leaked_pairs"]),
        passed=raw["audit"]["passed"],
    )
    return SplitPlan(
        policy=raw["policy"],
        ratios=tuple(raw["ratios"]),
        train=tuple(raw["train"]),
        val=tuple(raw["val"]),
        test=tuple(raw["test"]),
        seed=raw.get("seed"),
        audit=audit,
    )
