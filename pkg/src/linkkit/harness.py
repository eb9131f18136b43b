"""Orchestration of the four experiment protocols.

rq1/rq2 train and evaluate per project under the random or temporal
policy. rq3 pools the temporal-first 80% of each training project, trains
one model per fold, then continues fine-tuning on each held-out project's
own history before evaluating on its newest 10%. rq4 evaluates the pooled
fold model directly on held-out projects with no target-project data.

Every run writes report.csv / report.md / metrics.json plus a
reproducibility manifest with all seeds, configs and data fingerprints,
and refuses to train on any pair assigned to its evaluation set.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .corpus import LinkPair, ProjectDataset, read_dataset
from .errors import AuditError, DataError, ValidationError
from .evaluation import (
    Aggregate,
    ConfusionCounts,
    Metrics,
    aggregate,
    render_report,
    write_metrics_json,
)
from .model import (
    ModelHandle,
    TrainConfig,
    classify,
    data_fingerprint,
    fine_tune,
    predict,
)
from .sampling import SamplingConfig
from .splitting import SplitPlan, audit_leakage, project_folds, random_split, temporal_split

logger = logging.getLogger(__name__)

RQS = ("rq1", "rq2", "rq3", "rq4")


@dataclass
class ExperimentConfig:
    rq: str
    projects: list[str]
    dataset_dir: Path
    output_dir: Path
    train: TrainConfig = field(default_factory=TrainConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    fold_seed: int = 0
    n_folds: int = 5
    split_seed: int = 0
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if self.rq not in RQS:
            raise ValidationError(f"rq must be one of {RQS}, got {self.rq!r}")
        if not self.projects:
            raise ValidationError("projects must be non-empty")
        if self.rq in ("rq3", "rq4") and len(self.projects) < 2:
            raise ValidationError(f"{self.rq} requires at least 2 projects")
        self.dataset_dir = Path(self.dataset_dir)
        self.output_dir = Path(self.output_dir)


@dataclass
class MetricsReport:
    name: str
    results: dict[str, tuple[ConfusionCounts, Metrics]]
    summary: Aggregate
    manifest: dict

    @property
    def mean(self) -> Metrics:
        return self.summary.mean

    @property
    def std(self) -> Metrics:
        return self.summary.std


def _load_project(cfg: ExperimentConfig, project: str) -> ProjectDataset:
    path = cfg.dataset_dir / f"{project}.jsonl"
    if not path.exists():
        raise DataError(f"no dataset for project {project} at {path}")
    return read_dataset(path)


def _subset(dataset: ProjectDataset, ids) -> list[LinkPair]:
    by_id = dataset.pairs_by_id()
    return [by_id[i] for i in ids]


def _check_no_overlap(train_ids: set[str], eval_ids: set[str], context: str) -> None:
    overlap = train_ids & eval_ids
    if overlap:
        raise DataError(
            f"{context}: {len(overlap)} pair(s) shared between training and "
            f"evaluation, e.g. {sorted(overlap)[:3]}"
        )


def _evaluate(handle: ModelHandle, pairs: list[LinkPair], threshold: float):
    probs = predict(handle, pairs)
    preds = [classify(p, threshold) for p in probs]
    from .evaluation import compute_metrics

    return compute_metrics([p.label for p in pairs], preds)


def _finish_report(cfg: ExperimentConfig, name: str, results, manifest) -> MetricsReport:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    render_report(results, "csv", cfg.output_dir / "report.csv")
    render_report(results, "markdown", cfg.output_dir / "report.md")
    write_metrics_json(results, cfg.output_dir / "metrics.json")
    (cfg.output_dir / "run_manifest.json").write_text(
        json.dumps(manifest, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return MetricsReport(
        name=name,
        results=results,
        summary=aggregate({p: m for p, (_, m) in results.items()}),
        manifest=manifest,
    )


def _base_manifest(cfg: ExperimentConfig, policy: str) -> dict:
    return {
        "rq": cfg.rq,
        "policy": policy,
        "train_config": asdict(cfg.train),
        "sampling_config": asdict(cfg.sampling),
        "ratios": list(cfg.ratios),
        "split_seed": cfg.split_seed,
        "fold_seed": cfg.fold_seed,
        "n_folds": cfg.n_folds,
        "projects": {},
    }


def _plan_for(dataset: ProjectDataset, policy: str, cfg: ExperimentConfig) -> SplitPlan:
    if policy == "random":
        return random_split(dataset, cfg.ratios, cfg.split_seed)
    return temporal_split(dataset, cfg.ratios)


def run_project_based(cfg: ExperimentConfig, policy: str) -> MetricsReport:
    """One model per project, split per the requested policy (rq1/rq2).

    Temporal runs must pass the leakage audit before any training starts.
    """
    if policy not in ("random", "temporal"):
        raise ValidationError(f"policy must be random or temporal, got {policy!r}")
    results: dict[str, tuple[ConfusionCounts, Metrics]] = {}
    manifest = _base_manifest(cfg, policy)

    for project in cfg.projects:
        dataset = _load_project(cfg, project)
        plan = _plan_for(dataset, policy, cfg)
        if policy == "temporal":
            audit = audit_leakage(plan, dataset)
            if not audit.passed:
                raise AuditError(
                    f"project {project}: temporal split leaks "
                    f"{len(audit.leaked_pairs)} pair(s)", report=audit,
                )
        train_pairs = _subset(dataset, plan.train)
        val_pairs = _subset(dataset, plan.val)
        test_pairs = _subset(dataset, plan.test)
        _check_no_overlap(set(plan.train) | set(plan.val), set(plan.test),
                          f"project {project}")

        handle = fine_tune(train_pairs, val_pairs, cfg.train,
                           cfg.output_dir / "models" / project)
        results[project] = _evaluate(handle, test_pairs, cfg.train.threshold)
        manifest["projects"][project] = {
            "dataset_fingerprint": data_fingerprint(list(dataset.pairs)),
            "train_fingerprint": data_fingerprint(train_pairs),
            "test_fingerprint": data_fingerprint(test_pairs),
            "n_pairs": len(dataset.pairs),
            "audit_passed": plan.audit.passed,
        }
        logger.info("%s [%s]: F1 %.4f", project, policy, results[project][1].f1)

    return _finish_report(cfg, f"project-based-{policy}", results, manifest)


def _temporal_plans(cfg: ExperimentConfig) -> dict[str, tuple[ProjectDataset, SplitPlan]]:
    # rq3/rq4 reuse the same temporal split files as rq2.
    out = {}
    for project in cfg.projects:
        dataset = _load_project(cfg, project)
        out[project] = (dataset, temporal_split(dataset, cfg.ratios))
    return out


def run_intermediate_finetune(cfg: ExperimentConfig) -> MetricsReport:
    """Pool the training projects, then continue fine-tuning per test project (rq3)."""
    folds = project_folds(cfg.projects, cfg.fold_seed, cfg.n_folds)
    plans = _temporal_plans(cfg)
    results: dict[str, tuple[ConfusionCounts, Metrics]] = {}
    manifest = _base_manifest(cfg, "temporal")
    manifest["folds"] = []

    for fold in folds:
        pooled_train: list[LinkPair] = []
        pooled_val: list[LinkPair] = []
        for project in fold.train_projects:
            dataset, plan = plans[project]
            pooled_train.extend(_subset(dataset, plan.train))
            pooled_val.extend(_subset(dataset, plan.val))

        held_out_ids = {
            pair.pair_id
            for project in fold.test_projects
            for pair in plans[project][0].pairs
        }
        _check_no_overlap({p.pair_id for p in pooled_train}, held_out_ids,
                          f"fold {fold.fold_index} pooled stage")

        fold_dir = cfg.output_dir / "models" / f"fold{fold.fold_index}"
        base_handle = fine_tune(pooled_train, pooled_val, cfg.train, fold_dir / "pooled")

        fold_record = {
            "fold_index": fold.fold_index,
            "train_projects": list(fold.train_projects),
            "test_projects": list(fold.test_projects),
            "pooled_train_fingerprint": data_fingerprint(pooled_train),
            "pooled_train_size": len(pooled_train),
            "per_project_train_sizes": {
                p: len(plans[p][1].train) for p in fold.train_projects
            },
            "tests": {},
        }

        for project in fold.test_projects:
            dataset, plan = plans[project]
            target_train = _subset(dataset, plan.train)
            target_val = _subset(dataset, plan.val)
            test_pairs = _subset(dataset, plan.test)
            _check_no_overlap(set(plan.train) | set(plan.val), set(plan.test),
                              f"fold {fold.fold_index} target {project}")

            if cfg.train.backend == "lexical":
                # No warm start for the deterministic baseline: refit on
                # everything the staged protocol has exposed so far.
                handle = fine_tune(pooled_train + target_train, target_val,
                                   cfg.train, fold_dir / project)
            else:
                handle = fine_tune(target_train, target_val, cfg.train,
                                   fold_dir / project, init_from=base_handle)
            results[project] = _evaluate(handle, test_pairs, cfg.train.threshold)
            fold_record["tests"][project] = {
                "stage2_train_fingerprint": handle.train_manifest["data_fingerprint"]["train"],
                "test_fingerprint": data_fingerprint(test_pairs),
                "f1": results[project][1].f1,
            }
            logger.info("fold %d %s [rq3]: F1 %.4f",
                        fold.fold_index, project, results[project][1].f1)
        manifest["folds"].append(fold_record)

    for project in cfg.projects:
        manifest["projects"][project] = {
            "dataset_fingerprint": data_fingerprint(list(plans[project][0].pairs)),
            "n_pairs": len(plans[project][0].pairs),
        }
    return _finish_report(cfg, "intermediate-finetune", results, manifest)


def run_cross_project(cfg: ExperimentConfig) -> MetricsReport:
    """Evaluate pooled fold models on entirely unseen projects (rq4)."""
    folds = project_folds(cfg.projects, cfg.fold_seed, cfg.n_folds)
    plans = _temporal_plans(cfg)
    results: dict[str, tuple[ConfusionCounts, Metrics]] = {}
    manifest = _base_manifest(cfg, "temporal")
    manifest["folds"] = []

    for fold in folds:
        pooled_train: list[LinkPair] = []
        pooled_val: list[LinkPair] = []
        for project in fold.train_projects:
            dataset, plan = plans[project]
            pooled_train.extend(_subset(dataset, plan.train))
            pooled_val.extend(_subset(dataset, plan.val))

        train_ids = {p.pair_id for p in pooled_train} | {p.pair_id for p in pooled_val}
        held_out_ids = {
            pair.pair_id
            for project in fold.test_projects
            for pair in plans[project][0].pairs
        }
        _check_no_overlap(train_ids, held_out_ids, f"fold {fold.fold_index}")

        fold_dir = cfg.output_dir / "models" / f"fold{fold.fold_index}"
        handle = fine_tune(pooled_train, pooled_val, cfg.train, fold_dir / "pooled")

        fold_record = {
            "fold_index": fold.fold_index,
            "train_projects": list(fold.train_projects),
            "test_projects": list(fold.test_projects),
            "pooled_train_fingerprint": data_fingerprint(pooled_train),
            "pooled_train_size": len(pooled_train),
            "held_out_exposure": 0,
            "tests": {},
        }
        for project in fold.test_projects:
            dataset, plan = plans[project]
            test_pairs = _subset(dataset, plan.test)
            results[project] = _evaluate(handle, test_pairs, cfg.train.threshold)
            fold_record["tests"][project] = {
                "test_fingerprint": data_fingerprint(test_pairs),
                "f1": results[project][1].f1,
            }
            logger.info("fold %d %s [rq4]: F1 %.4f",
                        fold.fold_index, project, results[project][1].f1)
        manifest["folds"].append(fold_record)

    for project in cfg.projects:
        manifest["projects"][project] = {
            "dataset_fingerprint": data_fingerprint(list(plans[project][0].pairs)),
            "n_pairs": len(plans[project][0].pairs),
        }
    return _finish_report(cfg, "cross-project", results, manifest)


def run_experiment(cfg: ExperimentConfig) -> MetricsReport:
    if cfg.rq == "rq1":
        return run_project_based(cfg, "random")
    if cfg.rq == "rq2":
        return run_project_based(cfg, "temporal")
    if cfg.rq == "rq3":
        return run_intermediate_finetune(cfg)
    return run_cross_project(cfg)
