"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/audit error, 3 training error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .corpus import (
    read_commits,
    read_dataset,
    read_issues,
    write_commits,
    write_dataset,
    write_issues,
)
from .errors import (
    AuditError,
    DataError,
    IngestionError,
    SchemaError,
    TrainingError,
    ValidationError,
)
from .evaluation import compute_metrics, render_report, write_metrics_json
from .harness import ExperimentConfig, run_experiment
from .ingestion import SourceConfig, fetch_commits, fetch_issues
from .model import TrainConfig, classify, fine_tune, load_handle, predict
from .sampling import SamplingConfig, build_balanced_dataset
from .splitting import random_split, read_split_plan, temporal_split, write_split_plan

_DATA_ERRORS = (SchemaError, DataError, AuditError, IngestionError, ValidationError)


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise click.UsageError(f"cannot read {what} file {path}: {exc}")


def _parse_ratios(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise click.UsageError(f"ratios must be three comma-separated numbers: {text!r}")
    if len(parts) != 3:
        raise click.UsageError(f"ratios must have three components: {text!r}")
    return parts


@click.group()
def cli():
    """Issue-commit link recovery toolkit."""


@cli.command()
@click.option("--project", required=True, help="Project name.")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True),
              help="JSON file mirroring SourceConfig fields.")
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False),
              help="Directory for <project>.issues.json / <project>.commits.json.")
def ingest(project, config_file, out_dir):
    """Fetch issues and commits for one project, with response caching."""
    raw = _load_json(config_file, "source config")
    raw.setdefault("project", project)
    cfg = SourceConfig(
        project=raw["project"],
        repo_slug=raw["repo_slug"],
        its=raw["its"],
        jira_base_url=raw.get("jira_base_url"),
        jira_project_key=raw.get("jira_project_key"),
        cache_dir=Path(raw.get("cache_dir", ".linkkit-cache")),
        page_size=int(raw.get("page_size", 100)),
        max_retries=int(raw.get("max_retries", 5)),
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    issues = fetch_issues(cfg)
    commits = fetch_commits(cfg)
    write_issues(issues, out / f"{project}.issues.json")
    write_commits(commits, out / f"{project}.commits.json")
    click.echo(f"{project}: {len(issues)} issues, {len(commits)} commits")


@cli.command()
@click.option("--project", required=True)
@click.option("--issues", "issues_file", required=True, type=click.Path(exists=True))
@click.option("--commits", "commits_file", required=True, type=click.Path(exists=True))
@click.option("--seed", default=0, show_default=True)
@click.option("--window-days", default=7, show_default=True)
@click.option("--out", "out_dir", default=".", type=click.Path(file_okay=False))
def build(project, issues_file, commits_file, seed, window_days, out_dir):
    """Build a balanced true/false link dataset for one project."""
    issues = read_issues(issues_file)
    commits = read_commits(commits_file)
    cfg = SamplingConfig(window_days=window_days, seed=seed)
    dataset = build_balanced_dataset(issues, commits, cfg, project)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(dataset, out / f"{project}.jsonl")
    click.echo(
        f"{project}: {dataset.manifest.n_true} true / {dataset.manifest.n_false} false links"
    )


@cli.command()
@click.option("--dataset", "dataset_file", required=True, type=click.Path(exists=True))
@click.option("--policy", required=True, type=click.Choice(["random", "temporal"]))
@click.option("--ratios", default="0.8,0.1,0.1", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_file", required=True, type=click.Path())
def split(dataset_file, policy, ratios, seed, out_file):
    """Split a dataset into train/val/test and write the plan."""
    dataset = read_dataset(dataset_file)
    parsed = _parse_ratios(ratios)
    if policy == "random":
        plan = random_split(dataset, parsed, seed)
    else:
        plan = temporal_split(dataset, parsed)
    write_split_plan(plan, out_file)
    click.echo(
        f"{policy}: {len(plan.train)}/{len(plan.val)}/{len(plan.test)} "
        f"(audit {'passed' if plan.audit.passed else 'FAILED'})"
    )


def _train_config_from(raw: dict, backend: str | None) -> TrainConfig:
    known = {
        "encoder_name", "learning_rate", "epochs", "max_input_length",
        "batch_size", "threshold", "seed", "backend", "include_description",
    }
    unknown = set(raw) - known
    if unknown:
        raise click.UsageError(f"unknown train config fields: {sorted(unknown)}")
    if backend:
        raw = {**raw, "backend": backend}
    return TrainConfig(**raw)


@cli.command()
@click.option("--backend", type=click.Choice(["transformer", "lexical"]), default=None,
              help="Overrides the config file's backend.")
@click.option("--config", "config_file", required=True, type=click.Path(exists=True),
              help="JSON file mirroring TrainConfig fields.")
@click.option("--dataset", "dataset_file", required=True, type=click.Path(exists=True))
@click.option("--plan", "plan_file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def train(backend, config_file, dataset_file, plan_file, out_dir):
    """Fine-tune a pair classifier on a dataset's train/val partitions."""
    cfg = _train_config_from(_load_json(config_file, "train config"), backend)
    dataset = read_dataset(dataset_file)
    plan = read_split_plan(plan_file)
    by_id = dataset.pairs_by_id()
    try:
        train_pairs = [by_id[i] for i in plan.train]
        val_pairs = [by_id[i] for i in plan.val]
    except KeyError as exc:
        raise DataError(f"plan references pair missing from dataset: {exc}")
    handle = fine_tune(train_pairs, val_pairs, cfg, Path(out_dir))
    val_f1 = handle.train_manifest.get("final_val_metrics", {}).get("f1")
    click.echo(
        f"trained {cfg.backend} model -> {out_dir}"
        + (f" (val F1 {val_f1:.4f})" if val_f1 is not None else "")
    )


@cli.command("eval")
@click.option("--plan", "plan_file", required=True, type=click.Path(exists=True))
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_file", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default=None, type=click.Path(file_okay=False),
              help="Optionally write report files here.")
def eval_cmd(plan_file, model_dir, dataset_file, out_dir):
    """Evaluate a stored model on a plan's test partition."""
    plan = read_split_plan(plan_file)
    dataset = read_dataset(dataset_file)
    handle = load_handle(model_dir)
    by_id = dataset.pairs_by_id()
    try:
        test_pairs = [by_id[i] for i in plan.test]
    except KeyError as exc:
        raise DataError(f"plan references pair missing from dataset: {exc}")
    if not test_pairs:
        raise DataError("plan has an empty test partition")
    threshold = handle.train_manifest.get("config", {}).get("threshold", 0.5)
    probs = predict(handle, test_pairs)
    preds = [classify(p, threshold) for p in probs]
    counts, metrics = compute_metrics([p.label for p in test_pairs], preds)
    if out_dir:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        results = {dataset.project: (counts, metrics)}
        render_report(results, "csv", out / "report.csv")
        render_report(results, "markdown", out / "report.md")
        write_metrics_json(results, out / "metrics.json")
    click.echo(
        f"{dataset.project}: P {metrics.precision:.4f} R {metrics.recall:.4f} "
        f"F1 {metrics.f1:.4f} (tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn})"
    )


@cli.command()
@click.option("--rq", required=True, type=click.Choice(["rq1", "rq2", "rq3", "rq4"]))
@click.option("--config", "config_file", required=True, type=click.Path(exists=True),
              help="JSON file mirroring ExperimentConfig fields.")
def experiment(rq, config_file):
    """Run one of the four experiment protocols end to end."""
    raw = _load_json(config_file, "experiment config")
    raw["rq"] = rq
    train_cfg = TrainConfig(**raw.get("train", {}))
    sampling_cfg = SamplingConfig(**raw.get("sampling", {}))
    cfg = ExperimentConfig(
        rq=rq,
        projects=list(raw["projects"]),
        dataset_dir=Path(raw["dataset_dir"]),
        output_dir=Path(raw["output_dir"]),
        train=train_cfg,
        sampling=sampling_cfg,
        fold_seed=int(raw.get("fold_seed", 0)),
        n_folds=int(raw.get("n_folds", 5)),
        split_seed=int(raw.get("split_seed", 0)),
        ratios=tuple(raw.get("ratios", (0.8, 0.1, 0.1))),
    )
    report = run_experiment(cfg)
    click.echo(
        f"{rq}: mean F1 {report.mean.f1:.4f} (std {report.std.f1:.4f}) "
        f"over {len(report.results)} project(s); reports in {cfg.output_dir}"
    )


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except _DATA_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except TrainingError as exc:
        click.echo(f"training error: {exc}", err=True)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
