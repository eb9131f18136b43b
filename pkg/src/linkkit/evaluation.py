"""Confusion counts, precision/recall/F1, and cross-project aggregation.

Zero-denominator metrics are defined as 0 so aggregates stay defined.
Aggregation uses the unweighted arithmetic mean and the population
standard deviation across projects.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import TRUE_LINK
from .errors import ValidationError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class Aggregate:
    mean: Metrics
    std: Metrics


def _as_positive(value) -> bool:
    if isinstance(value, str):
        return value == TRUE_LINK
    return bool(value)


def compute_metrics(labels: Sequence, predictions: Sequence) -> tuple[ConfusionCounts, Metrics]:
    """Tally the confusion matrix and derive precision, recall and F1.

    Elements may be true_link/false_link strings or booleans; true_link is
    the positive class.
    """
    if len(labels) != len(predictions):
        raise ValidationError(
            f"length mismatch: {len(labels)} labels vs {len(predictions)} predictions"
        )
    if not labels:
        raise ValidationError("cannot compute metrics on empty input")
    tp = fp = tn = fn = 0
    for label, pred in zip(labels, predictions):
        actual, predicted = _as_positive(label), _as_positive(pred)
        if predicted and actual:
            tp += 1
        elif predicted and not actual:
            fp += 1
        elif not predicted and actual:
            fn += 1
        else:
            tn += 1
    counts = ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)
    return counts, metrics_from_counts(counts)


def metrics_from_counts(counts: ConfusionCounts) -> Metrics:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = f1_score(precision, recall)
    return Metrics(precision=precision, recall=recall, f1=f1)


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def aggregate(per_project: Mapping[str, Metrics]) -> Aggregate:
    """Unweighted mean and population standard deviation per metric."""
    if not per_project:
        raise ValidationError("cannot aggregate an empty result map")
    ordered = [per_project[k] for k in sorted(per_project)]
    cols = {
        "precision": [m.precision for m in ordered],
        "recall": [m.recall for m in ordered],
        "f1": [m.f1 for m in ordered],
    }
    mean = Metrics(**{k: statistics.fmean(v) for k, v in cols.items()})
    std = Metrics(**{k: statistics.pstdev(v) for k, v in cols.items()})
    return Aggregate(mean=mean, std=std)


# --- report rendering ---------------------------------------------------------

REPORT_COLUMNS = ("project", "tp", "fp", "tn", "fn", "precision", "recall", "f1")
MEAN_ROW = "__mean__"
STD_ROW = "__std__"


def _fmt(x: float) -> str:
    return format(x, ".4f")


def _report_rows(results: Mapping[str, tuple[ConfusionCounts, Metrics]]) -> list[list[str]]:
    rows = []
    for project in sorted(results):
        counts, metrics = results[project]
        rows.append([
            project, str(counts.tp), str(counts.fp), str(counts.tn), str(counts.fn),
            _fmt(metrics.precision), _fmt(metrics.recall), _fmt(metrics.f1),
        ])
    if results:
        agg = aggregate({p: m for p, (_, m) in results.items()})
        count_cols = list(zip(*[
            (c.tp, c.fp, c.tn, c.fn) for c, _ in results.values()
        ]))
        count_means = [statistics.fmean(col) for col in count_cols]
        count_stds = [statistics.pstdev(col) for col in count_cols]
        rows.append([MEAN_ROW, *map(_fmt, count_means),
                     _fmt(agg.mean.precision), _fmt(agg.mean.recall), _fmt(agg.mean.f1)])
        rows.append([STD_ROW, *map(_fmt, count_stds),
                     _fmt(agg.std.precision), _fmt(agg.std.recall), _fmt(agg.std.f1)])
    return rows


def render_report(results: Mapping[str, tuple[ConfusionCounts, Metrics]],
                  fmt: str, path: Path) -> Path:
    """Write per-project rows plus mean and std rows; byte-deterministic.

    Empty results produce a header-only file.
    """
    if fmt not in ("csv", "markdown"):
        raise ValidationError(f"format must be csv or markdown, got {fmt!r}")
    rows = _report_rows(results)
    if fmt == "csv":
        lines = [",".join(REPORT_COLUMNS)]
        lines += [",".join(row) for row in rows]
    else:
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |"]
        lines.append("|" + "|".join([" --- "] * len(REPORT_COLUMNS)) + "|")
        lines += ["| " + " | ".join(row) + " |" for row in rows]
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def parse_report(path: Path) -> dict[str, dict[str, str]]:
    """Read back either report format as {project: {column: cell}}."""
    lines = [l for l in Path(path).read_text(encoding="utf-8").splitlines() if l.strip()]
    out: dict[str, dict[str, str]] = {}
    if lines[0].startswith("|"):
        data = []
        for line in lines:
            cells = [cell.strip() for cell in line.strip("|").split("|")]
            if all(set(cell) == {"-"} for cell in cells):
                continue  # markdown separator row
            data.append(cells)
    else:
        data = [line.split(",") for line in lines]
    header = data[0]
    for row in data[1:]:
        out[row[0]] = dict(zip(header[1:], row[1:]))
    return out


def write_metrics_json(results: Mapping[str, tuple[ConfusionCounts, Metrics]],
                       path: Path, extra: dict | None = None) -> None:
    payload = {
        "projects": {
            project: {
                "tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn,
                "precision": m.precision, "recall": m.recall, "f1": m.f1,
            }
            for project, (c, m) in sorted(results.items())
        },
    }
    if results:
        agg = aggregate({p: m for p, (_, m) in results.items()})
        payload["mean"] = {"precision": agg.mean.precision, "recall": agg.mean.recall,
                           "f1": agg.mean.f1}
        payload["std"] = {"precision": agg.std.precision, "recall": agg.std.recall,
                          "f1": agg.std.f1}
    if extra:
        payload.update(extra)
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
