import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import GOLDEN_DIR
from linkkit.errors import ValidationError
from linkkit.evaluation import (
    ConfusionCounts,
    Metrics,
    aggregate,
    compute_metrics,
    f1_score,
    metrics_from_counts,
    parse_report,
    render_report,
)


def brute_force_tally(labels, predictions):
    """Independent oracle: count joint outcomes, derive metrics from scratch."""
    joint = Counter(
        (bool(l if not isinstance(l, str) else l == "true_link"),
         bool(p if not isinstance(p, str) else p == "true_link"))
        for l, p in zip(labels, predictions)
    )
    tp = joint[(True, True)]
    fp = joint[(False, True)]
    fn = joint[(True, False)]
    tn = joint[(False, False)]
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if precision + recall > 0 else 0.0
    return (tp, fp, tn, fn), (precision, recall, f1)


def test_simple_confusion_example():
    # tp=2, fp=1, fn=1, tn=6
    labels = [1, 1, 1, 0, 0, 0, 0, 0, 0, 0]
    preds = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0]
    counts, metrics = compute_metrics(labels, preds)
    assert (counts.tp, counts.fp, counts.tn, counts.fn) == (2, 1, 6, 1)
    assert metrics.precision == pytest.approx(2 / 3)
    assert metrics.recall == pytest.approx(2 / 3)
    assert metrics.f1 == pytest.approx(2 / 3)


def test_all_correct():
    labels = ["true_link", "false_link", "true_link"]
    counts, metrics = compute_metrics(labels, labels)
    assert (metrics.precision, metrics.recall, metrics.f1) == (1.0, 1.0, 1.0)
    assert counts.total == 3


def test_zero_denominator_rule():
    # no positive predictions at all: tp=0, fp=0 -> precision defined as 0
    counts, metrics = compute_metrics([1, 1], [0, 0])
    assert counts.tp == 0 and counts.fp == 0
    assert metrics.precision == 0.0
    assert metrics.f1 == 0.0


def test_reference_precision_recall_f1_fixture():
    f1 = f1_score(0.93, 0.88)
    assert f1 == pytest.approx(0.9043, abs=5e-5)
    assert round(f1, 2) == 0.90


def test_length_mismatch_rejected():
    with pytest.raises(ValidationError, match="length mismatch"):
        compute_metrics([1, 0], [1])
    with pytest.raises(ValidationError, match="empty"):
        compute_metrics([], [])


def test_matches_brute_force_on_1000_random_vectors():
    rng = random.Random(123)
    for _ in range(1000):
        n = rng.randrange(1, 60)
        labels = [rng.random() < 0.5 for _ in range(n)]
        preds = [rng.random() < 0.5 for _ in range(n)]
        counts, metrics = compute_metrics(labels, preds)
        (tp, fp, tn, fn), (p, r, f1) = brute_force_tally(labels, preds)
        assert (counts.tp, counts.fp, counts.tn, counts.fn) == (tp, fp, tn, fn)
        assert abs(metrics.precision - p) <= 1e-12
        assert abs(metrics.recall - r) <= 1e-12
        assert abs(metrics.f1 - f1) <= 1e-12


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=80))
def test_f1_between_precision_and_recall(outcomes):
    labels = [l for l, _ in outcomes]
    preds = [p for _, p in outcomes]
    _, m = compute_metrics(labels, preds)
    if m.precision + m.recall > 0:
        assert min(m.precision, m.recall) - 1e-12 <= m.f1 <= max(m.precision, m.recall) + 1e-12


def test_aggregate_singleton_identity():
    metrics = Metrics(precision=0.7, recall=0.6, f1=0.646)
    agg = aggregate({"only": metrics})
    assert agg.mean == metrics
    assert agg.std == Metrics(0.0, 0.0, 0.0)


def test_aggregate_two_projects():
    agg = aggregate({
        "a": Metrics(0.8, 0.8, 0.8),
        "b": Metrics(1.0, 1.0, 1.0),
    })
    assert agg.mean.f1 == pytest.approx(0.9)
    assert agg.std.f1 == pytest.approx(0.1)


# Reference per-project F1 scores for the 20-project temporal benchmark;
# their aggregate must land on mean 0.90, population std 0.10.
REFERENCE_TEMPORAL_F1 = {
    "Maven": 0.97, "Pig": 0.99, "Derby": 1.00, "Drools": 0.99,
    "Infinispan": 0.99, "Cassandra": 0.77, "Freemarker": 0.71,
    "Netbeans": 0.90, "Calcite": 0.97, "Arrow": 0.97, "Airflow": 0.98,
    "Beam": 0.75, "Causeway": 0.70, "Groovy": 0.91, "Ignite": 0.94,
    "Flink": 0.94, "Ambari": 0.94, "Pgcli": 0.75, "Keras": 0.90,
    "Flask": 0.93,
}


def test_reference_benchmark_aggregation():
    per_project = {
        name: Metrics(precision=0.0, recall=0.0, f1=f1)
        for name, f1 in REFERENCE_TEMPORAL_F1.items()
    }
    agg = aggregate(per_project)
    assert agg.mean.f1 == pytest.approx(0.90, abs=0.005)
    assert agg.std.f1 == pytest.approx(0.10, abs=0.005)


def _three_project_results():
    fixtures = {
        "alpha": ConfusionCounts(tp=8, fp=2, tn=9, fn=1),
        "beta": ConfusionCounts(tp=5, fp=0, tn=10, fn=5),
        "gamma": ConfusionCounts(tp=10, fp=1, tn=8, fn=1),
    }
    return {name: (c, metrics_from_counts(c)) for name, c in fixtures.items()}


def test_markdown_report_matches_golden(tmp_path):
    out = tmp_path / "report.md"
    render_report(_three_project_results(), "markdown", out)
    assert out.read_bytes() == (GOLDEN_DIR / "report.md").read_bytes()


def test_csv_report_matches_golden(tmp_path):
    out = tmp_path / "report.csv"
    render_report(_three_project_results(), "csv", out)
    assert out.read_bytes() == (GOLDEN_DIR / "report.csv").read_bytes()


def test_csv_and_markdown_carry_identical_numbers(tmp_path):
    results = _three_project_results()
    render_report(results, "csv", tmp_path / "r.csv")
    render_report(results, "markdown", tmp_path / "r.md")
    assert parse_report(tmp_path / "r.csv") == parse_report(tmp_path / "r.md")


def test_empty_results_header_only(tmp_path):
    render_report({}, "csv", tmp_path / "empty.csv")
    assert (tmp_path / "empty.csv").read_text() == \
        "project,tp,fp,tn,fn,precision,recall,f1\n"


def test_report_rows_include_mean_and_std(tmp_path):
    render_report(_three_project_results(), "csv", tmp_path / "r.csv")
    parsed = parse_report(tmp_path / "r.csv")
    assert set(parsed) == {"alpha", "beta", "gamma", "__mean__", "__std__"}


def test_render_is_byte_deterministic(tmp_path):
    render_report(_three_project_results(), "markdown", tmp_path / "a.md")
    render_report(_three_project_results(), "markdown", tmp_path / "b.md")
    assert (tmp_path / "a.md").read_bytes() == (tmp_path / "b.md").read_bytes()
