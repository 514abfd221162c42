import csv

import numpy as np
import pytest

from src.domain import DomainSample, Label, Tool
from src.errors import UsageError
from src.evaluation import (
    Prediction,
    class_metrics,
    classify,
    compute_metrics,
    export_scatter,
    harmonic_f1,
    per_tool_breakdown,
    render_table,
    threshold_sweep,
)
from src.neuralnet import Hyperparams, ModelParams

NORMAL = DomainSample(name="example.com", label=Label.NORMAL)


def _tunnel(tool=Tool.IODINE, name="abcd.t.example.org"):
    return DomainSample(name=name, label=Label.TUNNELING, tool=tool)


def _pred(sample, probability, threshold=0.9):
    return Prediction(name=sample.name, probability=probability, threshold=threshold, sample=sample)


def _random_predictions(rng, size):
    tools = [Tool.DNSCAT2, Tool.DNSEXFILTRATOR, Tool.IODINE, Tool.NOT_SPECIFIED]
    preds = []
    for i in range(size):
        if rng.random() < 0.5:
            sample = _tunnel(tools[int(rng.integers(4))], name=f"x{i}.t.example.org")
        else:
            sample = DomainSample(name=f"site{i}.com", label=Label.NORMAL)
        preds.append(_pred(sample, float(rng.random())))
    return preds


def test_threshold_boundary_is_inclusive():
    assert _pred(NORMAL, 0.90).predicted is Label.TUNNELING
    assert _pred(NORMAL, 0.899).predicted is Label.NORMAL


def test_zero_model_classifies_normal():
    params = ModelParams.zeros(Hyperparams(nf=2, ks=4, sl=1, d=2, l=45, hn=2))
    prediction = classify(params, "anything.example.com")
    assert prediction.probability == 0.5
    assert prediction.predicted is Label.NORMAL


@pytest.mark.parametrize("threshold", [0.0, 1.0, -0.2, 1.5])
def test_classify_rejects_threshold(tiny_params, threshold):
    with pytest.raises(UsageError):
        classify(tiny_params, "a.com", threshold)


def test_class_metrics_oracle():
    row = class_metrics(tp=3, fp=1, fn=1, tn=5)
    assert row.precision == 0.75 and row.recall == 0.75 and row.f1 == 0.75
    assert row.fpr == pytest.approx(1 / 6)
    assert row.support == 4 and row.degenerate == []


def test_harmonic_f1_reference_row():
    assert harmonic_f1(0.9342, 0.9948) == pytest.approx(0.9635, abs=5e-4)
    assert harmonic_f1(0.0, 0.0) == 0.0


def test_degenerate_rows_are_flagged():
    row = class_metrics(tp=0, fp=0, fn=0, tn=4)
    assert (row.precision, row.recall, row.f1) == (0.0, 0.0, 0.0)
    assert set(row.degenerate) == {"precision", "recall", "f1"}


def test_all_correct_predictions():
    preds = [_pred(NORMAL, 0.1), _pred(_tunnel(), 0.95)]
    report = compute_metrics(preds, 0.9)
    for row in report.classes.values():
        assert (row.precision, row.recall, row.f1, row.fpr) == (1.0, 1.0, 1.0, 0.0)


def test_compute_metrics_matches_brute_force_recount():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        preds = _random_predictions(rng, int(rng.integers(1, 40)))
        threshold = float(rng.uniform(0.05, 0.95))
        report = compute_metrics(preds, threshold)

        tp = fp = fn = tn = 0
        for p in preds:
            flagged = p.probability >= threshold
            positive = p.sample.label is Label.TUNNELING
            tp += flagged and positive
            fp += flagged and not positive
            fn += (not flagged) and positive
            tn += (not flagged) and not positive
        assert report.confusion == {"tp": tp, "fp": fp, "fn": fn, "tn": tn}
        for row, (a, b, c, d) in ((report.classes["tunneling"], (tp, fp, fn, tn)),
                                  (report.classes["normal"], (tn, fn, fp, tp))):
            precision = a / (a + b) if a + b else 0.0
            recall = a / (a + c) if a + c else 0.0
            fpr = b / (b + d) if b + d else 0.0
            f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
            assert row.precision == pytest.approx(precision)
            assert row.recall == pytest.approx(recall)
            assert row.fpr == pytest.approx(fpr)
            assert row.f1 == pytest.approx(f1)
            assert row.support == a + c
        assert report.test_size == sum(r.support for r in report.classes.values())
        if not report.classes["tunneling"].degenerate and not report.classes["normal"].degenerate:
            assert report.classes["normal"].fpr == pytest.approx(1 - report.classes["tunneling"].recall)


def test_compute_metrics_preconditions():
    with pytest.raises(UsageError):
        compute_metrics([])
    with pytest.raises(UsageError):
        compute_metrics([Prediction(name="a.com", probability=0.3, threshold=0.9)])


def test_per_tool_breakdown():
    preds = [
        _pred(_tunnel(Tool.DNSCAT2), 0.99),
        _pred(_tunnel(Tool.DNSCAT2), 0.95),
        _pred(_tunnel(Tool.IODINE), 0.2),
        _pred(_tunnel(Tool.IODINE), 0.93),
        _pred(NORMAL, 0.97),
    ]
    rates = per_tool_breakdown(preds)
    assert rates == {"dnscat2": 1.0, "iodine": 0.5}
    assert "DNSexfiltrator" not in rates


def test_threshold_sweep_is_monotone():
    preds = _random_predictions(np.random.default_rng(5), 300)
    thresholds = [round(0.1 * k, 1) for k in range(1, 10)]
    points = threshold_sweep(preds, thresholds)
    sizes = [p.predicted_tunneling for p in points]
    recalls = [p.tunneling_recall for p in points]
    assert sizes == sorted(sizes, reverse=True)
    assert recalls == sorted(recalls, reverse=True)
    flagged = [{p.name for p in preds if p.probability >= t} for t in thresholds]
    assert all(later <= earlier for earlier, later in zip(flagged, flagged[1:]))


def test_export_scatter(tmp_path):
    preds = [_pred(NORMAL, 0.123456789012), _pred(_tunnel(), 0.987654321)]
    path = tmp_path / "scatter.csv"
    assert export_scatter(preds, str(path)) == 2
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["name", "true_label", "tool", "probability"]
    assert rows[1] == ["example.com", "normal", "none", "0.123456789"]
    assert float(rows[2][3]) == pytest.approx(0.987654321, abs=1e-9)


def test_export_scatter_empty(tmp_path):
    path = tmp_path / "scatter.csv"
    assert export_scatter([], str(path)) == 0
    assert path.read_text().strip() == "name,true_label,tool,probability"


def test_render_table_lists_classes_and_tools():
    report = compute_metrics([_pred(NORMAL, 0.1), _pred(_tunnel(Tool.DNSCAT2), 0.95)], 0.9)
    table = render_table(report)
    assert "Normal" in table and "Tunneling" in table
    assert "dnscat2" in table
