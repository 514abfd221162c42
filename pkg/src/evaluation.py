"""Thresholded predictions, per-class/per-tool metrics and the probability scatter export."""

import csv
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field
from sklearn.metrics import confusion_matrix

from src.config import logger
from src.domain import REPORTED_TOOLS, DomainSample, Label, Tool
from src.errors import UsageError
from src.neuralnet import ModelParams, predict_batches
from src.tokenizer import Vocabulary, build_vocabulary, encode_batch

DEFAULT_THRESHOLD = 0.90
SCATTER_HEADER = ("name", "true_label", "tool", "probability")

# Published detection rates on live tool traffic; shown beside ours, never scored.
REFERENCE_TOOL_RATES = {
    Tool.DNSCAT2.value: 1.0,
    Tool.DNSEXFILTRATOR.value: 0.85,
    Tool.IODINE.value: 0.87,
    Tool.NOT_SPECIFIED.value: 0.96,
}


class Prediction(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    probability: float = Field(ge=0.0, le=1.0)
    threshold: float
    sample: Optional[DomainSample] = Field(None, description="Ground truth, when known")

    @computed_field
    @property
    def predicted(self) -> Label:
        return Label.TUNNELING if self.probability >= self.threshold else Label.NORMAL

    def at_threshold(self, threshold: float) -> "Prediction":
        return self.model_copy(update={"threshold": threshold})


class ClassMetrics(BaseModel):
    precision: float = Field(ge=0.0, le=1.0)
    recall: float = Field(ge=0.0, le=1.0)
    fpr: float = Field(ge=0.0, le=1.0)
    f1: float = Field(ge=0.0, le=1.0)
    support: int = Field(ge=0)
    degenerate: List[str] = Field(default_factory=list,
                                  description="Metrics whose denominator was zero (reported as 0)")


class MetricsReport(BaseModel):
    threshold: float
    test_size: int
    classes: Dict[str, ClassMetrics]
    per_tool: Dict[str, float]
    confusion: Dict[str, int] = Field(description="Counts with tunneling as the positive class")


class SweepPoint(BaseModel):
    threshold: float
    predicted_tunneling: int
    tunneling_recall: float


def _check_threshold(threshold: float) -> None:
    if not 0.0 < threshold < 1.0:
        raise UsageError(f"threshold must lie strictly between 0 and 1, got {threshold}")


def predict_proba(params: ModelParams, names: Sequence[str],
                  vocab: Optional[Vocabulary] = None) -> np.ndarray:
    vocab = vocab or build_vocabulary()
    return predict_batches(params, encode_batch(names, params.hp.l, vocab))


def classify(params: ModelParams, name: str, threshold: float = DEFAULT_THRESHOLD,
             vocab: Optional[Vocabulary] = None) -> Prediction:
    _check_threshold(threshold)
    probability = float(predict_proba(params, [name], vocab)[0])
    return Prediction(name=name, probability=probability, threshold=threshold)


def predict_samples(params: ModelParams, samples: Sequence[DomainSample],
                    threshold: float = DEFAULT_THRESHOLD,
                    vocab: Optional[Vocabulary] = None) -> List[Prediction]:
    _check_threshold(threshold)
    probs = predict_proba(params, [s.name for s in samples], vocab)
    return [Prediction(name=s.name, probability=float(p), threshold=threshold, sample=s)
            for s, p in zip(samples, probs)]


def _ratio(num: int, den: int, metric: str, flags: List[str]) -> float:
    if den == 0:
        flags.append(metric)
        return 0.0
    return num / den


def class_metrics(tp: int, fp: int, fn: int, tn: int) -> ClassMetrics:
    flags: List[str] = []
    precision = _ratio(tp, tp + fp, "precision", flags)
    recall = _ratio(tp, tp + fn, "recall", flags)
    fpr = _ratio(fp, fp + tn, "fpr", flags)
    if precision + recall == 0:
        flags.append("f1")
    f1 = harmonic_f1(precision, recall)
    return ClassMetrics(precision=precision, recall=recall, fpr=fpr, f1=f1,
                        support=tp + fn, degenerate=flags)


def harmonic_f1(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def _confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> Dict[str, int]:
    (tn, fp), (fn, tp) = confusion_matrix(y_true, y_pred, labels=[0, 1])
    return {"tp": int(tp), "fp": int(fp), "fn": int(fn), "tn": int(tn)}


def f1_tunneling(y_true: Sequence[int], y_pred: Sequence[bool]) -> float:
    counts = _confusion(np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int))
    return class_metrics(**counts).f1


def per_tool_breakdown(predictions: Iterable[Prediction]) -> Dict[str, float]:
    hits: Dict[str, List[bool]] = {}
    for pred in predictions:
        sample = pred.sample
        if sample is None or sample.label is not Label.TUNNELING:
            continue
        hits.setdefault(sample.tool.value, []).append(pred.predicted is Label.TUNNELING)
    ordered = [t.value for t in REPORTED_TOOLS if t.value in hits]
    ordered += sorted(t for t in hits if t not in ordered)
    return {tool: sum(hits[tool]) / len(hits[tool]) for tool in ordered}


def compute_metrics(predictions: Sequence[Prediction],
                    threshold: float = DEFAULT_THRESHOLD) -> MetricsReport:
    if not predictions:
        raise UsageError("cannot compute metrics without predictions")
    if any(p.sample is None for p in predictions):
        raise UsageError("every prediction needs a ground-truth sample")
    rethresholded = [p.at_threshold(threshold) for p in predictions]
    y_true = [p.sample.target for p in rethresholded]
    y_pred = [p.predicted.target for p in rethresholded]
    c = _confusion(y_true, y_pred)

    tunneling = class_metrics(c["tp"], c["fp"], c["fn"], c["tn"])
    normal = class_metrics(c["tn"], c["fn"], c["fp"], c["tp"])
    for name, row in (("normal", normal), ("tunneling", tunneling)):
        if row.degenerate:
            logger.warning(f"{name}: zero denominator for {', '.join(row.degenerate)}")
    return MetricsReport(
        threshold=threshold,
        test_size=len(rethresholded),
        classes={"normal": normal, "tunneling": tunneling},
        per_tool=per_tool_breakdown(rethresholded),
        confusion=c,
    )


def threshold_sweep(predictions: Sequence[Prediction], thresholds: Sequence[float]) -> List[SweepPoint]:
    points = []
    positives = sum(1 for p in predictions if p.sample is not None and p.sample.label is Label.TUNNELING)
    for threshold in thresholds:
        flagged = [p for p in predictions if p.probability >= threshold]
        caught = sum(1 for p in flagged if p.sample is not None and p.sample.label is Label.TUNNELING)
        points.append(SweepPoint(threshold=threshold, predicted_tunneling=len(flagged),
                                 tunneling_recall=caught / positives if positives else 0.0))
    return points


def export_scatter(predictions: Iterable[Prediction], path: str) -> int:
    rows = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(SCATTER_HEADER)
        for pred in predictions:
            truth = pred.sample.label.value if pred.sample else ""
            tool = pred.sample.tool.value if pred.sample else Tool.NONE.value
            writer.writerow((pred.name, truth, tool, f"{pred.probability:.9f}"))
            rows += 1
    logger.info(f"Wrote {rows} scatter rows to {path}")
    return rows


def render_table(report: MetricsReport) -> str:
    lines = [
        f"threshold {report.threshold:.2f}  test size {report.test_size}",
        f"{'Domain Type':<12}{'Precision':>11}{'Recall':>9}{'FPR':>9}{'F1':>9}{'Support':>9}",
    ]
    for name, row in report.classes.items():
        lines.append(f"{name.capitalize():<12}{row.precision:>11.4f}{row.recall:>9.4f}"
                     f"{row.fpr:>9.4f}{row.f1:>9.4f}{row.support:>9d}")
    if report.per_tool:
        lines.append("")
        lines.append(f"{'Tool':<16}{'Detected':>10}{'Reference':>11}")
        for tool, rate in report.per_tool.items():
            reference = REFERENCE_TOOL_RATES.get(tool)
            ref_text = f"{reference:>11.2f}" if reference is not None else f"{'-':>11}"
            lines.append(f"{tool:<16}{rate:>10.4f}{ref_text}")
    return "\n".join(lines)
