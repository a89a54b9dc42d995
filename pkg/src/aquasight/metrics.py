"""Decision rule, confusion matrix and the four statistical measures.

The positive class is "contaminated".  Raw scores live in (0, 1); the
decision threshold is exactly 0.5 and the boundary itself counts as
contaminated (flagging water is the fail-safe direction).  Ratios with a
zero denominator are reported as None, never silently as zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

CLEAN = "clean"
CONTAMINATED = "contaminated"


@dataclass(frozen=True)
class Prediction:
    """A raw score, its class under the 0.5 rule, and distance-derived confidence."""

    raw: float
    verdict: str
    confidence: float


def classify(raw: float) -> Prediction:
    """Apply the 0.5 threshold; confidence is |raw - 0.5| * 2."""
    if not 0.0 < raw < 1.0:
        raise ValueError(f"raw score must be strictly inside (0, 1), got {raw}")
    verdict = CONTAMINATED if raw >= 0.5 else CLEAN
    return Prediction(raw=raw, verdict=verdict, confidence=abs(raw - 0.5) * 2.0)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(predictions: Sequence[Prediction], labels: Sequence[int]) -> ConfusionMatrix:
    """Count TP/TN/FP/FN with contaminated (label 1) as the positive class."""
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions vs {len(labels)} labels")
    if not predictions:
        raise ValueError("cannot build a confusion matrix from no samples")
    tp = tn = fp = fn = 0
    for pred, label in zip(predictions, labels):
        positive = pred.verdict == CONTAMINATED
        if positive and label == 1:
            tp += 1
        elif positive and label == 0:
            fp += 1
        elif not positive and label == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, tn=tn, fp=fp, fn=fn)


@dataclass(frozen=True)
class MetricsReport:
    """Accuracy, precision, sensitivity and F-beta; None marks an undefined ratio."""

    accuracy: Optional[float]
    precision: Optional[float]
    sensitivity: Optional[float]
    f_beta: Optional[float]
    beta: float


def metrics(cm: ConfusionMatrix, beta: float = 1.0) -> MetricsReport:
    """accuracy=(TP+TN)/total, precision=TP/(TP+FP), sensitivity=TP/(TP+FN),
    F_beta=(1+b^2)*P*R/(b^2*P+R)."""
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    accuracy = (cm.tp + cm.tn) / cm.total
    precision = cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp > 0 else None
    sensitivity = cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn > 0 else None
    f_beta = f_score(precision, sensitivity, beta)
    return MetricsReport(accuracy=accuracy, precision=precision,
                         sensitivity=sensitivity, f_beta=f_beta, beta=beta)


def f_score(precision: Optional[float], sensitivity: Optional[float],
            beta: float = 1.0) -> Optional[float]:
    if precision is None or sensitivity is None:
        return None
    denom = beta * beta * precision + sensitivity
    if denom == 0:
        return None
    return (1 + beta * beta) * precision * sensitivity / denom


@dataclass(frozen=True)
class ClassStats:
    mean: float
    lo: float
    hi: float


@dataclass(frozen=True)
class PredictionStats:
    """Mean and range of raw scores per predicted class; None when a class is empty."""

    clean: Optional[ClassStats]
    contaminated: Optional[ClassStats]


def prediction_stats(predictions: Sequence[Prediction]) -> PredictionStats:
    if not predictions:
        raise ValueError("no predictions to summarize")

    def stats_for(verdict: str) -> Optional[ClassStats]:
        raws = [p.raw for p in predictions if p.verdict == verdict]
        if not raws:
            return None
        return ClassStats(mean=sum(raws) / len(raws), lo=min(raws), hi=max(raws))

    return PredictionStats(clean=stats_for(CLEAN), contaminated=stats_for(CONTAMINATED))


def _fmt(value: Optional[float]) -> str:
    return "undefined" if value is None else f"{value:.3f}"


def render_metrics_table(report: MetricsReport) -> str:
    """Fixed-width table in the reporting column order."""
    headers = ["F-Beta", "Sensitivity", "Precision", "Accuracy"]
    values = [_fmt(report.f_beta), _fmt(report.sensitivity),
              _fmt(report.precision), _fmt(report.accuracy)]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = " | ".join(h.ljust(w) for h, w in zip(headers, widths))
    rule = "-+-".join("-" * w for w in widths)
    row = " | ".join(v.ljust(w) for v, w in zip(values, widths))
    return "\n".join([head, rule, row])


def metrics_to_dict(report: MetricsReport) -> dict:
    return {
        "f_beta": report.f_beta,
        "sensitivity": report.sensitivity,
        "precision": report.precision,
        "accuracy": report.accuracy,
        "beta": report.beta,
    }
