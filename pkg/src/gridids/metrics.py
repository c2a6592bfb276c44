"""Confusion counts and accuracy / precision / recall / F1."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricSet:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(predictions, truth):
    p = np.asarray(predictions)
    t = np.asarray(truth)
    if p.shape != t.shape:
        raise LengthMismatch(f"{p.shape[0]} predictions vs {t.shape[0]} truth labels")
    if p.size == 0:
        raise LengthMismatch("no rows to score")
    return p, t


def confusion(predictions, truth, positive) -> ConfusionCounts:
    """One-vs-rest tally with ``positive`` as the positive class."""
    p, t = _pair(predictions, truth)
    pp, tp_ = p == positive, t == positive
    return ConfusionCounts(
        tp=int(np.sum(pp & tp_)),
        fp=int(np.sum(pp & ~tp_)),
        fn=int(np.sum(~pp & tp_)),
        tn=int(np.sum(~pp & ~tp_)),
    )


def _ratio(num: int, den: int) -> float:
    # undefined ratios are reported as 0.0
    return num / den if den else 0.0


def metric_set(c: ConfusionCounts) -> MetricSet:
    if c.total <= 0:
        raise ValueError("metric_set needs at least one evaluated row")
    return MetricSet(
        accuracy=(c.tp + c.tn) / c.total,
        precision=_ratio(c.tp, c.tp + c.fp),
        recall=_ratio(c.tp, c.tp + c.fn),
        f1=_ratio(2 * c.tp, 2 * c.tp + c.fn + c.fp),
    )


@dataclass(frozen=True)
class MulticlassReport:
    labels: tuple
    per_class: dict
    support: dict
    macro: MetricSet
    weighted: MetricSet
    accuracy: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro": self.macro.to_dict(),
            "weighted": self.weighted.to_dict(),
            "per_class": {
                str(k): {**self.per_class[k].to_dict(), "support": self.support[k]} for k in self.labels
            },
        }


def _average(sets: Sequence[MetricSet], weights: np.ndarray) -> MetricSet:
    w = np.asarray(weights, dtype=np.float64)
    if w.sum() == 0:
        w = np.ones_like(w)
    w = w / w.sum()

    def avg(name):
        return float(sum(wi * getattr(s, name) for wi, s in zip(w, sets)))

    return MetricSet(avg("accuracy"), avg("precision"), avg("recall"), avg("f1"))


def multiclass_report(predictions, truth, labels=None) -> MulticlassReport:
    """Per-class one-vs-rest metrics plus macro, support-weighted and exact-match accuracy."""
    p, t = _pair(predictions, truth)
    if labels is None:
        labels = np.unique(np.concatenate([p, t]))
    labels = tuple(l.item() if hasattr(l, "item") else l for l in labels)
    unknown = (set(np.unique(p).tolist()) | set(np.unique(t).tolist())) - set(labels)
    if unknown:
        raise ValueError(f"labels outside the universe: {sorted(unknown)}")
    per_class = {lab: metric_set(confusion(p, t, lab)) for lab in labels}
    support = {lab: int(np.sum(t == lab)) for lab in labels}
    sets = [per_class[lab] for lab in labels]
    return MulticlassReport(
        labels=labels,
        per_class=per_class,
        support=support,
        macro=_average(sets, np.ones(len(labels))),
        weighted=_average(sets, np.array([support[lab] for lab in labels])),
        accuracy=float(np.mean(p == t)),
    )
