"""Two-layer model: natural-vs-attack first, then the specific attack class.

Layer 1 is a binary forest over remapped labels (natural -> 1, attack -> 0).
Layer 2 is a multiclass forest trained on attack rows only.  A row reaches
layer 2 only when layer 1 calls it an attack.  Natural rows are scored as
one aggregate class: natural sub-classes are not predicted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dataset import Dataset, LabelTaxonomy, class_population
from .errors import DimensionMismatch, EmptyResult
from .forest import (
    Forest,
    ForestParams,
    dump_json,
    forest_from_dict,
    forest_to_dict,
    load_json,
    train_forest,
)
from .metrics import confusion, metric_set, multiclass_report

FORMAT_NAME = "gridids-hierarchical"
FORMAT_VERSION = 1

# Stand-in label for "natural event" in collapsed label arrays.
NATURAL = -1


def remap_binary(data: Dataset, taxonomy: LabelTaxonomy) -> Dataset:
    taxonomy.check(data.labels)
    natural = taxonomy.is_natural(data.labels)
    labels = np.where(natural, taxonomy.natural_marker, taxonomy.attack_marker)
    return data.with_labels(labels)


def filter_attacks(data: Dataset, taxonomy: LabelTaxonomy) -> Dataset:
    taxonomy.check(data.labels)
    keep = np.flatnonzero(~taxonomy.is_natural(data.labels))
    if keep.size == 0:
        raise EmptyResult("no attack rows to train layer 2 on")
    return data.take(keep)


def collapse_natural(labels, taxonomy: LabelTaxonomy) -> np.ndarray:
    """Replace every natural label with :data:`NATURAL`."""
    labels = np.asarray(labels, dtype=np.int64)
    return np.where(taxonomy.is_natural(labels), NATURAL, labels)


@dataclass(frozen=True)
class HierPrediction:
    natural: bool
    attack_label: Optional[int] = None

    def __str__(self) -> str:
        return "Natural" if self.natural else f"Attack({self.attack_label})"


@dataclass(frozen=True, eq=False)
class HierarchicalModel:
    layer1: Forest
    layer2: Forest
    taxonomy: LabelTaxonomy
    layer1_params: ForestParams
    layer2_params: ForestParams

    def __post_init__(self):
        markers = {self.taxonomy.natural_marker, self.taxonomy.attack_marker}
        if not set(self.layer1.classes.tolist()) <= markers:
            raise ValueError("layer 1 must be trained on binary markers")
        if not set(self.layer2.classes.tolist()) <= self.taxonomy.attack_labels:
            raise ValueError("layer 2 classes must all be attack labels")
        if self.layer1.feature_count != self.layer2.feature_count:
            raise DimensionMismatch("layers disagree on feature count")

    @property
    def feature_count(self) -> int:
        return self.layer1.feature_count

    def predict_many(self, x: np.ndarray) -> np.ndarray:
        """Collapsed predictions: :data:`NATURAL` or the attack label."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.feature_count:
            raise DimensionMismatch(f"model expects {self.feature_count} features, got {x.shape[1]}")
        out = np.full(x.shape[0], NATURAL, dtype=np.int64)
        routed = np.flatnonzero(self.layer1.predict_many(x) != self.taxonomy.natural_marker)
        if routed.size:
            out[routed] = self.layer2.predict_many(x[routed])
        return out


def train_hierarchical(train: Dataset, taxonomy: LabelTaxonomy, layer1_params: ForestParams = ForestParams(),
                       layer2_params: Optional[ForestParams] = None) -> HierarchicalModel:
    layer2_params = layer1_params if layer2_params is None else layer2_params
    taxonomy.check(train.labels)
    natural = taxonomy.is_natural(train.labels)
    if natural.all() or not natural.any():
        raise EmptyResult("training data needs both natural and attack rows")
    binary = remap_binary(train, taxonomy)
    attacks = filter_attacks(train, taxonomy)
    assert not taxonomy.is_natural(attacks.labels).any()
    return HierarchicalModel(
        layer1=train_forest(binary, layer1_params),
        layer2=train_forest(attacks, layer2_params),
        taxonomy=taxonomy,
        layer1_params=layer1_params,
        layer2_params=layer2_params,
    )


def predict_hierarchical(model: HierarchicalModel, row) -> HierPrediction:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1 or row.shape[0] != model.feature_count:
        raise DimensionMismatch(f"expected a vector of {model.feature_count} features")
    if int(model.layer1.predict_many(row)[0]) == model.taxonomy.natural_marker:
        return HierPrediction(natural=True)
    return HierPrediction(natural=False, attack_label=int(model.layer2.predict_many(row)[0]))


def _binary_section(pred_natural: np.ndarray, true_natural: np.ndarray) -> dict:
    # positive class = natural event
    c = confusion(pred_natural.astype(int), true_natural.astype(int), 1)
    return {"confusion": c.to_dict(), "metrics": metric_set(c).to_dict()}


def score_collapsed(pred: np.ndarray, truth_labels: np.ndarray, taxonomy: LabelTaxonomy) -> dict:
    """Metrics shared by flat and hierarchical models once natural labels are merged."""
    truth = collapse_natural(truth_labels, taxonomy)
    pred = np.asarray(pred, dtype=np.int64)
    correct = pred == truth
    attack_rows = truth != NATURAL
    natural_rows = ~attack_rows
    universe = sorted(set(truth.tolist()) | set(pred.tolist()))
    return {
        "overall_accuracy": float(correct.mean()),
        "attack_only_accuracy": float(correct[attack_rows].mean()) if attack_rows.any() else None,
        "natural_detection_accuracy": float(correct[natural_rows].mean()) if natural_rows.any() else None,
        "binary": _binary_section(pred == NATURAL, truth == NATURAL),
        "collapsed": multiclass_report(pred, truth, universe).to_dict(),
    }


def evaluate_hierarchical(model: HierarchicalModel, test: Dataset) -> dict:
    """Score a test set; natural rows are right iff called Natural, attacks iff the exact class."""
    model.taxonomy.check(test.labels)
    pred = model.predict_many(test.values)
    report = score_collapsed(pred, test.labels, model.taxonomy)
    truth = collapse_natural(test.labels, model.taxonomy)

    routed = pred != NATURAL
    layer2: dict = {"routed_rows": int(routed.sum())}
    true_attack_routed = routed & (truth != NATURAL)
    if true_attack_routed.any():
        layer2["true_attacks"] = multiclass_report(
            pred[true_attack_routed], truth[true_attack_routed],
            sorted(set(truth[true_attack_routed].tolist()) | set(pred[true_attack_routed].tolist())),
        ).to_dict()
    if routed.any():
        layer2["all_routed"] = multiclass_report(
            pred[routed], truth[routed], sorted(set(truth[routed].tolist()) | set(pred[routed].tolist()))
        ).to_dict()

    report["layer1"] = report.pop("binary")
    report["layer1"]["accuracy"] = report["layer1"]["metrics"]["accuracy"]
    report["layer2"] = layer2
    report["test_population"] = {str(k): v for k, v in class_population(test).counts.items()}
    return report


def evaluate_flat(forest: Forest, test: Dataset, taxonomy: LabelTaxonomy) -> dict:
    """Flat multiclass baseline scored both exactly and with natural classes merged."""
    pred = forest.predict_many(test.values)
    report = score_collapsed(collapse_natural(pred, taxonomy), test.labels, taxonomy)
    report["binary_collapsed"] = report.pop("binary")
    report["binary_collapsed"]["accuracy"] = report["binary_collapsed"]["metrics"]["accuracy"]
    report["exact"] = multiclass_report(pred, test.labels, sorted(set(pred.tolist()) | set(test.labels.tolist()))).to_dict()
    report["test_population"] = {str(k): v for k, v in class_population(test).counts.items()}
    return report


# ------------------------------------------------------------ persistence


def _taxonomy_dict(t: LabelTaxonomy) -> dict:
    return {
        "natural_labels": sorted(t.natural_labels),
        "attack_labels": sorted(t.attack_labels),
        "natural_marker": t.natural_marker,
        "attack_marker": t.attack_marker,
    }


def model_to_dict(model: HierarchicalModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "taxonomy": _taxonomy_dict(model.taxonomy),
        "layer1": forest_to_dict(model.layer1),
        "layer2": forest_to_dict(model.layer2),
    }


def model_from_dict(d: dict) -> HierarchicalModel:
    if d.get("format") != FORMAT_NAME or d.get("version") != FORMAT_VERSION:
        raise ValueError(f"not a hierarchical model file (format={d.get('format')!r}, version={d.get('version')!r})")
    layer1 = forest_from_dict(d["layer1"])
    layer2 = forest_from_dict(d["layer2"])
    t = d["taxonomy"]
    return HierarchicalModel(
        layer1=layer1,
        layer2=layer2,
        taxonomy=LabelTaxonomy(frozenset(t["natural_labels"]), frozenset(t["attack_labels"]),
                               t["natural_marker"], t["attack_marker"]),
        layer1_params=layer1.params,
        layer2_params=layer2.params,
    )


def save_model(model: HierarchicalModel, path) -> None:
    dump_json(model_to_dict(model), path)


def load_model(path) -> HierarchicalModel:
    return model_from_dict(load_json(path))
