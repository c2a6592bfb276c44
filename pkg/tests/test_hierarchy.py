import numpy as np
import pytest

from conftest import make_dataset
from gridids.dataset import LabelTaxonomy
from gridids.errors import DimensionMismatch, EmptyResult, UnknownLabel
from gridids.forest import Forest, ForestParams, Tree
from gridids.hierarchy import (
    NATURAL,
    HierarchicalModel,
    evaluate_hierarchical,
    filter_attacks,
    load_model,
    predict_hierarchical,
    remap_binary,
    save_model,
    score_collapsed,
    train_hierarchical,
)

TAX = LabelTaxonomy()


def labelled(labels):
    return make_dataset(np.arange(len(labels), dtype=float), labels)


def test_remap_binary():
    assert remap_binary(labelled([1, 7, 41, 36]), TAX).labels.tolist() == [1, 0, 1, 0]
    assert remap_binary(labelled([2, 13, 14]), TAX).labels.tolist() == [1, 1, 1]
    with pytest.raises(UnknownLabel):
        remap_binary(labelled([1, 31]), TAX)


def test_remap_keeps_features():
    d = labelled([1, 7])
    np.testing.assert_array_equal(remap_binary(d, TAX).values, d.values)


def test_filter_attacks():
    assert filter_attacks(labelled([1, 7, 8]), TAX).labels.tolist() == [7, 8]
    d = labelled([7, 8, 36])
    assert filter_attacks(d, TAX).labels.tolist() == [7, 8, 36]
    with pytest.raises(EmptyResult):
        filter_attacks(labelled([1, 2]), TAX)


def four_class_data(seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat([1, 2, 7, 8], 25)
    centers = {1: (0, 0), 2: (0, 6), 7: (6, 0), 8: (6, 6)}
    x = np.array([centers[l] for l in labels]) + rng.normal(scale=0.5, size=(100, 2))
    return make_dataset(x, labels)


def test_train_hierarchical_structure():
    m = train_hierarchical(four_class_data(), TAX, ForestParams(n_estimators=5))
    assert m.layer1.classes.tolist() == [0, 1]
    assert m.layer2.classes.tolist() == [7, 8]


def test_train_hierarchical_deterministic():
    d = four_class_data()
    a = train_hierarchical(d, TAX, ForestParams(n_estimators=3, seed=4))
    b = train_hierarchical(d, TAX, ForestParams(n_estimators=3, seed=4))
    for x, y in zip(a.layer1.trees + a.layer2.trees, b.layer1.trees + b.layer2.trees):
        np.testing.assert_array_equal(x.threshold, y.threshold)


def test_train_needs_both_groups():
    with pytest.raises(EmptyResult):
        train_hierarchical(labelled([1, 2, 1]), TAX, ForestParams(n_estimators=1))


def leaf_forest(classes, winner):
    counts = [1 if c == winner else 0 for c in classes]
    t = Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([counts]),
             np.array([0.0]), np.array([0.0]), np.array([1]))
    return Forest((t,), ForestParams(n_estimators=1), 1, np.array(classes))


def fixed_model(layer1_vote, layer2_vote=17):
    return HierarchicalModel(leaf_forest([0, 1], layer1_vote), leaf_forest([7, 17], layer2_vote), TAX,
                             ForestParams(), ForestParams())


def test_routing_natural_ignores_layer2():
    p = predict_hierarchical(fixed_model(1), [0.0])
    assert p.natural and p.attack_label is None
    assert str(p) == "Natural"


def test_routing_attack_uses_layer2():
    p = predict_hierarchical(fixed_model(0, 17), [0.0])
    assert not p.natural and p.attack_label == 17
    assert str(p) == "Attack(17)"


def test_predict_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        predict_hierarchical(fixed_model(1), [0.0, 1.0])


def test_natural_row_called_attack_is_layer1_false_negative():
    r = evaluate_hierarchical(fixed_model(0, 17), labelled([1]).take([0]))
    assert r["overall_accuracy"] == 0.0
    assert r["layer1"]["confusion"] == {"tp": 0, "fp": 0, "fn": 1, "tn": 0}


def test_six_row_hand_tally():
    truth = np.array([1, 2, 7, 7, 8, 41])
    pred = np.array([NATURAL, 8, 7, 8, 8, NATURAL])
    r = score_collapsed(pred, truth, TAX)
    assert r["overall_accuracy"] == 4 / 6
    assert r["attack_only_accuracy"] == 2 / 3
    assert r["natural_detection_accuracy"] == 2 / 3
    assert r["binary"]["confusion"] == {"tp": 2, "fp": 0, "fn": 1, "tn": 3}
    assert r["binary"]["metrics"]["accuracy"] == 5 / 6


def test_perfect_model_scores_one():
    d = four_class_data()
    m = train_hierarchical(d, TAX, ForestParams(n_estimators=5, bootstrap=False, max_features="all"))
    r = evaluate_hierarchical(m, d)
    assert r["overall_accuracy"] == 1.0
    assert r["layer1"]["accuracy"] == 1.0


def test_model_round_trip(tmp_path):
    d = four_class_data(seed=2)
    m = train_hierarchical(d, TAX, ForestParams(n_estimators=4), ForestParams(n_estimators=3, criterion="entropy"))
    save_model(m, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    probe = np.random.default_rng(1).uniform(-2, 8, size=(500, 2))
    np.testing.assert_array_equal(m.predict_many(probe), back.predict_many(probe))
    assert back.taxonomy == m.taxonomy
    assert back.layer2_params == m.layer2_params
