from fractions import Fraction

import numpy as np
import pytest

from gridids.errors import LengthMismatch
from gridids.metrics import ConfusionCounts, confusion, metric_set, multiclass_report
from oracles import metrics_direct, tally


def test_confusion_perfect():
    truth = [1, 0, 1, 1, 0]
    assert confusion(truth, truth, 1) == ConfusionCounts(3, 0, 0, 2)


def test_confusion_all_negative():
    assert confusion([0] * 4, [1, 1, 0, 1], 1) == ConfusionCounts(0, 0, 3, 1)


def test_confusion_hand_tally():
    assert confusion([1, 0, 1, 0, 1], [1, 0, 0, 0, 1], 1) == ConfusionCounts(tp=2, fp=1, fn=0, tn=2)


def test_confusion_length_mismatch():
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [1], 1)


def test_metric_set_example():
    m = metric_set(ConfusionCounts(tp=5, fp=1, fn=2, tn=12))
    assert m.accuracy == 0.85
    assert m.precision == 5 / 6
    assert m.recall == 5 / 7
    assert m.f1 == pytest.approx(10 / 13, abs=1e-15)
    assert (m.accuracy, m.precision, m.recall, m.f1) == pytest.approx(
        [float(v) for v in metrics_direct(5, 1, 2, 12)], abs=1e-15)


def test_metric_set_nothing_predicted_positive():
    m = metric_set(ConfusionCounts(tp=0, fp=0, fn=3, tn=2))
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)


def test_metric_set_perfect():
    m = metric_set(ConfusionCounts(tp=4, fp=0, fn=0, tn=0))
    assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)


def test_binary_report_composition():
    pred, truth = [1, 0, 1, 1, 0, 0], [1, 0, 0, 1, 1, 0]
    r = multiclass_report(pred, truth)
    for lab in (0, 1):
        assert r.per_class[lab] == metric_set(confusion(pred, truth, lab))


def test_balanced_macro_equals_weighted():
    r = multiclass_report([1, 2, 3, 2, 3, 1], [1, 1, 2, 2, 3, 3])
    assert r.macro == r.weighted


def test_three_class_hand_example():
    truth = [1, 1, 1, 2, 2, 2, 3, 3, 3]
    pred = [1, 1, 2, 2, 2, 3, 3, 3, 1]
    r = multiclass_report(pred, truth)
    assert r.accuracy == 6 / 9
    for lab in (1, 2, 3):
        acc, prec, rec, f1 = metrics_direct(*tally(pred, truth, lab))
        m = r.per_class[lab]
        assert (m.accuracy, m.precision, m.recall) == (float(acc), float(prec), float(rec))
        assert m.f1 == pytest.approx(float(f1), abs=1e-15)
    # every class: tp 2, fp 1, fn 1
    assert r.per_class[1].precision == float(Fraction(2, 3))
    assert r.support == {1: 3, 2: 3, 3: 3}


def test_report_label_universe_and_dict():
    r = multiclass_report(np.array([7, 7]), np.array([7, 8]), labels=[7, 8, 9])
    assert r.per_class[9].precision == 0.0
    d = r.to_dict()
    assert set(d["per_class"]) == {"7", "8", "9"}
    with pytest.raises(ValueError):
        multiclass_report([1], [2], labels=[1])
