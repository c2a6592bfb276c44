"""Property-based checks of the core invariants."""

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import make_dataset
from gridids.dataset import class_population, split_indices
from gridids.forest import best_split, gini, gini_sum_form, impurity_decrease
from gridids.metrics import ConfusionCounts, metric_set
from gridids.preprocess import apply_scaler, fit_scaler, wrap_degrees
from gridids.resample import ResampleConfig, adasyn_weights, knn_table, largest_remainder, resample
from oracles import exhaustive_best_decrease, knn_brute, metrics_direct, on_some_segment

counts = st.lists(st.integers(0, 50), min_size=1, max_size=6).filter(lambda c: sum(c) > 0)


@given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100), st.integers(0, 100))
def test_metric_set_matches_formulas(tp, fp, fn, tn):
    if tp + fp + fn + tn == 0:
        return
    m = metric_set(ConfusionCounts(tp, fp, fn, tn))
    expected = metrics_direct(tp, fp, fn, tn)
    for got, want in zip((m.accuracy, m.precision, m.recall, m.f1), expected):
        assert abs(got - float(want)) <= 1e-12
        assert 0.0 <= got <= 1.0


@given(counts)
def test_gini_forms_agree_and_bounded(c):
    g = gini(c)
    assert abs(g - gini_sum_form(c)) <= 1e-12
    k = sum(1 for v in c if v)
    assert -1e-15 <= g <= 1 - 1 / k + 1e-12


@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=2, max_size=5))
def test_decrease_non_negative(pairs):
    left = [a for a, _ in pairs]
    right = [b for _, b in pairs]
    if sum(left) == 0 or sum(right) == 0:
        return
    parent = [a + b for a, b in pairs]
    assert impurity_decrease(parent, left, right) >= -1e-12


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_best_split_is_optimal(data):
    n = data.draw(st.integers(2, 25))
    f = data.draw(st.integers(1, 3))
    x = data.draw(arrays(np.float64, (n, f), elements=st.integers(-3, 3).map(float)))
    y = data.draw(arrays(np.int64, n, elements=st.integers(0, 2)))
    s = best_split(x, y, list(range(f)), n_classes=3)
    oracle = exhaustive_best_decrease(x.tolist(), y.tolist(), 3)
    if s is None:
        assert oracle is None or oracle <= 1e-12
    else:
        assert s.decrease == float(oracle) or abs(s.decrease - float(oracle)) <= 1e-15


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 20), st.integers(1, 3)), elements=st.integers(-4, 4).map(float)),
       st.integers(1, 2))
def test_knn_matches_brute_force(points, k):
    idx, _ = knn_table(points, np.arange(points.shape[0]), k)
    for q in range(points.shape[0]):
        assert idx[q].tolist() == knn_brute(points.tolist(), q, k)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=8).filter(lambda w: sum(w) > 0), st.integers(0, 500))
def test_largest_remainder_exact(raw, total):
    w = adasyn_weights(np.array(raw))
    assert abs(w.sum() - 1.0) <= 1e-9
    g = largest_remainder(w, total)
    assert g.sum() == total
    assert np.all(np.abs(g - w * total) < 1.0 + 1e-9)


@given(st.floats(-1e6, 1e6))
def test_wrap_degrees_range(a):
    w = float(wrap_degrees(a))
    assert -180.0 < w <= 180.0
    assert abs(((w - a) / 360.0) - round((w - a) / 360.0)) < 1e-6


@given(st.lists(st.integers(1, 4), min_size=4, max_size=60), st.floats(0.1, 0.9), st.integers(0, 2**32))
def test_split_is_partition(labels, frac, seed):
    labels = np.array(labels)
    if np.min(np.unique(labels, return_counts=True)[1]) < 2:
        return
    tr, te = split_indices(labels, frac, seed)
    assert sorted(np.concatenate([tr, te]).tolist()) == list(range(labels.size))
    assert set(labels[tr].tolist()) == set(labels.tolist()) == set(labels[te].tolist())


@settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.sampled_from(["ros", "smote", "borderline-smote", "adasyn"]), st.integers(0, 1000), st.integers(2, 9))
def test_resample_balances_with_convex_rows(method, seed, small):
    rng = np.random.default_rng(seed)
    labels = np.repeat([1, 7, 8], [12, 6, small])
    x = rng.normal(size=(labels.size, 2)) + labels[:, None]
    d = make_dataset(x, labels)
    out = resample(d, ResampleConfig(method, k_neighbors=3, m_neighbors=4, seed=seed))
    assert set(class_population(out).counts.values()) == {12}
    np.testing.assert_array_equal(out.values[:labels.size], x)
    for row, lab in zip(out.values[labels.size:], out.labels[labels.size:]):
        assert on_some_segment(row.tolist(), x[labels == lab].tolist())


@given(arrays(np.float64, st.tuples(st.integers(1, 10), st.integers(1, 3)), elements=st.floats(-1e3, 1e3)))
def test_minmax_unit_interval(x):
    d = make_dataset(x, np.ones(x.shape[0], dtype=int))
    out = apply_scaler(fit_scaler(d, "minmax"), d).values
    assert np.all((out >= -1e-12) & (out <= 1 + 1e-12))
