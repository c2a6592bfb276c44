import numpy as np
import pytest

from conftest import make_dataset
from gridids.dataset import class_population
from gridids.errors import ClassTooSmall, NotEnoughNeighbors
from gridids.resample import (
    Method,
    ResampleConfig,
    adasyn,
    adasyn_allocation,
    adasyn_weights,
    borderline_categories,
    borderline_smote,
    k_nearest,
    knn_table,
    largest_remainder,
    random_oversample,
    resample,
    smote,
)
from oracles import knn_brute, on_some_segment


def test_knn_1d():
    assert k_nearest(np.array([[0.0], [1.0], [10.0]]), 0, 1).neighbors == (1,)


def test_knn_duplicate_kept_self_excluded():
    nb = k_nearest(np.array([[0.0], [0.0], [5.0]]), 0, 1)
    assert nb.neighbors == (1,)
    assert nb.distances == (0.0,)


def test_knn_grid_matches_brute_force():
    pts = np.array([[0, 0], [0, 1], [1, 0], [1, 1], [2, 2]], dtype=float)
    for q in range(5):
        assert list(k_nearest(pts, q, 3).neighbors) == knn_brute(pts.tolist(), q, 3)


def test_knn_within_subset():
    pts = np.arange(6, dtype=float)[:, None]
    assert k_nearest(pts, 2, 2, within=[0, 2, 5]).neighbors == (0, 5)


def test_knn_not_enough():
    with pytest.raises(NotEnoughNeighbors):
        k_nearest(np.zeros((3, 1)), 0, 3)


def test_knn_table_random_vs_brute():
    rng = np.random.default_rng(4)
    pts = rng.integers(0, 4, size=(40, 3)).astype(float)  # many exact ties
    idx, _ = knn_table(pts, np.arange(40), 6)
    for q in range(40):
        assert idx[q].tolist() == knn_brute(pts.tolist(), q, 6)


def test_ros_forced_duplication():
    d = make_dataset([[0.0], [1.0], [2.0], [9.0]], [1, 1, 1, 7])
    out = random_oversample(d, ResampleConfig("ros"))
    b = out.values[out.labels == 7]
    assert b.tolist() == [[9.0]] * 3
    np.testing.assert_array_equal(out.values[:4], d.values)


def test_ros_balanced_identity():
    d = make_dataset([[0.0], [1.0]], [1, 7])
    assert random_oversample(d, ResampleConfig("ros")) is d


def test_ros_large_imbalance_counts():
    labels = np.repeat([36, 21], [4685, 1242])
    d = make_dataset(np.arange(labels.size, dtype=float), labels)
    out = random_oversample(d, ResampleConfig("ros"))
    assert int(np.sum(out.labels == 21)) - 1242 == 3443
    assert class_population(out).counts == {21: 4685, 36: 4685}


def test_smote_segment_two_points():
    d = make_dataset([[0, 0], [1, 1]] + [[5, 5 + i] for i in range(10)], [1, 1] + [7] * 10)
    out = smote(d, ResampleConfig("smote", k_neighbors=1))
    syn = out.values[12:]
    assert syn.shape == (8, 2)
    assert np.all(syn[:, 0] == syn[:, 1])
    assert np.all((syn >= 0) & (syn <= 1))


def test_smote_duplicates_stay_put():
    d = make_dataset([[2, 3]] * 3 + [[0, i] for i in range(6)], [1] * 3 + [7] * 6)
    out = smote(d, ResampleConfig("smote"))
    assert np.all(out.values[9:] == [2, 3])


def test_smote_hull():
    d = make_dataset([[0, 0], [1, 0], [0, 1], [1, 1], [5, 5], [6, 7]], [1, 1, 1, 1, 7, 7])
    out = smote(d, ResampleConfig("smote", seed=3))
    assert out.n_rows == 8
    members = d.values[4:].tolist()
    for row in out.values[6:]:
        assert on_some_segment(row.tolist(), members)


def test_smote_class_too_small():
    d = make_dataset([[0.0], [1.0], [2.0]], [1, 1, 7])
    with pytest.raises(ClassTooSmall):
        smote(d, ResampleConfig("smote"))


def test_borderline_1d_example():
    d = make_dataset([0.0, 1.0, 2.0, 3.0, 4.0], [1, 1, 7, 7, 7])
    cats = borderline_categories(d, np.array([0, 1]), m=2)
    assert cats.tolist() == ["danger", "danger"]
    out = borderline_smote(d, ResampleConfig("borderline-smote", m_neighbors=2, k_neighbors=1))
    syn = out.values[5:, 0]
    assert syn.size == 1 and 0.0 <= syn[0] <= 1.0


def test_borderline_noise_and_safe_not_sources():
    # minority 0, 0.1, 0.2 safe; 1.0 danger; 50.0 noise among the majority
    x = [0.0, 0.1, 0.2, 1.0, 50.0] + [1.5, 49.5, 50.5, 51.0, 52.0, 53.0, 54.0]
    d = make_dataset(x, [1] * 5 + [7] * 7)
    cats = borderline_categories(d, np.arange(5), m=2)
    assert cats.tolist() == ["safe", "safe", "safe", "danger", "noise"]
    out = borderline_smote(d, ResampleConfig("borderline-smote", m_neighbors=2, k_neighbors=1, seed=1))
    syn = out.values[12:, 0]
    assert syn.size == 2
    # the only source is 1.0, whose nearest class mate is 0.2
    assert np.all((syn >= 0.2) & (syn <= 1.0))


def test_borderline_without_danger_falls_back_to_smote():
    d = make_dataset([0.0, 0.1, 0.2, 10.0, 10.1, 10.2, 10.3], [1, 1, 1, 7, 7, 7, 7])
    out = borderline_smote(d, ResampleConfig("borderline-smote", m_neighbors=2))
    assert class_population(out).counts == {1: 4, 7: 4}


def test_adasyn_hard_member_gets_everything():
    x = [0.0, -100.0] + [0.1 * i for i in range(1, 7)]
    d = make_dataset(x, [1, 1] + [7] * 6)
    g, w = adasyn_allocation(d, np.array([0, 1]), deficit=4, k=1)
    assert g.tolist() == [4, 0]
    assert w.tolist() == [1.0, 0.0]


def test_adasyn_uniform_fallback():
    w = adasyn_weights(np.zeros(3))
    g = largest_remainder(w, 7)
    assert g.sum() == 7 and g.max() - g.min() <= 1


def test_adasyn_cap_off_uses_rounding():
    w = np.full(3, 1 / 3)
    assert largest_remainder(w, 2).tolist() == [1, 1, 0]
    d = make_dataset([0.0, 1.0, 2.0] + [10.0 + i for i in range(5)], [1] * 3 + [7] * 5)
    capped = adasyn(d, ResampleConfig("adasyn", k_neighbors=2))
    assert class_population(capped).counts[1] == 5


def test_resample_none_identity(tiny):
    assert resample(tiny, ResampleConfig(Method.NONE)) is tiny


def test_target_below_majority_rejected(tiny):
    with pytest.raises(ValueError):
        resample(tiny, ResampleConfig("ros", target_count=1))


def test_explicit_target():
    out = resample(make_dataset([0.0, 1.0, 5.0, 6.0], [1, 1, 7, 7]), ResampleConfig("smote", target_count=5))
    assert class_population(out).counts == {1: 5, 7: 5}


def test_resample_deterministic():
    rng = np.random.default_rng(0)
    d = make_dataset(rng.normal(size=(60, 3)), np.repeat([1, 7, 8], [40, 15, 5]))
    for m in ("ros", "smote", "borderline-smote", "adasyn"):
        a = resample(d, ResampleConfig(m, seed=9))
        b = resample(d, ResampleConfig(m, seed=9))
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.labels, b.labels)
