"""Oversampling of minority classes: ROS, SMOTE, Borderline-SMOTE, ADASYN.

All four methods top every class up to a common target count (the majority
count unless configured).  Each class draws from its own random stream
derived from ``(seed, label)``, so the output does not depend on the order
in which classes are processed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .dataset import Dataset
from .errors import ClassTooSmall, NotEnoughNeighbors

_BLOCK_ELEMS = 1 << 22


class Method(str, Enum):
    NONE = "none"
    ROS = "ros"
    SMOTE = "smote"
    BORDERLINE = "borderline-smote"
    ADASYN = "adasyn"


@dataclass(frozen=True)
class ResampleConfig:
    method: Method = Method.NONE
    k_neighbors: int = 5
    m_neighbors: int = 10
    target_count: Optional[int] = None
    seed: int = 0
    # ADASYN: force per-class totals to exactly the deficit (largest remainder).
    # Off reproduces plain rounding, which can overshoot the target.
    adasyn_cap: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.k_neighbors < 1 or self.m_neighbors < 1:
            raise ValueError("k_neighbors and m_neighbors must be >= 1")
        if self.target_count is not None and self.target_count < 1:
            raise ValueError("target_count must be positive")


@dataclass(frozen=True)
class NeighborIndex:
    query: int
    neighbors: tuple[int, ...]
    distances: tuple[float, ...]


# ------------------------------------------------------------------ kNN


def _seed_key(x: int) -> int:
    return int(x) % (1 << 63)


def class_rng(seed: int, label: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([_seed_key(seed), _seed_key(label)]))


def knn_table(points: np.ndarray, queries: np.ndarray, k: int, candidates: np.ndarray | None = None):
    """Exact k nearest neighbours for many queries at once.

    ``queries`` and ``candidates`` are row indices into ``points``.  A query
    never matches its own row.  Ties in distance go to the lower row index.
    Returns (indices, squared distances), each of shape (len(queries), k).

    Distances are screened with the dot-product expansion and the survivors
    re-measured from coordinate differences, so the ordering is the same as
    a brute-force sort.
    """
    points = np.asarray(points, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.int64)
    cand = np.arange(points.shape[0]) if candidates is None else np.asarray(candidates, dtype=np.int64)
    n_q = queries.shape[0]
    if n_q == 0:
        return np.empty((0, k), dtype=np.int64), np.empty((0, k))
    # a query that is itself a candidate loses one slot
    self_in = np.isin(queries, cand)
    avail = cand.shape[0] - self_in.astype(int)
    if k > avail.min():
        raise NotEnoughNeighbors(f"k={k} but only {int(avail.min())} candidate rows")

    c_pts = points[cand]
    c_norm = np.einsum("ij,ij->i", c_pts, c_pts)
    out_idx = np.empty((n_q, k), dtype=np.int64)
    out_d = np.empty((n_q, k))
    block = max(1, _BLOCK_ELEMS // max(cand.shape[0], 1))
    for start in range(0, n_q, block):
        q_rows = queries[start:start + block]
        q_pts = points[q_rows]
        q_norm = np.einsum("ij,ij->i", q_pts, q_pts)
        approx = q_norm[:, None] + c_norm[None, :] - 2.0 * (q_pts @ c_pts.T)
        np.maximum(approx, 0.0, out=approx)
        approx[q_rows[:, None] == cand[None, :]] = np.inf
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        slack = 1e-9 * (q_norm + c_norm.max()) + 1e-12
        for r in range(q_rows.shape[0]):
            keep = np.flatnonzero(approx[r] <= kth[r] + slack[r])
            keep = keep[cand[keep] != q_rows[r]]
            diff = c_pts[keep] - q_pts[r]
            exact = np.einsum("ij,ij->i", diff, diff)
            order = np.lexsort((cand[keep], exact))[:k]
            out_idx[start + r] = cand[keep[order]]
            out_d[start + r] = exact[order]
    return out_idx, out_d


def k_nearest(data: np.ndarray, query_row: int, k: int, within=None) -> NeighborIndex:
    idx, d2 = knn_table(np.asarray(data, dtype=np.float64).reshape(len(data), -1), np.array([query_row]), k, within)
    return NeighborIndex(int(query_row), tuple(int(i) for i in idx[0]), tuple(float(math.sqrt(d)) for d in d2[0]))


# ------------------------------------------------------------ helpers


def _targets(train: Dataset, cfg: ResampleConfig):
    classes, counts = np.unique(train.labels, return_counts=True)
    if classes.size == 0:
        raise ValueError("cannot resample an empty dataset")
    target = int(counts.max()) if cfg.target_count is None else int(cfg.target_count)
    if target < counts.max():
        raise ValueError(f"target_count {target} is below the majority count {int(counts.max())}; undersampling is not supported")
    return classes, counts, target


def _assemble(train: Dataset, new_rows: list[np.ndarray], new_labels: list[np.ndarray]) -> Dataset:
    if not new_rows:
        return train
    values = np.concatenate([train.values] + new_rows)
    labels = np.concatenate([train.labels] + new_labels)
    return Dataset(train.schema, values, labels)


def _interpolate(rng, x: np.ndarray, sources: np.ndarray, neighbors: np.ndarray) -> np.ndarray:
    """x[src] + u * (x[nn] - x[src]) with nn drawn from each source's neighbour row."""
    picks = rng.integers(0, neighbors.shape[1], size=sources.shape[0])
    nn = neighbors[sources, picks]
    u = rng.random(sources.shape[0])
    return x[sources] + u[:, None] * (x[nn] - x[sources])


def _class_neighbors(x_cls: np.ndarray, k: int, label) -> np.ndarray:
    """Same-class neighbour table in class-local indices."""
    n = x_cls.shape[0]
    if n < 2:
        raise ClassTooSmall(f"class {label} has {n} row; interpolation needs at least 2")
    k_eff = min(k, n - 1)
    idx, _ = knn_table(x_cls, np.arange(n), k_eff)
    return idx


def _other_class_counts(train: Dataset, members: np.ndarray, m: int) -> np.ndarray:
    """For each member row, how many of its m nearest rows (any class) carry another label."""
    if m > train.n_rows - 1:
        raise NotEnoughNeighbors(f"m={m} neighbours requested from {train.n_rows} rows")
    idx, _ = knn_table(train.values, members, m)
    return (train.labels[idx] != train.labels[members][:, None]).sum(axis=1)


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer allocation of ``total`` proportional to ``weights`` (which sum to 1).

    Floors first, then hands the leftover units to the largest fractional
    parts; equal remainders favour the lower index.
    """
    raw = np.asarray(weights, dtype=np.float64) * total
    base = np.floor(raw).astype(np.int64)
    left = int(total - base.sum())
    if left > 0:
        frac = raw - base
        order = np.lexsort((np.arange(frac.shape[0]), -frac))
        base[order[:left]] += 1
    return base


def adasyn_weights(ratios: np.ndarray) -> np.ndarray:
    """Normalise hardness ratios to sum 1; uniform when all are zero."""
    ratios = np.asarray(ratios, dtype=np.float64)
    s = ratios.sum()
    if s == 0:
        return np.full(ratios.shape[0], 1.0 / ratios.shape[0])
    return ratios / s


# ------------------------------------------------------------- methods


def random_oversample(train: Dataset, cfg: ResampleConfig) -> Dataset:
    classes, counts, target = _targets(train, cfg)
    rows, labels = [], []
    for cls, count in zip(classes, counts):
        deficit = target - int(count)
        if deficit <= 0:
            continue
        rng = class_rng(cfg.seed, cls)
        members = np.flatnonzero(train.labels == cls)
        pick = members[rng.integers(0, count, size=deficit)]
        rows.append(train.values[pick])
        labels.append(np.full(deficit, cls, dtype=np.int64))
    return _assemble(train, rows, labels)


def smote(train: Dataset, cfg: ResampleConfig) -> Dataset:
    classes, counts, target = _targets(train, cfg)
    rows, labels = [], []
    for cls, count in zip(classes, counts):
        deficit = target - int(count)
        if deficit <= 0:
            continue
        x_cls = train.values[train.labels == cls]
        rows.append(_smote_class(x_cls, cls, deficit, cfg, class_rng(cfg.seed, cls)))
        labels.append(np.full(deficit, cls, dtype=np.int64))
    return _assemble(train, rows, labels)


def _smote_class(x_cls, cls, deficit, cfg, rng, sources=None) -> np.ndarray:
    nbrs = _class_neighbors(x_cls, cfg.k_neighbors, cls)
    pool = np.arange(x_cls.shape[0]) if sources is None else np.asarray(sources)
    src = pool[rng.integers(0, pool.shape[0], size=deficit)]
    return _interpolate(rng, x_cls, src, nbrs)


def borderline_categories(train: Dataset, members: np.ndarray, m: int) -> np.ndarray:
    """Label each member 'noise', 'danger' or 'safe' from its m-neighbour census."""
    other = _other_class_counts(train, members, m)
    cat = np.full(members.shape[0], "safe", dtype=object)
    cat[(other >= m / 2) & (other < m)] = "danger"
    cat[other == m] = "noise"
    return cat


def borderline_smote(train: Dataset, cfg: ResampleConfig) -> Dataset:
    classes, counts, target = _targets(train, cfg)
    rows, labels = [], []
    for cls, count in zip(classes, counts):
        deficit = target - int(count)
        if deficit <= 0:
            continue
        members = np.flatnonzero(train.labels == cls)
        if count < 2:
            raise ClassTooSmall(f"class {cls} has {count} row; interpolation needs at least 2")
        danger = np.flatnonzero(borderline_categories(train, members, cfg.m_neighbors) == "danger")
        rng = class_rng(cfg.seed, cls)
        x_cls = train.values[members]
        rows.append(_smote_class(x_cls, cls, deficit, cfg, rng, sources=danger if danger.size else None))
        labels.append(np.full(deficit, cls, dtype=np.int64))
    return _assemble(train, rows, labels)


def adasyn_allocation(train: Dataset, members: np.ndarray, deficit: int, k: int, exact: bool = True):
    """Per-member synthetic counts and the normalised hardness weights."""
    k_all = min(k, train.n_rows - 1)
    ratios = _other_class_counts(train, members, k_all) / k_all
    weights = adasyn_weights(ratios)
    if exact:
        g = largest_remainder(weights, deficit)
    else:
        g = np.floor(weights * deficit + 0.5).astype(np.int64)
    return g, weights


def adasyn(train: Dataset, cfg: ResampleConfig) -> Dataset:
    classes, counts, target = _targets(train, cfg)
    rows, labels = [], []
    for cls, count in zip(classes, counts):
        deficit = target - int(count)
        if deficit <= 0:
            continue
        members = np.flatnonzero(train.labels == cls)
        x_cls = train.values[members]
        nbrs = _class_neighbors(x_cls, cfg.k_neighbors, cls)
        g, _ = adasyn_allocation(train, members, deficit, cfg.k_neighbors, exact=cfg.adasyn_cap)
        src = np.repeat(np.arange(members.shape[0]), g)
        rng = class_rng(cfg.seed, cls)
        rows.append(_interpolate(rng, x_cls, src, nbrs))
        labels.append(np.full(src.shape[0], cls, dtype=np.int64))
    return _assemble(train, rows, labels)


_METHODS = {
    Method.ROS: random_oversample,
    Method.SMOTE: smote,
    Method.BORDERLINE: borderline_smote,
    Method.ADASYN: adasyn,
}


def resample(train: Dataset, cfg: ResampleConfig) -> Dataset:
    if cfg.method is Method.NONE:
        return train
    return _METHODS[cfg.method](train, cfg)
