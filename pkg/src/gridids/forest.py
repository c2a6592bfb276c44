"""Random forest classifier written against numpy only.

Trees are CART-style: binary threshold splits chosen to maximise the
impurity decrease ``G_parent - P_left*G_left - P_right*G_right``, candidate
thresholds at midpoints between consecutive distinct values.  Trees are
stored as flat node arrays so prediction is vectorised over rows.
"""

from __future__ import annotations

import gzip
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .dataset import ClassDistribution, Dataset
from ._kernels import gini_scan
from .errors import DimensionMismatch

FORMAT_NAME = "gridids-forest"
FORMAT_VERSION = 1

# Decreases at or below this are rounding noise, not information.
MIN_DECREASE = 1e-12
# Entropy scores this close to the best are re-scored exactly before choosing.
_TIE_WINDOW = 1e-10


class MaxFeatures(str, Enum):
    SQRT = "sqrt"
    LOG2 = "log2"
    ALL = "all"


class Criterion(str, Enum):
    GINI = "gini"
    ENTROPY = "entropy"


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 330
    max_features: MaxFeatures = MaxFeatures.LOG2
    criterion: Criterion = Criterion.GINI
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "max_features", MaxFeatures(self.max_features))
        object.__setattr__(self, "criterion", Criterion(self.criterion))
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_features"] = self.max_features.value
        d["criterion"] = self.criterion.value
        return d


def subset_size(n_features: int, max_features: MaxFeatures | str) -> int:
    mf = MaxFeatures(max_features)
    if mf is MaxFeatures.ALL:
        return n_features
    if mf is MaxFeatures.SQRT:
        m = math.ceil(math.sqrt(n_features))
    else:
        m = math.ceil(math.log2(n_features)) if n_features > 1 else 1
    return min(max(m, 1), n_features)


# ------------------------------------------------------------- impurity


def _as_array(dist) -> np.ndarray:
    if isinstance(dist, ClassDistribution):
        return np.array(list(dist.counts.values()), dtype=np.float64)
    return np.asarray(dist, dtype=np.float64)


def _proportions(dist) -> list[float]:
    a = _as_array(dist)
    total = a.sum()
    if total <= 0:
        raise ValueError("distribution has no mass")
    return [float(v) / total for v in a]


def _is_counts(a: np.ndarray) -> bool:
    return bool(np.all(a == np.floor(a)))


def gini(dist) -> float:
    """1 - sum p_i^2 for a ClassDistribution, count vector or proportion vector.

    Count vectors go through ``1 - sum(c^2) / n^2`` with an exact integer
    numerator, so the value does not depend on class order and matches the
    vectorised split search bit for bit.
    """
    a = _as_array(dist)
    if _is_counts(a):
        n = a.sum()
        return 1.0 - float(a @ a) / (n * n)
    return 1.0 - math.fsum(v * v for v in _proportions(a))


def gini_sum_form(dist) -> float:
    """sum p_i (1 - p_i); algebraically equal to :func:`gini`."""
    return math.fsum(v * (1.0 - v) for v in _proportions(dist))


def entropy(dist) -> float:
    p = _proportions(dist)
    return -math.fsum(v * math.log2(v) for v in p if v > 0)


def impurity(dist, criterion: Criterion | str = Criterion.GINI) -> float:
    return gini(dist) if Criterion(criterion) is Criterion.GINI else entropy(dist)


def impurity_decrease(parent, left, right, criterion: Criterion | str = Criterion.GINI) -> float:
    """Weighted impurity decrease of a binary split, from class-count vectors."""
    parent = _as_array(parent)
    left = _as_array(left)
    right = _as_array(right)
    n, nl, nr = parent.sum(), left.sum(), right.sum()
    if nl < 1 or nr < 1 or nl + nr != n:
        raise ValueError("children must be non-empty and partition the parent")
    gp, gl, gr = (impurity(c, criterion) for c in (parent, left, right))
    return gp - ((nl / n) * gl + (nr / n) * gr)


# ------------------------------------------------------------- splitting


@dataclass(frozen=True)
class SplitRecord:
    feature: int
    threshold: float
    parent_impurity: float
    left_impurity: float
    right_impurity: float
    left_proportion: float
    right_proportion: float
    n_samples: int
    decrease: float


def _entropy_rows(counts: np.ndarray, n: np.ndarray) -> np.ndarray:
    p = counts / n[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -plogp.sum(axis=1)


def _midpoint(lo: float, hi: float) -> float:
    mid = (lo + hi) / 2.0
    # adjacent floats: the midpoint can round up onto hi and misroute it
    return lo if mid >= hi else mid


def _search(cols: np.ndarray, feature_ids: Sequence[int], codes: np.ndarray, parent_counts: np.ndarray,
            criterion: Criterion):
    """Scan every column of ``cols``; returns (score, feature id, threshold, left counts) or None."""
    if criterion is Criterion.GINI:
        return _search_gini(cols, feature_ids, codes, parent_counts)
    return _search_entropy(cols, feature_ids, codes, parent_counts)


def _search_gini(cols, feature_ids, codes, parent_counts):
    parent_imp = impurity(parent_counts, Criterion.GINI)
    scores, thresholds, _ = gini_scan(np.asfortranarray(cols), codes, parent_counts, parent_imp)
    best = None
    for f, col in sorted(zip((int(i) for i in feature_ids), range(cols.shape[1]))):
        if best is None or scores[col] > best[0]:
            best = (float(scores[col]), f, float(thresholds[col]), col)
    if best is None or best[0] == -np.inf:
        return None
    score, f, thr, col = best
    left = np.bincount(codes[cols[:, col] <= thr], minlength=parent_counts.shape[0]).astype(np.float64)
    return score, f, thr, left


def _search_entropy(cols, feature_ids, codes, parent_counts):
    n, n_classes = codes.shape[0], parent_counts.shape[0]
    fn = float(n)
    parent_imp = impurity(parent_counts, Criterion.ENTROPY)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), codes] = 1.0
    top = -np.inf
    scanned = []
    for f, col in sorted(zip((int(i) for i in feature_ids), range(cols.shape[1]))):
        order = np.argsort(cols[:, col], kind="stable")
        xs = cols[order, col]
        cand = np.flatnonzero(xs[1:] > xs[:-1]) + 1  # left side holds sorted rows [0, pos)
        if cand.size == 0:
            continue
        nl = cand.astype(np.float64)
        lc = np.cumsum(onehot[order], axis=0)[cand - 1]
        score = parent_imp - ((nl / fn) * _entropy_rows(lc, nl)
                              + ((fn - nl) / fn) * _entropy_rows(parent_counts[None, :] - lc, fn - nl))
        top = max(top, float(score.max()))
        scanned.append((f, xs, cand, lc, score))
    # the vectorised entropy sum is order dependent; settle near-ties with the scalar form
    best = None
    for f, xs, cand, lc, score in scanned:
        for j in np.flatnonzero(score >= top - _TIE_WINDOW):
            dec = impurity_decrease(parent_counts, lc[j], parent_counts - lc[j], Criterion.ENTROPY)
            if best is None or dec > best[0]:
                best = (dec, f, _midpoint(xs[cand[j] - 1], xs[cand[j]]), lc[j])
    return best


def _record(best, parent_counts: np.ndarray, criterion: Criterion) -> Optional[SplitRecord]:
    if best is None or best[0] <= MIN_DECREASE:
        return None
    dec, f, thr, left = best
    n = float(parent_counts.sum())
    nl = float(left.sum())
    return SplitRecord(
        feature=f,
        threshold=float(thr),
        parent_impurity=impurity(parent_counts, criterion),
        left_impurity=impurity(left, criterion),
        right_impurity=impurity(parent_counts - left, criterion),
        left_proportion=nl / n,
        right_proportion=(n - nl) / n,
        n_samples=int(n),
        decrease=dec,
    )


def best_split(x: np.ndarray, y: np.ndarray, features: Sequence[int], criterion=Criterion.GINI,
               n_classes: Optional[int] = None) -> Optional[SplitRecord]:
    """Best threshold split of the rows ``x`` over the columns in ``features``.

    ``y`` holds class codes.  Returns None when no candidate improves
    impurity by more than ``MIN_DECREASE``.  Among equal decreases the lower
    feature index, then the lower threshold, wins.
    """
    criterion = Criterion(criterion)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if y.shape[0] < 2 or len(features) == 0:
        return None
    features = [int(f) for f in features]
    return _node_split(x[:, features], features, y, n_classes or 0, criterion)


def _node_split(cols, feature_ids, y, n_classes, criterion) -> Optional[SplitRecord]:
    full_counts = np.bincount(y, minlength=n_classes)
    present = np.flatnonzero(full_counts)
    if present.shape[0] < 2:
        return None
    # work in the space of classes present at this node
    remap = np.zeros(full_counts.shape[0], dtype=np.int64)
    remap[present] = np.arange(present.shape[0])
    parent_counts = full_counts[present].astype(np.float64)
    best = _search(cols, feature_ids, remap[y], parent_counts, criterion)
    return _record(best, parent_counts, criterion)


# ------------------------------------------------------------------ trees


@dataclass(frozen=True, eq=False)
class Tree:
    """Flat array tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, n_classes) class counts of samples reaching each node
    impurity: np.ndarray
    decrease: np.ndarray
    n_samples: np.ndarray

    def __post_init__(self):
        for name in ("feature", "threshold", "left", "right", "counts", "impurity", "decrease", "n_samples"):
            a = np.ascontiguousarray(getattr(self, name))
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "_leaf_value", np.argmax(self.counts, axis=1))

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def is_leaf(self, i: int) -> bool:
        return self.feature[i] < 0

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if not self.is_leaf(i):
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def split_record(self, i: int) -> Optional[SplitRecord]:
        if self.is_leaf(i):
            return None
        l, r, n = self.left[i], self.right[i], self.n_samples[i]
        return SplitRecord(
            feature=int(self.feature[i]),
            threshold=float(self.threshold[i]),
            parent_impurity=float(self.impurity[i]),
            left_impurity=float(self.impurity[l]),
            right_impurity=float(self.impurity[r]),
            left_proportion=float(self.n_samples[l] / n),
            right_proportion=float(self.n_samples[r] / n),
            n_samples=int(n),
            decrease=float(self.decrease[i]),
        )

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``x``."""
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            cur = node[active]
            go_left = x[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict_codes(self, x: np.ndarray) -> np.ndarray:
        return self._leaf_value[self.apply(x)]


def train_tree(x: np.ndarray, y: np.ndarray, n_classes: int, params: ForestParams, tree_seed: int) -> Tree:
    """Grow one tree on coded labels ``y``; deterministic in ``tree_seed``."""
    rng = np.random.default_rng(tree_seed)
    n, n_features = x.shape
    if n == 0:
        raise ValueError("cannot train a tree on no rows")
    if params.bootstrap:
        sample = rng.integers(0, n, size=n)
        x, y = x[sample], y[sample]
    m = subset_size(n_features, params.max_features)

    feature, threshold, left, right, counts, imp, dec, nsamp = [], [], [], [], [], [], [], []

    def new_node(idx: np.ndarray) -> int:
        c = np.bincount(y[idx], minlength=n_classes)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(c)
        imp.append(impurity(c, params.criterion))
        dec.append(0.0)
        nsamp.append(idx.shape[0])
        return len(feature) - 1

    root = new_node(np.arange(n))
    stack = [(root, np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if (np.count_nonzero(counts[node]) < 2
                or idx.shape[0] < params.min_samples_split
                or (params.max_depth is not None and depth >= params.max_depth)):
            continue
        feats = rng.choice(n_features, size=m, replace=False)
        split = _node_split(x[np.ix_(idx, feats)], feats, y[idx], n_classes, params.criterion)
        if split is None:
            continue
        mask = x[idx, split.feature] <= split.threshold
        li, ri = idx[mask], idx[~mask]
        l_node, r_node = new_node(li), new_node(ri)
        feature[node] = split.feature
        threshold[node] = split.threshold
        left[node], right[node] = l_node, r_node
        dec[node] = split.decrease
        # right pushed first so the left subtree is grown (and seeded) first
        stack.append((r_node, ri, depth + 1))
        stack.append((l_node, li, depth + 1))

    return Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64),
        impurity=np.array(imp, dtype=np.float64),
        decrease=np.array(dec, dtype=np.float64),
        n_samples=np.array(nsamp, dtype=np.int64),
    )


# ----------------------------------------------------------------- forest


def tree_seed(seed: int, tree_index: int) -> int:
    ss = np.random.SeedSequence([int(seed) % (1 << 63), int(tree_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple[Tree, ...]
    params: ForestParams
    feature_count: int
    classes: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        classes = np.ascontiguousarray(self.classes, dtype=np.int64)
        classes.setflags(write=False)
        object.__setattr__(self, "classes", classes)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.shape[1] != self.feature_count:
            raise DimensionMismatch(f"forest expects {self.feature_count} features, got {x.shape[1]}")
        return x

    def votes(self, x: np.ndarray) -> np.ndarray:
        """(rows, classes) matrix of tree votes."""
        x = self._check(x)
        v = np.zeros((x.shape[0], self.classes.shape[0]), dtype=np.int64)
        rows = np.arange(x.shape[0])
        for t in self.trees:
            np.add.at(v, (rows, t.predict_codes(x)), 1)
        return v

    def predict_many(self, x: np.ndarray) -> np.ndarray:
        # argmax picks the first maximum, i.e. the lowest label on ties
        return self.classes[np.argmax(self.votes(x), axis=1)]


def train_forest(train: Dataset, params: ForestParams = ForestParams()) -> Forest:
    if train.n_rows == 0:
        raise ValueError("cannot train a forest on an empty dataset")
    classes, y = np.unique(train.labels, return_inverse=True)
    x = np.ascontiguousarray(train.values)
    trees = [
        train_tree(x, y, classes.shape[0], params, tree_seed(params.seed, i))
        for i in range(params.n_estimators)
    ]
    return Forest(tuple(trees), params, train.n_features, classes, tuple(train.schema.feature_names))


def predict(forest: Forest, row) -> int:
    row = np.asarray(row, dtype=np.float64)
    if row.ndim != 1:
        raise DimensionMismatch("predict takes a single feature vector")
    return int(forest.predict_many(row)[0])


def tree_importance(tree: Tree, n_features: int) -> np.ndarray:
    """Per-feature sum of (node share of root samples) * impurity decrease, normalised to 1."""
    imp = np.zeros(n_features)
    internal = np.flatnonzero(tree.feature >= 0)
    weights = tree.n_samples[internal] / tree.n_samples[0] * tree.decrease[internal]
    np.add.at(imp, tree.feature[internal], weights)
    total = imp.sum()
    return imp / total if total > 0 else imp


def mdi_importance(forest: Forest) -> np.ndarray:
    per_tree = [tree_importance(t, forest.feature_count) for t in forest.trees]
    return np.mean(per_tree, axis=0)


def importance_ranking(forest: Forest, top: Optional[int] = None) -> list[tuple[str, float]]:
    """(feature name, importance) pairs, most important first; ties by column order."""
    imp = mdi_importance(forest)
    names = forest.feature_names or tuple(f"f{j}" for j in range(forest.feature_count))
    order = np.lexsort((np.arange(imp.shape[0]), -imp))
    if top is not None:
        order = order[:top]
    return [(names[j], float(imp[j])) for j in order]


# ------------------------------------------------------------ persistence


def _tree_to_dict(t: Tree) -> dict:
    leaves = np.flatnonzero(t.feature < 0)
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "impurity": t.impurity.tolist(),
        "decrease": t.decrease.tolist(),
        "n_samples": t.n_samples.tolist(),
        # internal-node counts are the sum of their children and are rebuilt on load
        "leaf_counts": {str(int(i)): t.counts[i].tolist() for i in leaves},
    }


def _tree_from_dict(d: dict, n_classes: int) -> Tree:
    feature = np.array(d["feature"], dtype=np.int64)
    left = np.array(d["left"], dtype=np.int64)
    right = np.array(d["right"], dtype=np.int64)
    counts = np.zeros((feature.shape[0], n_classes), dtype=np.int64)
    for i, c in d["leaf_counts"].items():
        counts[int(i)] = c
    # children always have higher indices than their parent
    for i in range(feature.shape[0] - 1, -1, -1):
        if feature[i] >= 0:
            counts[i] = counts[left[i]] + counts[right[i]]
    return Tree(
        feature=feature,
        threshold=np.array(d["threshold"], dtype=np.float64),
        left=left,
        right=right,
        counts=counts,
        impurity=np.array(d["impurity"], dtype=np.float64),
        decrease=np.array(d["decrease"], dtype=np.float64),
        n_samples=np.array(d["n_samples"], dtype=np.int64),
    )


def forest_to_dict(forest: Forest) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "params": forest.params.to_dict(),
        "feature_count": forest.feature_count,
        "feature_names": list(forest.feature_names),
        "classes": forest.classes.tolist(),
        "trees": [_tree_to_dict(t) for t in forest.trees],
    }


def forest_from_dict(d: dict) -> Forest:
    if d.get("format") != FORMAT_NAME:
        raise ValueError(f"not a serialized forest: format={d.get('format')!r}")
    if d.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported forest format version {d.get('version')}")
    classes = np.array(d["classes"], dtype=np.int64)
    return Forest(
        trees=tuple(_tree_from_dict(t, classes.shape[0]) for t in d["trees"]),
        params=ForestParams(**d["params"]),
        feature_count=int(d["feature_count"]),
        classes=classes,
        feature_names=tuple(d["feature_names"]),
    )


def dump_json(obj: dict, path) -> None:
    path = Path(path)
    text = json.dumps(obj, separators=(",", ":"))
    if path.suffix == ".gz":
        # no name or mtime in the header keeps the bytes reproducible
        with open(path, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(text.encode("utf-8"))
    else:
        path.write_text(text, encoding="utf-8")


def load_json(path) -> dict:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rt", encoding="utf-8") as fh:
            return json.load(fh)
    return json.loads(path.read_text(encoding="utf-8"))


def save_forest(forest: Forest, path) -> None:
    dump_json(forest_to_dict(forest), path)


def load_forest(path) -> Forest:
    return forest_from_dict(load_json(path))
