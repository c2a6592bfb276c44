"""Slow, direct reference implementations used as test oracles.

Everything here works on plain Python numbers (often ``Fraction``) and
shares no code with the package.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product


def metrics_direct(tp, fp, fn, tn):
    """Accuracy, precision, recall, F1 straight from the textbook formulas."""
    total = tp + fp + fn + tn
    acc = Fraction(tp + tn, total)
    prec = Fraction(tp, tp + fp) if tp + fp else Fraction(0)
    rec = Fraction(tp, tp + fn) if tp + fn else Fraction(0)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else Fraction(0)
    return acc, prec, rec, f1


def tally(pred, truth, positive):
    tp = fp = fn = tn = 0
    for p, t in zip(pred, truth):
        if p == positive and t == positive:
            tp += 1
        elif p == positive:
            fp += 1
        elif t == positive:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def gini_exact(counts):
    n = sum(counts)
    return 1 - sum(Fraction(c, n) ** 2 for c in counts)


def gini_sum_exact(counts):
    n = sum(counts)
    return sum(Fraction(c, n) * (1 - Fraction(c, n)) for c in counts)


def entropy_direct(counts):
    n = sum(counts)
    return -sum((c / n) * math.log2(c / n) for c in counts if c)


def decrease_exact(parent, left):
    right = [p - l for p, l in zip(parent, left)]
    n, nl, nr = sum(parent), sum(left), sum(right)
    return gini_exact(parent) - Fraction(nl, n) * gini_exact(left) - Fraction(nr, n) * gini_exact(right)


def exhaustive_best_decrease(rows, labels, n_classes):
    """Maximum exact Gini decrease over every (feature, midpoint) split, or None."""
    parent = [labels.count(c) for c in range(n_classes)]
    best = None
    for f in range(len(rows[0])):
        values = sorted(set(r[f] for r in rows))
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2
            left = [0] * n_classes
            for r, y in zip(rows, labels):
                if r[f] <= thr:
                    left[y] += 1
            d = decrease_exact(parent, left)
            if best is None or d > best:
                best = d
    return best


def knn_brute(points, q, k, within=None):
    """Indices of the k nearest rows to row q (self excluded), ties by index."""
    pool = range(len(points)) if within is None else within
    dist = []
    for j in pool:
        if j == q:
            continue
        d = sum((a - b) ** 2 for a, b in zip(points[q], points[j]))
        dist.append((d, j))
    dist.sort()
    return [j for _, j in dist[:k]]


def on_some_segment(point, members, tol=1e-9):
    """True when ``point`` = a + u (b - a), u in [0, 1], for some member pair (a, b)."""
    for a, b in product(members, repeat=2):
        diff = [bj - aj for aj, bj in zip(a, b)]
        norm2 = sum(d * d for d in diff)
        if norm2 == 0:
            if all(abs(p - aj) <= tol for p, aj in zip(point, a)):
                return True
            continue
        u = sum((p - aj) * d for p, aj, d in zip(point, a, diff)) / norm2
        if -tol <= u <= 1 + tol:
            proj = [aj + u * d for aj, d in zip(a, diff)]
            if all(abs(p - q) <= tol * (1 + abs(q)) for p, q in zip(point, proj)):
                return True
    return False


def hand_tree_importance(nodes, n_features):
    """nodes: list of (feature, n_node, parent_counts, left_counts); root first."""
    n_root = nodes[0][1]
    imp = [Fraction(0)] * n_features
    for f, n_node, parent, left in nodes:
        imp[f] += Fraction(n_node, n_root) * decrease_exact(parent, left)
    total = sum(imp)
    return [v / total for v in imp]
