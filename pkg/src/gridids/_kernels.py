"""Compiled inner loop of the Gini split search."""

import numpy as np
from numba import njit


@njit(cache=True)
def gini_scan(cols, codes, parent_counts, parent_imp):
    """Best split per column.

    Returns (score, threshold, n_left) arrays, one entry per column; score
    is -inf for a column with no candidate threshold.  Within a column the
    first (lowest-threshold) maximum wins.  The arithmetic mirrors
    ``forest.gini`` / ``forest.impurity_decrease`` operation for operation
    so scores agree bit for bit with the scalar path.
    """
    n, m = cols.shape
    n_classes = parent_counts.shape[0]
    fn = float(n)
    sp = 0.0
    for c in range(n_classes):
        sp += parent_counts[c] * parent_counts[c]
    best_score = np.full(m, -np.inf)
    best_thr = np.zeros(m)
    best_left = np.zeros(m, dtype=np.int64)
    left = np.zeros(n_classes)
    for j in range(m):
        col = cols[:, j]
        order = np.argsort(col, kind="mergesort")
        left[:] = 0.0
        sl = 0.0
        cross = 0.0
        for i in range(n - 1):
            r = order[i]
            c = codes[r]
            sl += 2.0 * left[c] + 1.0
            left[c] += 1.0
            cross += parent_counts[c]
            lo = col[r]
            hi = col[order[i + 1]]
            if not hi > lo:
                continue
            nl = float(i + 1)
            nr = fn - nl
            sr = sp - 2.0 * cross + sl
            gl = 1.0 - sl / (nl * nl)
            gr = 1.0 - sr / (nr * nr)
            score = parent_imp - ((nl / fn) * gl + (nr / fn) * gr)
            if score > best_score[j]:
                best_score[j] = score
                mid = (lo + hi) / 2.0
                best_thr[j] = lo if mid >= hi else mid
                best_left[j] = i + 1
    return best_score, best_thr, best_left
