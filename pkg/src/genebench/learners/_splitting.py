"""Shared exact best-split search for the tree family.

Rows are argsorted per feature once per fit; each node then filters the
presorted orders with one boolean gather instead of re-sorting, so the
per-node cost is O(n_rows * n_features).  All reductions are plain numpy
argmax over a fixed feature-major layout, which makes tie-breaking (lowest
feature index, then lowest threshold) deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PresortedMatrix", "Split", "best_gini_split", "best_ls_split"]


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float
    left_rows: np.ndarray
    right_rows: np.ndarray


class PresortedMatrix:
    def __init__(self, X: np.ndarray):
        self.X = np.asarray(X, dtype=float)
        self.n, self.k = self.X.shape
        self.order = np.argsort(self.X, axis=0, kind="stable")

    def node_orders(self, rows: np.ndarray) -> np.ndarray:
        """(k, m) row indices of the node, sorted per feature."""
        mask = np.zeros(self.n, dtype=bool)
        mask[rows] = True
        sel = mask[self.order]
        m = rows.size
        return self.order.T[sel.T].reshape(self.k, m)


def _pick_best(gain: np.ndarray, xsort: np.ndarray, orders: np.ndarray):
    """Select the best valid split from a (k, m-1) gain matrix."""
    flat = int(np.argmax(gain))
    best = gain.flat[flat]
    if not np.isfinite(best) or best <= 0.0:
        return None
    f, pos = divmod(flat, gain.shape[1])
    threshold = 0.5 * (xsort[f, pos] + xsort[f, pos + 1])
    left = orders[f, : pos + 1].copy()
    right = orders[f, pos + 1 :].copy()
    return Split(feature=f, threshold=float(threshold), gain=float(best),
                 left_rows=left, right_rows=right)


def _position_mask(xsort: np.ndarray, min_leaf: int) -> np.ndarray:
    """Valid split positions: strictly increasing value and legal leaf sizes."""
    m = xsort.shape[1]
    valid = xsort[:, 1:] > xsort[:, :-1]
    if min_leaf > 1:
        nl = np.arange(1, m)
        valid &= (nl >= min_leaf) & (m - nl >= min_leaf)
    return valid


def best_gini_split(pre: PresortedMatrix, rows: np.ndarray, y: np.ndarray,
                    min_leaf: int = 1) -> Split | None:
    """Best Gini-impurity split of the node, or None when nothing improves.

    Gain is measured as count-weighted impurity decrease, so a parent of m
    rows contributes gains on the scale m * gini.
    """
    m = rows.size
    if m < 2 * min_leaf or m < 2:
        return None
    orders = pre.node_orders(rows)
    xsort = pre.X[orders, np.arange(pre.k)[:, None]]
    ysort = y[orders].astype(float)

    total1 = float(y[rows].sum())
    if total1 == 0.0 or total1 == m:
        return None
    nl = np.arange(1, m, dtype=float)
    nr = m - nl
    l1 = np.cumsum(ysort, axis=1)[:, :-1]
    r1 = total1 - l1
    parent = 2.0 * total1 * (m - total1) / m
    children = 2.0 * (l1 * (nl - l1) / nl + r1 * (nr - r1) / nr)
    gain = parent - children
    gain[~_position_mask(xsort, min_leaf)] = -np.inf
    return _pick_best(gain, xsort, orders)


def best_ls_split(pre: PresortedMatrix, rows: np.ndarray, target: np.ndarray,
                  min_leaf: int = 1) -> Split | None:
    """Best least-squares split of the node on a continuous target.

    Gain is the squared-error improvement S_L^2/n_L + S_R^2/n_R - S^2/m,
    the quantity accumulated into boosting variable importances.
    """
    m = rows.size
    if m < 2 * min_leaf or m < 2:
        return None
    orders = pre.node_orders(rows)
    xsort = pre.X[orders, np.arange(pre.k)[:, None]]
    tsort = target[orders]

    total = float(target[rows].sum())
    nl = np.arange(1, m, dtype=float)
    nr = m - nl
    sl = np.cumsum(tsort, axis=1)[:, :-1]
    sr = total - sl
    gain = sl**2 / nl + sr**2 / nr - total**2 / m
    gain[~_position_mask(xsort, min_leaf)] = -np.inf
    return _pick_best(gain, xsort, orders)
