"""Stochastic gradient boosting with Bernoulli deviance.

Each round fits a least-squares regression tree to the current residuals
y - p on a row subsample, takes a Newton leaf step sum(r)/sum(p(1-p)), and
adds it with shrinkage.  The full-sample training deviance is tracked and
kept nonincreasing: a round that would raise it has its contribution halved
(and finally dropped) rather than accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simkit import column_stream
from ._splitting import PresortedMatrix, best_ls_split

__all__ = ["BoostingModel", "fit_boosting", "boosting_predict_proba", "boosting_importance"]

_LEAF = -1
_MAX_LEAF_VALUE = 10.0
_RNG_TAG = 0x5B


@dataclass
class _RoundTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray


@dataclass
class BoostingModel:
    base_score: float
    shrinkage: float
    trees: list[_RoundTree]
    importance: np.ndarray
    deviance_trace: np.ndarray
    n_features: int


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _deviance(y: np.ndarray, margin: np.ndarray) -> float:
    # -2 log-likelihood, computed stably from the margin
    return float(2.0 * np.sum(np.logaddexp(0.0, margin) - y * margin))


def _tree_margins(tree: _RoundTree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int32)
    active = tree.feature[node] != _LEAF
    while np.any(active):
        idx = np.flatnonzero(active)
        nd = node[idx]
        goes_left = X[idx, tree.feature[nd]] <= tree.threshold[nd]
        node[idx] = np.where(goes_left, tree.left[nd], tree.right[nd])
        active = tree.feature[node] != _LEAF
    return tree.value[node]


def _fit_round_tree(pre, rows, resid, hess, depth_limit, min_leaf, importance):
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(rr):
        h = float(hess[rr].sum())
        v = float(resid[rr].sum()) / max(h, 1e-12)
        return float(np.clip(v, -_MAX_LEAF_VALUE, _MAX_LEAF_VALUE))

    def build(rr, depth):
        node = len(feature)
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(leaf_value(rr))
        if depth >= depth_limit:
            return node
        split = best_ls_split(pre, rr, resid, min_leaf=min_leaf)
        if split is None:
            return node
        importance[split.feature] += split.gain
        feature[node] = split.feature
        threshold[node] = split.threshold
        left[node] = build(split.left_rows, depth + 1)
        right[node] = build(split.right_rows, depth + 1)
        return node

    build(rows, 0)
    return _RoundTree(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=float),
    )


def fit_boosting(
    X: np.ndarray,
    y: np.ndarray,
    n_trees: int = 300,
    depth: int = 3,
    shrinkage: float = 0.1,
    subsample: float = 0.5,
    min_leaf: int = 3,
    seed: int = 0,
) -> BoostingModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    pre = PresortedMatrix(X)
    rng = column_stream(seed, _RNG_TAG)

    p_bar = float(y.mean())
    p_bar = min(max(p_bar, 1e-12), 1 - 1e-12)
    base = float(np.log(p_bar / (1.0 - p_bar)))
    margin = np.full(n, base)

    importance = np.zeros(k)
    trees: list[_RoundTree] = []
    trace = [_deviance(y, margin)]
    n_sub = max(2, int(round(subsample * n)))

    for _ in range(n_trees):
        rows = np.sort(rng.choice(n, size=min(n_sub, n), replace=False))
        p = _sigmoid(margin)
        resid = y - p
        hess = np.maximum(p * (1.0 - p), 1e-12)
        round_importance = np.zeros(k)
        tree = _fit_round_tree(pre, rows, resid, hess, depth, min_leaf, round_importance)

        contrib = shrinkage * _tree_margins(tree, X)
        prev = trace[-1]
        dev = _deviance(y, margin + contrib)
        halvings = 0
        while dev > prev and halvings < 30:
            contrib *= 0.5
            tree.value *= 0.5
            dev = _deviance(y, margin + contrib)
            halvings += 1
        if dev > prev:
            # give up on this round: a zero tree keeps the trace flat
            tree.value[:] = 0.0
            contrib[:] = 0.0
            dev = prev
        else:
            importance += round_importance
        margin = margin + contrib
        trees.append(tree)
        trace.append(dev)

    trace = np.array(trace)
    assert np.all(np.diff(trace) <= 1e-9), "training deviance must be nonincreasing"
    return BoostingModel(
        base_score=base,
        shrinkage=shrinkage,
        trees=trees,
        importance=importance,
        deviance_trace=trace,
        n_features=k,
    )


def boosting_margin(model: BoostingModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    margin = np.full(X.shape[0], model.base_score)
    for tree in model.trees:
        margin += model.shrinkage * _tree_margins(tree, X)
    return margin


def boosting_predict_proba(model: BoostingModel, X: np.ndarray) -> np.ndarray:
    return _sigmoid(boosting_margin(model, X))


def boosting_importance(model: BoostingModel) -> np.ndarray:
    return model.importance
