"""CART classification tree: Gini impurity, binary splits, greedy best-split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._splitting import PresortedMatrix, best_gini_split

__all__ = ["TreeModel", "fit_tree", "tree_predict_proba", "tree_importance"]

_LEAF = -1


@dataclass
class TreeModel:
    """Flat-array binary tree; leaves carry the class-1 training fraction."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    importance: np.ndarray
    n_features: int

    def n_nodes(self) -> int:
        return self.feature.size

    def split_features(self) -> set[int]:
        return set(int(f) for f in self.feature if f != _LEAF)


def fit_tree(X: np.ndarray, y: np.ndarray, max_depth: int = 6, min_leaf: int = 5) -> TreeModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    n, k = X.shape
    pre = PresortedMatrix(X)

    feature, threshold, left, right, value = [], [], [], [], []
    importance = np.zeros(k)

    def build(rows: np.ndarray, depth: int) -> int:
        node = len(feature)
        feature.append(_LEAF)
        threshold.append(0.0)
        left.append(_LEAF)
        right.append(_LEAF)
        value.append(float(y[rows].mean()))

        if depth >= max_depth:
            return node
        split = best_gini_split(pre, rows, y, min_leaf=min_leaf)
        if split is None:
            return node
        importance[split.feature] += split.gain
        feature[node] = split.feature
        threshold[node] = split.threshold
        left[node] = build(split.left_rows, depth + 1)
        right[node] = build(split.right_rows, depth + 1)
        return node

    build(np.arange(n), 0)
    return TreeModel(
        feature=np.array(feature, dtype=np.int32),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int32),
        right=np.array(right, dtype=np.int32),
        value=np.array(value, dtype=float),
        importance=importance,
        n_features=k,
    )


def tree_predict_proba(model: TreeModel, X: np.ndarray) -> np.ndarray:
    """Leaf class-1 fraction per row."""
    X = np.asarray(X, dtype=float)
    node = np.zeros(X.shape[0], dtype=np.int32)
    active = model.feature[node] != _LEAF
    while np.any(active):
        idx = np.flatnonzero(active)
        nd = node[idx]
        goes_left = X[idx, model.feature[nd]] <= model.threshold[nd]
        node[idx] = np.where(goes_left, model.left[nd], model.right[nd])
        active = model.feature[node] != _LEAF
    return model.value[node]


def tree_importance(model: TreeModel) -> np.ndarray:
    return model.importance
