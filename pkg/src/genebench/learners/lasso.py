"""Lasso-regularized linear regression on the 0/1 label.

Coordinate descent over a descending lambda grid with warm starts; the
shipped model is the refit at the lambda minimizing k-fold cross-validated
squared error.  The objective is (1/2n)||y - a - Xb||^2 + lambda*||b||_1 on
standardized inputs, so lambda_max = max|X'y|/n zeroes every coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simkit import column_stream

__all__ = ["LassoModel", "fit_lasso", "lasso_predict_proba", "lasso_importance",
           "coordinate_descent"]

_RNG_TAG = 0x1A55


@dataclass
class LassoModel:
    mean: np.ndarray
    scale: np.ndarray
    intercept: float
    coef: np.ndarray               # standardized scale
    lambda_grid: np.ndarray
    cv_mse: np.ndarray
    best_lambda: float


def _standardize(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (X - mean) / scale, mean, scale


def coordinate_descent(Xs: np.ndarray, yc: np.ndarray, lam: float,
                       coef_init: np.ndarray | None = None,
                       tol: float = 1e-10, max_sweeps: int = 10_000) -> np.ndarray:
    """Minimize (1/2n)||yc - Xs b||^2 + lam*||b||_1 for standardized Xs,
    centered yc."""
    n, k = Xs.shape
    b = np.zeros(k) if coef_init is None else coef_init.copy()
    col_sq = (Xs**2).sum(axis=0) / n
    r = yc - Xs @ b
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(k):
            if col_sq[j] == 0.0:
                continue
            rho = (Xs[:, j] @ r) / n + col_sq[j] * b[j]
            new = np.sign(rho) * max(abs(rho) - lam, 0.0) / col_sq[j]
            if new != b[j]:
                r += Xs[:, j] * (b[j] - new)
                delta = max(delta, abs(new - b[j]))
                b[j] = new
        if delta < tol:
            break
    return b


def default_lambda_grid(Xs: np.ndarray, yc: np.ndarray, n_values: int = 30) -> np.ndarray:
    lam_max = float(np.max(np.abs(Xs.T @ yc)) / len(yc))
    if lam_max <= 0:
        lam_max = 1e-3
    return lam_max * np.logspace(0.0, -3.0, n_values)


def fit_lasso(X: np.ndarray, y: np.ndarray, lambda_grid=None, cv_folds: int = 5,
              seed: int = 0) -> LassoModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, _ = X.shape
    Xs, mean, scale = _standardize(X)
    yc = y - y.mean()

    grid = default_lambda_grid(Xs, yc) if lambda_grid is None else np.asarray(lambda_grid, float)
    folds = min(cv_folds, n)
    perm = column_stream(seed, _RNG_TAG).permutation(n)
    assignments = np.array_split(perm, folds)

    cv_mse = np.zeros(len(grid))
    for held_out in assignments:
        train = np.setdiff1d(perm, held_out)
        Xt, mt, st = _standardize(X[train])
        yt = y[train]
        ytc = yt - yt.mean()
        Xv = (X[held_out] - mt) / st
        b = None
        for i, lam in enumerate(grid):
            b = coordinate_descent(Xt, ytc, lam, coef_init=b)
            pred = yt.mean() + Xv @ b
            cv_mse[i] += float(((y[held_out] - pred) ** 2).sum())
    cv_mse /= n

    best = int(np.argmin(cv_mse))  # first minimum = largest (sparsest) lambda
    best_lambda = float(grid[best])
    b = None
    for lam in grid[: best + 1]:
        b = coordinate_descent(Xs, yc, lam, coef_init=b)

    return LassoModel(mean=mean, scale=scale, intercept=float(y.mean()), coef=b,
                      lambda_grid=grid, cv_mse=cv_mse, best_lambda=best_lambda)


def lasso_predict_proba(model: LassoModel, X: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(X, dtype=float) - model.mean) / model.scale
    return np.clip(model.intercept + Xs @ model.coef, 0.0, 1.0)


def lasso_importance(model: LassoModel) -> np.ndarray:
    return np.abs(model.coef)
