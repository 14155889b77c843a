"""Partial least squares for a binary response, fitted by NIPALS.

Latent directions are extracted from the cross-covariance of the
standardized gene matrix with the centered 0/1 label; the label is then
regressed on the scores and the coefficients are mapped back to the
standardized inputs.  Those standardized coefficients double as the gene
selection statistic (|coefficient| >= cutoff).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PLSModel", "fit_pls", "pls_predict_proba", "pls_importance"]


@dataclass
class PLSModel:
    mean: np.ndarray
    scale: np.ndarray
    y_mean: float
    coef: np.ndarray               # standardized scale
    n_components: int
    coef_cutoff: float
    log_likelihood: float
    rss: float


def _standardize(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (X - mean) / scale, mean, scale


def fit_pls(X: np.ndarray, y: np.ndarray, n_components: int = 3,
            coef_cutoff: float = 0.1) -> PLSModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    Xs, mean, scale = _standardize(X)
    y_mean = float(y.mean())

    E = Xs.copy()
    f = y - y_mean
    A = min(n_components, k, n - 1)
    W, P, Q = [], [], []
    for _ in range(A):
        w = E.T @ f
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            break
        w /= norm
        t = E @ w
        tt = float(t @ t)
        if tt < 1e-12:
            break
        p = E.T @ t / tt
        q = float(f @ t) / tt
        E = E - np.outer(t, p)
        f = f - q * t
        W.append(w)
        P.append(p)
        Q.append(q)

    if W:
        Wm = np.column_stack(W)
        Pm = np.column_stack(P)
        qv = np.array(Q)
        coef = Wm @ np.linalg.solve(Pm.T @ Wm, qv)
    else:
        coef = np.zeros(k)

    resid = y - (y_mean + Xs @ coef)
    rss = float(resid @ resid)
    sigma2 = max(rss / n, 1e-300)
    log_lik = -0.5 * n * (np.log(2.0 * np.pi * sigma2) + 1.0)

    return PLSModel(mean=mean, scale=scale, y_mean=y_mean, coef=coef,
                    n_components=len(W), coef_cutoff=coef_cutoff,
                    log_likelihood=log_lik, rss=rss)


def pls_predict_proba(model: PLSModel, X: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(X, dtype=float) - model.mean) / model.scale
    return np.clip(model.y_mean + Xs @ model.coef, 0.0, 1.0)


def pls_importance(model: PLSModel) -> np.ndarray:
    return np.abs(model.coef)


def pls_selected_mask(model: PLSModel) -> np.ndarray:
    return np.abs(model.coef) >= model.coef_cutoff
