"""Logistic regression by iteratively reweighted least squares.

Inputs are standardized internally, so the reported coefficients and their
Wald statistics are on the standardized scale.  Complete separation is not
an error: the fit stops once a coefficient escapes the magnitude cap and the
model is returned with the separation flag set and the usual blown-up
standard errors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = ["LogisticModel", "fit_logistic", "logistic_predict_proba", "logistic_importance"]

_RIDGE = 1e-10


@dataclass
class LogisticModel:
    mean: np.ndarray
    scale: np.ndarray
    intercept: float
    coef: np.ndarray          # standardized scale
    standard_errors: np.ndarray
    wald_p: np.ndarray
    deviance_trace: np.ndarray
    converged: bool
    separation: bool
    log_likelihood: float


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _standardize(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (X - mean) / scale, mean, scale


def _deviance(y, margin):
    return float(2.0 * np.sum(np.logaddexp(0.0, margin) - y * margin))


def fit_logistic(
    X: np.ndarray,
    y: np.ndarray,
    max_iter: int = 50,
    coef_cap: float = 15.0,
    tol: float = 1e-8,
    se_ratio_cap: float = 50.0,
) -> LogisticModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    Xs, mean, scale = _standardize(X)
    Z = np.hstack([np.ones((n, 1)), Xs])

    beta = np.zeros(k + 1)
    trace = [_deviance(y, Z @ beta)]
    converged = False
    separation = False

    for _ in range(max_iter):
        margin = Z @ beta
        p = _sigmoid(margin)
        w = np.maximum(p * (1.0 - p), 1e-12)
        grad = Z.T @ (y - p)
        hess = (Z * w[:, None]).T @ Z + _RIDGE * np.eye(k + 1)
        step = np.linalg.solve(hess, grad)

        # step-halving keeps the deviance trace nonincreasing
        dev = _deviance(y, Z @ (beta + step))
        halvings = 0
        while dev > trace[-1] and halvings < 30:
            step *= 0.5
            dev = _deviance(y, Z @ (beta + step))
            halvings += 1
        if dev > trace[-1]:
            dev = trace[-1]
            step[:] = 0.0
        beta = beta + step
        trace.append(dev)
        if np.max(np.abs(beta[1:]), initial=0.0) > coef_cap:
            separation = True
            break
        if abs(trace[-2] - trace[-1]) < tol:
            converged = True
            break

    assert np.all(np.diff(trace) <= 1e-9), "IRLS deviance must be nonincreasing"

    margin = Z @ beta
    p = _sigmoid(margin)
    w = np.maximum(p * (1.0 - p), 1e-12)
    hess = (Z * w[:, None]).T @ Z + _RIDGE * np.eye(k + 1)
    cov = np.linalg.inv(hess)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))

    coef, se_coef = beta[1:], se[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se_coef > 0, coef / se_coef, 0.0)
    wald_p = special.erfc(np.abs(z) / np.sqrt(2.0))
    if k and np.any(se_coef > se_ratio_cap * np.abs(coef)):
        separation = True

    return LogisticModel(
        mean=mean,
        scale=scale,
        intercept=float(beta[0]),
        coef=coef,
        standard_errors=se_coef,
        wald_p=wald_p,
        deviance_trace=np.array(trace),
        converged=converged,
        separation=separation,
        log_likelihood=-0.5 * trace[-1],
    )


def logistic_predict_proba(model: LogisticModel, X: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(X, dtype=float) - model.mean) / model.scale
    return _sigmoid(model.intercept + Xs @ model.coef)


def logistic_importance(model: LogisticModel) -> np.ndarray:
    return np.abs(model.coef)
