"""Support vector machine trained with sequential minimal optimization.

Platt-style SMO with the usual first/second-choice heuristics, made fully
deterministic by replacing the randomized scan starts with positional order.
Features are standardized inside the fit; four kernels are supported
(linear, polynomial, rbf, sigmoid).  Pairs with non-positive curvature are
skipped, which keeps the dual objective nondecreasing even for the
indefinite sigmoid kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SVMModel", "fit_svm", "svm_predict_proba", "svm_decision", "svm_importance"]

KERNELS = ("linear", "polynomial", "rbf", "sigmoid")


@dataclass
class SVMModel:
    kernel: str
    C: float
    gamma: float
    degree: int
    coef0: float
    mean: np.ndarray
    scale: np.ndarray
    X: np.ndarray                # standardized training rows
    y: np.ndarray                # labels in {-1, +1}
    alpha: np.ndarray
    bias: float
    dual_trace: np.ndarray       # negated dual objective, nonincreasing
    kkt_residual: float
    converged: bool


def _standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (X - mean) / scale, mean, scale


def kernel_matrix(kind: str, A: np.ndarray, B: np.ndarray, gamma: float,
                  degree: int, coef0: float, feature_mask=None) -> np.ndarray:
    if feature_mask is not None:
        A = A[:, feature_mask]
        B = B[:, feature_mask]
    inner = A @ B.T
    if kind == "linear":
        return inner
    if kind == "polynomial":
        return (gamma * inner + coef0) ** degree
    if kind == "rbf":
        sq = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * inner
        return np.exp(-gamma * np.maximum(sq, 0.0))
    if kind == "sigmoid":
        return np.tanh(gamma * inner + coef0)
    raise ValueError(f"unknown kernel {kind!r}")


def _dual_objective(alpha, y, K):
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ K @ ay)


def _kkt_residual(alpha, y, K, bias, C):
    f = (alpha * y) @ K + bias
    margins = y * f
    viol = np.zeros_like(alpha)
    at_zero = alpha <= 1e-10
    at_c = alpha >= C - 1e-10
    interior = ~(at_zero | at_c)
    viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
    viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
    viol[interior] = np.abs(margins[interior] - 1.0)
    return float(viol.max(initial=0.0))


def fit_svm(X, y01, kernel: str = "rbf", C: float = 1.0, gamma: float | None = None,
            degree: int = 3, coef0: float | None = None, tol: float = 5e-4,
            max_passes: int = 200) -> SVMModel:
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    X = np.asarray(X, dtype=float)
    y = np.where(np.asarray(y01) > 0, 1.0, -1.0)
    n, k = X.shape
    Xs, mean, scale = _standardize(X)
    if gamma is None:
        gamma = 1.0 / k
    if coef0 is None:
        coef0 = 1.0 if kernel == "polynomial" else 0.0

    K = kernel_matrix(kernel, Xs, Xs, gamma, degree, coef0)
    alpha = np.zeros(n)
    bias = 0.0
    errors = -y.copy()  # f(x) - y with alpha = 0, bias = 0
    trace = [-_dual_objective(alpha, y, K)]

    def take_step(i1, i2):
        nonlocal bias
        if i1 == i2:
            return False
        a1, a2 = alpha[i1], alpha[i2]
        y1, y2 = y[i1], y[i2]
        e1, e2 = errors[i1], errors[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - C), min(C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(C, C + a2 - a1)
        if hi - lo < 1e-12:
            return False
        eta = K[i1, i1] + K[i2, i2] - 2.0 * K[i1, i2]
        if eta <= 1e-12:
            return False  # flat or concave direction (indefinite kernel): skip
        a2_new = np.clip(a2 + y2 * (e1 - e2) / eta, lo, hi)
        if abs(a2_new - a2) < 1e-8 * (a2_new + a2 + 1e-8):
            return False
        a1_new = a1 + s * (a2 - a2_new)

        b1 = bias - e1 - y1 * (a1_new - a1) * K[i1, i1] - y2 * (a2_new - a2) * K[i1, i2]
        b2 = bias - e2 - y1 * (a1_new - a1) * K[i1, i2] - y2 * (a2_new - a2) * K[i2, i2]
        if 0.0 < a1_new < C:
            new_bias = b1
        elif 0.0 < a2_new < C:
            new_bias = b2
        else:
            new_bias = 0.5 * (b1 + b2)

        errors[:] += (y1 * (a1_new - a1) * K[i1] + y2 * (a2_new - a2) * K[i2]
                      + (new_bias - bias))
        alpha[i1], alpha[i2] = a1_new, a2_new
        bias = new_bias
        return True

    def examine(i2):
        y2, a2, e2 = y[i2], alpha[i2], errors[i2]
        r2 = e2 * y2
        if not ((r2 < -tol and a2 < C) or (r2 > tol and a2 > 0)):
            return False
        non_bound = np.flatnonzero((alpha > 1e-10) & (alpha < C - 1e-10))
        if non_bound.size > 1:
            j = int(non_bound[np.argmax(np.abs(errors[non_bound] - e2))])
            if take_step(j, i2):
                return True
        for j in np.roll(non_bound, -(i2 % max(non_bound.size, 1))):
            if take_step(int(j), i2):
                return True
        for j in np.roll(np.arange(n), -i2):
            if take_step(int(j), i2):
                return True
        return False

    examine_all = True
    passes = 0
    while passes < max_passes:
        changed = 0
        targets = range(n) if examine_all else [
            int(i) for i in np.flatnonzero((alpha > 1e-10) & (alpha < C - 1e-10))]
        for i in targets:
            changed += examine(i)
        trace.append(-_dual_objective(alpha, y, K))
        passes += 1
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True

    residual = _kkt_residual(alpha, y, K, bias, C)
    return SVMModel(kernel=kernel, C=C, gamma=float(gamma), degree=degree,
                    coef0=float(coef0), mean=mean, scale=scale, X=Xs, y=y,
                    alpha=alpha, bias=float(bias), dual_trace=np.array(trace),
                    kkt_residual=residual, converged=passes < max_passes)


def svm_decision(model: SVMModel, X: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(X, dtype=float) - model.mean) / model.scale
    K = kernel_matrix(model.kernel, Xs, model.X, model.gamma, model.degree, model.coef0)
    return K @ (model.alpha * model.y) + model.bias


def svm_predict_proba(model: SVMModel, X: np.ndarray) -> np.ndarray:
    # logistic squash of the margin; accuracy metrics only need hard labels
    z = svm_decision(model, X)
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def svm_importance(model: SVMModel) -> np.ndarray:
    """|w_j| for the linear kernel; recursive-elimination order otherwise."""
    if model.kernel == "linear":
        return np.abs(model.X.T @ (model.alpha * model.y))
    k = model.X.shape[1]
    ay = model.alpha * model.y
    remaining = list(range(k))
    scores = np.zeros(k)
    rank = 1.0  # elimination order, 1 = least important
    while len(remaining) > 1:
        mask = np.array(remaining)
        K_full = kernel_matrix(model.kernel, model.X, model.X, model.gamma,
                               model.degree, model.coef0, feature_mask=mask)
        w2_full = ay @ K_full @ ay
        deltas = []
        for f in remaining:
            sub = np.array([g for g in remaining if g != f])
            K_sub = kernel_matrix(model.kernel, model.X, model.X, model.gamma,
                                  model.degree, model.coef0, feature_mask=sub)
            deltas.append(abs(w2_full - ay @ K_sub @ ay))
        drop = remaining[int(np.argmin(deltas))]
        scores[drop] = rank
        rank += 1.0
        remaining.remove(drop)
    scores[remaining[0]] = rank
    return scores
