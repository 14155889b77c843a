"""Single-hidden-layer perceptron: tanh hidden units, logistic output,
full-batch gradient descent with weight decay."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..simkit import column_stream

__all__ = ["MLPModel", "fit_mlp", "mlp_predict_proba", "mlp_importance", "mlp_gradients"]

_RNG_TAG = 0x311


@dataclass
class MLPModel:
    mean: np.ndarray
    scale: np.ndarray
    w_in: np.ndarray      # (hidden, k)
    b_in: np.ndarray      # (hidden,)
    w_out: np.ndarray     # (hidden,)
    b_out: float
    loss_trace: np.ndarray
    log_likelihood: float
    n_params: int


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _standardize(X):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (X - mean) / scale, mean, scale


def _forward(Xs, w_in, b_in, w_out, b_out):
    hidden = np.tanh(Xs @ w_in.T + b_in)
    prob = _sigmoid(hidden @ w_out + b_out)
    return hidden, prob


def mlp_gradients(Xs, y, w_in, b_in, w_out, b_out, weight_decay):
    """Analytic gradients of mean cross-entropy + (decay/2)*||weights||^2."""
    n = Xs.shape[0]
    hidden, prob = _forward(Xs, w_in, b_in, w_out, b_out)
    d_out = (prob - y) / n
    g_w_out = hidden.T @ d_out + weight_decay * w_out
    g_b_out = float(d_out.sum())
    d_hidden = np.outer(d_out, w_out) * (1.0 - hidden**2)
    g_w_in = d_hidden.T @ Xs + weight_decay * w_in
    g_b_in = d_hidden.sum(axis=0)
    return g_w_in, g_b_in, g_w_out, g_b_out


def mlp_loss(Xs, y, w_in, b_in, w_out, b_out, weight_decay):
    _, prob = _forward(Xs, w_in, b_in, w_out, b_out)
    eps = 1e-12
    ce = -float(np.mean(y * np.log(prob + eps) + (1 - y) * np.log(1 - prob + eps)))
    penalty = 0.5 * weight_decay * (float((w_in**2).sum()) + float((w_out**2).sum()))
    return ce + penalty


def fit_mlp(X, y, hidden_units: int = 1, weight_decay: float = 1e-3,
            epochs: int = 2000, learning_rate: float = 0.5, seed: int = 0) -> MLPModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    Xs, mean, scale = _standardize(X)

    rng = column_stream(seed, _RNG_TAG)
    w_in = 0.5 * rng.standard_normal((hidden_units, k))
    b_in = np.zeros(hidden_units)
    w_out = 0.5 * rng.standard_normal(hidden_units)
    b_out = 0.0

    trace = [mlp_loss(Xs, y, w_in, b_in, w_out, b_out, weight_decay)]
    for _ in range(epochs):
        g_w_in, g_b_in, g_w_out, g_b_out = mlp_gradients(
            Xs, y, w_in, b_in, w_out, b_out, weight_decay)
        w_in -= learning_rate * g_w_in
        b_in -= learning_rate * g_b_in
        w_out -= learning_rate * g_w_out
        b_out -= learning_rate * g_b_out
        trace.append(mlp_loss(Xs, y, w_in, b_in, w_out, b_out, weight_decay))

    _, prob = _forward(Xs, w_in, b_in, w_out, b_out)
    eps = 1e-12
    log_lik = float(np.sum(y * np.log(prob + eps) + (1 - y) * np.log(1 - prob + eps)))
    n_params = w_in.size + b_in.size + w_out.size + 1
    return MLPModel(mean=mean, scale=scale, w_in=w_in, b_in=b_in, w_out=w_out,
                    b_out=float(b_out), loss_trace=np.array(trace),
                    log_likelihood=log_lik, n_params=n_params)


def mlp_predict_proba(model: MLPModel, X: np.ndarray) -> np.ndarray:
    Xs = (np.asarray(X, dtype=float) - model.mean) / model.scale
    _, prob = _forward(Xs, model.w_in, model.b_in, model.w_out, model.b_out)
    return prob


def mlp_importance(model: MLPModel) -> np.ndarray:
    """Per-gene |w_in| * |w_out| summed over hidden units."""
    return (np.abs(model.w_in) * np.abs(model.w_out)[:, None]).sum(axis=0)
