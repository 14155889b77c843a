"""Resampling schemes, classification metrics, selection-quality metrics
(false discovery / false non-discovery), SBC, and the subsample stability
study."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import learners
from .learners import FittedModel, ModelSpec, Posterior
from .simkit import ExpressionMatrix, LabeledDataset, column_stream

__all__ = [
    "EvalReport",
    "StabilityReport",
    "PipelineConfig",
    "loocv",
    "split_eval",
    "kfold_accuracy",
    "selection_metrics",
    "stability_study",
    "sbc",
    "jaccard",
]

_SPLIT_TAG = 0x51
_FOLD_TAG = 0x52
_REPL_TAG = 0x53


@dataclass(frozen=True)
class EvalReport:
    scheme: str
    error_rate: float
    accuracy: float
    posteriors: np.ndarray
    selected_genes: frozenset[str]
    fd_rate: float | None
    fnd_set: frozenset[str]
    train_error: float | None = None
    n_warnings: int = 0

    def __post_init__(self):
        assert abs(self.accuracy - (1.0 - self.error_rate)) < 1e-12


@dataclass(frozen=True)
class StabilityReport:
    selections: tuple[frozenset[str], ...]
    jaccard_matrix: np.ndarray
    mean_jaccard: float
    accuracies: tuple[float, ...]
    n_warnings: int = 0


def jaccard(a: frozenset, b: frozenset) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union


def selection_metrics(selected, truth):
    """(fd_rate, fnd_set).  fd_rate is None when nothing was selected."""
    selected = frozenset(selected)
    truth = frozenset(truth)
    if not truth:
        raise ValueError("truth set must be nonempty")
    fnd = truth - selected
    if not selected:
        return None, fnd
    return len(selected - truth) / len(selected), fnd


def _subset(data: LabeledDataset, rows: np.ndarray) -> LabeledDataset:
    return LabeledDataset(
        matrix=ExpressionMatrix(values=data.matrix.values[rows], gene_ids=data.matrix.gene_ids),
        labels=data.labels[rows],
        truth=data.truth,
    )


def _report(scheme, predictions, y_eval, data, model, train_error=None, n_warnings=0):
    errors = int(np.sum(predictions.labels != y_eval))
    error_rate = errors / len(y_eval)
    selected = learners.selected_genes(model)
    if data.truth:
        fd, fnd = selection_metrics(selected, data.truth)
    else:
        fd, fnd = None, frozenset()
    return EvalReport(
        scheme=scheme,
        error_rate=error_rate,
        accuracy=1.0 - error_rate,
        posteriors=predictions.probabilities,
        selected_genes=selected,
        fd_rate=fd,
        fnd_set=fnd,
        train_error=train_error,
        n_warnings=n_warnings,
    )


def loocv(spec: ModelSpec, data: LabeledDataset, genes, seed: int = 0) -> EvalReport:
    """n fits, each holding out one patient.

    Folds whose training rows collapse to one class are flagged and excluded
    from the error (with a warning count); the reported model for selection
    metrics is the full-data fit.
    """
    n = data.n_patients
    if n < 3:
        raise ValueError("LOOCV needs at least 3 patients")
    y = data.labels
    if y.sum() < 2 or (len(y) - y.sum()) < 2:
        raise ValueError("both classes need at least 2 patients")
    genes = tuple(genes)

    probs = np.full(n, np.nan)
    skipped = 0
    for i in range(n):
        rows = np.delete(np.arange(n), i)
        y_train = y[rows]
        if y_train.sum() == 0 or y_train.sum() == len(y_train):
            skipped += 1
            continue
        model = learners.fit(spec, _subset(data, rows), genes, seed=seed)
        probs[i] = learners.predict(model, _subset(data, np.array([i])).matrix).probabilities[0]
    if skipped:
        warnings.warn(f"{skipped} LOOCV folds had one-class training data and were skipped")
    held = ~np.isnan(probs)
    predictions = Posterior(probabilities=np.where(held, probs, 0.5))
    errors = int(np.sum(predictions.labels[held] != y[held]))
    error_rate = errors / int(held.sum())

    full_model = learners.fit(spec, data, genes, seed=seed)
    selected = learners.selected_genes(full_model)
    if data.truth:
        fd, fnd = selection_metrics(selected, data.truth)
    else:
        fd, fnd = None, frozenset()
    return EvalReport(
        scheme="loocv",
        error_rate=error_rate,
        accuracy=1.0 - error_rate,
        posteriors=predictions.probabilities,
        selected_genes=selected,
        fd_rate=fd,
        fnd_set=fnd,
        n_warnings=skipped,
    )


def stratified_split(y: np.ndarray, train_fraction: float, seed: int, max_tries: int = 100):
    """Per-class shuffle, then a train_fraction cut per class."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    rng = column_stream(seed, _SPLIT_TAG)
    for _ in range(max_tries):
        train_idx, val_idx = [], []
        for cls in (0, 1):
            rows = np.flatnonzero(y == cls)
            rows = rows[rng.permutation(rows.size)]
            n_train = int(round(train_fraction * rows.size))
            n_train = min(max(n_train, 1), rows.size - 1)
            train_idx.append(rows[:n_train])
            val_idx.append(rows[n_train:])
        train = np.sort(np.concatenate(train_idx))
        val = np.sort(np.concatenate(val_idx))
        if (y[train].min() != y[train].max()) and len(val):
            return train, val
    raise RuntimeError("could not produce a stratified split with both classes")


def split_eval(spec: ModelSpec, data: LabeledDataset, genes, train_fraction: float = 0.75,
               seed: int = 0) -> EvalReport:
    """One stratified train/validation split; both errors reported."""
    y = data.labels
    if y.sum() < 2 or (len(y) - y.sum()) < 2:
        raise ValueError("both classes need at least 2 patients")
    train, val = stratified_split(y, train_fraction, seed)
    genes = tuple(genes)
    model = learners.fit(spec, _subset(data, train), genes, seed=seed)
    val_pred = learners.predict(model, _subset(data, val).matrix)
    train_pred = learners.predict(model, _subset(data, train).matrix)
    train_error = float(np.mean(train_pred.labels != y[train]))
    return _report(f"split({train_fraction:g})", val_pred, y[val], data, model,
                   train_error=train_error)


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    rng = column_stream(seed, _FOLD_TAG)
    buckets: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        rows = np.flatnonzero(y == cls)
        rows = rows[rng.permutation(rows.size)]
        for pos, row in enumerate(rows):
            buckets[pos % k].append(int(row))
    return [np.sort(np.array(b, dtype=int)) for b in buckets if b]


def kfold_accuracy(spec: ModelSpec, data: LabeledDataset, genes, k: int = 10,
                   seed: int = 0) -> float:
    """Stratified k-fold accuracy, pooled over held-out rows."""
    n = data.n_patients
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError("k must not exceed the number of patients")
    y = data.labels
    genes = tuple(genes)
    correct = 0
    for fold in stratified_folds(y, k, seed):
        train = np.setdiff1d(np.arange(n), fold)
        model = learners.fit(spec, _subset(data, train), genes, seed=seed)
        pred = learners.predict(model, _subset(data, fold).matrix)
        correct += int(np.sum(pred.labels == y[fold]))
    return correct / n


@dataclass(frozen=True)
class PipelineConfig:
    """One replicate of the stability protocol: subsample, prescreen, fit,
    select, and score by LOOCV on the subsample."""

    model: ModelSpec
    prescreen_k: int = 3
    select_top_k: int | None = None  # None: the family's own selection rule


def stability_study(config: PipelineConfig, data: LabeledDataset,
                    subsample_fraction: float, n_replicates: int,
                    seeds=None, master_seed: int = 0) -> StabilityReport:
    """Re-run the pipeline on disjoint stratified subsamples and compare the
    gene sets each replicate selects."""
    from .screen import cut_to, rsquare_rank

    if seeds is None:
        seeds = [master_seed * 100_003 + r for r in range(n_replicates)]
    if len(seeds) != n_replicates:
        raise ValueError("need one seed per replicate")

    y = data.labels
    selections: list[frozenset[str]] = []
    accuracies: list[float] = []
    failures = 0
    for seed in seeds:
        rng = column_stream(seed, _REPL_TAG)
        rows = []
        for cls in (0, 1):
            cls_rows = np.flatnonzero(y == cls)
            take = max(2, int(round(subsample_fraction * cls_rows.size)))
            perm = cls_rows[rng.permutation(cls_rows.size)]
            rows.append(perm[:take])
        rows = np.sort(np.concatenate(rows))
        sub = _subset(data, rows)
        try:
            pool = cut_to(rsquare_rank(sub), config.prescreen_k)
            model = learners.fit(config.model, sub, pool, seed=seed)
            if config.select_top_k is None:
                chosen = learners.selected_genes(model)
            else:
                ranking = learners.gene_importance(model)
                chosen = frozenset(ranking.gene_ids()[: config.select_top_k])
            report = loocv(config.model, sub, pool, seed=seed)
        except Exception as exc:
            warnings.warn(f"stability replicate failed and was excluded: {exc}")
            failures += 1
            continue
        selections.append(chosen)
        accuracies.append(report.accuracy)

    m = len(selections)
    matrix = np.ones((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            matrix[i, j] = matrix[j, i] = jaccard(selections[i], selections[j])
    off_diag = [matrix[i, j] for i in range(m) for j in range(i + 1, m)]
    mean_j = float(np.mean(off_diag)) if off_diag else 1.0
    return StabilityReport(
        selections=tuple(selections),
        jaccard_matrix=matrix,
        mean_jaccard=mean_j,
        accuracies=tuple(accuracies),
        n_warnings=failures,
    )


def sbc_value(log_lik: float, k: int, n: int) -> float:
    return -2.0 * log_lik + k * math.log(n)


def sbc(model: FittedModel, data: LabeledDataset) -> float:
    """Schwarz Bayesian Criterion, -2 ln L + k ln n.

    Supported for the families that expose a likelihood: logistic (binomial),
    pls (as a Gaussian regression), and mlp.  k is the fitted parameter
    count (latent regression parameters for pls).
    """
    n = data.n_patients
    family = model.family
    if family in ("logistic", "logistic_stepwise"):
        log_lik = model.inner.log_likelihood
        k = len(model.genes) + 1
    elif family == "pls":
        log_lik = model.inner.log_likelihood
        k = model.inner.n_components + 1
    elif family == "mlp":
        log_lik = model.inner.log_likelihood
        k = model.inner.n_params
    else:
        raise ValueError(f"family {family!r} does not expose a likelihood")
    return sbc_value(log_lik, k, n)
