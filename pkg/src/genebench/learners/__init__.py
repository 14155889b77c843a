"""Model families with a common fit / predict / gene_importance surface.

Seven families are implemented from first principles: logistic regression
(IRLS), stepwise logistic, partial least squares (NIPALS), CART, stochastic
gradient boosting, lasso, a single-hidden-layer perceptron, and an SMO-based
support vector machine.  Training diagnostics surface the pathologies the
harness studies: complete separation and vanishing standardized
coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..screen import GeneRanking, ranking_from_scores
from ..simkit import ExpressionMatrix, LabeledDataset
from . import boosting as _boosting
from . import lasso as _lasso
from . import logistic as _logistic
from . import mlp as _mlp
from . import pls as _pls
from . import svm as _svm
from . import tree as _tree

__all__ = [
    "FAMILIES",
    "ModelSpec",
    "FittedModel",
    "Posterior",
    "Diagnostics",
    "fit",
    "predict",
    "gene_importance",
    "selected_genes",
    "stepwise_select",
]

FAMILIES = ("logistic", "logistic_stepwise", "pls", "tree", "boosting",
            "lasso", "mlp", "svm")


@dataclass(frozen=True)
class ModelSpec:
    """Learner family plus its hyperparameters (unused fields are ignored)."""

    family: str
    # logistic
    max_iter: int = 50
    coef_cap: float = 15.0
    # pls
    n_components: int = 3
    coef_cutoff: float = 0.1
    # tree
    max_depth: int = 6
    min_leaf: int = 5
    # boosting
    n_trees: int = 300
    tree_depth: int = 3
    shrinkage: float = 0.1
    subsample: float = 0.5
    boost_min_leaf: int = 3
    # lasso
    lambda_grid: tuple[float, ...] | None = None
    cv_folds: int = 5
    # mlp
    hidden_units: int = 1
    weight_decay: float = 1e-3
    epochs: int = 2000
    learning_rate: float = 0.5
    # svm
    kernel: str = "rbf"
    C: float = 1.0
    gamma: float | None = None
    degree: int = 3
    coef0: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")
        for name in ("max_iter", "n_components", "max_depth", "min_leaf", "n_trees",
                     "tree_depth", "boost_min_leaf", "cv_folds", "hidden_units",
                     "epochs", "degree"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample fraction must lie in (0, 1]")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.kernel not in _svm.KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")


@dataclass(frozen=True)
class Diagnostics:
    converged: bool = True
    separation: bool = False
    loss_trace: tuple[float, ...] = ()
    standard_errors: tuple[float, ...] | None = None
    standardized_coefficients: tuple[float, ...] | None = None
    kkt_residual: float | None = None
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class FittedModel:
    family: str
    genes: tuple[str, ...]
    inner: object
    diagnostics: Diagnostics
    spec: ModelSpec


@dataclass(frozen=True)
class Posterior:
    """Per-row probability of class 1; hard labels thresholded at 0.5."""

    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        object.__setattr__(self, "probabilities", p)

    @property
    def labels(self) -> np.ndarray:
        return (self.probabilities > 0.5).astype(np.int8)


def _extract(data_or_matrix, genes: tuple[str, ...]) -> np.ndarray:
    matrix = data_or_matrix.matrix if isinstance(data_or_matrix, LabeledDataset) else data_or_matrix
    index = {g: j for j, g in enumerate(matrix.gene_ids)}
    missing = [g for g in genes if g not in index]
    if missing:
        raise KeyError(f"genes absent from the matrix: {missing}")
    cols = [index[g] for g in genes]
    return matrix.values[:, cols]


def fit(spec: ModelSpec, data: LabeledDataset, genes, seed: int = 0) -> FittedModel:
    """Train the requested family on the given gene columns.

    Deterministic given (spec, data, genes, seed).  One-class data is an
    error; IRLS divergence under complete separation is not (the model comes
    back flagged instead).
    """
    genes = tuple(genes)
    if not genes:
        raise ValueError("genes must be nonempty")
    y = data.labels
    if y.sum() == 0 or y.sum() == len(y):
        raise ValueError("both classes must be present to fit")
    X = _extract(data, genes)

    family = spec.family
    if family in ("logistic", "logistic_stepwise"):
        inner = _logistic.fit_logistic(X, y, max_iter=spec.max_iter, coef_cap=spec.coef_cap)
        diag = Diagnostics(
            converged=inner.converged,
            separation=inner.separation,
            loss_trace=tuple(inner.deviance_trace),
            standard_errors=tuple(inner.standard_errors),
            standardized_coefficients=tuple(inner.coef),
        )
    elif family == "pls":
        inner = _pls.fit_pls(X, y, n_components=spec.n_components, coef_cutoff=spec.coef_cutoff)
        diag = Diagnostics(standardized_coefficients=tuple(inner.coef))
    elif family == "tree":
        inner = _tree.fit_tree(X, y, max_depth=spec.max_depth, min_leaf=spec.min_leaf)
        diag = Diagnostics()
    elif family == "boosting":
        inner = _boosting.fit_boosting(
            X, y, n_trees=spec.n_trees, depth=spec.tree_depth, shrinkage=spec.shrinkage,
            subsample=spec.subsample, min_leaf=spec.boost_min_leaf, seed=seed)
        diag = Diagnostics(loss_trace=tuple(inner.deviance_trace))
    elif family == "lasso":
        inner = _lasso.fit_lasso(X, y, lambda_grid=spec.lambda_grid,
                                 cv_folds=spec.cv_folds, seed=seed)
        diag = Diagnostics(standardized_coefficients=tuple(inner.coef))
    elif family == "mlp":
        inner = _mlp.fit_mlp(X, y, hidden_units=spec.hidden_units,
                             weight_decay=spec.weight_decay, epochs=spec.epochs,
                             learning_rate=spec.learning_rate, seed=seed)
        diag = Diagnostics(loss_trace=tuple(inner.loss_trace))
    elif family == "svm":
        inner = _svm.fit_svm(X, y, kernel=spec.kernel, C=spec.C, gamma=spec.gamma,
                             degree=spec.degree, coef0=spec.coef0)
        diag = Diagnostics(converged=inner.converged, loss_trace=tuple(inner.dual_trace),
                           kkt_residual=inner.kkt_residual)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {family!r}")

    return FittedModel(family=family, genes=genes, inner=inner, diagnostics=diag, spec=spec)


def predict(model: FittedModel, rows: ExpressionMatrix) -> Posterior:
    """Posterior class-1 probabilities for new rows (by gene id, not position)."""
    X = _extract(rows, model.genes)
    family = model.family
    if family in ("logistic", "logistic_stepwise"):
        p = _logistic.logistic_predict_proba(model.inner, X)
    elif family == "pls":
        p = _pls.pls_predict_proba(model.inner, X)
    elif family == "tree":
        p = _tree.tree_predict_proba(model.inner, X)
    elif family == "boosting":
        p = _boosting.boosting_predict_proba(model.inner, X)
    elif family == "lasso":
        p = _lasso.lasso_predict_proba(model.inner, X)
    elif family == "mlp":
        p = _mlp.mlp_predict_proba(model.inner, X)
    elif family == "svm":
        p = _svm.svm_predict_proba(model.inner, X)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {family!r}")
    return Posterior(probabilities=p)


_SCORE_KIND = {
    "logistic": "abs_std_coef",
    "logistic_stepwise": "abs_std_coef",
    "pls": "abs_std_coef",
    "lasso": "abs_std_coef",
    "tree": "importance",
    "boosting": "importance",
    "mlp": "abs_weight",
    "svm": "abs_weight",
}


def gene_importance(model: FittedModel) -> GeneRanking:
    """Family-specific per-gene scores, ranked descending."""
    family = model.family
    if family in ("logistic", "logistic_stepwise"):
        scores = _logistic.logistic_importance(model.inner)
    elif family == "pls":
        scores = _pls.pls_importance(model.inner)
    elif family == "tree":
        scores = _tree.tree_importance(model.inner)
    elif family == "boosting":
        scores = _boosting.boosting_importance(model.inner)
    elif family == "lasso":
        scores = _lasso.lasso_importance(model.inner)
    elif family == "mlp":
        scores = _mlp.mlp_importance(model.inner)
    elif family == "svm":
        scores = _svm.svm_importance(model.inner)
        kind = "abs_weight" if model.inner.kernel == "linear" else "importance"
        return ranking_from_scores(model.genes, scores, kind)
    else:  # pragma: no cover
        raise ValueError(f"unknown family {family!r}")
    return ranking_from_scores(model.genes, scores, _SCORE_KIND[family])


def selected_genes(model: FittedModel) -> frozenset[str]:
    """The genes a fitted model claims matter.

    PLS and lasso have intrinsic rules (standardized-coefficient cutoff,
    nonzero coefficients); trees report the genes actually split on; the
    remaining families default to the PLS-style coefficient cutoff where a
    standardized coefficient exists and to positive importance otherwise.
    """
    if model.family == "lasso":
        mask = np.abs(model.inner.coef) > 0
    elif model.family in ("pls", "logistic", "logistic_stepwise"):
        cutoff = model.spec.coef_cutoff
        mask = np.abs(np.array(model.diagnostics.standardized_coefficients)) >= cutoff
    elif model.family in ("tree", "boosting"):
        ranking = gene_importance(model)
        return frozenset(g for g, s in ranking.entries if s > 0)
    else:
        ranking = gene_importance(model)
        return frozenset(g for g, s in ranking.entries if s > 0)
    return frozenset(g for g, keep in zip(model.genes, mask) if keep)


def stepwise_select(spec: ModelSpec, data: LabeledDataset, pool, alpha: float = 0.05,
                    seed: int = 0) -> frozenset[str]:
    """Backward Wald elimination for logistic regression.

    Repeatedly refits and drops the gene with the largest Wald p above
    ``alpha``.  Because Wald p-values collapse toward 1 under complete
    separation (the Hauck-Donner effect), a drop is vetoed when removing the
    gene would raise the deviance significantly (likelihood-ratio check at
    the same alpha); vetoed genes stay in the model.  May return the empty
    set.
    """
    if spec.family != "logistic_stepwise":
        raise ValueError("stepwise selection requires family='logistic_stepwise'")
    pool = list(pool)
    if not pool:
        raise ValueError("pool must be nonempty")
    from scipy.stats import chi2

    protected: set[str] = set()
    while pool:
        model = fit(spec, data, pool, seed=seed)
        inner = model.inner
        order = np.argsort(-inner.wald_p, kind="stable")
        dropped = False
        for j in order:
            gene = pool[int(j)]
            if inner.wald_p[int(j)] <= alpha or gene in protected:
                continue
            rest = [g for g in pool if g != gene]
            if rest:
                reduced = fit(spec, data, rest, seed=seed)
                dev_increase = (reduced.inner.deviance_trace[-1]
                                - inner.deviance_trace[-1])
            else:
                null_dev = _null_deviance(data.labels)
                dev_increase = null_dev - inner.deviance_trace[-1]
            lr_p = float(chi2.sf(max(dev_increase, 0.0), df=1))
            if lr_p <= alpha:
                protected.add(gene)
                continue
            pool = rest
            dropped = True
            break
        if not dropped:
            break
    return frozenset(pool)


def _null_deviance(y) -> float:
    y = np.asarray(y, dtype=float)
    p = min(max(float(y.mean()), 1e-12), 1 - 1e-12)
    return float(-2.0 * (y.sum() * np.log(p) + (len(y) - y.sum()) * np.log(1 - p)))
