"""Prescreening: univariate R-square ranking, cut-to-k pools, and
model-driven backward elimination."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .simkit import LabeledDataset

__all__ = ["GeneRanking", "StopRule", "rsquare_rank", "cut_to", "backward_eliminate"]

SCORE_KINDS = ("rsquare", "importance", "abs_weight", "abs_std_coef", "neg_log_p")


@dataclass(frozen=True)
class GeneRanking:
    """Genes ordered by score, descending; ties broken by gene column order."""

    entries: tuple[tuple[str, float], ...]
    score_kind: str

    def __post_init__(self):
        if self.score_kind not in SCORE_KINDS:
            raise ValueError(f"unknown score kind {self.score_kind!r}")
        object.__setattr__(self, "entries", tuple((g, float(s)) for g, s in self.entries))
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("entries must be sorted by score, descending")

    def gene_ids(self) -> tuple[str, ...]:
        return tuple(g for g, _ in self.entries)

    def score_of(self, gene_id: str) -> float:
        return dict(self.entries)[gene_id]


def ranking_from_scores(gene_ids, scores, score_kind: str) -> GeneRanking:
    """Stable descending sort: equal scores keep gene column order."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    entries = tuple((gene_ids[j], float(scores[j])) for j in order)
    return GeneRanking(entries=entries, score_kind=score_kind)


def rsquare_rank(data: LabeledDataset) -> GeneRanking:
    """Rank genes by the R-square of regressing the 0/1 label on each gene
    alone (the squared Pearson correlation).  Zero-variance genes score 0."""
    y = data.labels.astype(float)
    n1 = int(y.sum())
    if n1 < 2 or len(y) - n1 < 2:
        raise ValueError("need at least 2 patients per class")
    v = data.matrix.values
    xc = v - v.mean(axis=0)
    yc = y - y.mean()
    sxx = (xc**2).sum(axis=0)
    syy = float((yc**2).sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = (xc.T @ yc) ** 2 / (sxx * syy)
    r2 = np.where(sxx == 0.0, 0.0, r2)
    r2 = np.clip(r2, 0.0, 1.0)
    return ranking_from_scores(data.matrix.gene_ids, r2, "rsquare")


def cut_to(ranking: GeneRanking, k: int) -> tuple[str, ...]:
    """Top min(k, pool) gene ids in ranking order."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return ranking.gene_ids()[:k]


@dataclass(frozen=True)
class StopRule:
    """Stop backward elimination at this pool size even if error keeps falling."""

    min_size: int = 1


def backward_eliminate(spec, data: LabeledDataset, pool, stop: StopRule | None = None, seed: int = 0):
    """Drop the least important gene (per the model's own importance) until
    validation error rises above the incumbent or the pool hits min_size.

    Validation is LOOCV for n <= 120, otherwise a fixed 75/25 split.  A fit
    failure mid-loop returns the last successful pool with a warning.
    """
    from . import evalkit  # deferred: evalkit depends on learners

    stop = stop or StopRule()
    pool = tuple(pool)
    if not pool:
        raise ValueError("pool must be nonempty")

    def validation_error(genes):
        if data.n_patients <= 120:
            return evalkit.loocv(spec, data, genes, seed=seed).error_rate
        return evalkit.split_eval(spec, data, genes, seed=seed).error_rate

    from .learners import fit, gene_importance

    incumbent = pool
    try:
        incumbent_err = validation_error(incumbent)
    except Exception as exc:  # pragma: no cover - defensive
        warnings.warn(f"initial fit failed in backward elimination: {exc}")
        return incumbent

    while len(incumbent) > stop.min_size:
        try:
            model = fit(spec, data, incumbent, seed=seed)
            ranking = gene_importance(model)
            weakest = ranking.gene_ids()[-1]
            candidate = tuple(g for g in incumbent if g != weakest)
            candidate_err = validation_error(candidate)
        except Exception as exc:
            warnings.warn(f"fit failed during backward elimination: {exc}")
            return incumbent
        if candidate_err > incumbent_err:
            break
        incumbent, incumbent_err = candidate, candidate_err
    return incumbent
