"""Per-gene two-sample tests and multiplicity adjustment.

The scan runs Welch's t-test gene by gene (diseased vs normal); the
adjustment step turns the raw p-values into a rejection set via Bonferroni,
Benjamini-Hochberg step-up, or the two-stage adaptive variant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .simkit import LabeledDataset

__all__ = ["TestResult", "AdjustmentResult", "welch_t", "testwise_scan", "adjust"]

ADJUST_METHODS = ("bonferroni", "bh", "adaptive_bh")


@dataclass(frozen=True)
class TestResult:
    gene_id: str
    t_statistic: float
    df: float
    p_value: float
    degenerate: bool = False


@dataclass(frozen=True)
class AdjustmentResult:
    """Multiplicity-adjusted scan.  ``rejected`` is the authoritative set;
    for adaptive_bh the adjusted p-values are a clipped convenience and the
    step-up equivalence {adjusted <= q} holds exactly for bh only."""

    method: str
    q: float
    adjusted_p: np.ndarray
    rejected: frozenset
    rejected_mask: np.ndarray


def _welch_from_moments(mean0, var0, n0, mean1, var1, n1):
    """Vectorized Welch t, df and two-sided p from per-group moments."""
    mean0, var0, mean1, var1 = (np.asarray(a, dtype=float) for a in (mean0, var0, mean1, var1))
    se2 = var0 / n0 + var1 / n1
    diff = mean1 - mean0
    degenerate = se2 == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(degenerate, np.where(diff == 0.0, 0.0, np.inf * np.sign(diff)), diff / np.sqrt(se2))
        df = se2**2 / ((var0 / n0) ** 2 / (n0 - 1) + (var1 / n1) ** 2 / (n1 - 1))
    df = np.where(degenerate, float(n0 + n1 - 2), df)
    p = np.where(np.isinf(t), 0.0, 2.0 * special.stdtr(df, -np.abs(np.where(np.isinf(t), 0.0, t))))
    p = np.where(degenerate & (diff == 0.0), 1.0, p)
    return t, df, p, degenerate


def welch_t(group0, group1) -> TestResult:
    """Welch's heteroscedastic two-sample t-test, two-sided.

    Degenerate inputs (both groups zero-variance) return t=0, p=1 for equal
    means and p=0 with the degenerate flag for unequal means.
    """
    g0 = np.asarray(group0, dtype=float)
    g1 = np.asarray(group1, dtype=float)
    if g0.size < 2 or g1.size < 2:
        raise ValueError("each group needs at least 2 observations")
    if not (np.all(np.isfinite(g0)) and np.all(np.isfinite(g1))):
        raise ValueError("observations must be finite")
    t, df, p, degenerate = _welch_from_moments(
        g0.mean(), g0.var(ddof=1), g0.size, g1.mean(), g1.var(ddof=1), g1.size
    )
    return TestResult(
        gene_id="",
        t_statistic=float(t),
        df=float(df),
        p_value=float(p),
        degenerate=bool(degenerate),
    )


def testwise_scan(data: LabeledDataset) -> list[TestResult]:
    """Welch test per gene, diseased vs normal, in gene-column order."""
    y = data.labels
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n0 < 2 or n1 < 2:
        raise ValueError("both label classes need at least 2 patients")
    v = data.matrix.values
    g0, g1 = v[y == 0], v[y == 1]
    t, df, p, degenerate = _welch_from_moments(
        g0.mean(axis=0), g0.var(axis=0, ddof=1), n0,
        g1.mean(axis=0), g1.var(axis=0, ddof=1), n1,
    )
    return [
        TestResult(gene_id=gid, t_statistic=float(t[j]), df=float(df[j]),
                   p_value=float(p[j]), degenerate=bool(degenerate[j]))
        for j, gid in enumerate(data.matrix.gene_ids)
    ]


def _bh_reject(p: np.ndarray, q: float) -> np.ndarray:
    """Step-up rejection mask at level q; ties sorted stably by (p, index)."""
    m = p.size
    order = np.argsort(p, kind="stable")
    thresh = q * np.arange(1, m + 1) / m
    passed = np.flatnonzero(p[order] <= thresh)
    mask = np.zeros(m, dtype=bool)
    if passed.size:
        mask[order[: passed[-1] + 1]] = True
    return mask


def _bh_adjusted(p: np.ndarray) -> np.ndarray:
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj_sorted = np.minimum(1.0, np.minimum.accumulate(scaled[::-1])[::-1])
    adj = np.empty(m)
    adj[order] = adj_sorted
    return adj


def adjust(p, method: str = "bh", q: float = 0.05, gene_ids=None) -> AdjustmentResult:
    """Adjust a p-value vector and report the rejection set.

    bonferroni: adjusted = min(1, m*p).  bh: standard step-up with the
    cummin-adjusted p-values.  adaptive_bh: two-stage procedure -- stage one
    runs BH at q/(1+q), m0 is estimated as m minus the stage-one rejections,
    stage two reruns BH at level q*m/m0 (so its rejections always contain
    the plain BH set).
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("p must be a nonempty vector")
    if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
        raise ValueError("p-values must lie in [0, 1]")
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if method not in ADJUST_METHODS:
        raise ValueError(f"unknown method {method!r}")
    m = p.size

    if method == "bonferroni":
        adjusted = np.minimum(1.0, m * p)
        mask = adjusted <= q
    elif method == "bh":
        adjusted = _bh_adjusted(p)
        mask = _bh_reject(p, q)
    else:
        stage1 = _bh_reject(p, q / (1.0 + q))
        r1 = int(stage1.sum())
        if r1 == 0:
            mask = stage1
            adjusted = np.maximum(p, _bh_adjusted(p))
        elif r1 == m:
            mask = stage1
            adjusted = p.copy()
        else:
            m0 = m - r1
            mask = _bh_reject(p, q * m / m0)
            adjusted = np.maximum(p, np.minimum(1.0, _bh_adjusted(p) * m0 / m))

    if gene_ids is not None:
        gene_ids = tuple(gene_ids)
        if len(gene_ids) != m:
            raise ValueError("gene_ids length must match p")
        rejected = frozenset(gene_ids[j] for j in np.flatnonzero(mask))
    else:
        rejected = frozenset(int(j) for j in np.flatnonzero(mask))
    return AdjustmentResult(method=method, q=q, adjusted_p=adjusted,
                            rejected=rejected, rejected_mask=mask)


def scan_rejections(data: LabeledDataset, method: str = "bh", q: float = 0.05) -> AdjustmentResult:
    """Convenience: testwise scan followed by multiplicity adjustment."""
    results = testwise_scan(data)
    p = np.array([r.p_value for r in results])
    return adjust(p, method=method, q=q, gene_ids=data.matrix.gene_ids)
