"""Synthetic cohort generation and disease labeling.

Cohorts are n x p expression matrices: three correlated "causal" genes
X1..X3 up front, the rest i.i.d. uniform noise.  A disease function maps
each patient's expression profile to a 0/1 label, with the causal gene
set recorded as ground truth.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CorrelationParams",
    "ExpressionMatrix",
    "DiseaseSpec",
    "LabeledDataset",
    "DegenerateCutoffWarning",
    "DISEASE_IDS",
    "raw_scale_params",
    "gen_cohort",
    "balanced_cutoff",
    "make_disease_spec",
    "label",
    "oversample",
    "column_stream",
]

NOISE_LOW = 0.0
NOISE_HIGH = 100.0

_UNIFORM_MEAN = (NOISE_LOW + NOISE_HIGH) / 2.0
_UNIFORM_SD = (NOISE_HIGH - NOISE_LOW) / math.sqrt(12.0)

# Default per-gene (mean, sd) targets for X1..X3.  X1 keeps its raw uniform
# scale (an affine map to a smaller mean would push its lower tail negative,
# violating nonnegativity); X2 and X3 are mapped to the reference cohort
# moments used throughout the disease definitions.
DEFAULT_RESCALE_TARGETS = (
    (_UNIFORM_MEAN, _UNIFORM_SD),
    (166.3, 67.2),
    (278.3, 92.4),
)

DISEASE_IDS = tuple(range(1, 12)) + (101, 102, 103)


def raw_scale_params(b: float = 0.8, c: float = 0.75) -> "CorrelationParams":
    """Params whose rescale targets are the raw population moments, leaving
    X1..X3 on the uniform noise scale.  The threshold diseases 101..103 use
    per-gene cutoffs calibrated to this scale."""
    return CorrelationParams(b=b, c=c, rescale_targets=(
        (_UNIFORM_MEAN, _UNIFORM_SD),
        (_UNIFORM_MEAN * (1 + b), _UNIFORM_SD * math.sqrt(1 + b**2)),
        (_UNIFORM_MEAN * (1 + b + c), _UNIFORM_SD * math.sqrt(1 + b**2 + c**2)),
    ))


class DegenerateCutoffWarning(UserWarning):
    """Raised when a balanced cutoff would produce a one-class labeling."""


def column_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based RNG stream keyed by (seed, index).

    Streams are independent per index, so appending genes to a cohort never
    perturbs columns generated earlier.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class CorrelationParams:
    """Mixing coefficients for the correlated trio X1..X3.

    X2 = X1 + b*Z1 and X3 = X2 + c*Z2 with X1, Z1, Z2 i.i.d. uniform, which
    induces rho(X1,X2) = 1/sqrt(1+b^2), rho(X1,X3) = 1/sqrt(1+b^2+c^2) and
    rho(X2,X3) = sqrt(1+b^2)/sqrt(1+b^2+c^2).
    """

    b: float = 0.8
    c: float = 0.75
    rescale_targets: tuple[tuple[float, float], ...] = DEFAULT_RESCALE_TARGETS

    def __post_init__(self):
        if not (self.b > 0 and self.c > 0):
            raise ValueError("mixing coefficients b and c must be positive")
        targets = tuple((float(m), float(s)) for m, s in self.rescale_targets)
        if len(targets) != 3:
            raise ValueError("rescale_targets must give (mean, sd) for X1..X3")
        for m, s in targets:
            if not (math.isfinite(m) and math.isfinite(s) and s > 0):
                raise ValueError("rescale targets must be finite with sd > 0")
        object.__setattr__(self, "rescale_targets", targets)
        for r in self.theoretical_correlations():
            if not 0.0 < r < 1.0:
                raise ValueError("derived correlations must lie in (0, 1)")

    def theoretical_correlations(self) -> tuple[float, float, float]:
        """(rho12, rho13, rho23) implied by b and c."""
        b2, c2 = self.b**2, self.c**2
        return (
            1.0 / math.sqrt(1.0 + b2),
            1.0 / math.sqrt(1.0 + b2 + c2),
            math.sqrt(1.0 + b2) / math.sqrt(1.0 + b2 + c2),
        )


@dataclass(frozen=True)
class ExpressionMatrix:
    """n_patients x n_genes nonnegative expression values."""

    values: np.ndarray
    gene_ids: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        if v.shape[1] != len(self.gene_ids):
            raise ValueError("gene_ids length must match the number of columns")
        if len(set(self.gene_ids)) != len(self.gene_ids):
            raise ValueError("gene_ids must be unique")
        if not np.all(np.isfinite(v)):
            raise ValueError("expression values must be finite")
        if np.any(v < 0):
            raise ValueError("expression values must be nonnegative")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "gene_ids", tuple(self.gene_ids))

    @property
    def n_patients(self) -> int:
        return self.values.shape[0]

    @property
    def n_genes(self) -> int:
        return self.values.shape[1]

    def column(self, gene_id: str) -> np.ndarray:
        return self.values[:, self.gene_ids.index(gene_id)]


@dataclass(frozen=True)
class DiseaseSpec:
    """A labeling rule: which genes drive the disease and at what cutoff.

    ``cutoff`` is a single score threshold for diseases 1..11 and a tuple of
    fixed per-gene thresholds for diseases 101..103.  ``centering_means`` is
    required by disease 5 only.
    """

    disease_id: int
    causal_genes: tuple[int, ...]
    cutoff: float | tuple[float, ...]
    centering_means: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.disease_id not in DISEASE_IDS:
            raise ValueError(f"unknown disease id {self.disease_id}")
        expected = _CAUSAL_INDICES[self.disease_id]
        if tuple(self.causal_genes) != expected:
            raise ValueError(
                f"disease {self.disease_id} is driven by genes {expected}, "
                f"got {tuple(self.causal_genes)}"
            )
        if (self.centering_means is not None) != (self.disease_id == 5):
            raise ValueError("centering_means is required by disease 5 and only disease 5")


@dataclass(frozen=True)
class LabeledDataset:
    """Expression matrix plus binary labels (1 = diseased) and optional truth."""

    matrix: ExpressionMatrix
    labels: np.ndarray
    truth: frozenset[str] | None = None

    def __post_init__(self):
        y = np.asarray(self.labels)
        if y.shape != (self.matrix.n_patients,):
            raise ValueError("labels length must equal n_patients")
        if not np.all(np.isin(y, (0, 1))):
            raise ValueError("labels must be binary 0/1")
        object.__setattr__(self, "labels", y.astype(np.int8))
        if self.truth is not None:
            object.__setattr__(self, "truth", frozenset(self.truth))

    @property
    def n_patients(self) -> int:
        return self.matrix.n_patients


def gen_cohort(
    n: int,
    p: int,
    params: CorrelationParams | None = None,
    seed: int = 0,
) -> ExpressionMatrix:
    """Generate an n x p cohort with correlated X1..X3 and uniform noise genes.

    Deterministic given (n, p, params, seed): every column draws from its own
    counter-based stream, so cohorts of different widths share their common
    columns exactly.
    """
    if n < 2:
        raise ValueError("need at least 2 patients")
    if p < 3:
        raise ValueError("need at least 3 genes (X1..X3 are always present)")
    params = params or CorrelationParams()

    span = NOISE_HIGH - NOISE_LOW
    x1 = NOISE_LOW + span * column_stream(seed, 0).random(n)
    z1 = NOISE_LOW + span * column_stream(seed, 1).random(n)
    z2 = NOISE_LOW + span * column_stream(seed, 2).random(n)

    x2 = x1 + params.b * z1
    x3 = x2 + params.c * z2

    # Population moments of the raw columns; affine rescaling to the targets
    # preserves the induced correlations exactly.
    raw_moments = (
        (_UNIFORM_MEAN, _UNIFORM_SD),
        (_UNIFORM_MEAN * (1 + params.b), _UNIFORM_SD * math.sqrt(1 + params.b**2)),
        (
            _UNIFORM_MEAN * (1 + params.b + params.c),
            _UNIFORM_SD * math.sqrt(1 + params.b**2 + params.c**2),
        ),
    )
    values = np.empty((n, p), dtype=float)
    for j, col in enumerate((x1, x2, x3)):
        raw_mean, raw_sd = raw_moments[j]
        tgt_mean, tgt_sd = params.rescale_targets[j]
        values[:, j] = tgt_mean + (col - raw_mean) * (tgt_sd / raw_sd)
    for j in range(3, p):
        values[:, j] = NOISE_LOW + span * column_stream(seed, j).random(n)

    gene_ids = tuple(f"X{j + 1}" for j in range(p))
    return ExpressionMatrix(values=values, gene_ids=gene_ids)


def balanced_cutoff(scores) -> float:
    """Median of the scores; thresholding there keeps both classes near 50%.

    Warns (and still returns the common value) when all scores are equal,
    since the resulting labeling would be one-class.
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 1 or s.size < 2:
        raise ValueError("need at least two scores")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if np.all(s == s[0]):
        warnings.warn(
            "all scores equal; thresholding at the cutoff yields one class",
            DegenerateCutoffWarning,
        )
    return float(np.median(s))


_CAUSAL_INDICES: dict[int, tuple[int, ...]] = {
    1: (0,),
    2: (0, 1),
    3: (0, 1, 2),
    4: (0, 1, 2),
    5: (0, 1, 2),
    6: (0, 1, 2),
    7: (0, 1, 2),
    8: (0, 1, 2),
    9: (0, 1, 2),
    10: (0, 1, 2, 3, 4),
    11: tuple(range(10)),
    101: (0, 1, 2),
    102: (0, 1, 2),
    103: (0, 1, 2),
}

# Diseases 1..3 mark the high-score side as normal; 4..11 mark it diseased.
_HIGH_IS_NORMAL = {1, 2, 3}

_FIXED_THRESHOLDS = {
    1: 53.1,
    101: (27.0, 70.0, 220.0),
    102: (23.0, 34.0, 180.0),
    103: (300.0, 140.0),
}


def disease_score(disease_id: int, matrix: ExpressionMatrix, centering_means=None) -> np.ndarray:
    """Continuous disease score for ids 1..11 (101..103 have no score)."""
    v = matrix.values
    x1, x2, x3 = (v[:, j] for j in range(3))
    if disease_id == 1:
        return x1
    if disease_id == 2:
        return 2 * x1 + x2
    if disease_id == 3:
        return 2 * x1 + 0.7 * x2 + 1.5 * x3
    if disease_id == 4:
        return x1**2 + x2 + x3
    if disease_id == 5:
        m1, m2, m3 = centering_means
        return (x1 - m1) ** 2 + (x2 - m2) + (x3 - m3)
    if disease_id == 6:
        return x1**2 + x2**2 + x3
    if disease_id == 7:
        return x1 * x2 + x2 * x3 + x1 * x3
    if disease_id == 8:
        return x1 * x2 * x3
    if disease_id == 9:
        return x1 + x2 + x3 + x1 * x2 + x2 * x3 + x3 * x1 + x1 * x2 * x3
    if disease_id == 10:
        return v[:, :5].prod(axis=1)
    if disease_id == 11:
        return v[:, :10].prod(axis=1)
    raise ValueError(f"disease {disease_id} has no continuous score")


def make_disease_spec(
    disease_id: int,
    matrix: ExpressionMatrix | None = None,
    cutoff: float | None = None,
) -> DiseaseSpec:
    """Build a DiseaseSpec, deriving the cutoff from the cohort when needed.

    Disease 1 uses its fixed cutoff and 101..103 their fixed thresholds;
    every other id takes an explicit ``cutoff`` or, given a cohort, the
    balanced (median-of-scores) cutoff for that cohort.
    """
    if disease_id not in DISEASE_IDS:
        raise ValueError(f"unknown disease id {disease_id}")
    causal = _CAUSAL_INDICES[disease_id]
    if matrix is not None and matrix.n_genes < max(causal) + 1:
        raise ValueError("cohort has fewer genes than the disease requires")

    means = None
    if disease_id == 5:
        if matrix is None:
            raise ValueError("disease 5 needs a cohort to compute centering means")
        means = tuple(float(matrix.values[:, j].mean()) for j in range(3))

    if disease_id in _FIXED_THRESHOLDS:
        return DiseaseSpec(disease_id, causal, _FIXED_THRESHOLDS[disease_id], means)
    if cutoff is None:
        if matrix is None:
            raise ValueError("need a cohort (or explicit cutoff) to set the balanced cutoff")
        cutoff = balanced_cutoff(disease_score(disease_id, matrix, means))
    return DiseaseSpec(disease_id, causal, float(cutoff), means)


def label(spec: DiseaseSpec, matrix: ExpressionMatrix) -> LabeledDataset:
    """Apply a disease rule to a cohort.  Pure: same inputs, same labels.

    All comparisons are strict, matching the disease definitions; scores
    landing exactly on a cutoff take the non-exceeding branch.
    """
    if matrix.n_genes < max(spec.causal_genes) + 1:
        raise ValueError("cohort has fewer genes than the disease requires")
    if spec.disease_id == 5 and spec.centering_means is None:
        raise ValueError("disease 5 requires centering_means")

    v = matrix.values
    if spec.disease_id in (101, 102, 103):
        x1, x2, x3 = v[:, 0], v[:, 1], v[:, 2]
        t = spec.cutoff
        if spec.disease_id == 101 or spec.disease_id == 102:
            y = (x1 > t[0]) & (x2 > t[1]) & (x3 < t[2])
        else:
            y = (x1 * x2 > t[0]) & (x3 < t[1])
    else:
        scores = disease_score(spec.disease_id, matrix, spec.centering_means)
        exceeds = scores > spec.cutoff
        y = ~exceeds if spec.disease_id in _HIGH_IS_NORMAL else exceeds

    truth = frozenset(matrix.gene_ids[j] for j in spec.causal_genes)
    return LabeledDataset(matrix=matrix, labels=y.astype(np.int8), truth=truth)


def oversample(data: LabeledDataset, seed: int = 0) -> LabeledDataset:
    """Balance a lopsided cohort: all minority rows plus an equal-size
    uniform sample (without replacement) of majority rows.

    Row order of the original cohort is preserved.
    """
    y = data.labels
    n1 = int(y.sum())
    n0 = len(y) - n1
    if n0 == 0 or n1 == 0:
        raise ValueError("both classes must be nonempty")
    minority = 1 if n1 <= n0 else 0
    keep = np.flatnonzero(y == minority)
    pool = np.flatnonzero(y != minority)
    rng = column_stream(seed, 0xB0B)
    sampled = rng.choice(pool, size=keep.size, replace=False)
    rows = np.sort(np.concatenate([keep, sampled]))
    return LabeledDataset(
        matrix=ExpressionMatrix(values=data.matrix.values[rows], gene_ids=data.matrix.gene_ids),
        labels=y[rows],
        truth=data.truth,
    )
