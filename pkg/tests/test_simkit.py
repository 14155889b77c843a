import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genebench.simkit import (
    CorrelationParams,
    DegenerateCutoffWarning,
    DiseaseSpec,
    ExpressionMatrix,
    balanced_cutoff,
    gen_cohort,
    label,
    make_disease_spec,
    oversample,
)


def test_theoretical_correlations_default():
    rho12, rho13, rho23 = CorrelationParams().theoretical_correlations()
    assert rho12 == pytest.approx(1 / np.sqrt(1.64), abs=1e-12)
    assert rho13 == pytest.approx(1 / np.sqrt(2.2025), abs=1e-12)
    assert rho23 == pytest.approx(np.sqrt(1.64 / 2.2025), abs=1e-12)
    assert rho12 == pytest.approx(0.78, abs=0.005)
    assert rho13 == pytest.approx(0.67, abs=0.005)
    assert rho23 == pytest.approx(0.86, abs=0.005)


def test_small_mixing_makes_x2_a_copy_of_x1():
    rho12, _, _ = CorrelationParams(b=1e-6, c=1e-6).theoretical_correlations()
    assert rho12 == pytest.approx(1.0, abs=1e-9)


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        CorrelationParams(b=0.0)
    with pytest.raises(ValueError):
        CorrelationParams(rescale_targets=((50.0, 28.9), (166.3, np.inf), (278.3, 92.4)))


def test_sample_correlations_large_cohort():
    m = gen_cohort(10_000, 3, seed=1)
    c = np.corrcoef(m.values, rowvar=False)
    assert c[0, 1] == pytest.approx(0.7809, abs=0.03)
    assert c[0, 2] == pytest.approx(0.6738, abs=0.03)
    assert c[1, 2] == pytest.approx(0.8630, abs=0.03)


def test_cohort_shape_and_invariants():
    m = gen_cohort(62, 2000, seed=3)
    assert m.n_patients == 62 and m.n_genes == 2000
    assert m.gene_ids[0] == "X1" and m.gene_ids[-1] == "X2000"
    assert len(set(m.gene_ids)) == 2000
    assert np.all(np.isfinite(m.values)) and np.all(m.values >= 0)


def test_default_rescale_matches_reference_scale():
    # sample moments of a 62-patient cohort land near the reference cohort's
    m = gen_cohort(62, 3, seed=3)
    x1 = m.values[:, 0]
    assert abs(x1.mean() - 43.9) / 43.9 < 0.20
    assert abs(x1.std(ddof=1) - 26.4) / 26.4 < 0.20
    x2, x3 = m.values[:, 1], m.values[:, 2]
    assert abs(x2.mean() - 166.3) / 166.3 < 0.20
    assert abs(x3.mean() - 278.3) / 278.3 < 0.20


def test_gen_cohort_deterministic_and_column_stable():
    a = gen_cohort(40, 50, seed=9)
    b = gen_cohort(40, 50, seed=9)
    assert a.values.tobytes() == b.values.tobytes()
    wider = gen_cohort(40, 80, seed=9)
    np.testing.assert_array_equal(wider.values[:, :50], a.values)


def test_gen_cohort_validates_dimensions():
    with pytest.raises(ValueError):
        gen_cohort(1, 10, seed=0)
    with pytest.raises(ValueError):
        gen_cohort(10, 2, seed=0)


def test_balanced_cutoff_median():
    assert balanced_cutoff([1, 2, 3, 4]) == 2.5
    scores = np.array([1.0, 2.0, 3.0, 4.0])
    labels = scores > balanced_cutoff(scores)
    assert labels.sum() == 2


def test_balanced_cutoff_degenerate_warns():
    with pytest.warns(DegenerateCutoffWarning):
        balanced_cutoff([5.0, 5.0, 5.0, 5.0])


def test_balanced_cutoff_on_disease2_score_is_balanced():
    m = gen_cohort(62, 3, seed=7)
    scores = 2 * m.values[:, 0] + m.values[:, 1]
    cut = balanced_cutoff(scores)
    diseased = int((~(scores > cut)).sum())  # disease 2: high score = normal
    assert 25 <= diseased <= 37


def test_disease1_label_orientation():
    matrix = ExpressionMatrix(
        values=np.array([[60.0, 1.0, 1.0], [40.0, 1.0, 1.0]]), gene_ids=("X1", "X2", "X3"))
    data = label(make_disease_spec(1), matrix)
    assert data.labels.tolist() == [0, 1]
    assert data.truth == frozenset({"X1"})


def test_disease101_thresholds():
    matrix = ExpressionMatrix(
        values=np.array([[30.0, 80.0, 200.0], [30.0, 80.0, 230.0]]),
        gene_ids=("X1", "X2", "X3"))
    data = label(make_disease_spec(101), matrix)
    assert data.labels.tolist() == [1, 0]


def test_disease103_thresholds():
    matrix = ExpressionMatrix(
        values=np.array([[20.0, 20.0, 100.0], [20.0, 20.0, 150.0], [1.0, 20.0, 100.0]]),
        gene_ids=("X1", "X2", "X3"))
    data = label(make_disease_spec(103), matrix)
    assert data.labels.tolist() == [1, 0, 0]


def test_disease8_boundary_is_strict():
    matrix = ExpressionMatrix(
        values=np.array([[2.0, 3.0, 4.0], [2.0, 3.0, 5.0]]), gene_ids=("X1", "X2", "X3"))
    spec = make_disease_spec(8, cutoff=24.0)  # first row scores exactly 24
    data = label(spec, matrix)
    assert data.labels.tolist() == [0, 1]


def test_disease5_requires_centering_means():
    with pytest.raises(ValueError):
        DiseaseSpec(disease_id=5, causal_genes=(0, 1, 2), cutoff=1.0, centering_means=None)
    with pytest.raises(ValueError):
        DiseaseSpec(disease_id=4, causal_genes=(0, 1, 2), cutoff=1.0,
                    centering_means=(1.0, 2.0, 3.0))


def test_label_is_pure():
    m = gen_cohort(62, 10, seed=11)
    spec = make_disease_spec(7, m)
    a = label(spec, m)
    b = label(spec, m)
    np.testing.assert_array_equal(a.labels, b.labels)


@pytest.mark.parametrize("disease_id", [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_balanced_diseases_have_minority_at_least_40pct(disease_id, seed):
    m = gen_cohort(102, 12, seed=seed)
    data = label(make_disease_spec(disease_id, m), m)
    frac = data.labels.mean()
    assert min(frac, 1 - frac) >= 0.4


def test_oversample_lopsided_cohort():
    m = gen_cohort(1000, 5, seed=13)
    labels = np.zeros(1000, dtype=int)
    labels[:30] = 1  # 3% diseased
    from genebench.simkit import LabeledDataset
    data = LabeledDataset(matrix=m, labels=labels)
    balanced = oversample(data, seed=1)
    assert balanced.n_patients == 60
    assert balanced.labels.sum() == 30


def test_oversample_balanced_is_identity_sized():
    m = gen_cohort(62, 5, seed=13)
    labels = np.array([0, 1] * 31)
    from genebench.simkit import LabeledDataset
    data = LabeledDataset(matrix=m, labels=labels)
    balanced = oversample(data, seed=1)
    assert balanced.n_patients == 62


def test_oversample_colon_shape():
    m = gen_cohort(62, 5, seed=13)
    labels = np.array([1] * 40 + [0] * 22)
    from genebench.simkit import LabeledDataset
    data = LabeledDataset(matrix=m, labels=labels)
    balanced = oversample(data, seed=1)
    assert balanced.n_patients == 44
    assert balanced.labels.sum() == 22


def test_oversample_one_class_is_error():
    m = gen_cohort(10, 5, seed=13)
    from genebench.simkit import LabeledDataset
    data = LabeledDataset(matrix=m, labels=np.ones(10, dtype=int))
    with pytest.raises(ValueError):
        oversample(data, seed=0)


@settings(max_examples=25, deadline=None)
@given(n1=st.integers(2, 30), n0=st.integers(2, 30), seed=st.integers(0, 100))
def test_oversample_properties(n1, n0, seed):
    n = n1 + n0
    m = gen_cohort(n, 4, seed=seed)
    labels = np.array([1] * n1 + [0] * n0)
    from genebench.simkit import LabeledDataset
    balanced = oversample(LabeledDataset(matrix=m, labels=labels), seed=seed)
    minority = min(n0, n1)
    assert balanced.n_patients == 2 * minority
    assert balanced.labels.sum() == minority
    # every minority row appears exactly once
    minority_value = 1 if n1 <= n0 else 0
    kept = balanced.matrix.values[balanced.labels == minority_value]
    original = m.values[labels == minority_value]
    assert kept.shape == original.shape
    np.testing.assert_array_equal(np.sort(kept[:, 0]), np.sort(original[:, 0]))
