import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genebench.hypotest import adjust, scan_rejections, welch_t
from genebench.hypotest import testwise_scan as run_scan
from genebench.simkit import ExpressionMatrix, LabeledDataset, gen_cohort, label, make_disease_spec


def test_welch_identical_groups():
    r = welch_t([1, 2, 3], [1, 2, 3])
    assert r.t_statistic == 0.0
    assert r.p_value == 1.0


def test_welch_known_case():
    # closed form: t = 3/sqrt(2/3), Welch df = 4; p from the t CDF
    r = welch_t([1, 2, 3], [4, 5, 6])
    assert r.t_statistic == pytest.approx(3.0 / np.sqrt(2.0 / 3.0), rel=1e-9)
    assert r.df == pytest.approx(4.0, abs=1e-9)
    assert r.p_value == pytest.approx(0.0213, abs=2e-4)


def test_welch_equal_variance_df_collapses():
    g0 = np.array([1.0, 2.0, 3.0, 4.0])
    g1 = g0 + 7.5
    r = welch_t(g0, g1)
    assert r.df == pytest.approx(len(g0) + len(g1) - 2, abs=1e-9)


def test_welch_degenerate_variance():
    equal = welch_t([2.0, 2.0], [2.0, 2.0])
    assert equal.t_statistic == 0.0 and equal.p_value == 1.0
    shifted = welch_t([2.0, 2.0], [3.0, 3.0])
    assert shifted.p_value == 0.0
    assert shifted.degenerate


def test_welch_symmetric_in_group_order():
    rng = np.random.default_rng(0)
    a, b = rng.random(8), rng.random(11)
    r1, r2 = welch_t(a, b), welch_t(b, a)
    assert r1.p_value == pytest.approx(r2.p_value, rel=1e-12)
    assert r1.t_statistic == pytest.approx(-r2.t_statistic, rel=1e-12)


def test_welch_requires_two_observations():
    with pytest.raises(ValueError):
        welch_t([1.0], [1.0, 2.0])


def test_scan_matches_scalar_and_orders_by_column():
    m = gen_cohort(30, 3, seed=5)
    labels = np.array([0, 1] * 15)
    data = LabeledDataset(matrix=m, labels=labels)
    results = run_scan(data)
    assert [r.gene_id for r in results] == ["X1", "X2", "X3"]
    for j, r in enumerate(results):
        direct = welch_t(m.values[labels == 0, j], m.values[labels == 1, j])
        assert r.p_value == pytest.approx(direct.p_value, rel=1e-12)
        assert r.t_statistic == pytest.approx(direct.t_statistic, rel=1e-12)


def test_scan_label_gene_has_smallest_p():
    rng = np.random.default_rng(2)
    labels = np.array([0, 1] * 20)
    values = rng.random((40, 5)) * 10
    values[:, 3] = labels  # a gene identical to the label
    data = LabeledDataset(
        matrix=ExpressionMatrix(values=values, gene_ids=tuple(f"X{i+1}" for i in range(5))),
        labels=labels)
    results = run_scan(data)
    assert min(results, key=lambda r: r.p_value).gene_id == "X4"


def test_scan_rejects_one_class():
    m = gen_cohort(10, 3, seed=5)
    with pytest.raises(ValueError):
        run_scan(LabeledDataset(matrix=m, labels=np.ones(10, dtype=int)))


def test_bh_example_all_rejected():
    res = adjust([0.01, 0.02, 0.03, 0.04, 0.05], method="bh", q=0.05)
    assert res.rejected_mask.all()


def test_bonferroni_example_one_rejected():
    res = adjust([0.01, 0.02, 0.03, 0.04, 0.05], method="bonferroni", q=0.05)
    assert res.rejected_mask.tolist() == [True, False, False, False, False]
    np.testing.assert_allclose(res.adjusted_p, [0.05, 0.10, 0.15, 0.20, 0.25])


@pytest.mark.parametrize("method", ["bonferroni", "bh", "adaptive_bh"])
def test_all_ones_rejects_nothing(method):
    res = adjust([1.0, 1.0, 1.0], method=method, q=0.05)
    assert not res.rejected_mask.any()
    np.testing.assert_allclose(res.adjusted_p, [1.0, 1.0, 1.0])


def test_adjust_validates_inputs():
    with pytest.raises(ValueError):
        adjust([0.5, 1.5], method="bh", q=0.05)
    with pytest.raises(ValueError):
        adjust([0.5], method="bh", q=0.0)
    with pytest.raises(ValueError):
        adjust([0.5], method="nope", q=0.05)


def _bh_bruteforce(p, q):
    """Independent step-up oracle: largest k with p_(k) <= k q / m."""
    m = len(p)
    order = np.argsort(p, kind="stable")
    sorted_p = np.asarray(p)[order]
    best_k = 0
    for k in range(1, m + 1):
        if sorted_p[k - 1] <= k * q / m:
            best_k = k
    mask = np.zeros(m, dtype=bool)
    mask[order[:best_k]] = True
    return mask


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=20),
       st.sampled_from([0.01, 0.05, 0.1, 0.25]))
def test_bh_matches_bruteforce(p, q):
    res = adjust(p, method="bh", q=q)
    np.testing.assert_array_equal(res.rejected_mask, _bh_bruteforce(p, q))
    # step-up equivalence with the adjusted p-values
    np.testing.assert_array_equal(res.rejected_mask, res.adjusted_p <= q)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=20),
       st.sampled_from([0.01, 0.05, 0.1]))
def test_bonferroni_subset_of_bh(p, q):
    bon = adjust(p, method="bonferroni", q=q)
    bh = adjust(p, method="bh", q=q)
    assert not (bon.rejected_mask & ~bh.rejected_mask).any()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=20),
       st.integers(0, 2**32 - 1))
def test_bh_monotone_in_p(p, seed):
    q = 0.1
    rng = np.random.default_rng(seed)
    j = int(rng.integers(len(p)))
    raised = list(p)
    raised[j] = min(1.0, raised[j] + float(rng.random()))
    before = adjust(p, method="bh", q=q).rejected_mask
    after = adjust(raised, method="bh", q=q).rejected_mask
    # raising one p-value never enlarges the rejection set
    assert not (after & ~before).any()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=15),
       st.integers(0, 10**6))
def test_permutation_equivariance(p, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(p))
    base = adjust(p, method="bh", q=0.05)
    shuffled = adjust(list(np.asarray(p)[perm]), method="bh", q=0.05)
    np.testing.assert_allclose(shuffled.adjusted_p, base.adjusted_p[perm])
    np.testing.assert_array_equal(shuffled.rejected_mask, base.rejected_mask[perm])


def _adaptive_oracle(p, q):
    stage1 = _bh_bruteforce(p, q / (1 + q))
    r1 = int(stage1.sum())
    m = len(p)
    if r1 == 0 or r1 == m:
        return stage1
    return _bh_bruteforce(p, q * m / (m - r1))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=20),
       st.sampled_from([0.01, 0.05, 0.1, 0.2]))
def test_adaptive_bh_matches_two_stage_oracle(p, q):
    res = adjust(p, method="adaptive_bh", q=q)
    np.testing.assert_array_equal(res.rejected_mask, _adaptive_oracle(p, q))
    bh = adjust(p, method="bh", q=q)
    assert not (bh.rejected_mask & ~res.rejected_mask).any()  # superset of BH


@settings(max_examples=150, deadline=None)
@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=1, max_size=20),
       st.sampled_from(["bonferroni", "bh", "adaptive_bh"]))
def test_adjusted_p_bounds(p, method):
    res = adjust(p, method=method, q=0.05)
    assert np.all(res.adjusted_p >= np.asarray(p) - 1e-15)
    assert np.all(res.adjusted_p <= 1.0 + 1e-15)


def test_bh_adjusted_nondecreasing_in_sorted_order():
    rng = np.random.default_rng(3)
    p = rng.random(50)
    res = adjust(p, method="bh", q=0.05)
    order = np.argsort(p, kind="stable")
    adj_sorted = res.adjusted_p[order]
    assert np.all(np.diff(adj_sorted) >= -1e-15)


def test_scan_rejections_on_disease10_cohort():
    # at n = 204 the five causal genes dominate the scan
    m = gen_cohort(204, 200, seed=4)
    data = label(make_disease_spec(10, m), m)
    res = scan_rejections(data, method="bh", q=0.05)
    results = run_scan(data)
    order = np.argsort([r.p_value for r in results])
    top = {results[j].gene_id for j in order[:8]}
    assert {"X1", "X2", "X3", "X4", "X5"} <= top
