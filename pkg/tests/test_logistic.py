import numpy as np
import pytest

from genebench.learners import ModelSpec, fit, gene_importance, predict, stepwise_select
from genebench.learners.logistic import LogisticModel, fit_logistic, logistic_predict_proba
from genebench.simkit import ExpressionMatrix, LabeledDataset, gen_cohort, label, make_disease_spec


def _dataset(values, labels):
    ids = tuple(f"X{i+1}" for i in range(values.shape[1]))
    return LabeledDataset(matrix=ExpressionMatrix(values=values, gene_ids=ids),
                          labels=np.asarray(labels))


def test_irls_deviance_monotone_on_random_problems():
    rng = np.random.default_rng(0)
    for trial in range(100):
        n = int(rng.integers(12, 40))
        k = int(rng.integers(1, 5))
        X = rng.random((n, k)) * 10
        beta = rng.normal(size=k)
        p = 1 / (1 + np.exp(-(X - X.mean(axis=0)) @ beta))
        y = (rng.random(n) < p).astype(int)
        if y.sum() in (0, n):
            continue
        model = fit_logistic(X, y)
        assert np.all(np.diff(model.deviance_trace) <= 1e-9), f"trial {trial}"


def test_complete_separation_flagged():
    x = np.array([-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0])
    y = (x > 0).astype(int)
    model = fit_logistic((x + 5.0).reshape(-1, 1), y)
    assert model.separation
    assert np.max(model.standard_errors) > 10 * np.max(np.abs(model.coef)) / 15


def test_zero_model_predicts_half():
    model = LogisticModel(
        mean=np.zeros(2), scale=np.ones(2), intercept=0.0, coef=np.zeros(2),
        standard_errors=np.ones(2), wald_p=np.ones(2),
        deviance_trace=np.array([1.0]), converged=True, separation=False,
        log_likelihood=0.0)
    probs = logistic_predict_proba(model, np.random.default_rng(0).random((5, 2)))
    np.testing.assert_allclose(probs, 0.5)


def test_fit_recovers_signal_and_is_deterministic():
    m = gen_cohort(80, 6, seed=1)
    data = label(make_disease_spec(2, m), m)
    spec = ModelSpec(family="logistic")
    a = fit(spec, data, ("X1", "X2", "X4"), seed=0)
    b = fit(spec, data, ("X1", "X2", "X4"), seed=0)
    np.testing.assert_array_equal(a.inner.coef, b.inner.coef)
    ranking = gene_importance(a)
    assert set(ranking.gene_ids()[:2]) == {"X1", "X2"}
    post = predict(a, data.matrix)
    assert np.mean(post.labels == data.labels) > 0.9


def test_one_class_is_error():
    m = gen_cohort(10, 3, seed=2)
    data = LabeledDataset(matrix=m, labels=np.zeros(10, dtype=int))
    with pytest.raises(ValueError):
        fit(ModelSpec(family="logistic"), data, ("X1",), seed=0)


def test_stepwise_alpha_one_keeps_pool():
    m = gen_cohort(40, 6, seed=3)
    data = label(make_disease_spec(2, m), m)
    spec = ModelSpec(family="logistic_stepwise")
    pool = ("X1", "X2", "X5", "X6")
    assert stepwise_select(spec, data, pool, alpha=1.0) == frozenset(pool)


def test_stepwise_retains_perfect_predictor():
    # a gene equal to the label separates completely; the Wald p collapses
    # toward 1 but the likelihood-ratio veto keeps the gene in the model
    rng = np.random.default_rng(4)
    labels = np.array([0, 1] * 15)
    values = np.column_stack([labels.astype(float) * 2 + 1])
    data = _dataset(values, labels)
    spec = ModelSpec(family="logistic_stepwise")
    assert stepwise_select(spec, data, ("X1",), alpha=0.05) == frozenset({"X1"})


def test_stepwise_disease1_returns_empty_or_x1():
    m = gen_cohort(62, 100, seed=5)
    data = label(make_disease_spec(1, m), m)
    spec = ModelSpec(family="logistic_stepwise")
    pool = tuple(f"X{i+1}" for i in range(10))
    result = stepwise_select(spec, data, pool, alpha=0.05)
    assert result in (frozenset(), frozenset({"X1"}))


def test_stepwise_can_return_empty():
    rng = np.random.default_rng(6)
    labels = np.array([0, 1] * 20)
    values = rng.random((40, 3))  # pure noise pool
    data = _dataset(values, labels)
    spec = ModelSpec(family="logistic_stepwise")
    result = stepwise_select(spec, data, ("X1", "X2", "X3"), alpha=0.01)
    assert result == frozenset()
