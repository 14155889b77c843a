import numpy as np

from genebench.learners import ModelSpec, fit, gene_importance, predict
from genebench.learners.mlp import fit_mlp, mlp_gradients, mlp_loss
from genebench.simkit import gen_cohort, label, make_disease_spec


def test_gradients_match_finite_differences():
    # fixed 5x3 toy problem; central differences at h = 1e-5
    rng = np.random.default_rng(0)
    Xs = rng.standard_normal((5, 3))
    y = np.array([0.0, 1.0, 1.0, 0.0, 1.0])
    w_in = 0.3 * rng.standard_normal((2, 3))
    b_in = 0.1 * rng.standard_normal(2)
    w_out = 0.3 * rng.standard_normal(2)
    b_out = 0.05
    wd = 1e-3

    g_w_in, g_b_in, g_w_out, g_b_out = mlp_gradients(Xs, y, w_in, b_in, w_out, b_out, wd)

    def loss_with(params):
        return mlp_loss(Xs, y, *params, wd)

    h = 1e-5
    flat = [(w_in, g_w_in), (b_in, g_b_in), (w_out, g_w_out)]
    for arr, grad in flat:
        it = np.nditer(arr, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + h
            up = loss_with((w_in, b_in, w_out, b_out))
            arr[idx] = orig - h
            down = loss_with((w_in, b_in, w_out, b_out))
            arr[idx] = orig
            numeric = (up - down) / (2 * h)
            assert abs(grad[idx] - numeric) <= 1e-4 * max(1.0, abs(numeric))
            it.iternext()
    numeric_b = (loss_with((w_in, b_in, w_out, b_out + h))
                 - loss_with((w_in, b_in, w_out, b_out - h))) / (2 * h)
    assert abs(g_b_out - numeric_b) <= 1e-4 * max(1.0, abs(numeric_b))


def test_training_reduces_loss():
    rng = np.random.default_rng(1)
    X = rng.random((40, 4)) * 10
    y = (X[:, 1] > 5).astype(float)
    model = fit_mlp(X, y, hidden_units=2, epochs=500, seed=0)
    assert model.loss_trace[-1] < model.loss_trace[0]


def test_single_hidden_unit_learns_threshold_gene():
    m = gen_cohort(62, 8, seed=2)
    data = label(make_disease_spec(1, m), m)
    model = fit(ModelSpec(family="mlp", epochs=800), data, m.gene_ids, seed=0)
    ranking = gene_importance(model)
    assert ranking.gene_ids()[0] == "X1"
    probs = predict(model, m).probabilities
    assert np.mean((probs > 0.5) == data.labels) > 0.9


def test_probabilities_in_range_and_deterministic():
    m = gen_cohort(30, 5, seed=3)
    data = label(make_disease_spec(2, m), m)
    spec = ModelSpec(family="mlp", hidden_units=3, epochs=300)
    a = fit(spec, data, m.gene_ids, seed=5)
    b = fit(spec, data, m.gene_ids, seed=5)
    pa, pb = predict(a, m).probabilities, predict(b, m).probabilities
    np.testing.assert_array_equal(pa, pb)
    assert np.all((pa > 0) & (pa < 1))


def test_importance_aggregates_over_hidden_units():
    m = gen_cohort(40, 4, seed=4)
    data = label(make_disease_spec(1, m), m)
    model = fit(ModelSpec(family="mlp", hidden_units=3, epochs=500), data, m.gene_ids, seed=0)
    scores = np.array([gene_importance(model).score_of(g) for g in model.genes])
    w_in, w_out = model.inner.w_in, model.inner.w_out
    expected = (np.abs(w_in) * np.abs(w_out)[:, None]).sum(axis=0)
    np.testing.assert_allclose(np.sort(scores), np.sort(expected), rtol=1e-12)
