import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slce.data import Dataset, build_centroid_target
from slce.lce import LceConfig, TrainingError, _cost_and_gradient, fit_lce, lce_cost, lce_gradient
from slce.optim import finite_diff_gradient


def elementwise_cost(A, X, C):
    """Independent oracle: explicit triple loops, no matrix products."""
    d, k = A.shape
    n = X.shape[1]
    P = [[sum(A[i, l] * A[j, l] for l in range(k)) for j in range(d)] for i in range(d)]
    total = 0.0
    for i in range(d):
        for s in range(n):
            recon = sum(P[i][j] * X[j, s] for j in range(d))
            total += (C[i, s] - recon) ** 2
    return 0.5 * total


def random_instance(rng, d, k, n):
    return (rng.uniform(-1, 1, (d, k)), rng.uniform(-1, 1, (d, n)), rng.uniform(-1, 1, (d, n)))


def rel_err(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def test_cost_at_zero_encoder(rng):
    _, X, C = random_instance(rng, 5, 2, 4)
    assert lce_cost(np.zeros((5, 2)), X, C) == pytest.approx(0.5 * np.sum(C**2), rel=1e-14)


def test_exact_reconstruction_costs_nothing():
    A = np.array([[1.0], [0.0], [0.0]])
    x = np.array([[2.5], [0.0], [0.0]])
    assert lce_cost(A, x, x) == 0.0


def test_cost_matches_elementwise_oracle(rng):
    A, X, C = random_instance(rng, 6, 2, 4)
    assert lce_cost(A, X, C) == pytest.approx(elementwise_cost(A, X, C), rel=1e-12)


def test_gradient_vanishes_at_zero(rng):
    _, X, C = random_instance(rng, 4, 3, 5)
    np.testing.assert_array_equal(lce_gradient(np.zeros((4, 3)), X, C), 0.0)


def test_gradient_matches_finite_differences(rng):
    A, X, C = random_instance(rng, 8, 3, 6)
    fd = finite_diff_gradient(lambda a: lce_cost(a, X, C), A, 1e-5)
    assert rel_err(lce_gradient(A, X, C), fd) <= 1e-5


def test_gradient_zero_at_perfect_reconstruction(rng):
    X = rng.normal(size=(6, 2)) @ rng.normal(size=(2, 5))  # rank 2
    Q, _ = np.linalg.qr(X)
    A = Q[:, :2]
    assert lce_cost(A, X, X) == pytest.approx(0.0, abs=1e-20)
    np.testing.assert_allclose(lce_gradient(A, X, X), 0.0, atol=1e-12)


def test_training_gradient_equals_four_term_form(rng):
    A, X, C = random_instance(rng, 7, 3, 9)
    cost, g = _cost_and_gradient(A, X, C)
    assert cost == pytest.approx(lce_cost(A, X, C), rel=1e-13)
    np.testing.assert_allclose(g, lce_gradient(A, X, C), rtol=1e-11, atol=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        lce_cost(np.zeros((3, 2)), np.zeros((4, 5)), np.zeros((4, 5)))
    with pytest.raises(ValueError):
        lce_gradient(np.zeros((4, 2)), np.zeros((4, 5)), np.zeros((4, 6)))


@given(st.integers(1, 10), st.integers(1, 4), st.integers(1, 8), st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_cost_invariant_under_right_orthogonal_action(d, k, n, seed):
    rng = np.random.default_rng(seed)
    A, X, C = random_instance(rng, d, k, n)
    Q, _ = np.linalg.qr(rng.normal(size=(k, k)))
    assert lce_cost(A @ Q, X, C) == pytest.approx(lce_cost(A, X, C), rel=1e-10, abs=1e-12)


@given(st.floats(-10, 10), st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_cost_independent_of_scale_when_data_is_zero(alpha, seed):
    rng = np.random.default_rng(seed)
    A, _, C = random_instance(rng, 5, 2, 3)
    assert lce_cost(alpha * A, np.zeros((5, 3)), C) == pytest.approx(0.5 * np.sum(C**2), rel=1e-14)


def two_blobs(seed=0):
    rng = np.random.default_rng(seed)
    centers = np.array([[3.0, 1.0], [-3.0, -1.0]])
    labels = np.repeat([0, 1], 10)
    X = centers[labels].T + 0.1 * rng.normal(size=(2, 20))
    return Dataset(X, labels)


def test_easy_instance_reaches_within_class_scatter():
    ds = two_blobs()
    ct = build_centroid_target(ds)
    model = fit_lce(ds.features, ct.targets, LceConfig(embedding_dim=2, init_seed=3))
    scatter = 0.5 * np.sum((ds.features - ct.targets) ** 2)
    assert model.converged
    assert model.cost_trace[-1] <= scatter + 1e-3
    assert model.cost_trace[-1] <= 0.01 * model.cost_trace[0]


def test_fit_is_deterministic():
    ds = two_blobs(1)
    ct = build_centroid_target(ds)
    cfg = LceConfig(embedding_dim=1, init_seed=9, max_iterations=300)
    a = fit_lce(ds.features, ct.targets, cfg)
    b = fit_lce(ds.features, ct.targets, cfg)
    assert a.cost_trace.tobytes() == b.cost_trace.tobytes()
    assert a.A.tobytes() == b.A.tobytes()


def test_infinite_tolerance_stops_after_one_step():
    ds = two_blobs()
    ct = build_centroid_target(ds)
    m = fit_lce(ds.features, ct.targets, LceConfig(embedding_dim=1, convergence_tol=math.inf))
    assert m.converged and m.iterations_run == 1 and m.cost_trace.size == 2


def test_iteration_cap_reports_not_converged():
    ds = two_blobs()
    ct = build_centroid_target(ds)
    m = fit_lce(ds.features, ct.targets, LceConfig(embedding_dim=1, convergence_tol=0.0, max_iterations=25))
    assert not m.converged
    assert m.iterations_run == 25 and m.cost_trace.size == 26


def test_model_invariants_and_embed():
    ds = two_blobs()
    ct = build_centroid_target(ds)
    m = fit_lce(ds.features, ct.targets, LceConfig(embedding_dim=1, init_seed=2))
    assert np.all(np.isfinite(m.A)) and np.all(m.cost_trace >= 0)
    assert abs(m.cost_trace[-1] - m.cost_trace[-2]) <= m.config.convergence_tol
    assert m.embed(ds.features).shape == (1, 20)


def test_divergence_is_reported_with_iteration():
    X = np.full((2, 2), 1e200)
    with pytest.raises(TrainingError) as info:
        fit_lce(X, X, LceConfig(embedding_dim=1, init_scale=1e10))
    assert info.value.iteration == 0


def test_embedding_dim_larger_than_features():
    with pytest.raises(ValueError, match="exceeds"):
        fit_lce(np.ones((2, 3)), np.ones((2, 3)), LceConfig(embedding_dim=3))
