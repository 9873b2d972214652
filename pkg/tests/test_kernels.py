"""The compiled kernels must agree with the NumPy fallback."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from slce import _pykernels, kernels

BACKENDS = kernels.backends()
HAS_CYTHON = "cython" in BACKENDS


@pytest.fixture(params=sorted(BACKENDS))
def backend(request):
    return BACKENDS[request.param]


def test_selected_backend_is_importable():
    assert kernels.BACKEND in BACKENDS


def test_adam_first_step_moves_by_learning_rate(backend):
    p = np.array([1.0])
    m, v = np.zeros(1), np.zeros(1)
    backend.adam_update(p, np.array([1.0]), m, v, 1, 0.002, 0.9, 0.999, 1e-8)
    assert p[0] == pytest.approx(1.0 - 0.002, abs=1e-10)


def test_gate_contraction_small(backend):
    G = np.array([[1.0, 2.0], [3.0, 4.0]])
    X = np.array([[5.0, 6.0], [7.0, 8.0]])
    np.testing.assert_allclose(backend.gate_contraction(G, X), [17.0, 53.0])


def test_max_ratio_cut_small(backend):
    p, ratio = backend.max_ratio_cut(np.array([10.0, 9.0, 8.0, 0.01, 0.005]), 1e-12)
    assert p == 3
    assert ratio == pytest.approx(800.0)


def test_max_ratio_cut_prefers_earliest_tie(backend):
    p, _ = backend.max_ratio_cut(np.full(6, 2.5), 1e-12)
    assert p == 1


finite = st.floats(-1e3, 1e3, allow_nan=False)


@pytest.mark.skipif(not HAS_CYTHON, reason="compiled extension not built")
@given(
    arrays(np.float64, st.integers(1, 64), elements=finite),
    st.integers(1, 500),
    st.integers(0, 2**31),
)
@settings(max_examples=100, deadline=None)
def test_adam_backends_agree(grad, step, seed):
    ck = BACKENDS["cython"]
    rng = np.random.default_rng(seed)
    n = grad.size
    p0 = rng.normal(size=n)
    m0 = rng.normal(size=n)
    v0 = rng.random(n)
    out = []
    for impl in (_pykernels, ck):
        p, m, v = p0.copy(), m0.copy(), v0.copy()
        impl.adam_update(p, grad, m, v, step, 0.002, 0.9, 0.999, 1e-8)
        out.append((p, m, v))
    for a, b in zip(*out):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(not HAS_CYTHON, reason="compiled extension not built")
@given(st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**31))
@settings(max_examples=60, deadline=None)
def test_gate_contraction_backends_agree(d, n, seed):
    rng = np.random.default_rng(seed)
    G, X = rng.normal(size=(d, n)), rng.normal(size=(d, n))
    np.testing.assert_allclose(
        BACKENDS["cython"].gate_contraction(G, X), _pykernels.gate_contraction(G, X), rtol=1e-12, atol=1e-12
    )


@pytest.mark.skipif(not HAS_CYTHON, reason="compiled extension not built")
@given(arrays(np.float64, st.integers(2, 80), elements=st.floats(0, 1e3, allow_nan=False)))
@settings(max_examples=100, deadline=None)
def test_max_ratio_cut_backends_agree(w):
    w = np.sort(w)[::-1].copy()
    assert BACKENDS["cython"].max_ratio_cut(w, 1e-12) == _pykernels.max_ratio_cut(w, 1e-12)


@pytest.mark.skipif(not HAS_CYTHON, reason="compiled extension not built")
def test_cython_rejects_length_mismatch():
    ck = BACKENDS["cython"]
    with pytest.raises(ValueError):
        ck.adam_update(np.zeros(3), np.zeros(2), np.zeros(3), np.zeros(3), 1, 0.1, 0.9, 0.999, 1e-8)
    with pytest.raises(ValueError):
        ck.max_ratio_cut(np.ones(1), 1e-12)
