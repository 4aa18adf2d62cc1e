import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmffe.errors import ValidationError
from gmffe.factorization import (EmbeddingMatrix, FitOptions, gmf_fit, gmf_gradient, gmf_loss,
                                 pair_gradient, reconstruct, truncated_svd)
from gmffe.graph import erdos_renyi
from gmffe.similarity import PosNegWeights


def _weights(s_plus, s_minus=None):
    s_plus = np.asarray(s_plus, dtype=float)
    return PosNegWeights(s_plus, np.ones_like(s_plus) if s_minus is None else s_minus)


def sign_matrix_instance(seed, n=25, p=0.1):
    a = erdos_renyi(n, p, seed).dense()
    s = np.where(a > 0, 5.0, -5.0)
    return s, _weights(np.exp(s))


def test_loss_single_pair():
    w = _weights([[1.0]])
    e = EmbeddingMatrix(np.zeros((1, 3)), np.zeros((1, 3)))
    assert gmf_loss(w, e) == pytest.approx(2 * math.log(0.5))


def test_loss_symmetric_excludes_diagonal():
    w = _weights(np.ones((2, 2)))
    e = EmbeddingMatrix(np.zeros((2, 2)))
    assert gmf_loss(w, e, symmetric=True) == pytest.approx(4 * math.log(0.5))
    assert gmf_loss(w, EmbeddingMatrix(np.zeros((2, 2)), np.zeros((2, 2)))) == pytest.approx(8 * math.log(0.5))


def test_pure_negative_term_rises_towards_zero():
    w = PosNegWeights(np.zeros((1, 1)), np.ones((1, 1)))
    vals = [gmf_loss(w, EmbeddingMatrix(np.array([[x]]), np.array([[1.0]]))) for x in (0, -2, -5, -20)]
    assert all(a < b for a, b in zip(vals, vals[1:])) and vals[-1] < 0


def test_zero_weight_entries_skipped():
    w = PosNegWeights(np.array([[0.0, 1.0]]), np.array([[0.0, 1.0]]))
    e = EmbeddingMatrix(np.array([[1e3]]), np.array([[1e3], [0.0]]))
    assert gmf_loss(w, e) == pytest.approx(2 * math.log(0.5))


def test_pair_gradient_examples():
    w = PosNegWeights(np.array([[2.0]]), np.array([[1.0]]))
    assert pair_gradient(w, np.zeros((1, 1)))[0, 0] == pytest.approx(0.5)
    sp, sm = 3.7, 0.4
    w = PosNegWeights(np.array([[sp]]), np.array([[sm]]))
    assert abs(pair_gradient(w, np.array([[math.log(sp / sm)]]))[0, 0]) < 1e-15


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_loss_nonpositive(seed):
    rng = np.random.default_rng(seed)
    n, m, d = rng.integers(1, 8, size=3)
    w = PosNegWeights(rng.exponential(size=(n, m)), rng.exponential(size=(n, m)))
    e = EmbeddingMatrix(rng.normal(scale=3, size=(n, d)), rng.normal(scale=3, size=(m, d)))
    assert gmf_loss(w, e) <= 0


def _fd_check(w, e, symmetric, step=1e-5):
    dU, dV = gmf_gradient(w, e, symmetric)
    worst = 0.0
    for name, analytic in (("U", dU), ("V", dV)):
        if analytic is None:
            continue
        base = getattr(e, name)
        num = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            plus, minus = base.copy(), base.copy()
            plus[idx] += step
            minus[idx] -= step
            if name == "U":
                ep = EmbeddingMatrix(plus, e.V)
                em = EmbeddingMatrix(minus, e.V)
            else:
                ep = EmbeddingMatrix(e.U, plus)
                em = EmbeddingMatrix(e.U, minus)
            num[idx] = (gmf_loss(w, ep, symmetric) - gmf_loss(w, em, symmetric)) / (2 * step)
        worst = max(worst, np.linalg.norm(analytic - num) / max(np.linalg.norm(num), 1e-12))
    return worst


def random_instance(seed, symmetric):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 11))
    m = n if symmetric else int(rng.integers(2, 11))
    d = int(rng.integers(1, 5))
    s_plus = rng.exponential(size=(n, m))
    s_minus = rng.exponential(size=(n, m))
    if symmetric:
        s_plus, s_minus = s_plus + s_plus.T, s_minus + s_minus.T
    U = rng.normal(size=(n, d))
    V = None if symmetric else rng.normal(size=(m, d))
    return PosNegWeights(s_plus, s_minus), EmbeddingMatrix(U, V)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("symmetric", [False, True])
def test_gradient_matches_finite_differences(seed, symmetric):
    w, e = random_instance(seed, symmetric)
    assert _fd_check(w, e, symmetric) <= 1e-5


def test_tied_gradient_with_asymmetric_weights():
    rng = np.random.default_rng(3)
    w = PosNegWeights(rng.exponential(size=(5, 5)), rng.exponential(size=(5, 5)))
    e = EmbeddingMatrix(rng.normal(size=(5, 3)))
    assert _fd_check(w, e, True) <= 1e-5


def test_fit_two_by_two():
    w = _weights([[math.e, 1.0], [1.0, math.e]])
    e = gmf_fit(w, FitOptions(d=2, symmetric=False))
    assert np.abs(reconstruct(e) - np.eye(2)).max() <= 0.05


def test_fit_deterministic():
    w = _weights(np.exp(np.random.default_rng(0).uniform(-2, 2, size=(6, 6))))
    opts = FitOptions(d=3, symmetric=False, iterations=50, seed=4)
    a, b = gmf_fit(w, opts), gmf_fit(w, opts)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.V, b.V)
    assert np.array_equal(a.loss_trace, b.loss_trace)
    c = gmf_fit(w, FitOptions(d=3, symmetric=False, iterations=50, seed=5))
    assert not np.array_equal(a.U, c.U)


def test_fit_initial_scale():
    w = _weights(np.ones((400, 400)))
    e = gmf_fit(w, FitOptions(d=64, symmetric=True, iterations=1, learning_rate=1e-12))
    assert np.std(e.U) == pytest.approx(0.1 / 8, rel=0.02)


def test_windowed_ascent_on_sign_matrix_instance():
    _, w = sign_matrix_instance(0)
    trace = gmf_fit(w, FitOptions(d=8, symmetric=False)).loss_trace
    assert trace.size == 301
    assert np.all(trace[50:] > trace[:-50])
    assert np.all(trace <= 0)


def test_sign_matrix_edge_preservation():
    s, w = sign_matrix_instance(0)
    e = gmf_fit(w, FitOptions(d=8, symmetric=False))
    U, V = truncated_svd(s, 8)
    edges = s > 0
    gmf_err = np.abs(reconstruct(e) - s)
    svd_err = np.abs(U @ V.T - s)
    assert gmf_err[edges].mean() < svd_err[edges].mean()
    assert gmf_err[edges].mean() < gmf_err[~edges].mean()
    # Eckart-Young: SVD has the smaller Frobenius error at equal rank
    assert np.linalg.norm(svd_err) <= np.linalg.norm(gmf_err)


def test_tied_fit_symmetric():
    rng = np.random.default_rng(2)
    x = rng.uniform(-3, 3, size=(7, 7))
    w = _weights(np.exp((x + x.T) / 2))
    e = gmf_fit(w, FitOptions(d=4, symmetric=True, iterations=40))
    assert e.tied
    r = reconstruct(e)
    assert np.array_equal(r, r.T)


def test_reconstruct_example():
    e = EmbeddingMatrix(np.array([[1.0], [0.0]]))
    assert np.array_equal(reconstruct(e), [[1, 0], [0, 0]])


def test_fit_errors():
    with pytest.raises(ValidationError):
        FitOptions(d=0)
    with pytest.raises(ValidationError):
        FitOptions(beta1=1.0)
    with pytest.raises(ValidationError):
        gmf_fit(_weights(np.ones((2, 3))), FitOptions(d=2, symmetric=True))
    with pytest.raises(ValidationError):
        gmf_loss(_weights(np.ones((2, 2))), EmbeddingMatrix(np.zeros((3, 1))))
    with pytest.raises(ValidationError):
        gmf_loss(_weights(np.ones((2, 2))), EmbeddingMatrix(np.zeros((2, 1)), np.zeros((2, 1))),
                 symmetric=True)


def test_svd_small_cases():
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=7), rng.normal(size=5)
    U, V = truncated_svd(np.outer(a, b), 1)
    assert np.abs(U @ V.T - np.outer(a, b)).max() <= 1e-8
    U, V = truncated_svd(np.eye(2), 2)
    assert np.allclose(U @ V.T, np.eye(2), atol=1e-12)
    with pytest.raises(ValidationError):
        truncated_svd(np.eye(3), 4)


def test_svd_rank_deficient_exact():
    rng = np.random.default_rng(1)
    m = rng.normal(size=(9, 3)) @ rng.normal(size=(3, 6))
    U, V = truncated_svd(m, 5)
    assert np.abs(U @ V.T - m).max() <= 1e-8


@pytest.mark.parametrize("shape,d", [((20, 20), 5), ((30, 12), 4), ((12, 30), 6)])
def test_svd_matches_lapack(shape, d):
    rng = np.random.default_rng(sum(shape) + d)
    m = rng.normal(size=shape)
    U, V = truncated_svd(m, d)
    u, s, vt = np.linalg.svd(m)
    best = (u[:, :d] * s[:d]) @ vt[:d]
    assert np.allclose(U @ V.T, best, atol=1e-7)
    assert np.allclose(V.T @ V if shape[1] <= shape[0] else U.T @ U, np.eye(d), atol=1e-10)
