"""Generalized skip-gram matrix factorization.

Maximizes

    psi(U, V) = sum_ij S+_ij log sigmoid(u_i.v_j) + S-_ij log sigmoid(-u_i.v_j)

whose stationary points satisfy ``u_i.v_j = log(S+_ij / S-_ij)``. The tied
variant sets ``V = U`` and drops the diagonal. Gradients are analytic and
the optimizer is full-batch Adam, so fits are bitwise reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .similarity import PosNegWeights


@dataclass(frozen=True)
class FitOptions:
    d: int = 128
    symmetric: bool = True
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_adam: float = 1e-8
    iterations: int = 300
    seed: int = 0
    init_scale: float = 0.1

    def __post_init__(self):
        if self.d < 1 or self.iterations < 1:
            raise ValidationError("d and iterations must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValidationError("Adam betas must lie in (0, 1)")
        if self.learning_rate <= 0 or self.epsilon_adam <= 0 or self.init_scale <= 0:
            raise ValidationError("learning_rate, epsilon_adam and init_scale must be positive")


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Row ``i`` of ``U`` embeds node ``i``; ``V is None`` means tied (V = U)."""

    U: np.ndarray
    V: np.ndarray | None = None
    loss_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def tied(self) -> bool:
        return self.V is None

    @property
    def d(self) -> int:
        return self.U.shape[1]

    @property
    def context(self) -> np.ndarray:
        return self.U if self.V is None else self.V

    @property
    def final_loss(self) -> float:
        return float(self.loss_trace[-1]) if self.loss_trace.size else math.nan


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _weights(w: PosNegWeights, symmetric: bool):
    s_plus, s_minus = w.s_plus, w.s_minus
    if symmetric:
        if s_plus.shape[0] != s_plus.shape[1]:
            raise ValidationError("tied factorization needs a square weight matrix")
        s_plus = s_plus.copy()
        s_minus = s_minus.copy()
        np.fill_diagonal(s_plus, 0.0)
        np.fill_diagonal(s_minus, 0.0)
    return s_plus, s_minus


def _check_shapes(w: PosNegWeights, e: EmbeddingMatrix, symmetric: bool):
    n, m = w.shape
    if e.U.shape[0] != n:
        raise ValidationError(f"U has {e.U.shape[0]} rows, weights have {n}")
    if symmetric and not e.tied:
        raise ValidationError("symmetric objective requires tied embeddings")
    if e.context.shape[0] != m or e.context.shape[1] != e.U.shape[1]:
        raise ValidationError(f"V shape {e.context.shape} incompatible with weights {w.shape}")


def gmf_loss(w: PosNegWeights, e: EmbeddingMatrix, symmetric: bool = False) -> float:
    """Objective value (always <= 0). Entries with both weights zero are skipped."""
    _check_shapes(w, e, symmetric)
    s_plus, s_minus = _weights(w, symmetric)
    x = e.U @ e.context.T
    terms = s_plus * _log_sigmoid(x) + s_minus * _log_sigmoid(-x)
    return float(terms.sum())


def pair_gradient(w: PosNegWeights, x: np.ndarray, symmetric: bool = False) -> np.ndarray:
    """d psi / d(u_i.v_j) = S+ (1 - sigmoid(x)) - S- sigmoid(x)."""
    s_plus, s_minus = _weights(w, symmetric)
    sig = _sigmoid(x)
    return s_plus * (1.0 - sig) - s_minus * sig


def gmf_gradient(w: PosNegWeights, e: EmbeddingMatrix, symmetric: bool = False):
    """Gradient of the objective; returns ``(dU, dV)`` with ``dV`` None if tied."""
    _check_shapes(w, e, symmetric)
    g = pair_gradient(w, e.U @ e.context.T, symmetric)
    if e.tied:
        return g @ e.U + g.T @ e.U, None
    return g @ e.V, g.T @ e.U


def _objective_and_grad(s_plus, s_minus, U, V):
    x = U @ (U if V is None else V).T
    loss = float((s_plus * _log_sigmoid(x) + s_minus * _log_sigmoid(-x)).sum())
    sig = _sigmoid(x)
    g = s_plus * (1.0 - sig) - s_minus * sig
    if V is None:
        return loss, g @ U + g.T @ U, None
    return loss, g @ V, g.T @ U


class _Adam:
    def __init__(self, shape, opts: FitOptions):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.o = opts
        self.t = 0

    def ascent(self, param, grad):
        o = self.o
        self.t += 1
        self.m = o.beta1 * self.m + (1 - o.beta1) * grad
        self.v = o.beta2 * self.v + (1 - o.beta2) * grad * grad
        m_hat = self.m / (1 - o.beta1 ** self.t)
        v_hat = self.v / (1 - o.beta2 ** self.t)
        return param + o.learning_rate * m_hat / (np.sqrt(v_hat) + o.epsilon_adam)


def gmf_fit(w: PosNegWeights, opts: FitOptions = FitOptions()) -> EmbeddingMatrix:
    """Full-batch Adam ascent on the objective from a seeded Gaussian start."""
    n, m = w.shape
    if opts.symmetric and n != m:
        raise ValidationError("symmetric fit needs a square weight matrix")
    rng = np.random.default_rng(opts.seed)
    std = opts.init_scale / math.sqrt(opts.d)
    U = rng.normal(0.0, std, size=(n, opts.d))
    V = None if opts.symmetric else rng.normal(0.0, std, size=(m, opts.d))
    s_plus, s_minus = _weights(w, opts.symmetric)
    adam_u = _Adam(U.shape, opts)
    adam_v = None if V is None else _Adam(V.shape, opts)
    trace = np.empty(opts.iterations + 1)
    for it in range(opts.iterations):
        loss, gu, gv = _objective_and_grad(s_plus, s_minus, U, V)
        if not math.isfinite(loss):
            raise NumericalError(f"non-finite loss at iteration {it}")
        trace[it] = loss
        U = adam_u.ascent(U, gu)
        if V is not None:
            V = adam_v.ascent(V, gv)
    final = gmf_loss(w, EmbeddingMatrix(U, V), opts.symmetric)
    if not math.isfinite(final):
        raise NumericalError(f"non-finite loss at iteration {opts.iterations}")
    trace[-1] = final
    return EmbeddingMatrix(U, V, trace)


def reconstruct(e: EmbeddingMatrix) -> np.ndarray:
    return e.U @ e.context.T


def truncated_svd(S: np.ndarray, d: int, seed: int = 0, tol: float = 1e-10,
                  max_sweeps: int = 1000, oversample: int = 10):
    """Best rank-``d`` factorization ``U V^T`` of ``S`` (Frobenius norm).

    Orthogonal iteration on the smaller Gram matrix with a seeded start and a
    block of ``d + oversample`` vectors, followed by Rayleigh-Ritz extraction
    of the leading ``d`` directions. ``V`` has orthonormal columns and
    ``U = S V``.
    """
    S = np.asarray(S, dtype=np.float64)
    n, m = S.shape
    if not 1 <= d <= min(n, m):
        raise ValidationError(f"d must lie in [1, {min(n, m)}], got {d}")
    right = m <= n
    gram = S.T @ S if right else S @ S.T
    size = gram.shape[0]
    block = min(size, d + oversample)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((size, block)))
    for _ in range(max_sweeps):
        z, _ = np.linalg.qr(gram @ q)
        # subspace change: 1 - smallest cosine of principal angles
        cosines = np.linalg.svd(q.T @ z, compute_uv=False)
        q = z
        if 1.0 - cosines.min() < tol:
            break
    evals, evecs = np.linalg.eigh(q.T @ gram @ q)
    lead = q @ evecs[:, np.argsort(evals)[::-1][:d]]
    if right:
        V = lead
        U = S @ V
    else:
        U = lead
        V = S.T @ U
    return U, V
