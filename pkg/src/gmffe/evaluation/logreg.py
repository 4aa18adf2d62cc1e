"""One-vs-rest L2-regularized logistic regression.

Each label gets its own binary model, minimizing

    sum_i log(1 + exp(z_i)) - y_i z_i + (l2/2) ||w||^2,   z = X w + b,

by gradient descent with Armijo backtracking. The binary problems are
separable, so they are stepped together with one step size per label.
The bias is not regularized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class OneVsRestClassifier:
    weights: np.ndarray  # (d + 1, K), last row is the bias
    constant: np.ndarray  # (K,) nan, or the fixed probability of a degenerate label
    iterations: int

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return X @ self.weights[:-1] + self.weights[-1]

    def predict_proba(self, X) -> np.ndarray:
        z = self.decision_function(X)
        p = 0.5 * (1.0 + np.tanh(0.5 * z))
        fixed = ~np.isnan(self.constant)
        p[:, fixed] = self.constant[fixed]
        return p

    def predict_top_k(self, X, k) -> np.ndarray:
        """Indicator matrix keeping the ``k[i]`` highest-scoring labels of row i."""
        proba = self.predict_proba(X)
        k = np.broadcast_to(np.asarray(k, dtype=np.int64), (proba.shape[0],))
        order = np.argsort(-proba, axis=1, kind="stable")
        out = np.zeros(proba.shape, dtype=bool)
        for i, ki in enumerate(k):
            out[i, order[i, :ki]] = True
        return out


def _objective(Xb, Y, W, l2):
    z = Xb @ W
    nll = (np.logaddexp(0.0, z) - Y * z).sum(axis=0)
    return nll + 0.5 * l2 * (W[:-1] ** 2).sum(axis=0)


def _gradient(Xb, Y, W, l2):
    z = Xb @ W
    g = Xb.T @ (0.5 * (1.0 + np.tanh(0.5 * z)) - Y)
    g[:-1] += l2 * W[:-1]
    return g


def fit_binary_columns(X, Y, l2=1.0, max_iters=500, tol=1e-8):
    """Fit one logistic model per column of the 0/1 matrix ``Y``."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    K = Y.shape[1]
    W = np.zeros((d + 1, K))
    # 1/L for the data term; backtracking takes over from there
    lipschitz = 0.25 * np.linalg.norm(Xb, 2) ** 2 + l2
    step = np.full(K, 1.0 / lipschitz)
    f = _objective(Xb, Y, W, l2)
    active = np.ones(K, dtype=bool)
    it = 0
    for it in range(1, max_iters + 1):
        g = _gradient(Xb, Y, W, l2)
        gnorm2 = (g * g).sum(axis=0)
        active &= np.sqrt(gnorm2) >= tol
        if not active.any():
            break
        cols = np.flatnonzero(active)
        t = step[cols] * 2.0
        for _ in range(60):
            trial = W[:, cols] - t * g[:, cols]
            ft = _objective(Xb, Y[:, cols], trial, l2)
            ok = ft <= f[cols] - 1e-4 * t * gnorm2[cols]
            if ok.all():
                break
            t = np.where(ok, t, 0.5 * t)
        W[:, cols] = W[:, cols] - t * g[:, cols]
        f[cols] = _objective(Xb, Y[:, cols], W[:, cols], l2)
        step[cols] = t
    return W, it


def fit_logreg_ovr(features, labels, l2: float = 1.0, max_iters: int = 500,
                   tol: float = 1e-8, seed: int = 0) -> OneVsRestClassifier:
    """Train one binary classifier per label.

    ``labels`` is a ``LabelSet`` or a 0/1 indicator matrix. Labels that are
    all-positive or all-negative in training get a constant classifier. The
    solver starts from zero and is deterministic; ``seed`` is accepted for
    interface symmetry with the other fitters.
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or not np.isfinite(X).all():
        raise ValidationError("features must be a finite 2-D array")
    if l2 < 0:
        raise ValidationError("l2 must be nonnegative")
    Y = labels.indicator() if hasattr(labels, "indicator") else np.asarray(labels, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != X.shape[0]:
        raise ValidationError("features and labels have different row counts")
    mean = Y.mean(axis=0)
    constant = np.where((mean == 0) | (mean == 1), mean, np.nan)
    W = np.zeros((X.shape[1] + 1, Y.shape[1]))
    iters = 0
    live = np.isnan(constant)
    if live.any():
        W[:, live], iters = fit_binary_columns(X, Y[:, live], l2, max_iters, tol)
    return OneVsRestClassifier(W, constant, iters)
