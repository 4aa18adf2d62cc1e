"""Lloyd's k-means with k-means++ seeding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class KMeansResult:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    history: tuple[float, ...]


def _sq_dists(X, centers):
    d = (X * X).sum(axis=1)[:, None] - 2.0 * X @ centers.T + (centers * centers).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _plus_plus(X, k, rng):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1]).ravel()
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(rng.choice(n, p=closest / total))
        centers[c] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[c:c + 1]).ravel())
    return centers


def _lloyd(X, centers, max_iter):
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(X, centers)
        new_labels = d.argmin(axis=1)
        history.append(float(d[np.arange(X.shape[0]), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        centers = centers.copy()
        filled = counts > 0
        centers[filled] = sums[filled] / counts[filled, None]
        for c in np.flatnonzero(~filled):
            # reseed an empty cluster at the point worst served by its center
            own = ((X - centers[labels]) ** 2).sum(axis=1)
            far = int(own.argmax())
            centers[c] = X[far]
            labels[far] = c
    d = _sq_dists(X, centers)
    labels = d.argmin(axis=1)
    inertia = float(d[np.arange(X.shape[0]), labels].sum())
    return labels, centers, inertia, tuple(history)


def kmeans(X, k: int, runs: int = 10, seed: int = 0, max_iter: int = 300) -> KMeansResult:
    """Best of ``runs`` seeded k-means++/Lloyd runs by within-cluster sum of squares."""
    X = np.asarray(X, dtype=np.float64)
    if not np.isfinite(X).all():
        raise ValidationError("k-means input has non-finite values")
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must lie in [1, {n}], got {k}")
    if runs < 1:
        raise ValidationError("runs must be positive")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(runs):
        labels, centers, inertia, history = _lloyd(X, _plus_plus(X, k, rng), max_iter)
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centers, inertia, history)
    return best
