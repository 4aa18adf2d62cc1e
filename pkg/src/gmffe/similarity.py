"""Distance-to-similarity conversion and the (S+, S-) weights consumed by the
factorization objective."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .fe_distance import DissimilarityMatrix
from .graph import DENSE_CAP, Graph, transition_matrix

EXP_CAP = 30.0


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    values: np.ndarray
    provenance: str = "external"
    shift: float = 0.0
    scale: float = 1.0
    targets: np.ndarray | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValidationError(f"scale must be finite and positive, got {self.scale}")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))

    @property
    def is_symmetric(self) -> bool:
        v = self.values
        return v.shape[0] == v.shape[1] and np.array_equal(v, v.T)


@dataclass(frozen=True, eq=False)
class PosNegWeights:
    s_plus: np.ndarray
    s_minus: np.ndarray

    def __post_init__(self):
        sp_ = np.asarray(self.s_plus, dtype=np.float64)
        sm = np.asarray(self.s_minus, dtype=np.float64)
        if sp_.shape != sm.shape or sp_.ndim != 2:
            raise ValidationError(f"S+ {sp_.shape} and S- {sm.shape} must be equal 2-D shapes")
        if np.any(sp_ < 0) or np.any(sm < 0) or not (np.isfinite(sp_).all() and np.isfinite(sm).all()):
            raise ValidationError("S+ and S- must be finite and nonnegative")
        object.__setattr__(self, "s_plus", sp_)
        object.__setattr__(self, "s_minus", sm)

    @property
    def shape(self):
        return self.s_plus.shape

    def target_log_odds(self) -> np.ndarray:
        """``log(S+/S-)``, the matrix the objective factorizes implicitly."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(self.s_plus) - np.log(self.s_minus)


def nearest_rank(values: np.ndarray, percentile: float) -> float:
    """The ``ceil(p/100 * m)``-th smallest value (1-based), at least the first."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    k = max(1, math.ceil(percentile / 100.0 * v.size))
    return float(v[k - 1])


def _off_diagonal_mask(shape, targets) -> np.ndarray:
    mask = np.ones(shape, dtype=bool)
    mask[targets, np.arange(len(targets))] = False
    return mask


def to_similarity(delta, percentile: float = 70.0, max_target: float = 6.0) -> SimilarityMatrix:
    """``gamma * (-delta + b)`` with ``b`` the nearest-rank percentile of the
    off-diagonal distances and ``gamma`` scaling the largest off-diagonal
    similarity to ``max_target``.

    ``delta`` is a :class:`DissimilarityMatrix` or a square array. For a
    non-square matrix over sampled targets, the source==target entries play
    the role of the diagonal.
    """
    if isinstance(delta, DissimilarityMatrix):
        values, targets = delta.values, delta.targets
        params = {"eta": delta.params.eta} if delta.params is not None else {}
    else:
        values = np.asarray(delta, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError("array input must be a square matrix")
        targets = np.arange(values.shape[0])
        params = {}
    if not 0 < percentile <= 100:
        raise ValidationError(f"percentile must lie in (0, 100], got {percentile}")
    if not max_target > 0:
        raise ValidationError("max_target must be positive")
    if not np.isfinite(values).all():
        raise ValidationError("distance matrix has infinite entries; increase the horizon")
    off = values[_off_diagonal_mask(values.shape, targets)]
    if off.size == 0:
        raise ValidationError("no off-diagonal entries")
    b = nearest_rank(off, percentile)
    top = b - off.min()
    if top <= 0:
        if off.max() == off.min():
            raise ValidationError("all off-diagonal distances are equal; scale is undefined")
        raise ValidationError(
            f"percentile {percentile} puts the shift at the smallest distance; scale is undefined"
        )
    gamma = max_target / top
    return SimilarityMatrix(gamma * (-values + b), provenance="fe", shift=b, scale=gamma,
                            targets=targets, params=params)


def deepwalk_similarity(g: Graph, window: int = 10, negatives: int = 1,
                        dense_cap: int = DENSE_CAP) -> SimilarityMatrix:
    """``log(vol/(b T) * sum_{t=1..T} P^t D^-1)``; zero entries map to ``-inf``."""
    if window < 1 or negatives < 1:
        raise ValidationError("window and negatives must be positive integers")
    if g.node_count > dense_cap:
        raise ValidationError(f"n={g.node_count} exceeds dense cap {dense_cap}")
    p = transition_matrix(g).toarray()
    deg = g.degrees
    vol = deg.sum()
    acc = np.zeros_like(p)
    power = np.eye(g.node_count)
    for _ in range(window):
        power = power @ p
        acc += power
    inner = (vol / (negatives * window)) * acc / deg[None, :]
    with np.errstate(divide="ignore"):
        s = np.log(inner)
    return SimilarityMatrix(s, provenance="deepwalk",
                            params={"window": window, "negatives": negatives})


def pos_neg_from_similarity(s, exp_cap: float = EXP_CAP, exclude_self: bool = True) -> PosNegWeights:
    """``S+ = exp(S)`` and ``S- = 1``; ``-inf`` entries give ``S+ = 0``.

    For distance-derived similarities the node-to-itself entries carry no
    information (they are ``gamma * b`` by construction); with
    ``exclude_self`` both weights are zeroed there so the loss skips them.
    """
    if isinstance(s, SimilarityMatrix):
        values = s.values
        self_mask = None
        if exclude_self and s.provenance == "fe" and s.targets is not None:
            self_mask = ~_off_diagonal_mask(values.shape, s.targets)
    else:
        values = np.asarray(s, dtype=np.float64)
        self_mask = None
    if np.isnan(values).any() or np.isposinf(values).any():
        raise ValidationError("similarity has NaN or +inf entries")
    checked = values if self_mask is None else np.where(self_mask, -np.inf, values)
    if checked.max(initial=-np.inf) > exp_cap:
        raise ValidationError(
            f"similarity entry {checked.max():.3g} exceeds {exp_cap}; lower the scale (gamma)"
        )
    s_plus = np.exp(checked)
    s_minus = np.ones_like(values)
    if self_mask is not None:
        s_minus[self_mask] = 0.0
    return PosNegWeights(s_plus, s_minus)
