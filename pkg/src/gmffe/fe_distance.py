"""Free-energy dissimilarities on graphs, with shortest-path and commute-time
references.

The directed dissimilarity ``phi[s, t]`` is obtained from the bounded-length
recurrence

    phi[s, t](k+1) = x* - (1/eta) log sum_i P[s, i] exp(-eta (x_i - x*)),
    x_i = C[s, i] + phi[i, t](k),  x* = min_i x_i,

started from ``phi = inf`` off the target and ``0`` on it. Running it until
the iterates stop moving gives the exact dissimilarity; stopping after ``L``
steps gives the horizon-``L`` approximation. Columns (targets) never
interact, so they are processed in independent blocks.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .errors import NumericalError, UnsupportedRegimeError, ValidationError
from .graph import Graph, connected_components, transition_matrix

log = logging.getLogger(__name__)

# elements per (arcs x columns) work array
_BLOCK_BUDGET = 1 << 21


@dataclass(frozen=True)
class FEParams:
    """Parameters of the free-energy recurrence.

    ``horizon=None`` iterates until the largest change of any finite entry in
    a column drops below ``convergence_tol`` (or ``max_iterations`` is hit).
    ``drop_threshold`` removes summands with ``eta * (x_i - x*)`` above it;
    ``math.inf`` keeps every term.
    """

    eta: float = 1.0
    horizon: int | None = None
    convergence_tol: float = 1e-9
    drop_threshold: float = 7.0
    max_iterations: int | None = None
    log_sum_exp: bool = True

    def __post_init__(self):
        if not (self.eta > 0 and math.isfinite(self.eta)):
            raise ValidationError(f"eta must be a positive finite number, got {self.eta}")
        if self.horizon is not None and (int(self.horizon) != self.horizon or self.horizon < 1):
            raise ValidationError(f"horizon must be a positive integer, got {self.horizon}")
        if not self.convergence_tol > 0:
            raise ValidationError("convergence_tol must be positive")
        if not self.drop_threshold > 0:
            raise ValidationError("drop_threshold must be positive")

    def iteration_cap(self, n: int) -> int:
        if self.horizon is not None:
            return int(self.horizon)
        if self.max_iterations is not None:
            return int(self.max_iterations)
        return max(10 * n, 100_000)


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    """``values[s, j]`` is the dissimilarity from node ``s`` to ``targets[j]``."""

    values: np.ndarray
    targets: np.ndarray
    symmetric: bool = False
    params: FEParams | None = None
    kind: str = "fe"
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        targets = np.asarray(self.targets, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] != targets.size:
            raise ValidationError(
                f"values shape {values.shape} does not match {targets.size} targets"
            )
        if np.any(values[targets, np.arange(targets.size)] != 0):
            raise ValidationError("dissimilarity from a target to itself must be 0")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "targets", targets)

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_square(self) -> bool:
        n = self.values.shape[0]
        return self.targets.size == n and np.array_equal(self.targets, np.arange(n))


class _Arcs:
    """Adjacency in CSR arc order with transition probabilities and costs."""

    def __init__(self, g: Graph):
        a = g.adjacency
        self.n = g.node_count
        self.starts = a.indptr[:-1].astype(np.intp)
        self.src = np.repeat(np.arange(self.n), np.diff(a.indptr))
        self.dst = a.indices.astype(np.intp)
        self.prob = a.data / g.degrees[self.src]
        self.cost = 1.0 / a.data
        if np.any(np.diff(a.indptr) == 0):
            raise ValidationError("every node needs at least one neighbour")


def _lse_step(arcs: _Arcs, phi: np.ndarray, eta: float, drop: float):
    x = arcs.cost[:, None] + phi[arcs.dst]
    xstar = np.minimum.reduceat(x, arcs.starts, axis=0)
    with np.errstate(invalid="ignore"):
        gap = eta * (x - xstar[arcs.src])
    # inf - inf: no finite path through this arc yet
    gap[np.isnan(gap)] = np.inf
    if math.isfinite(drop):
        gap[gap > drop] = np.inf
    total = np.add.reduceat(arcs.prob[:, None] * np.exp(-gap), arcs.starts, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return xstar - np.log(total) / eta, np.isfinite(xstar)


def _naive_step(arcs: _Arcs, phi: np.ndarray, eta: float, drop: float):
    x = arcs.cost[:, None] + phi[arcs.dst]
    reachable = np.isfinite(np.minimum.reduceat(x, arcs.starts, axis=0))
    total = np.add.reduceat(arcs.prob[:, None] * np.exp(-eta * x), arcs.starts, axis=0)
    with np.errstate(divide="ignore"):
        return -np.log(total) / eta, reachable


def _run_block(arcs: _Arcs, targets: np.ndarray, params: FEParams) -> tuple[np.ndarray, int]:
    n, k = arcs.n, targets.size
    step = _lse_step if params.log_sum_exp else _naive_step
    cols = np.arange(k)
    phi = np.full((n, k), np.inf)
    phi[targets, cols] = 0.0
    active = cols
    cap = params.iteration_cap(n)
    converge = params.horizon is None
    tau = 0
    for tau in range(1, cap + 1):
        cur = phi[:, active]
        new, reachable = step(arcs, cur, params.eta, params.drop_threshold)
        new[targets[active], np.arange(active.size)] = 0.0
        reachable[targets[active], np.arange(active.size)] = True
        # a pair with a finite path must get a finite value
        bad = np.isnan(new) | (reachable & ~np.isfinite(new))
        if bad.any():
            s, j = np.argwhere(bad)[0]
            raise NumericalError(
                f"non-finite value at source {s}, target {targets[active[j]]}, iteration {tau}"
            )
        if converge:
            fin_old = np.isfinite(cur)
            fin_new = np.isfinite(new)
            grew = (fin_new & ~fin_old).any(axis=0)
            both = fin_old & fin_new
            delta = np.where(both, np.abs(new - np.where(both, cur, 0.0)), 0.0).max(axis=0)
            done = (delta < params.convergence_tol) & ~grew
            phi[:, active] = new
            active = active[~done]
            if active.size == 0:
                break
        else:
            phi[:, active] = new
    else:
        if converge and active.size:
            log.warning(
                "free-energy iteration hit the cap of %d steps with %d columns unconverged",
                cap, active.size,
            )
    return phi, tau


def sample_targets(n: int, count: int, seed) -> np.ndarray:
    """Uniform sample of ``count`` distinct nodes, returned in ascending order."""
    if not 1 <= count <= n:
        raise ValidationError(f"target count must lie in [1, {n}], got {count}")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n, size=count, replace=False))


def _check_connected(g: Graph):
    if g.node_count < 2:
        raise ValidationError("graph needs at least two nodes")
    if len(connected_components(g.adjacency)) != 1:
        raise ValidationError("graph is disconnected; run preprocess() first")


def fe_directed(
    g: Graph,
    params: FEParams = FEParams(),
    targets: Sequence[int] | None = None,
    threads: int = 1,
    block_size: int | None = None,
) -> DissimilarityMatrix:
    """Directed free-energy dissimilarities from every node to each target.

    Target columns are computed in independent blocks, optionally on a thread
    pool; the result does not depend on the blocking.
    """
    _check_connected(g)
    n = g.node_count
    targets = np.arange(n) if targets is None else np.asarray(targets, dtype=np.int64)
    if targets.size == 0:
        raise ValidationError("targets must be nonempty")
    if np.unique(targets).size != targets.size:
        raise ValidationError("targets must be distinct")
    if targets.min() < 0 or targets.max() >= n:
        raise ValidationError("target index out of range")
    arcs = _Arcs(g)
    if block_size is None:
        block_size = max(1, _BLOCK_BUDGET // max(1, arcs.dst.size))
    blocks = [targets[i:i + block_size] for i in range(0, targets.size, block_size)]

    def work(block):
        return _run_block(arcs, block, params)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]
    values = np.concatenate([r[0] for r in results], axis=1)
    iterations = max(r[1] for r in results)
    return DissimilarityMatrix(values, targets, symmetric=False, params=params,
                               kind="fe", iterations=iterations)


def symmetrize(phi: DissimilarityMatrix) -> DissimilarityMatrix:
    """``(Phi + Phi^T) / 2`` of a square dissimilarity matrix."""
    if not phi.is_square:
        raise ValidationError("symmetrize needs a square matrix over all nodes")
    v = phi.values
    return DissimilarityMatrix((v + v.T) / 2.0, phi.targets, symmetric=True,
                               params=phi.params, kind=phi.kind, iterations=phi.iterations)


def fe_distance(g: Graph, eta: float, tol: float = 1e-9, threads: int = 1,
                max_iterations: int | None = None) -> DissimilarityMatrix:
    """Exact symmetric FE distance: the recurrence run to convergence with no
    term dropping, then symmetrized."""
    params = FEParams(eta=eta, horizon=None, convergence_tol=tol,
                      drop_threshold=math.inf, max_iterations=max_iterations)
    return symmetrize(fe_directed(g, params, threads=threads))


def sp_distance(g: Graph) -> DissimilarityMatrix:
    """All-pairs shortest-path cost with edge cost ``1/weight``."""
    a = g.adjacency
    cost = sp.csr_matrix((1.0 / a.data, a.indices, a.indptr), shape=a.shape)
    d = dijkstra(cost, directed=True)
    np.fill_diagonal(d, 0.0)
    return DissimilarityMatrix(d, np.arange(g.node_count), symmetric=True, kind="sp")


def hitting_times(g: Graph) -> np.ndarray:
    """``H[s, t]``: expected number of steps for a walk from ``s`` to reach ``t``."""
    _check_connected(g)
    p = transition_matrix(g).toarray()
    n = g.node_count
    h = np.zeros((n, n))
    for t in range(n):
        keep = np.flatnonzero(np.arange(n) != t)
        m = np.eye(n - 1) - p[np.ix_(keep, keep)]
        h[keep, t] = np.linalg.solve(m, np.ones(n - 1))
    return h


def ct_distance(g: Graph) -> DissimilarityMatrix:
    """Commute time ``H[s, t] + H[t, s]`` with unit step costs.

    Only defined here for unweighted graphs, where every step costs 1.
    """
    if not g.is_unweighted():
        raise UnsupportedRegimeError("commute-time reference requires unit edge weights")
    h = hitting_times(g)
    return DissimilarityMatrix(h + h.T, np.arange(g.node_count), symmetric=True, kind="ct")


def _path_weights_by_length(g: Graph, eta: float, s: int, t: int, max_len: int) -> list[list[float]]:
    a = g.dense()
    deg = a.sum(axis=1)
    nbrs = [np.flatnonzero(a[i]).tolist() for i in range(a.shape[0])]
    terms: list[list[float]] = [[] for _ in range(max_len + 1)]

    def walk(node, depth, prob, cost):
        for nxt in nbrs[node]:
            p = prob * a[node, nxt] / deg[node]
            c = cost + 1.0 / a[node, nxt]
            if nxt == t:
                terms[depth + 1].append(p * math.exp(-eta * c))
            elif depth + 1 < max_len:
                walk(nxt, depth + 1, p, c)

    walk(s, 0, 1.0, 0.0)
    return terms


def path_enumeration_by_length(g: Graph, eta: float, s: int, t: int, max_len: int) -> np.ndarray:
    """Enumerated dissimilarity for every horizon ``1..max_len`` (index ``L-1``)."""
    if s == t:
        return np.zeros(max_len)
    terms = _path_weights_by_length(g, eta, s, t, max_len)
    out = np.empty(max_len)
    acc: list[float] = []
    for length in range(1, max_len + 1):
        acc.extend(terms[length])
        z = math.fsum(acc)
        out[length - 1] = math.inf if z == 0 else -math.log(z) / eta
    return out


def path_enumeration_oracle(g: Graph, eta: float, s: int, t: int, max_len: int) -> float:
    """Brute-force directed FE dissimilarity over absorbing paths of length
    at most ``max_len``. Meant for tiny graphs only."""
    if g.node_count > 8 or max_len > 12:
        raise ValidationError("enumeration oracle is limited to n <= 8 and max_len <= 12")
    return float(path_enumeration_by_length(g, eta, s, t, max_len)[-1])
