"""Undirected weighted graphs: loading, preprocessing, derived matrices and
the edge-removal split used by link prediction.

Adjacency is kept as a CSR matrix; dense views are produced on request and
refused above ``DENSE_CAP`` nodes.
"""

from __future__ import annotations

import io
import math
import os
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

DENSE_CAP = 20_000


def _id_key(node_id):
    # ints sort numerically and before string tokens
    return (isinstance(node_id, str), node_id)


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted graph on nodes ``0..n-1``.

    ``node_ids[i]`` is the original identifier of node ``i``. A graph read
    with ``directed=True`` may have an asymmetric adjacency until
    :func:`preprocess` merges the arcs.
    """

    adjacency: sp.csr_matrix
    node_ids: tuple
    directed: bool = False

    def __post_init__(self):
        a = sp.csr_matrix(self.adjacency, dtype=np.float64)
        a.sum_duplicates()
        a.eliminate_zeros()
        a.sort_indices()
        if a.shape[0] != a.shape[1]:
            raise ValidationError("adjacency must be square")
        if a.nnz and a.data.min() <= 0:
            raise ValidationError("edge weights must be strictly positive")
        if len(self.node_ids) != a.shape[0]:
            raise ValidationError("node_ids length does not match adjacency")
        object.__setattr__(self, "adjacency", a)

    @property
    def node_count(self) -> int:
        return self.adjacency.shape[0]

    n = node_count

    @property
    def degrees(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        """Edge list; undirected edges are reported once with ``i <= j``."""
        coo = self.adjacency.tocoo()
        keep = np.ones(coo.nnz, dtype=bool) if self.directed else coo.row <= coo.col
        return [
            (int(i), int(j), float(w))
            for i, j, w in zip(coo.row[keep], coo.col[keep], coo.data[keep])
        ]

    @property
    def num_edges(self) -> int:
        if self.directed:
            return self.adjacency.nnz
        loops = int(np.count_nonzero(self.adjacency.diagonal()))
        return (self.adjacency.nnz - loops) // 2 + loops

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return ``(i, j, w)`` arrays of undirected edges with ``i < j``."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order].astype(np.int64), coo.col[order].astype(np.int64), coo.data[order]

    def neighbors(self, i: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[i]:a.indptr[i + 1]]

    def dense(self) -> np.ndarray:
        if self.node_count > DENSE_CAP:
            raise ValidationError(f"n={self.node_count} exceeds dense cap {DENSE_CAP}")
        return self.adjacency.toarray()

    def is_unweighted(self) -> bool:
        return bool(np.all(self.adjacency.data == 1.0))

    def subgraph(self, nodes: Sequence[int]) -> "Graph":
        nodes = np.asarray(nodes, dtype=np.int64)
        a = self.adjacency[nodes][:, nodes]
        return Graph(a, tuple(self.node_ids[k] for k in nodes), self.directed)


def from_edges(n: int, edges: Iterable, node_ids: Sequence | None = None) -> Graph:
    """Build an undirected graph from ``(i, j)`` or ``(i, j, w)`` tuples.

    Repeated pairs are summed.
    """
    rows, cols, vals = [], [], []
    for e in edges:
        i, j = int(e[0]), int(e[1])
        w = float(e[2]) if len(e) > 2 else 1.0
        if w <= 0:
            raise ValidationError(f"non-positive weight {w} on edge ({i}, {j})")
        rows.append(i)
        cols.append(j)
        vals.append(w)
        if i != j:
            rows.append(j)
            cols.append(i)
            vals.append(w)
    a = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    ids = tuple(range(n)) if node_ids is None else tuple(node_ids)
    return Graph(a, ids)


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data)


def _parse_id(token: str, lineno: int):
    if token.isdigit():
        return int(token)
    # numeric-looking tokens must be nonnegative integers
    if token[0] in "+-.0123456789":
        raise ParseError(f"malformed node id {token!r}", lineno)
    return token


def load_edge_list(source, directed: bool = False) -> Graph:
    """Read ``src dst [weight]`` lines into a raw graph.

    ``source`` is a path, a bytes object or an open (binary or text) file.
    Nodes are indexed in first-seen order; duplicate edges are summed and a
    missing weight defaults to 1.0. With ``directed=True`` arcs are kept
    separately so that :func:`preprocess` can merge them.
    """
    index: dict = {}
    weights: dict[tuple[int, int], float] = {}
    for lineno, raw in enumerate(_open_text(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'src dst [weight]', got {line!r}", lineno)
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
            if not math.isfinite(w):
                raise ParseError(f"non-finite weight {parts[2]!r}", lineno)
            if w <= 0:
                raise ValidationError(f"line {lineno}: weight must be positive, got {w}")
        else:
            w = 1.0
        ids = []
        for tok in parts[:2]:
            key = _parse_id(tok, lineno)
            if key not in index:
                index[key] = len(index)
            ids.append(index[key])
        i, j = ids
        if not directed and i > j:
            i, j = j, i
        weights[(i, j)] = weights.get((i, j), 0.0) + w

    n = len(index)
    node_ids = tuple(index)
    if directed:
        rows = [k[0] for k in weights]
        cols = [k[1] for k in weights]
        a = sp.csr_matrix((list(weights.values()), (rows, cols)), shape=(n, n))
        return Graph(a, node_ids, directed=True)
    return from_edges(n, ((i, j, w) for (i, j), w in weights.items()), node_ids)


def connected_components(adjacency: sp.csr_matrix) -> list[np.ndarray]:
    """Components of a symmetric adjacency via breadth-first search."""
    n = adjacency.shape[0]
    indptr, indices = adjacency.indptr, adjacency.indices
    seen = np.zeros(n, dtype=bool)
    comps = []
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        queue = deque([root])
        members = [root]
        while queue:
            u = queue.popleft()
            for v in indices[indptr[u]:indptr[u + 1]]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
                    members.append(v)
        comps.append(np.sort(np.asarray(members, dtype=np.int64)))
    return comps


def _largest_component(adjacency: sp.csr_matrix, node_ids: Sequence) -> np.ndarray:
    comps = connected_components(adjacency)
    return min(comps, key=lambda c: (-len(c), min(_id_key(node_ids[k]) for k in c)))


def preprocess(g: Graph, merge: str = "max") -> Graph:
    """Drop self-loops, symmetrize, keep the largest connected component.

    Directed input is merged with ``merge`` (``"max"`` or ``"sum"`` of the
    two arc weights). Retained nodes are reindexed by ascending original id;
    equal-size components are resolved in favour of the one holding the
    smallest id.
    """
    a = g.adjacency.tolil(copy=True)
    a.setdiag(0)
    a = a.tocsr()
    a.eliminate_zeros()
    if g.directed:
        if merge == "max":
            a = a.maximum(a.T)
        elif merge == "sum":
            a = a + a.T
        else:
            raise ValidationError(f"unknown merge rule {merge!r}")
    a = sp.csr_matrix(a)
    if a.nnz == 0:
        raise ValidationError("graph has no edges after removing self-loops")
    comp = _largest_component(a, g.node_ids)
    order = sorted(comp, key=lambda k: _id_key(g.node_ids[k]))
    order = np.asarray(order, dtype=np.int64)
    return Graph(a[order][:, order], tuple(g.node_ids[k] for k in order), directed=False)


def transition_matrix(g: Graph) -> sp.csr_matrix:
    """Row-stochastic ``P = D^-1 A``."""
    deg = g.degrees
    if np.any(deg <= 0):
        bad = int(np.flatnonzero(deg <= 0)[0])
        raise ValidationError(f"node {bad} has zero degree")
    p = sp.csr_matrix(sp.diags(1.0 / deg) @ g.adjacency)
    p.sort_indices()
    return p


def cost_matrix(g: Graph) -> np.ndarray:
    """Dense ``C`` with ``1/A_ij`` on edges and ``inf`` elsewhere."""
    a = g.dense()
    c = np.full(a.shape, np.inf)
    mask = a > 0
    c[mask] = 1.0 / a[mask]
    return c


def erdos_renyi(n: int, p: float, seed) -> Graph:
    """G(n, p) sample with unit weights (may be disconnected)."""
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return from_edges(n, zip(iu[keep], ju[keep]))


def random_connected_graph(n: int, extra_edge_prob: float, seed) -> Graph:
    """Random spanning tree plus independent extra edges; always connected."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    edges = set()
    for k in range(1, n):
        parent = perm[rng.integers(k)]
        u, v = sorted((int(perm[k]), int(parent)))
        edges.add((u, v))
    iu, ju = np.triu_indices(n, k=1)
    extra = rng.random(iu.size) < extra_edge_prob
    edges.update(zip(iu[extra].tolist(), ju[extra].tolist()))
    return from_edges(n, sorted(edges))


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    """Link-prediction split.

    All pair arrays are ``(k, 2)`` int arrays indexed in ``train_graph``'s
    node order; ``nodes[i]`` maps that index back to the original graph.
    """

    train_graph: Graph
    induced_graph: Graph
    nodes: np.ndarray
    train_positive_pairs: np.ndarray
    test_positive_pairs: np.ndarray
    negative_pairs_train: np.ndarray
    negative_pairs_test: np.ndarray
    seed: int
    removed_edges: np.ndarray  # (k, 2) in the original graph's indexing


def _sample_non_edges(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    n = g.node_count
    total_pairs = n * (n - 1) // 2
    available = total_pairs - g.num_edges
    if count > available:
        raise ValidationError(
            f"need {count} negative pairs but only {available} non-edges exist"
        )
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    a = g.adjacency
    if total_pairs <= 2_000_000:
        iu, ju = np.triu_indices(n, k=1)
        is_edge = np.asarray(a[iu, ju]).ravel() > 0
        cand = np.flatnonzero(~is_edge)
        pick = rng.choice(cand.size, size=count, replace=False)
        return np.stack([iu[cand[pick]], ju[cand[pick]]], axis=1).astype(np.int64)
    chosen: dict[tuple[int, int], None] = {}
    while len(chosen) < count:
        batch = rng.integers(0, n, size=(2 * (count - len(chosen)) + 16, 2))
        for u, v in batch:
            if u == v:
                continue
            key = (int(min(u, v)), int(max(u, v)))
            if key in chosen or a[key[0], key[1]] > 0:
                continue
            chosen[key] = None
            if len(chosen) == count:
                break
    return np.asarray(list(chosen), dtype=np.int64)


def split_edges_for_link_prediction(g: Graph, removal_fraction: float = 0.3, seed: int = 0) -> EdgeSplit:
    """Remove ``floor(fraction * |E|)`` random edges and sample negatives.

    The training graph is the largest component of what remains; test
    positives are the removed edges with both endpoints inside it. Negatives
    are drawn without replacement from the non-edges of the original graph
    restricted to the training nodes, one per positive in each split.
    """
    if not 0 < removal_fraction < 1:
        raise ValidationError("removal_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    ei, ej, ew = g.edge_arrays()
    m = ei.size
    n_remove = int(math.floor(removal_fraction * m))
    removed = np.zeros(m, dtype=bool)
    removed[rng.choice(m, size=n_remove, replace=False)] = True
    keep = ~removed
    if not keep.any():
        raise ValidationError("no edges left after removal")

    n = g.node_count
    rest = from_edges(n, zip(ei[keep], ej[keep], ew[keep]), g.node_ids)
    comp = _largest_component(rest.adjacency, g.node_ids)
    comp = np.asarray(sorted(comp, key=lambda k: _id_key(g.node_ids[k])), dtype=np.int64)
    local = np.full(n, -1, dtype=np.int64)
    local[comp] = np.arange(comp.size)

    train_graph = rest.subgraph(comp)
    induced = g.subgraph(comp)

    ti, tj, _ = train_graph.edge_arrays()
    train_pos = np.stack([ti, tj], axis=1)
    ri, rj = ei[removed], ej[removed]
    inside = (local[ri] >= 0) & (local[rj] >= 0)
    test_pos = np.stack([local[ri[inside]], local[rj[inside]]], axis=1)
    test_pos = np.sort(test_pos, axis=1)

    neg = _sample_non_edges(induced, len(train_pos) + len(test_pos), rng)
    return EdgeSplit(
        train_graph=train_graph,
        induced_graph=induced,
        nodes=comp,
        train_positive_pairs=train_pos,
        test_positive_pairs=test_pos,
        negative_pairs_train=neg[: len(train_pos)],
        negative_pairs_test=neg[len(train_pos):],
        seed=seed,
        removed_edges=np.stack([ri, rj], axis=1),
    )
