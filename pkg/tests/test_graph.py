import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gmffe.errors import ParseError, ValidationError
from gmffe.graph import (connected_components, cost_matrix, from_edges, load_edge_list,
                         preprocess, random_connected_graph, split_edges_for_link_prediction,
                         transition_matrix)

from conftest import complete_graph, path_graph


def test_load_unweighted():
    g = load_edge_list(b"0 1\n1 2")
    assert g.node_count == 3
    assert g.edges == [(0, 1, 1.0), (1, 2, 1.0)]


def test_load_duplicates_are_summed():
    g = load_edge_list(io.BytesIO(b"a b 2.5\nb a 2.5"))
    assert g.node_count == 2
    assert g.node_ids == ("a", "b")
    assert g.edges == [(0, 1, 5.0)]


def test_load_malformed_token_reports_line():
    with pytest.raises(ParseError) as info:
        load_edge_list(b"0 1\n1 -1weight")
    assert info.value.line == 2


@pytest.mark.parametrize("text", [b"0 1 x\n", b"0\n", b"0 1 2 3\n"])
def test_load_parse_errors(text):
    with pytest.raises(ParseError):
        load_edge_list(text)


@pytest.mark.parametrize("w", ["0", "-2"])
def test_load_rejects_nonpositive_weight(w):
    with pytest.raises(ValidationError):
        load_edge_list(f"0 1 {w}\n".encode())


def test_load_skips_comments_and_blank_lines(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# header\n\n3 4\n4 5 2\n")
    g = load_edge_list(p)
    assert g.node_ids == (3, 4, 5)
    assert g.num_edges == 2


def test_directed_merge_max_and_sum():
    raw = load_edge_list(b"0 1 2\n1 0 3\n1 2\n", directed=True)
    assert raw.directed
    g = preprocess(raw)
    assert g.adjacency[0, 1] == g.adjacency[1, 0] == 3.0
    assert g.adjacency[1, 2] == g.adjacency[2, 1] == 1.0
    g_sum = preprocess(raw, merge="sum")
    assert g_sum.adjacency[0, 1] == 5.0


def test_preprocess_removes_self_loop():
    g = preprocess(load_edge_list(b"0 1\n1 2\n2 0\n1 1\n"))
    assert g.node_count == 3
    assert g.num_edges == 3
    assert np.all(g.adjacency.diagonal() == 0)


def test_preprocess_keeps_largest_component_reindexed():
    g = preprocess(load_edge_list(b"0 1\n2 3\n3 4\n"))
    assert g.node_ids == (2, 3, 4)
    assert g.edges == [(0, 1, 1.0), (1, 2, 1.0)]


def test_preprocess_component_tie_uses_smallest_id():
    g = preprocess(load_edge_list(b"7 8\n1 9\n"))
    assert g.node_ids == (1, 9)


def test_preprocess_orders_by_original_id():
    g = preprocess(load_edge_list(b"10 2\n2 5\n"))
    assert g.node_ids == (2, 5, 10)


def test_preprocess_degenerate():
    with pytest.raises(ValidationError):
        preprocess(load_edge_list(b"0 0\n"))


def _random_raw(seed, n):
    rng = np.random.default_rng(seed)
    m = rng.integers(1, 3 * n)
    edges = rng.integers(0, n, size=(m, 2))
    return from_edges(n, [(int(a), int(b), float(w)) for (a, b), w in zip(edges, rng.uniform(0.1, 3, m))])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 15))
def test_preprocess_idempotent_and_connected(seed, n):
    raw = _random_raw(seed, n)
    try:
        g = preprocess(raw)
    except ValidationError:
        return
    again = preprocess(g)
    assert again.node_ids == g.node_ids
    assert (again.adjacency != g.adjacency).nnz == 0
    a = g.adjacency
    assert (a != a.T).nnz == 0
    assert len(connected_components(a)) == 1
    assert np.all(a.diagonal() == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 20))
def test_transition_rows_sum_to_one(seed, n):
    g = random_connected_graph(n, 0.2, seed)
    p = transition_matrix(g).toarray()
    assert np.abs(p.sum(axis=1) - 1).max() <= 1e-12
    assert np.all(p >= 0)


def test_transition_examples():
    p = transition_matrix(path_graph(3)).toarray()
    assert p[1, 0] == p[1, 2] == 0.5 and p[0, 1] == 1.0
    assert np.array_equal(transition_matrix(path_graph(2)).toarray(), [[0, 1], [1, 0]])
    p = transition_matrix(from_edges(3, [(0, 1, 1.0), (0, 2, 3.0)])).toarray()
    assert p[0, 1] == 0.25 and p[0, 2] == 0.75


def test_cost_matrix():
    c = cost_matrix(from_edges(3, [(0, 1, 2.0), (1, 2, 1.0)]))
    assert c[0, 1] == c[1, 0] == 0.5
    assert c[1, 2] == 1.0
    assert np.isinf(c[0, 2]) and np.isinf(c[0, 0])


def test_split_removes_exact_count():
    ring = [(k, (k + 1) % 8) for k in range(8)]
    g = from_edges(8, ring + [(0, 4), (2, 6)])
    assert g.num_edges == 10
    split = split_edges_for_link_prediction(g, 0.3, seed=4)
    assert len(split.removed_edges) == 3
    kept = {tuple(sorted(split.nodes[e])) for e in split.train_positive_pairs}
    for u, v in split.removed_edges:
        assert (min(u, v), max(u, v)) not in kept


def test_split_deterministic():
    g = random_connected_graph(30, 0.15, seed=3)
    a = split_edges_for_link_prediction(g, 0.3, seed=9)
    b = split_edges_for_link_prediction(g, 0.3, seed=9)
    for name in ("nodes", "train_positive_pairs", "test_positive_pairs",
                 "negative_pairs_train", "negative_pairs_test"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_split_complete_graph_has_no_negatives():
    with pytest.raises(ValidationError):
        split_edges_for_link_prediction(complete_graph(4), 0.3, seed=0)


@pytest.mark.parametrize("seed", range(5))
def test_split_invariants(seed):
    g = random_connected_graph(40, 0.1, seed=seed)
    s = split_edges_for_link_prediction(g, 0.3, seed=seed)
    orig = g.adjacency
    train = s.train_graph.adjacency
    induced = s.induced_graph.adjacency
    assert len(connected_components(train)) == 1
    assert len(s.negative_pairs_train) == len(s.train_positive_pairs)
    assert len(s.negative_pairs_test) == len(s.test_positive_pairs)
    for u, v in s.test_positive_pairs:
        assert train[u, v] == 0
        assert orig[s.nodes[u], s.nodes[v]] > 0
    for u, v in np.vstack([s.negative_pairs_train, s.negative_pairs_test]):
        assert u != v and induced[u, v] == 0
    negs = {tuple(p) for p in np.vstack([s.negative_pairs_train, s.negative_pairs_test])}
    assert len(negs) == len(s.negative_pairs_train) + len(s.negative_pairs_test)
    assert s.train_graph.node_ids == tuple(g.node_ids[k] for k in s.nodes)
