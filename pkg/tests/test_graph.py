import numpy as np
import pytest

from fairlift.errors import (InputError, IsolatedNode, MalformedId,
                             NonPositiveWeight)
from fairlift.graph import (Graph, build_graph, from_dense_edges,
                            normalized_adjacency, parse_edge_list,
                            read_edge_list, write_edge_list)


def test_build_simple_triangle():
    g = build_graph([("a", "b", 1.0), ("b", "c", 1.0), ("a", "c", 1.0)])
    assert g.n == 3
    assert g.num_edges == 3
    assert g.num_self_loops == 0
    assert np.allclose(g.degree, [2.0, 2.0, 2.0])
    assert g.weight(0, 1) == 1.0
    assert g.weight(1, 0) == 1.0


def test_default_weight_and_duplicates_sum():
    g = build_graph([("a", "b", 2.0), ("b", "a", 3.0)])
    assert g.num_edges == 1
    assert g.weight(0, 1) == 5.0


def test_self_loop_counts_twice_in_degree():
    g = build_graph([("a", "a", 1.5), ("a", "b", 1.0)])
    # degree(a) = 1.0 + 2 * 1.5
    assert g.degree[g.index_of("a")] == pytest.approx(4.0)
    assert g.degree[g.index_of("b")] == pytest.approx(1.0)
    assert g.num_self_loops == 1
    assert g.num_edges == 1


def test_interning_first_appearance_order():
    g = build_graph([("x", "y", 1.0), ("y", "z", 1.0)])
    assert g.node_names == ["x", "y", "z"]
    assert g.index_of("z") == 2


def test_isolated_nodes_via_node_list():
    g = build_graph([("a", "b", 1.0)], nodes=["a", "b", "lonely"])
    assert g.n == 3
    assert g.degree[g.index_of("lonely")] == 0.0
    assert g.neighbors(g.index_of("lonely")).size == 0


def test_nonpositive_weight_rejected():
    with pytest.raises(NonPositiveWeight):
        build_graph([("a", "b", 0.0)])
    with pytest.raises(NonPositiveWeight):
        build_graph([("a", "b", -2.0)])


def test_malformed_id_rejected():
    with pytest.raises(MalformedId):
        build_graph([("", "b", 1.0)])
    with pytest.raises(MalformedId):
        build_graph([("a b", "b", 1.0)])


def test_weight_absent_edge_is_zero():
    g = build_graph([("a", "b", 1.0), ("c", "d", 1.0)])
    assert g.weight(0, 2) == 0.0


def test_neighbors_sorted_ascending():
    g = build_graph([("c", "a", 1.0), ("c", "b", 1.0), ("c", "d", 1.0)])
    c = g.index_of("c")
    nbrs = g.neighbors(c)
    assert list(nbrs) == sorted(nbrs)


def test_normalized_adjacency_row_stochastic_symmetry():
    g = build_graph([("a", "b", 1.0), ("b", "c", 2.0)])
    P = normalized_adjacency(g, add_self_loops=True).toarray()
    assert np.allclose(P, P.T)
    # eigenvalues of D^-1/2 A D^-1/2 are within [-1, 1]
    w = np.linalg.eigvalsh(P)
    assert w.max() <= 1.0 + 1e-12
    assert w.min() >= -1.0 - 1e-12


def test_normalized_adjacency_isolated_node():
    g = build_graph([("a", "b", 1.0)], nodes=["a", "b", "alone"])
    with pytest.raises(IsolatedNode):
        normalized_adjacency(g, add_self_loops=False)
    P = normalized_adjacency(g, add_self_loops=True)
    assert P.shape == (3, 3)


def test_parse_edge_list_comments_and_default_weight():
    lines = ["# header", "a b", "b c 2.5", "", "  # more"]
    triples = parse_edge_list(lines)
    assert triples == [("a", "b", 1.0), ("b", "c", 2.5)]


def test_parse_edge_list_bad_line():
    with pytest.raises(InputError):
        parse_edge_list(["a"])
    with pytest.raises(InputError):
        parse_edge_list(["a b not_a_number"])


def test_edge_list_round_trip(tmp_path):
    g = build_graph([("n0", "n1", 0.1234567890123456), ("n1", "n1", 2.0),
                     ("n2", "n0", 7.25)])
    path = tmp_path / "g.edges"
    write_edge_list(g, path)
    g2 = read_edge_list(path, nodes=g.node_names)
    assert g2.n == g.n
    assert np.array_equal(g2.indptr, g.indptr)
    assert np.array_equal(g2.indices, g.indices)
    assert np.array_equal(g2.data, g.data)


def test_from_dense_edges_matches_build_graph():
    eu = np.array([0, 1, 2])
    ev = np.array([1, 2, 2])
    ew = np.array([1.0, 2.0, 3.0])
    g = from_dense_edges(3, eu, ev, ew)
    ref = build_graph([("0", "1", 1.0), ("1", "2", 2.0), ("2", "2", 3.0)])
    assert np.allclose(g.degree, ref.degree)
    assert g.num_edges == ref.num_edges


def test_fuzz_degree_identity():
    # degree = off-diagonal row sum + twice the self-loop weight
    rng = np.random.default_rng(7)
    for trial in range(30):
        n = int(rng.integers(2, 40))
        k = int(rng.integers(1, 4 * n))
        eu = rng.integers(0, n, size=k)
        ev = rng.integers(0, n, size=k)
        ew = rng.uniform(0.1, 3.0, size=k)
        lo, hi = np.minimum(eu, ev), np.maximum(eu, ev)
        key = lo * n + hi
        uniq, inv = np.unique(key, return_inverse=True)
        w = np.zeros(uniq.size)
        np.add.at(w, inv, ew)
        g = from_dense_edges(n, uniq // n, uniq % n, w)
        g.check_invariants()
        adj = g.adjacency().toarray()
        loops = np.diag(adj)
        expected = adj.sum(axis=1) + loops
        assert np.allclose(g.degree, expected, atol=1e-12)
        assert g.total_degree == pytest.approx(expected.sum())
