import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from graphgrad.errors import InvalidGraph, SingularStructure
from graphgrad.graph import (
    WeightedDigraph,
    build_laplacian,
    check_detailed_balance,
    complete_graph,
    incidence_matrix,
    is_strongly_connected,
    path_graph,
    random_reversible_graph,
    random_strongly_connected_graph,
    reversible_graph,
    stationary_vector,
)

TWO_NODE = WeightedDigraph(2, ((1, 0, 2.0), (0, 1, 1.0)))


def test_laplacian_two_node():
    np.testing.assert_array_equal(build_laplacian(TWO_NODE), [[2.0, -2.0], [-1.0, 1.0]])


def test_laplacian_empty_graph():
    np.testing.assert_array_equal(build_laplacian(WeightedDigraph(3, ())), np.zeros((3, 3)))


def test_laplacian_symmetric_three_cycle():
    g = WeightedDigraph(3, tuple((j, i, 1.0) for i in range(3) for j in range(3) if i != j))
    L = build_laplacian(g)
    np.testing.assert_array_equal(np.diag(L), [2, 2, 2])
    assert np.all(L[~np.eye(3, dtype=bool)] == -1)


def test_laplacian_rows_sum_to_zero(rng):
    for _ in range(20):
        L = build_laplacian(random_strongly_connected_graph(rng, int(rng.integers(2, 9))))
        assert np.max(np.abs(L.sum(axis=1))) < 1e-12
        assert np.all(L[~np.eye(len(L), dtype=bool)] <= 0)


@pytest.mark.parametrize("branches, expected", [
    (((1, 0, 1.0), (0, 1, 1.0)), True),
    (((1, 0, 1.0),), False),
    (((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)), True),
])
def test_strong_connectivity_examples(branches, expected):
    n = 1 + max(max(j, i) for j, i, _ in branches)
    assert is_strongly_connected(WeightedDigraph(n, branches)) is expected


def test_strong_connectivity_matches_scipy(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        pairs = [(j, i) for j in range(n) for i in range(n) if i != j and rng.random() < 0.3]
        g = WeightedDigraph(n, tuple((j, i, 1.0) for j, i in pairs))
        adj = np.zeros((n, n))
        for j, i in pairs:
            adj[j, i] = 1
        k, _ = connected_components(csr_matrix(adj), directed=True, connection="strong")
        assert is_strongly_connected(g) == (k == 1)


def test_stationary_vector_two_node():
    sv = stationary_vector(build_laplacian(TWO_NODE))
    np.testing.assert_allclose(sv.c, [1 / 3, 2 / 3], atol=1e-15)
    np.testing.assert_allclose(sv.C, np.diag([1 / 3, 2 / 3]), atol=1e-15)


def test_stationary_vector_symmetric_is_uniform():
    sv = stationary_vector(build_laplacian(complete_graph(5, 0.7)))
    np.testing.assert_allclose(sv.c, np.full(5, 0.2), atol=1e-15)


def test_stationary_vector_three_node_chain():
    g = WeightedDigraph(3, ((0, 1, 1.0), (1, 0, 2.0), (1, 2, 1.0), (2, 1, 3.0)))
    np.testing.assert_allclose(stationary_vector(build_laplacian(g)).c, np.array([1, 2, 6]) / 9, atol=1e-15)


def test_stationary_vector_matches_eigen_oracle(rng):
    for _ in range(50):
        L = build_laplacian(random_strongly_connected_graph(rng, int(rng.integers(2, 9))))
        sv = stationary_vector(L)
        lam, vecs = np.linalg.eig(L.T)
        v = np.real(vecs[:, np.argmin(np.abs(lam))])
        v = v / v.sum()
        np.testing.assert_allclose(sv.c, v, rtol=1e-9, atol=1e-12)
        assert np.max(np.abs(sv.c @ L)) < 1e-10
        assert np.all(sv.c > 0) and abs(sv.c.sum() - 1) < 1e-14


def test_stationary_vector_rejects_disconnected():
    g = WeightedDigraph(4, ((0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)))
    with pytest.raises(SingularStructure):
        stationary_vector(build_laplacian(g))


def test_detailed_balance_holds_for_reversible_construction(rng):
    for _ in range(30):
        g, c = random_reversible_graph(rng, int(rng.integers(2, 9)))
        assert check_detailed_balance(g, stationary_vector(build_laplacian(g)).c).ok
        np.testing.assert_allclose(stationary_vector(build_laplacian(g)).c, c, rtol=1e-9)


def test_detailed_balance_violation_lists_pairs():
    cycle = WeightedDigraph(3, ((0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)))
    rep = check_detailed_balance(cycle, stationary_vector(build_laplacian(cycle)).c)
    assert not rep.ok
    assert sorted((i, j) for i, j, _, _ in rep.violations) == [(0, 1), (0, 2), (1, 2)]
    assert "(1,2)" in rep.describe()


def test_detailed_balance_equivalent_to_matrix_identity(rng):
    # c_i w_ij = c_j w_ji  <=>  C L = L^T C
    for _ in range(30):
        g = random_strongly_connected_graph(rng, int(rng.integers(2, 7)))
        L = build_laplacian(g)
        c = stationary_vector(L).c
        CL = np.diag(c) @ L
        assert check_detailed_balance(g, c).ok == bool(np.max(np.abs(CL - CL.T)) < 1e-9)


def test_incidence_columns_and_orientation():
    inc = incidence_matrix(WeightedDigraph(3, ((1, 0, 1.0), (0, 1, 1.0), (2, 1, 1.0))))
    assert inc.edges == ((0, 1), (2, 1))
    np.testing.assert_array_equal(inc.matrix, [[-1, 0], [1, 1], [0, -1]])
    np.testing.assert_array_equal(inc.matrix.sum(axis=0), 0)


def test_incidence_single_branch_keeps_orientation():
    inc = incidence_matrix(WeightedDigraph(2, ((1, 0, 1.0),)))
    np.testing.assert_array_equal(inc.matrix[:, 0], [1, -1])


@pytest.mark.parametrize("branches", [((0, 0, 1.0),), ((0, 1, 1.0), (0, 1, 2.0)), ((0, 1, 0.0),), ((0, 5, 1.0),)])
def test_invalid_graphs_rejected(branches):
    with pytest.raises(InvalidGraph):
        WeightedDigraph(2, branches)


def test_json_round_trip_is_one_based():
    doc = TWO_NODE.to_dict()
    assert doc["nodes"] == 2
    assert {"from": 2, "to": 1, "weight": 2.0} in doc["edges"]
    assert WeightedDigraph.from_dict(doc) == TWO_NODE


def test_reversible_builder_and_path():
    g = reversible_graph([0.25, 0.75], {(0, 1): 1.5})
    W = g.weight_matrix()
    assert W[0, 1] * 0.25 == pytest.approx(W[1, 0] * 0.75)
    assert path_graph(4).branch_count == 6
