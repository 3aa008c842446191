import numpy as np
import pytest
from hypothesis import given, strategies as st

from studentsim.graph import (
    NormalizedAdjacency,
    ScoreVector,
    build_graph,
    edge_list,
    fixed_point,
    graph_summary,
    normalize_adjacency,
    normalize_embedding,
    propagate,
)


def unit_rows(matrix):
    matrix = np.asarray(matrix, dtype=float)
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def ids(n):
    return [f"sp-{i:016x}" for i in range(n)]


def random_instance(rng, n=None):
    n = n or rng.integers(2, 51)
    dim = int(rng.integers(2, 8))
    embeddings = unit_rows(rng.standard_normal((n, dim)))
    theta = float(rng.uniform(-0.2, 0.95))
    graph = build_graph(ids(n), embeddings, theta)
    scores = ScoreVector(ids(n), rng.uniform(0, 10, size=n), kind="profile", phase="initial")
    return graph, scores


# -- normalize_embedding --------------------------------------------------------


def test_normalize_three_four_five():
    assert np.allclose(normalize_embedding(np.array([3.0, 4.0])), [0.6, 0.8])


def test_normalize_keeps_unit_vectors():
    v = np.array([1.0, 0.0, 0.0])
    assert np.array_equal(normalize_embedding(v), v)


def test_normalize_rejects_zero_vector():
    with pytest.raises(ValueError):
        normalize_embedding(np.zeros(4))


def test_normalize_rejects_non_finite():
    with pytest.raises(ValueError):
        normalize_embedding(np.array([1.0, np.inf]))


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=16).filter(
        lambda v: any(abs(x) > 1e-6 for x in v)
    )
)
def test_normalize_always_unit_norm(values):
    out = normalize_embedding(np.array(values))
    assert abs(np.linalg.norm(out) - 1.0) <= 1e-9


# -- build_graph ------------------------------------------------------------------


def test_identical_embeddings_are_connected():
    e = unit_rows([[1.0, 1.0], [1.0, 1.0]])
    graph = build_graph(ids(2), e, theta=0.9)
    assert graph.adjacency[0, 1] == 1


def test_orthogonal_embeddings_are_not_connected():
    e = np.array([[1.0, 0.0], [0.0, 1.0]])
    graph = build_graph(ids(2), e, theta=0.5)
    assert graph.adjacency[0, 1] == 0
    assert graph.n_edges == 0


def test_theta_minus_one_gives_complete_graph():
    rng = np.random.default_rng(0)
    e = unit_rows(rng.standard_normal((7, 3)))
    graph = build_graph(ids(7), e, theta=-1.0)
    assert graph.n_edges == 7 * 6 // 2


def test_self_loops_always_present():
    rng = np.random.default_rng(1)
    e = unit_rows(rng.standard_normal((5, 3)))
    graph = build_graph(ids(5), e, theta=0.99)
    assert np.array_equal(np.diag(graph.adjacency), np.ones(5))
    assert np.all(graph.degrees >= 1)


def test_adjacency_exactly_symmetric():
    rng = np.random.default_rng(2)
    for _ in range(20):
        graph, _ = random_instance(rng)
        assert np.array_equal(graph.adjacency, graph.adjacency.T)


def test_build_graph_rejects_non_unit_rows():
    with pytest.raises(ValueError):
        build_graph(ids(2), np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_build_graph_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        build_graph(ids(3), np.eye(2))


def test_build_graph_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        build_graph(["a", "a"], np.eye(2))


# -- normalize_adjacency ------------------------------------------------------------


def test_isolated_node_normalizes_to_identity_entry():
    graph = build_graph(ids(2), np.array([[1.0, 0.0], [0.0, 1.0]]), theta=0.5)
    normalized = normalize_adjacency(graph)
    assert normalized.matrix[0, 0] == 1.0
    assert normalized.matrix[0, 1] == 0.0


def test_two_node_complete_graph_normalizes_to_half():
    e = unit_rows([[1.0, 0.0], [1.0, 1e-3]])
    graph = build_graph(ids(2), e, theta=0.9)
    normalized = normalize_adjacency(graph)
    assert np.allclose(normalized.matrix, 0.5 * np.ones((2, 2)), atol=1e-15)


def test_path_graph_normalization_hand_value():
    # Angles 0deg, 45deg, 90deg with theta = 0.5: ends connect to the middle
    # only, so degrees (with self-loops) are [2, 3, 2] and the end-middle
    # entry is 1/sqrt(2*3).
    e = np.array([[1.0, 0.0], [np.sqrt(0.5), np.sqrt(0.5)], [0.0, 1.0]])
    graph = build_graph(ids(3), e, theta=0.5)
    assert np.array_equal(graph.degrees, [2, 3, 2])
    normalized = normalize_adjacency(graph)
    assert normalized.matrix[0, 1] == pytest.approx(1 / np.sqrt(6), abs=1e-12)
    assert normalized.matrix[0, 2] == 0.0


def test_normalized_adjacency_bitwise_symmetric():
    rng = np.random.default_rng(3)
    for _ in range(20):
        graph, _ = random_instance(rng)
        m = normalize_adjacency(graph).matrix
        assert np.array_equal(m, m.T)


def test_normalized_spectral_radius_at_most_one():
    rng = np.random.default_rng(4)
    for _ in range(10):
        graph, _ = random_instance(rng)
        eigenvalues = np.linalg.eigvalsh(normalize_adjacency(graph).matrix)
        assert np.max(np.abs(eigenvalues)) <= 1.0 + 1e-9


# -- propagate / fixed_point -----------------------------------------------------


def two_node_connected():
    e = unit_rows([[1.0, 0.0], [1.0, 1e-6]])
    graph = build_graph(ids(2), e, theta=0.9)
    return normalize_adjacency(graph)


def test_two_node_hand_computed_fixed_point():
    normalized = two_node_connected()
    s0 = ScoreVector(ids(2), np.array([10.0, 0.0]), kind="profile", phase="initial")
    out, stats = propagate(s0, normalized, alpha=0.5, tol=1e-13)
    assert np.allclose(out.values, [7.5, 2.5], atol=1e-12)
    assert out.phase == "propagated"
    # the iteration lands on the fixed point at k=1 and detects it at k=2
    assert stats.iterations == 2
    assert stats.residual <= 1e-13


def test_two_node_fixed_point_closed_form():
    normalized = two_node_connected()
    s0 = ScoreVector(ids(2), np.array([10.0, 0.0]), kind="profile", phase="initial")
    out = fixed_point(s0, normalized, alpha=0.5)
    assert np.allclose(out.values, [7.5, 2.5], atol=1e-12)


def test_isolated_nodes_are_unchanged():
    graph = build_graph(ids(2), np.array([[1.0, 0.0], [0.0, 1.0]]), theta=0.5)
    normalized = normalize_adjacency(graph)
    s0 = ScoreVector(ids(2), np.array([9.25, 3.5]), kind="behavior", phase="initial")
    out, _ = propagate(s0, normalized, alpha=0.5, max_iterations=200, tol=0.0)
    assert np.array_equal(out.values, s0.values)


def test_alpha_zero_returns_initial_scores():
    rng = np.random.default_rng(5)
    graph, s0 = random_instance(rng, n=10)
    out, stats = propagate(s0, normalize_adjacency(graph), alpha=0.0)
    assert np.array_equal(out.values, s0.values)
    assert stats.iterations == 1


def test_propagate_matches_fixed_point_on_100_random_graphs():
    rng = np.random.default_rng(6)
    for _ in range(100):
        graph, s0 = random_instance(rng)
        normalized = normalize_adjacency(graph)
        alpha = float(rng.uniform(0.0, 0.9))
        iterated, _ = propagate(s0, normalized, alpha=alpha, max_iterations=2000, tol=1e-12)
        direct = fixed_point(s0, normalized, alpha=alpha)
        assert np.max(np.abs(iterated.values - direct.values)) < 1e-6


def test_residuals_decay_geometrically():
    # successive differences satisfy r_(k+1) = alpha * normalized @ r_k, so the
    # step-to-step L2 ratio is bounded by alpha (spectral norm <= 1).
    rng = np.random.default_rng(7)
    alpha = 0.5
    for _ in range(20):
        graph, s0 = random_instance(rng)
        normalized = normalize_adjacency(graph).matrix
        initial = s0.values
        current = initial.copy()
        previous_residual = None
        for _ in range(40):
            nxt = alpha * (normalized @ current) + (1 - alpha) * initial
            residual = float(np.linalg.norm(nxt - current))
            if previous_residual is not None and previous_residual > 1e-10:
                assert residual <= (alpha + 0.05) * previous_residual
            previous_residual = residual
            current = nxt


def test_permutation_equivariance():
    rng = np.random.default_rng(8)
    graph, s0 = random_instance(rng, n=12)
    perm = rng.permutation(12)
    permuted_graph = build_graph(
        [graph.node_ids[i] for i in perm], graph.embeddings[perm], graph.threshold
    )
    permuted_s0 = ScoreVector(
        [s0.node_ids[i] for i in perm], s0.values[perm], kind=s0.kind, phase=s0.phase
    )
    out, _ = propagate(s0, normalize_adjacency(graph), alpha=0.5, tol=1e-13, max_iterations=500)
    permuted_out, _ = propagate(
        permuted_s0, normalize_adjacency(permuted_graph), alpha=0.5, tol=1e-13, max_iterations=500
    )
    assert np.allclose(permuted_out.values, out.values[perm], atol=1e-10)


def test_propagate_input_validation():
    normalized = two_node_connected()
    good = ScoreVector(ids(2), np.array([1.0, 2.0]), "profile", "initial")
    with pytest.raises(ValueError):
        propagate(good, normalized, alpha=1.0)
    with pytest.raises(ValueError):
        propagate(good, normalized, alpha=-0.1)
    with pytest.raises(ValueError):
        propagate(
            ScoreVector(ids(3), np.array([1.0, 2.0, 3.0]), "profile", "initial"), normalized
        )
    with pytest.raises(ValueError):
        propagate(ScoreVector(ids(2), np.array([np.nan, 1.0]), "profile", "initial"), normalized)


def test_propagated_values_are_not_clamped():
    # propagation is a weighted average, so values stay within [min, max] of
    # S0 here — but nothing clips them to the 1-10 scale; check a raw value
    # below 1 survives.
    normalized = two_node_connected()
    s0 = ScoreVector(ids(2), np.array([0.2, 0.4]), "profile", "initial")
    out, _ = propagate(s0, normalized)
    assert np.all(out.values < 1.0)


# -- exports -------------------------------------------------------------------


def test_graph_summary_counts():
    e = np.array([[1.0, 0.0], [np.sqrt(0.5), np.sqrt(0.5)], [0.0, 1.0]])
    graph = build_graph(ids(3), e, theta=0.5)
    summary = graph_summary(graph)
    assert summary["n_nodes"] == 3
    assert summary["n_edges"] == 2
    assert summary["edge_density"] == pytest.approx(2 / 3)
    assert summary["degree_histogram"] == {"2": 2, "3": 1}


def test_edge_list_matches_adjacency():
    e = np.array([[1.0, 0.0], [np.sqrt(0.5), np.sqrt(0.5)], [0.0, 1.0]])
    graph = build_graph(ids(3), e, theta=0.5)
    edges = edge_list(graph)
    assert edges == [
        {"source": graph.node_ids[0], "target": graph.node_ids[1]},
        {"source": graph.node_ids[1], "target": graph.node_ids[2]},
    ]


def test_score_vector_mapping():
    sv = ScoreVector(["a", "b"], np.array([1.5, 2.5]), "profile", "initial")
    assert sv.as_mapping() == {"a": 1.5, "b": 2.5}
    assert len(sv) == 2


def test_normalized_adjacency_carries_graph_id():
    rng = np.random.default_rng(9)
    graph, _ = random_instance(rng, n=5)
    assert normalize_adjacency(graph).graph_id == graph.graph_id
    assert isinstance(NormalizedAdjacency(np.eye(2), "g-x").n_nodes, int)
