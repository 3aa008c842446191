"""Similarity graph construction and score propagation.

Profiles become nodes; an undirected edge joins two nodes whenever the
cosine similarity of their unit embeddings reaches the threshold θ, and
every node carries a self-loop so the degree-normalized operator
Ã = D^(-1/2) A D^(-1/2) is total (isolated nodes are exact fixed points
rather than division-by-zero holes).

Scores are refined by the diffusion

    S^(k+1) = α Ã S^(k) + (1 - α) S^(0),   0 <= α < 1,

iterated to tolerance, with the closed form
S* = (1 - α)(I - α Ã)^(-1) S^(0) available as an independent oracle.
Since the spectral radius of Ã is at most 1, the iteration contracts with
ratio at most α and both routes agree.

Propagated values are intentionally not clamped to the 1-10 score scale;
downstream thresholding uses the raw values.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

DEFAULT_THETA = 0.8
DEFAULT_ALPHA = 0.5
DEFAULT_MAX_ITERATIONS = 50
DEFAULT_TOL = 1e-9
UNIT_NORM_ATOL = 1e-9


@dataclass(eq=False)
class SimilarityGraph:
    node_ids: list[str]
    embeddings: np.ndarray  # n x d, unit rows
    threshold: float
    adjacency: np.ndarray  # n x n, exact 0/1 floats, unit diagonal

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    @property
    def n_edges(self) -> int:
        """Off-diagonal undirected edge count (self-loops excluded)."""
        return int((self.adjacency.sum() - self.n_nodes) // 2)

    @property
    def graph_id(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps(self.node_ids).encode())
        h.update(repr(self.threshold).encode())
        h.update(np.ascontiguousarray(self.adjacency).tobytes())
        return "g-" + h.hexdigest()[:12]


@dataclass(eq=False)
class NormalizedAdjacency:
    matrix: np.ndarray
    graph_id: str

    @property
    def n_nodes(self) -> int:
        return int(self.matrix.shape[0])


@dataclass(eq=False)
class ScoreVector:
    node_ids: list[str]
    values: np.ndarray
    kind: str  # "profile" | "behavior" | "avg"
    phase: str  # "initial" | "iterate" | "propagated"

    def __len__(self) -> int:
        return len(self.node_ids)

    def as_mapping(self) -> dict[str, float]:
        return {nid: float(v) for nid, v in zip(self.node_ids, self.values)}


@dataclass
class PropagationStats:
    iterations: int
    residual: float


def normalize_embedding(u: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; direction preserved."""
    u = np.asarray(u, dtype=float)
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero embedding vector")
    if not np.all(np.isfinite(u)):
        raise ValueError("embedding has non-finite entries")
    return u / norm


def build_graph(
    node_ids: list[str], embeddings: np.ndarray, theta: float = DEFAULT_THETA
) -> SimilarityGraph:
    """Threshold the pairwise cosine similarities into a 0/1 adjacency.

    Requires unit-norm rows (so the dot product IS the cosine). The Gram
    matrix is explicitly symmetrized before thresholding: BLAS products are
    not guaranteed bitwise-symmetric, and adjacency symmetry must be exact.
    """
    embeddings = np.asarray(embeddings, dtype=float)
    if embeddings.ndim != 2 or embeddings.shape[0] != len(node_ids):
        raise ValueError(
            f"expected one embedding row per node id, got {embeddings.shape} for {len(node_ids)} ids"
        )
    if len(set(node_ids)) != len(node_ids):
        raise ValueError("node ids must be unique")
    norms = np.linalg.norm(embeddings, axis=1)
    if not np.allclose(norms, 1.0, atol=UNIT_NORM_ATOL):
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"embeddings must be unit-norm; row {worst} has norm {norms[worst]}")
    gram = embeddings @ embeddings.T
    gram = (gram + gram.T) / 2.0
    adjacency = (gram >= theta).astype(float)
    np.fill_diagonal(adjacency, 1.0)
    return SimilarityGraph(
        node_ids=list(node_ids), embeddings=embeddings, threshold=float(theta), adjacency=adjacency
    )


def normalize_adjacency(graph: SimilarityGraph) -> NormalizedAdjacency:
    """Ã = D^(-1/2) A D^(-1/2); exactly symmetric because A is 0/1 and
    multiplication by the two degree factors commutes entrywise."""
    inv_sqrt_degree = 1.0 / np.sqrt(graph.degrees)
    matrix = graph.adjacency * inv_sqrt_degree[:, None] * inv_sqrt_degree[None, :]
    return NormalizedAdjacency(matrix=matrix, graph_id=graph.graph_id)


def _check_propagation_inputs(s0: ScoreVector, normalized: NormalizedAdjacency, alpha: float):
    if not 0 <= alpha < 1:
        raise ValueError(f"alpha must be in [0, 1), got {alpha}")
    if len(s0) != normalized.n_nodes:
        raise ValueError(f"{len(s0)} scores for a {normalized.n_nodes}-node graph")
    values = np.asarray(s0.values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("initial scores must be finite")
    return values


def propagate(
    s0: ScoreVector,
    normalized: NormalizedAdjacency,
    alpha: float = DEFAULT_ALPHA,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    tol: float = DEFAULT_TOL,
) -> tuple[ScoreVector, PropagationStats]:
    """Iterate S^(k+1) = α Ã S^(k) + (1-α) S^(0) until the sup-norm step
    falls below tol or the iteration cap is reached."""
    initial = _check_propagation_inputs(s0, normalized, alpha)
    current = initial.copy()
    iterations = 0
    residual = float("inf")
    for iterations in range(1, max_iterations + 1):
        nxt = alpha * (normalized.matrix @ current) + (1 - alpha) * initial
        residual = float(np.max(np.abs(nxt - current))) if len(nxt) else 0.0
        current = nxt
        if residual < tol:
            break
    out = ScoreVector(node_ids=list(s0.node_ids), values=current, kind=s0.kind, phase="propagated")
    return out, PropagationStats(iterations=iterations, residual=residual)


def fixed_point(
    s0: ScoreVector, normalized: NormalizedAdjacency, alpha: float = DEFAULT_ALPHA
) -> ScoreVector:
    """Closed-form limit: solve (I - α Ã) S* = (1 - α) S^(0) directly.

    Valid because the spectral radius of α Ã is at most α < 1; serves as an
    independent oracle for the iterative route.
    """
    initial = _check_propagation_inputs(s0, normalized, alpha)
    n = normalized.n_nodes
    system = np.eye(n) - alpha * normalized.matrix
    solution = np.linalg.solve(system, (1 - alpha) * initial)
    return ScoreVector(node_ids=list(s0.node_ids), values=solution, kind=s0.kind, phase="propagated")


def graph_summary(graph: SimilarityGraph) -> dict:
    """Edge density and degree histogram, logged so θ can be tuned."""
    n = graph.n_nodes
    degrees = graph.degrees.astype(int)
    possible = n * (n - 1) / 2
    histogram: dict[str, int] = {}
    for d in sorted(set(degrees.tolist())):
        histogram[str(d)] = int((degrees == d).sum())
    return {
        "graph_id": graph.graph_id,
        "n_nodes": n,
        "n_edges": graph.n_edges,
        "threshold": graph.threshold,
        "edge_density": (graph.n_edges / possible) if possible else 0.0,
        "degree_histogram": histogram,
    }


def edge_list(graph: SimilarityGraph) -> list[dict]:
    """Off-diagonal undirected edges as JSONL-ready rows (i < j)."""
    rows = []
    idx_i, idx_j = np.nonzero(np.triu(graph.adjacency, k=1))
    for i, j in zip(idx_i.tolist(), idx_j.tolist()):
        rows.append({"source": graph.node_ids[i], "target": graph.node_ids[j]})
    return rows
