"""Model assessment: edge scoring, PR/ROC curves, degree distributions,
total variation distance, eigenvector centrality, distance to center."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import DegenerateError, DimensionError
from .hypergraph import Edge, Hypergraph
from .model import ModelParams

__all__ = [
    "ScoredEdge",
    "DegreeDistribution",
    "score_edges",
    "binary_curves",
    "size_k_degrees",
    "tv_distance",
    "eigenvector_centrality",
    "distance_to_center",
]


@dataclass(frozen=True)
class ScoredEdge:
    edge: Edge
    z: int
    score: float


@dataclass(frozen=True)
class DegreeDistribution:
    k: int
    counts: dict[int, int]
    n_nodes: int


def score_edges(params: ModelParams, labeled_edges) -> list[ScoredEdge]:
    """Score = fitted hyperedge probability; input order preserved."""
    return [ScoredEdge(tuple(edge), int(z), model.edge_probability(params, edge))
            for edge, z in labeled_edges]


def binary_curves(scored: list[ScoredEdge]) -> dict:
    """Threshold sweep over distinct scores, descending; ties share a step.

    Returns ROC points (fpr, tpr), PR points (recall, precision) and the
    trapezoid-rule AUCs. Tied scores collapse into one threshold, which
    makes the ROC AUC equal the Mann-Whitney statistic with the half-count
    tie convention.
    """
    labels = np.array([s.z for s in scored])
    scores = np.array([s.score for s in scored])
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateError("need at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    scores = scores[order]
    labels = labels[order]
    distinct = np.nonzero(np.diff(scores))[0]
    steps = np.append(distinct, len(scores) - 1)
    tp = np.cumsum(labels)[steps]
    fp = (steps + 1) - tp
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    precision = tp / (tp + fp)
    recall = tp / n_pos
    auc_roc = float(np.trapezoid(tpr, fpr))
    # PR curve: anchor at the first step's precision for recall -> 0.
    pr_recall = np.concatenate([[0.0], recall])
    pr_precision = np.concatenate([[precision[0]], precision])
    auc_pr = float(np.trapezoid(pr_precision, pr_recall))
    return {
        "roc": list(zip(fpr.tolist(), tpr.tolist())),
        "pr": list(zip(pr_recall.tolist(), pr_precision.tolist())),
        "auc_roc": auc_roc,
        "auc_pr": auc_pr,
    }


def size_k_degrees(h: Hypergraph, k: int) -> DegreeDistribution:
    """Per-node counts of incident size-k edges, zero-degree nodes included."""
    if k > h.k_max:
        raise DimensionError(f"k = {k} exceeds declared max size {h.k_max}")
    deg = Counter()
    for edge in h.edges_of_size(k):
        for node in edge:
            deg[node] += 1
    counts = Counter(deg.get(i, 0) for i in range(h.n_nodes))
    return DegreeDistribution(k, dict(counts), h.n_nodes)


def tv_distance(p: DegreeDistribution, q: DegreeDistribution) -> float:
    """Half L1 distance between the node-count-normalized degree laws."""
    if p.k != q.k:
        raise DimensionError(f"degree distributions for different sizes {p.k} != {q.k}")
    support = set(p.counts) | set(q.counts)
    return 0.5 * sum(abs(p.counts.get(d, 0) / p.n_nodes
                         - q.counts.get(d, 0) / q.n_nodes)
                     for d in support)


def eigenvector_centrality(h: Hypergraph, tol: float = 1e-10,
                           max_iters: int = 10_000) -> np.ndarray:
    """Normalized leading eigenvector of A^T A for the incidence matrix A.

    Power iteration on x -> A^T (A x), applied implicitly through the edge
    lists; starts from the all-ones vector, so the result is deterministic
    and nonnegative (Perron vector).
    """
    edges = h.all_edges()
    if not edges:
        raise DegenerateError("centrality of an empty hypergraph is undefined")
    n = h.n_nodes
    idx = [np.array(e, dtype=np.intp) for e in edges]
    x = np.ones(n) / np.sqrt(n)
    prev_eig = 0.0
    for _ in range(max_iters):
        y = np.zeros(n)
        for e in idx:
            y[e] += x[e].sum()
        norm = np.linalg.norm(y)
        if norm == 0.0:
            raise DegenerateError("incidence operator annihilated the iterate")
        x = y / norm
        if abs(norm - prev_eig) <= tol * max(norm, 1.0):
            break
        prev_eig = norm
    x = np.abs(x)
    return x / np.linalg.norm(x)


def distance_to_center(params: ModelParams) -> np.ndarray:
    """Hyperbolic: distance to the origin, arcosh of the time coordinate.

    Euclidean: distance to the centroid of the positions.
    """
    if params.geometry == model.HYPERBOLIC:
        return np.arccosh(np.maximum(1.0, params.positions[:, 0]))
    centroid = params.positions.mean(axis=0)
    return np.linalg.norm(params.positions - centroid, axis=1)
