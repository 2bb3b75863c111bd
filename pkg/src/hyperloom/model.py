"""Hyperedge probability model, Horvitz-Thompson loss, and gradients.

The probability of a hyperedge e is pi = alpha_{|e|} * sigma(-g), where g
is the Holder mean (negative exponent p) of the per-unit summed distances
inside e, in either hyperbolic (Lorentz) or Euclidean geometry.

Everything here is a pure function over immutable inputs. Summation runs
in stratum order, then record order, so single-threaded results are
bit-reproducible.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParseError
from .hypergraph import LabeledSample, SampleRecord

HYPERBOLIC = "hyperbolic"
EUCLIDEAN = "euclidean"

# pi is clamped below 1 inside log(1 - pi): alpha = 1 with coincident
# points would otherwise produce an infinite loss term.
PI_MAX = 1.0 - 1e-15
_DIST_EPS = 1e-12

__all__ = [
    "ModelParams",
    "LossBreakdown",
    "sigma",
    "sigma_of_neg_g",
    "concentration_g",
    "edge_probability",
    "edge_g_batch",
    "edge_probabilities",
    "sample_loss",
    "grad_position",
    "grad_position_batch",
    "alpha_score",
    "diagnostics",
    "reset_diagnostics",
    "write_params",
    "read_params",
]

# Diagnostic counters: transient coincident-point collisions during
# optimization are tolerated (g := 0 by continuity) but recorded.
_diagnostics = {"coincident_edges": 0, "clamped_pi": 0}


def diagnostics() -> dict:
    return dict(_diagnostics)


def reset_diagnostics() -> None:
    for key in _diagnostics:
        _diagnostics[key] = 0


@dataclass
class ModelParams:
    """Positions Theta, per-size sparsity alphas, Holder exponent p, geometry.

    Hyperbolic rows live on the hyperboloid (N x (r+1)); Euclidean rows are
    unconstrained (N x r).
    """

    positions: np.ndarray
    alphas: dict[int, float]
    p: float = -20.0
    geometry: str = HYPERBOLIC

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.geometry not in (HYPERBOLIC, EUCLIDEAN):
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.p >= 0:
            raise ConfigError(f"Holder exponent must be negative, got {self.p}")
        for k, a in self.alphas.items():
            # alpha = 0 is tolerated as a disabled stratum (simulation only).
            if not 0.0 <= a <= 1.0:
                raise ConfigError(f"alpha_{k} = {a} outside [0, 1]")

    @property
    def n_nodes(self) -> int:
        return self.positions.shape[0]

    def alpha(self, k: int) -> float:
        try:
            return self.alphas[k]
        except KeyError:
            raise ConfigError(f"no sparsity parameter for hyperedge size {k}") from None


@dataclass
class LossBreakdown:
    """Total sample loss and its per-stratum (loss0, loss1) decomposition."""

    total: float
    by_stratum: dict[int, tuple[float, float]] = field(default_factory=dict)


def sigma(x: float) -> float:
    """Doubled logistic 2 e^x / (1 + e^x); stable for |x| up to ~700."""
    if x >= 0:
        return 2.0 / (1.0 + np.exp(-x))
    ex = np.exp(x)
    return 2.0 * ex / (1.0 + ex)


def sigma_of_neg_g(g: np.ndarray) -> np.ndarray:
    """Vectorized sigma(-g) for g >= 0."""
    eg = np.exp(-np.asarray(g, dtype=float))
    return 2.0 * eg / (1.0 + eg)


def _pairwise_distances(points: np.ndarray, geometry: str) -> np.ndarray:
    """(..., k, k) distance matrix for gathered position blocks (..., k, dim)."""
    k = points.shape[-2]
    if geometry == HYPERBOLIC:
        pj = points.copy()
        pj[..., 0] = -pj[..., 0]
        inner = np.einsum("...ad,...bd->...ab", pj, points)
        d = np.arccosh(np.maximum(1.0, -inner))
    else:
        diff = points[..., :, None, :] - points[..., None, :, :]
        d = np.sqrt(np.einsum("...d,...d->...", diff, diff))
    # The d_i sums run over j != i; zero the diagonal explicitly so slightly
    # off-manifold inputs (ambient perturbations) cannot leak through
    # arccosh(-<x, x>_L), which has infinite slope at 1.
    d[..., np.arange(k), np.arange(k)] = 0.0
    return d


def concentration_g(points, p: float, geometry: str = HYPERBOLIC) -> float:
    """Holder mean g = ((1/k) sum_i d_i^p)^(1/p) of the summed distances d_i.

    Computed relative to min_i d_i so exponents as low as p = -200 neither
    overflow nor underflow. Coincident points give g = 0 by continuity.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape[0] < 2:
        raise ConfigError("a hyperedge needs at least 2 points")
    if p >= 0:
        raise ConfigError(f"Holder exponent must be negative, got {p}")
    d = _pairwise_distances(pts[None], geometry)[0]
    dsum = d.sum(axis=1)
    m = float(dsum.min())
    if m <= 0.0:
        _diagnostics["coincident_edges"] += 1
        return 0.0
    w = (dsum / m) ** p
    return float(m * np.mean(w) ** (1.0 / p))


def edge_g_batch(positions: np.ndarray, edges: np.ndarray, p: float,
                 geometry: str) -> np.ndarray:
    """g for a batch of same-size edges; edges is an (M, k) index array."""
    edges = np.asarray(edges)
    if edges.size == 0:
        return np.zeros(0)
    pts = positions[edges]
    d = _pairwise_distances(pts, geometry)
    dsum = d.sum(axis=2)
    m = dsum.min(axis=1)
    ok = m > 0.0
    g = np.zeros(len(edges))
    if not np.all(ok):
        _diagnostics["coincident_edges"] += int(np.sum(~ok))
    if np.any(ok):
        w = dsum[ok] / m[ok, None]
        g[ok] = m[ok] * np.mean(w ** p, axis=1) ** (1.0 / p)
    return g


def edge_probability(params: ModelParams, edge) -> float:
    """pi = alpha_{|e|} * sigma(-g) for a single hyperedge."""
    edge = tuple(edge)
    alpha = params.alpha(len(edge))
    g = concentration_g(params.positions[list(edge)], params.p, params.geometry)
    return alpha * sigma(-g)


def edge_probabilities(params: ModelParams, edges: np.ndarray, k: int) -> np.ndarray:
    """Vectorized pi over a batch of size-k edges."""
    g = edge_g_batch(params.positions, edges, params.p, params.geometry)
    return params.alpha(k) * sigma_of_neg_g(g)


def _stratum_arrays(records: tuple[SampleRecord, ...]):
    edges = np.array([r.edge for r in records], dtype=np.intp)
    z = np.array([r.z for r in records], dtype=float)
    mu = np.array([r.mu for r in records], dtype=float)
    return edges, z, mu


def sample_loss(params: ModelParams, sample: LabeledSample) -> LossBreakdown:
    """Horvitz-Thompson loss: -sum (1/mu)[z log pi + (1-z) log(1 - pi)].

    With mu = 1 on the full enumeration this is the population negative
    log-likelihood.
    """
    total = 0.0
    by_stratum: dict[int, tuple[float, float]] = {}
    for k in sorted(sample.strata):
        records = sample.strata[k]
        if not records:
            continue
        edges, z, mu = _stratum_arrays(records)
        pi = edge_probabilities(params, edges, k)
        clipped = np.minimum(pi, PI_MAX)
        n_clamped = int(np.sum((pi > PI_MAX) & (z == 0)))
        if n_clamped:
            _diagnostics["clamped_pi"] += n_clamped
        loss1 = -float(np.sum(z / mu * np.log(pi)))
        loss0 = -float(np.sum((1.0 - z) / mu * np.log1p(-clipped)))
        by_stratum[k] = (loss0, loss1)
        total += loss0 + loss1
    return LossBreakdown(total, by_stratum)


def _edge_weights(pi: np.ndarray, z: np.ndarray, mu: np.ndarray,
                  alpha: float) -> np.ndarray:
    """Per-edge chain-rule factor dl/dg = (1/mu)(z - pi)/(1 - pi)(1 - pi/(2 alpha))."""
    pi = np.minimum(pi, PI_MAX)
    return (z - pi) / (mu * (1.0 - pi)) * (1.0 - pi / (2.0 * alpha))


def grad_position_batch(positions: np.ndarray, edges: np.ndarray,
                        cols: np.ndarray, z: np.ndarray, mu: np.ndarray,
                        alpha: float, p: float, geometry: str) -> np.ndarray:
    """Ambient gradient of the HT loss w.r.t. one node over a record batch.

    `edges` is (M, k); `cols[m]` is the column where the node sits in edge m.
    Returns the raw Euclidean gradient (no J-flip, no tangent projection).
    Records with coincident points contribute zero (g is flat there only in
    the limit; the singular direction is dropped).
    """
    if len(edges) == 0:
        return np.zeros(positions.shape[1])
    pts = positions[edges]                       # (M, k, dim)
    d = _pairwise_distances(pts, geometry)       # (M, k, k)
    k = edges.shape[1]
    m_idx = np.arange(len(edges))
    dsum = d.sum(axis=2)                         # (M, k)
    mmin = dsum.min(axis=1)
    ok = mmin > 0.0
    ratio = np.where(ok[:, None], dsum / np.where(ok, mmin, 1.0)[:, None], 1.0)
    w = ratio ** p
    s_mean = np.mean(w, axis=1)                  # (M,)
    g = np.where(ok, mmin * s_mean ** (1.0 / p), 0.0)
    pi = alpha * sigma_of_neg_g(g)
    wedge = _edge_weights(pi, z, mu, alpha)      # (M,)

    # coef[m, j] = A1 * (d_j^{p-1} + d_col^{p-1}); the min factor cancels.
    scale = s_mean ** ((1.0 - p) / p)
    rat_pm1 = ratio ** (p - 1.0)
    coef = scale[:, None] * (rat_pm1 + rat_pm1[m_idx, cols][:, None])  # (M, k)

    pair_d = d[m_idx, :, cols]                   # (M, k) distances to the node
    theta_h = pts[m_idx, cols]                   # (M, dim)
    if geometry == HYPERBOLIC:
        inner = -np.cosh(pair_d)                 # <theta_j, theta_h>_L
        delta = 1.0 / np.sqrt(np.maximum(inner ** 2 - 1.0, _DIST_EPS ** 2))
        dirs = -pts.copy()                       # -J theta_j, J applied below
        dirs[..., 0] = -dirs[..., 0]
        dirs *= delta[:, :, None]
    else:
        diff = theta_h[:, None, :] - pts         # theta_h - theta_j
        dirs = diff / np.maximum(pair_d, _DIST_EPS)[:, :, None]

    mask = np.ones((len(edges), k))
    mask[m_idx, cols] = 0.0                      # skip j = h
    mask[pair_d < _DIST_EPS] = 0.0               # singular coincident pairs
    mask[~ok] = 0.0
    contrib = np.einsum("mj,mjd->md", coef * mask, dirs) / k  # grad g per edge
    return np.einsum("m,md->d", wedge, contrib)


def grad_position(params: ModelParams, sample: LabeledSample, h: int) -> np.ndarray:
    """Ambient gradient of the sample loss w.r.t. position h.

    Only records containing h contribute; strata are processed in size
    order and records in stored order.
    """
    if not 0 <= h < params.n_nodes:
        raise ConfigError(f"node index {h} out of range")
    grad = np.zeros(params.positions.shape[1])
    for k in sorted(sample.strata):
        records = [r for r in sample.strata[k] if h in r.edge]
        if not records:
            continue
        edges, z, mu = _stratum_arrays(records)
        cols = np.array([r.edge.index(h) for r in records], dtype=np.intp)
        grad += grad_position_batch(params.positions, edges, cols, z, mu,
                                    params.alpha(k), params.p, params.geometry)
    return grad


def alpha_score(alpha: float, params: ModelParams,
                records: tuple[SampleRecord, ...]) -> float:
    """Score sum (1/mu)[z/alpha - s(1-z)/(1 - alpha s)] with s = sigma(-g).

    Strictly decreasing in alpha; its root in (0, 1] is the loss-minimizing
    sparsity parameter for the stratum.
    """
    if not records:
        raise ConfigError("alpha_score needs a nonempty stratum")
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"alpha = {alpha} outside (0, 1]")
    edges, z, mu = _stratum_arrays(records)
    g = edge_g_batch(params.positions, edges, params.p, params.geometry)
    s = sigma_of_neg_g(g)
    return alpha_score_from_sigmas(alpha, s, z, mu)


def alpha_score_from_sigmas(alpha: float, s: np.ndarray, z: np.ndarray,
                            mu: np.ndarray) -> float:
    """Score with sigma(-g) values precomputed (used by the bisection update)."""
    denom = np.maximum(1.0 - alpha * s, 1e-300)
    return float(np.sum((z / alpha - s * (1.0 - z) / denom) / mu))


def write_params(params: ModelParams, sink: io.TextIOBase) -> None:
    """Parameters TSV: alpha lines, p, dim, geometry (positions live elsewhere)."""
    for k in sorted(params.alphas):
        sink.write(f"alpha\t{k}\t{format(params.alphas[k], '.17g')}\n")
    sink.write(f"p\t{format(params.p, '.17g')}\n")
    if params.geometry == HYPERBOLIC:
        sink.write(f"dim\t{params.positions.shape[1] - 1}\n")
    else:
        sink.write(f"dim\t{params.positions.shape[1]}\n")
    sink.write(f"geometry\t{params.geometry}\n")


def read_params(source: io.TextIOBase, positions: np.ndarray) -> ModelParams:
    """Parse the parameters TSV written by write_params."""
    alphas: dict[int, float] = {}
    p = None
    geometry = None
    for lineno, line in enumerate(source, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split("\t")
        try:
            if parts[0] == "alpha" and len(parts) == 3:
                alphas[int(parts[1])] = float(parts[2])
            elif parts[0] == "p" and len(parts) == 2:
                p = float(parts[1])
            elif parts[0] == "dim" and len(parts) == 2:
                int(parts[1])
            elif parts[0] == "geometry" and len(parts) == 2:
                geometry = parts[1]
            else:
                raise ParseError(f"unrecognized parameter line {s!r}", line=lineno)
        except ValueError as exc:
            raise ParseError(f"malformed parameter line {s!r}", line=lineno) from exc
    if p is None or geometry is None or not alphas:
        raise ParseError("parameters file must define alpha, p and geometry")
    return ModelParams(positions, alphas, p, geometry)


def population_sample(n_nodes: int, k_max: int, h_strata) -> LabeledSample:
    """Full-enumeration sample with mu = 1 (test-oracle support).

    `h_strata` maps size k to the set of realized edges.
    """
    from .hypergraph import enumerate_hyperedges

    strata = {}
    for k in range(2, k_max + 1):
        realized = h_strata.get(k, frozenset())
        recs = [SampleRecord(e, int(e in realized), 1.0)
                for e in enumerate_hyperedges(n_nodes, k)]
        strata[k] = tuple(recs)
    return LabeledSample(n_nodes, k_max, strata)
