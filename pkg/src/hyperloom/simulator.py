"""Scalable hypergraph simulation.

Per size stratum: estimate the mean hyperedge probability by Monte Carlo
over small node subsets, draw the edge count from the Poisson
approximation, place that many distinct edges by acceptance-rejection,
then refine with shuffle/addition/deletion Metropolis-Hastings steps.
An exact enumerate-and-flip simulator backs the small-N test oracles.

Strata are independent; each uses RNG substreams derived from
(seed, stream = k * 8 + phase).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import model
from .errors import CapacityError, ConfigError, DomainError
from .geometry import from_poincare
from .hypergraph import Edge, Hypergraph, enumerate_hyperedges
from .model import ModelParams
from .rng import substream

_PHASE_DENSITY = 0
_PHASE_COUNT = 1
_PHASE_PLACE = 2
_PHASE_MH = 3
_MAX_PROPOSALS = 10**9

__all__ = [
    "SimConfig",
    "generate_positions",
    "estimate_mean_density",
    "draw_edge_count",
    "rejection_sample_edges",
    "MHState",
    "mh_step",
    "simulate_hypergraph",
    "exact_simulate",
]


@dataclass(frozen=True)
class SimConfig:
    gamma: float = 3.0
    rho: float = 0.5
    density_subset_size: int = 30
    density_reps: int = 1000
    mh_iters: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if (self.gamma <= 0 or not 0 < self.rho <= 1
                or self.density_subset_size < 2 or self.density_reps < 1
                or self.mh_iters < 0):
            raise ConfigError(f"invalid simulation configuration: {self}")


def _stream(cfg: SimConfig, k: int, phase: int):
    return substream(cfg.seed, k * 8 + phase)


def generate_positions(n: int, cfg: SimConfig, r: int = 2) -> np.ndarray:
    """N disk positions with uniform angle and radial CDF
    F(z) = (cosh(gamma z) - 1) / (cosh(gamma rho) - 1) on [0, rho].

    Only the planar polar construction (r = 2) is supported.
    """
    if r != 2:
        raise ConfigError("position generation is defined for r = 2 only")
    if n < 1:
        raise ConfigError(f"need n >= 1, got {n}")
    rng = _stream(cfg, 0, _PHASE_DENSITY)
    angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
    u = rng.uniform(0.0, 1.0, size=n)
    z = np.arccosh((np.cosh(cfg.gamma * cfg.rho) - 1.0) * u + 1.0) / cfg.gamma
    return np.column_stack([z * np.cos(angle), z * np.sin(angle)])


def lift_positions(disk: np.ndarray) -> np.ndarray:
    """Map disk positions onto the hyperboloid row by row."""
    return np.array([from_poincare(p) for p in disk])


def estimate_mean_density(params: ModelParams, k: int, cfg: SimConfig) -> float:
    """Monte-Carlo estimate of the mean probability over all size-k edges.

    Averages the mean pi over all C(S, k) edges among S uniformly drawn
    units, repeated density_reps times. With S = N this is the exact mean.
    """
    n = params.n_nodes
    s = min(cfg.density_subset_size, n)
    if k > s:
        raise DomainError(f"subset size {s} below hyperedge size {k}")
    combos = np.array(list(itertools.combinations(range(s), k)), dtype=np.intp)
    rng = _stream(cfg, k, _PHASE_DENSITY)
    total = 0.0
    reps = 1 if s == n else cfg.density_reps
    for _ in range(reps):
        units = np.arange(n) if s == n else rng.choice(n, size=s, replace=False)
        pi = model.edge_probabilities(params, units[combos], k)
        total += float(np.mean(pi))
    return total / reps


def draw_edge_count(params: ModelParams, k: int, cfg: SimConfig,
                    rho_hat: float | None = None) -> int:
    """Poisson draw with mean rho_hat * C(N, k) (Le Cam approximation)."""
    if rho_hat is None:
        rho_hat = estimate_mean_density(params, k, cfg)
    n = params.n_nodes
    if rho_hat > 0:
        log_lam = np.log(rho_hat) + _log_comb(n, k)
        if log_lam > np.log(1e9):
            raise CapacityError(f"expected edge count exp({log_lam:.1f}) too large")
        lam = float(np.exp(log_lam))
    else:
        lam = 0.0
    rng = _stream(cfg, k, _PHASE_COUNT)
    return int(rng.poisson(lam))


def _log_comb(n: int, k: int) -> float:
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1))


def rejection_sample_edges(params: ModelParams, k: int, u_k: int,
                           cfg: SimConfig, rng=None) -> set[Edge]:
    """u_k distinct size-k edges, each accepted with probability sigma(-g).

    Uniform proposals over all size-k edges; with the tight envelope
    alpha_k * C(N, k) the acceptance probability reduces to pi(1, theta_e).
    """
    n = params.n_nodes
    if u_k > math.comb(n, k):
        raise CapacityError(f"cannot place {u_k} distinct edges of size {k}")
    if rng is None:
        rng = _stream(cfg, k, _PHASE_PLACE)
    out: set[Edge] = set()
    proposals = 0
    while len(out) < u_k:
        proposals += 1
        if proposals > _MAX_PROPOSALS:
            raise CapacityError(f"acceptance-rejection stalled in stratum k={k}")
        edge = tuple(sorted(rng.choice(n, size=k, replace=False).tolist()))
        if edge in out:
            continue
        g = model.concentration_g(params.positions[list(edge)], params.p,
                                  params.geometry)
        if rng.random() < model.sigma(-g):
            out.add(edge)
    return out


class MHState:
    """Mutable per-stratum chain state: the current set of realized edges."""

    def __init__(self, params: ModelParams, k: int, edges=()):
        self.params = params
        self.k = k
        self.n_possible = math.comb(params.n_nodes, k)
        self.edges: set[Edge] = set(edges)
        self.realized: list[Edge] = sorted(self.edges)
        self._pi_cache: dict[Edge, float] = {}

    def pi(self, edge: Edge) -> float:
        val = self._pi_cache.get(edge)
        if val is None:
            val = model.edge_probability(self.params, edge)
            self._pi_cache[edge] = val
        return val

    def add(self, edge: Edge) -> None:
        self.edges.add(edge)
        self.realized.append(edge)

    def remove_at(self, idx: int) -> Edge:
        edge = self.realized[idx]
        self.realized[idx] = self.realized[-1]
        self.realized.pop()
        self.edges.remove(edge)
        return edge


def _draw_unrealized(state: MHState, rng) -> Edge:
    """Uniform edge among the unrealized ones (rejection against realized)."""
    n = state.params.n_nodes
    while True:
        edge = tuple(sorted(rng.choice(n, size=state.k, replace=False).tolist()))
        if edge not in state.edges:
            return edge


def mh_step(state: MHState, rng) -> bool:
    """One shuffle/addition/deletion proposal; returns True if accepted.

    The proposal type is uniform over the three moves; infeasible moves
    (empty or full stratum) count as rejected steps.
    """
    m = len(state.realized)
    full = state.n_possible
    move = int(rng.integers(3))
    if move == 0:  # shuffle
        if m == 0 or m == full:
            return False
        a = _draw_unrealized(state, rng)
        d_idx = int(rng.integers(m))
        d = state.realized[d_idx]
        pa, pd = state.pi(a), state.pi(d)
        # pd can underflow to exactly 0 for far-apart nodes; the ratio is
        # then +inf and the swap is always accepted.
        if pd == 0.0:
            accept = np.inf
        else:
            accept = (pa * (1.0 - pd)) / (pd * (1.0 - pa))
        if rng.random() < min(1.0, accept):
            state.remove_at(d_idx)
            state.add(a)
            return True
        return False
    if move == 1:  # addition
        if m == full:
            return False
        a = _draw_unrealized(state, rng)
        pa = state.pi(a)
        accept = pa * (full - m) / ((1.0 - pa) * (m + 1))
        if rng.random() < min(1.0, accept):
            state.add(a)
            return True
        return False
    # deletion
    if m == 0:
        return False
    d_idx = int(rng.integers(m))
    pd = state.pi(state.realized[d_idx])
    if pd == 0.0:
        accept = np.inf
    else:
        accept = (1.0 - pd) * m / (pd * (full - m + 1))
    if rng.random() < min(1.0, accept):
        state.remove_at(d_idx)
        return True
    return False


def simulate_hypergraph(params: ModelParams, cfg: SimConfig) -> Hypergraph:
    """Full pipeline: density -> Poisson count -> rejection placement -> MH."""
    k_max = max(params.alphas) if params.alphas else 2
    edges: list[Edge] = []
    for k in sorted(params.alphas):
        if params.alphas.get(k, 0.0) <= 0.0:
            continue
        rho_hat = estimate_mean_density(params, k, cfg)
        u_k = draw_edge_count(params, k, cfg, rho_hat=rho_hat)
        u_k = min(u_k, math.comb(params.n_nodes, k))
        placed = rejection_sample_edges(params, k, u_k, cfg)
        state = MHState(params, k, placed)
        rng = _stream(cfg, k, _PHASE_MH)
        for _ in range(cfg.mh_iters):
            mh_step(state, rng)
        edges.extend(state.realized)
    return Hypergraph.from_edges(params.n_nodes, max(k_max, 3), edges)


def exact_simulate(params: ModelParams, seed: int) -> Hypergraph:
    """Definitional oracle: enumerate every hyperedge, flip Bernoulli(pi)."""
    edges: list[Edge] = []
    k_max = max(params.alphas) if params.alphas else 2
    for k in sorted(params.alphas):
        all_edges = np.array(enumerate_hyperedges(params.n_nodes, k),
                             dtype=np.intp)
        pi = model.edge_probabilities(params, all_edges, k)
        rng = substream(seed, k)
        keep = rng.random(len(all_edges)) < pi
        edges.extend(tuple(e) for e in all_edges[keep].tolist())
    return Hypergraph.from_edges(params.n_nodes, max(k_max, 3), edges)
