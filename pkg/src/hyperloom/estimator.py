"""Blockwise minimization of the Horvitz-Thompson sample loss.

Each outer iteration updates the sparsity parameters (exact bisection on
the monotone scalar score, one root per stratum) and then every position
in ascending node order by Riemannian (or plain Euclidean) gradient
descent with a Brent line search. Convergence fires when the relative
loss change drops below rel_tol.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import geometry, model
from .errors import ConfigError, LineSearchError
from .hypergraph import LabeledSample
from .model import ModelParams
from .rng import substream

ALPHA_MIN = 1e-12
_ETA_EXPANSIONS = 10  # line-search bracket may grow to 2^10 * eta_max
_STEP_MAX = 30.0  # longest geodesic step a single position update may take
# Iterates stay inside a radius-10 ball: past distance ~20 the loss tails are
# fully saturated, while the conditioning of the tangent projection degrades
# like cosh(radius)^2 and is down to ~8 significant digits at radius 10.
_RADIUS_MAX = 10.0

__all__ = [
    "FitConfig",
    "FitReport",
    "brent_minimize",
    "update_alpha",
    "update_position",
    "fit",
    "multi_start_fit",
]


@dataclass(frozen=True)
class FitConfig:
    max_iters: int = 100
    rel_tol: float = 1e-5
    eta_max: float = 1.0
    starts: int = 1
    init_square_halfwidth: float = 0.1
    seed: int = 0
    line_search_tol: float = 1e-6
    line_search_evals: int = 50

    def __post_init__(self):
        if (self.max_iters < 1 or self.rel_tol <= 0 or self.rel_tol >= 1
                or self.eta_max <= 0 or self.starts < 1
                or self.init_square_halfwidth <= 0):
            raise ConfigError(f"invalid fit configuration: {self}")


@dataclass
class FitReport:
    loss_trace: list[float] = field(default_factory=list)
    alpha_trace: list[dict[int, float]] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    wall_seconds: float = 0.0


def brent_minimize(phi, lo: float, hi: float, tol: float = 1e-8,
                   max_evals: int = 200) -> tuple[float, float]:
    """Bounded scalar minimization (Brent); never evaluates outside [lo, hi].

    Raises LineSearchError on a non-finite objective value so callers can
    fall back to a zero step.
    """
    if not lo < hi:
        raise ConfigError(f"need lo < hi, got [{lo}, {hi}]")

    def guarded(x):
        v = phi(x)
        if not np.isfinite(v):
            raise LineSearchError(f"non-finite objective value at {x}")
        return v

    xopt, fval, ierr, _ = optimize.fminbound(
        guarded, lo, hi, xtol=tol, maxfun=max_evals, full_output=True, disp=0)
    return float(xopt), float(fval)


class _Workspace:
    """Per-stratum arrays and per-node incidence built once per fit."""

    def __init__(self, sample: LabeledSample):
        self.sizes = sample.sizes()
        self.edges: dict[int, np.ndarray] = {}
        self.z: dict[int, np.ndarray] = {}
        self.mu: dict[int, np.ndarray] = {}
        incidence: dict[int, dict[int, tuple[list[int], list[int]]]] = {}
        for k in self.sizes:
            records = sample.strata[k]
            self.edges[k] = np.array([r.edge for r in records], dtype=np.intp)
            self.z[k] = np.array([r.z for r in records], dtype=float)
            self.mu[k] = np.array([r.mu for r in records], dtype=float)
            for m, rec in enumerate(records):
                for c, node in enumerate(rec.edge):
                    rows, cols = incidence.setdefault(node, {}).setdefault(k, ([], []))
                    rows.append(m)
                    cols.append(c)
        self.incidence = {
            node: {k: (np.array(rows, dtype=np.intp), np.array(cols, dtype=np.intp))
                   for k, (rows, cols) in per_k.items()}
            for node, per_k in incidence.items()
        }

    def node_strata(self, i: int):
        return self.incidence.get(i, {})


def _partial_loss(positions, ws: _Workspace, i: int, alphas, p, geom) -> float:
    """Loss restricted to records containing node i (line-search objective)."""
    total = 0.0
    for k, (rows, _) in ws.node_strata(i).items():
        g = model.edge_g_batch(positions, ws.edges[k][rows], p, geom)
        pi = alphas[k] * model.sigma_of_neg_g(g)
        z = ws.z[k][rows]
        mu = ws.mu[k][rows]
        clipped = np.minimum(pi, model.PI_MAX)
        total -= float(np.sum(z / mu * np.log(pi)))
        total -= float(np.sum((1.0 - z) / mu * np.log1p(-clipped)))
    return total


def _node_gradient(positions, ws: _Workspace, i: int, alphas, p, geom) -> np.ndarray:
    grad = np.zeros(positions.shape[1])
    for k, (rows, cols) in ws.node_strata(i).items():
        grad += model.grad_position_batch(
            positions, ws.edges[k][rows], cols, ws.z[k][rows], ws.mu[k][rows],
            alphas[k], p, geom)
    return grad


def _bisect_alpha(s: np.ndarray, z: np.ndarray, mu: np.ndarray) -> float:
    """Root of the monotone-decreasing score in [ALPHA_MIN, 1], or the bound."""
    score = lambda a: model.alpha_score_from_sigmas(a, s, z, mu)
    if score(1.0) >= 0.0:
        return 1.0
    if score(ALPHA_MIN) <= 0.0:
        return ALPHA_MIN
    lo, hi = ALPHA_MIN, 1.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        v = score(mid)
        if abs(v) < 1e-10:
            return mid
        if v > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def update_alpha(params: ModelParams, sample: LabeledSample, k: int) -> float:
    """Loss-minimizing alpha_k for the current positions; bounds clamp."""
    records = sample.records_of_size(k)
    if not records:
        return params.alpha(k)
    edges = np.array([r.edge for r in records], dtype=np.intp)
    z = np.array([r.z for r in records], dtype=float)
    mu = np.array([r.mu for r in records], dtype=float)
    g = model.edge_g_batch(params.positions, edges, params.p, params.geometry)
    return _bisect_alpha(model.sigma_of_neg_g(g), z, mu)


def _clamp_radius(x: np.ndarray) -> np.ndarray:
    """Pull a hyperboloid point radially back onto the radius-10 ball."""
    if x[0] <= np.cosh(_RADIUS_MAX):
        return x
    spatial = x[1:]
    out = np.empty_like(x)
    out[0] = np.cosh(_RADIUS_MAX)
    out[1:] = spatial * (np.sinh(_RADIUS_MAX) / np.linalg.norm(spatial))
    return out


def _update_position_ws(positions, ws: _Workspace, i: int, alphas, p, geom,
                        cfg: FitConfig) -> np.ndarray:
    """New position for node i; guaranteed not to increase the partial loss."""
    theta = positions[i]
    grad = _node_gradient(positions, ws, i, alphas, p, geom)
    if geom == model.HYPERBOLIC:
        direction = geometry.project_tangent(theta, geometry.signature_matrix(
            positions.shape[1] - 1) @ grad)
        step_norm = geometry.lorentz_norm(direction)
    else:
        direction = grad
        step_norm = float(np.linalg.norm(direction))
    if step_norm < 1e-14:
        return theta.copy()

    scratch = positions.copy()

    def moved(eta):
        if geom == model.HYPERBOLIC:
            # Re-project the scaled step: when the ambient gradient is nearly
            # normal to the tangent space, the first projection cancels almost
            # completely and its float residual would fail exp_map's tangency
            # check even though the direction is correct.
            return _clamp_radius(geometry.exp_map(
                theta, geometry.project_tangent(theta, -eta * direction)))
        return theta - eta * direction

    def phi(eta):
        scratch[i] = moved(eta)
        return _partial_loss(scratch, ws, i, alphas, p, geom)

    base = phi(0.0)
    hi = cfg.eta_max
    cap = cfg.eta_max * 2 ** _ETA_EXPANSIONS
    if geom == model.HYPERBOLIC:
        # Cap the geodesic step length: cosh overflows near 700, and moves
        # beyond a few tens of units only chase saturated tails of the loss.
        eta_cap = _STEP_MAX / step_norm
        hi = min(hi, eta_cap)
        cap = min(cap, eta_cap)
    try:
        for _ in range(_ETA_EXPANSIONS + 1):
            eta, val = brent_minimize(phi, 0.0, hi, tol=cfg.line_search_tol,
                                      max_evals=cfg.line_search_evals)
            if hi - eta > 2.0 * cfg.line_search_tol or hi >= cap:
                break
            hi = min(2.0 * hi, cap)
    except LineSearchError:
        return theta.copy()
    if val > base:
        return theta.copy()
    return moved(eta)


def update_position(params: ModelParams, sample: LabeledSample, i: int,
                    cfg: FitConfig | None = None) -> np.ndarray:
    """Single-node line-searched descent step (public, builds its own index)."""
    cfg = cfg or FitConfig()
    ws = _Workspace(sample)
    return _update_position_ws(params.positions, ws, i, params.alphas,
                               params.p, params.geometry, cfg)


def _init_positions(n: int, r: int, geom: str, halfwidth: float,
                    rng) -> np.ndarray:
    """Uniform draw from the square [-h, h]^r around the disk origin."""
    flat = rng.uniform(-halfwidth, halfwidth, size=(n, r))
    if geom == model.EUCLIDEAN:
        return flat
    return np.array([geometry.from_poincare(q) for q in flat])


def fit(sample: LabeledSample, cfg: FitConfig, geom: str = model.HYPERBOLIC,
        r: int = 2, p: float = -20.0,
        run_stream: int = 0) -> tuple[ModelParams, FitReport]:
    """Blockwise descent: alpha block first, then positions in index order."""
    if sample.n_records() == 0:
        raise ConfigError("cannot fit an empty sample")
    t0 = time.perf_counter()
    rng = substream(cfg.seed, run_stream)
    ws = _Workspace(sample)
    positions = _init_positions(sample.n_nodes, r, geom,
                                cfg.init_square_halfwidth, rng)
    alphas = {k: 0.5 for k in range(2, sample.k_max + 1)}
    report = FitReport()
    prev = np.inf
    for _ in range(cfg.max_iters):
        for k in ws.sizes:
            alphas[k] = _bisect_alpha(
                model.sigma_of_neg_g(model.edge_g_batch(positions, ws.edges[k],
                                                        p, geom)),
                ws.z[k], ws.mu[k])
        for i in range(sample.n_nodes):
            positions[i] = _update_position_ws(positions, ws, i, alphas, p,
                                               geom, cfg)
        params = ModelParams(positions, dict(alphas), p, geom)
        loss = model.sample_loss(params, sample).total
        report.loss_trace.append(loss)
        report.alpha_trace.append(dict(alphas))
        report.iterations += 1
        if np.isfinite(prev) and abs(prev - loss) / max(abs(loss), 1e-30) < cfg.rel_tol:
            report.converged = True
            break
        prev = loss
    report.wall_seconds = time.perf_counter() - t0
    return ModelParams(positions, dict(alphas), p, geom), report


def multi_start_fit(sample: LabeledSample, cfg: FitConfig,
                    geom: str = model.HYPERBOLIC, r: int = 2,
                    p: float = -20.0) -> tuple[ModelParams, FitReport]:
    """Best of cfg.starts independent fits by final loss (substream = run index)."""
    best = None
    for run in range(cfg.starts):
        params, report = fit(sample, cfg, geom, r, p, run_stream=run)
        if best is None or report.loss_trace[-1] < best[1].loss_trace[-1]:
            best = (params, report)
    return best
