"""Lorentz model and Poincare disk arithmetic.

Points on the upper hyperboloid sheet are plain float arrays of length
r + 1 whose index-0 entry is the "time" coordinate; disk points are float
arrays of length r with Euclidean norm < 1. All operations are pure
functions and safe for concurrent use.
"""

from __future__ import annotations

import io
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError, ParseError

MANIFOLD_TOL = 1e-9
TANGENT_TOL = 1e-8
_ZERO_NORM = 1e-14

__all__ = [
    "signature_matrix",
    "lorentz_inner",
    "lorentz_norm",
    "is_on_manifold",
    "check_on_manifold",
    "lorentz_distance",
    "poincare_distance",
    "to_poincare",
    "from_poincare",
    "project_tangent",
    "exp_map",
    "renormalize",
    "is_hyperbolic_rotation",
    "random_hyperbolic_rotation",
    "read_positions",
    "write_positions",
]


def signature_matrix(r: int) -> np.ndarray:
    """The fixed diagonal matrix J = diag(-1, 1, ..., 1) of size (r+1, r+1)."""
    j = np.eye(r + 1)
    j[0, 0] = -1.0
    return j


def lorentz_inner(x, y) -> float:
    """Minkowski inner product -x0*y0 + sum_{i>=1} xi*yi."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1] or x.shape[-1] < 2:
        raise DimensionError(f"incompatible lengths {x.shape[-1]} and {y.shape[-1]}")
    return float(-x[0] * y[0] + np.dot(x[1:], y[1:]))


def lorentz_inner_rows(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Row-wise Minkowski inner products of two equally shaped matrices."""
    return -xs[..., 0] * ys[..., 0] + np.einsum("...i,...i->...", xs[..., 1:], ys[..., 1:])


def lorentz_norm(v) -> float:
    """sqrt(<v, v>_L) for a tangent vector; tiny negative round-off is clamped."""
    sq = lorentz_inner(v, v)
    if sq < -TANGENT_TOL:
        raise DomainError(f"vector has negative Lorentz norm squared {sq}")
    return float(np.sqrt(max(sq, 0.0)))


def is_on_manifold(x, tol: float = MANIFOLD_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    return x[0] > 0 and abs(lorentz_inner(x, x) + 1.0) <= tol


def check_on_manifold(x, tol: float = MANIFOLD_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not is_on_manifold(x, tol):
        raise DomainError(f"point is not on the upper hyperboloid sheet: {x}")
    return x


def lorentz_distance(x, y) -> float:
    """Geodesic distance arcosh(-<x, y>_L) between on-manifold points.

    The arcosh argument is clamped to >= 1: round-off can push it slightly
    below 1 for near-identical points, which would otherwise produce NaN.
    """
    x = check_on_manifold(x)
    y = check_on_manifold(y)
    return float(np.arccosh(max(1.0, -lorentz_inner(x, y))))


def lorentz_distance_rows(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Row-wise distances without per-point validation (hot path)."""
    return np.arccosh(np.maximum(1.0, -lorentz_inner_rows(xs, ys)))


def poincare_distance(p, q) -> float:
    """Disk-model distance arcosh(1 + 2|p-q|^2 / ((1-|p|^2)(1-|q|^2)))."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"incompatible shapes {p.shape} and {q.shape}")
    pp = np.dot(p, p)
    qq = np.dot(q, q)
    if pp >= 1.0 or qq >= 1.0:
        raise DomainError("points must lie strictly inside the unit ball")
    diff = p - q
    arg = 1.0 + 2.0 * np.dot(diff, diff) / ((1.0 - pp) * (1.0 - qq))
    return float(np.arccosh(max(1.0, arg)))


def to_poincare(x) -> np.ndarray:
    """Bijective projection (x1, ..., xr) / (1 + x0) onto the unit ball."""
    x = check_on_manifold(x)
    return x[1:] / (1.0 + x[0])


def from_poincare(p) -> np.ndarray:
    """Inverse projection onto the hyperboloid.

    x0 = (1 + |p|^2) / (1 - |p|^2), spatial part 2p / (1 - |p|^2); this is
    the exact inverse of to_poincare and satisfies <x, x>_L = -1.
    """
    p = np.asarray(p, dtype=float)
    pp = np.dot(p, p)
    if pp >= 1.0:
        raise DomainError("point must lie strictly inside the unit ball")
    denom = 1.0 - pp
    out = np.empty(p.size + 1)
    out[0] = (1.0 + pp) / denom
    out[1:] = 2.0 * p / denom
    return out


def project_tangent(theta, x) -> np.ndarray:
    """Orthogonal projection x + <theta, x>_L theta onto the tangent space."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    if theta.shape != x.shape:
        raise DimensionError(f"incompatible shapes {theta.shape} and {x.shape}")
    return x + lorentz_inner(theta, x) * theta


def renormalize(x) -> np.ndarray:
    """Recompute the time coordinate as sqrt(1 + |spatial|^2) (drift control)."""
    x = np.asarray(x, dtype=float).copy()
    x[0] = np.sqrt(1.0 + np.dot(x[1:], x[1:]))
    return x


def exp_map(theta, v) -> np.ndarray:
    """Exponential map cosh(|v|_L) theta + sinh(|v|_L) v / |v|_L.

    |v|_L is the square-rooted Lorentz norm; the result is re-normalized
    onto the hyperboloid so long optimization runs do not drift off it.
    """
    theta = np.asarray(theta, dtype=float)
    v = np.asarray(v, dtype=float)
    # The tangency residual of a projected vector scales with |theta|^2 |v|,
    # so the check must too or far-out points reject their own tangents.
    scale = max(1.0, float(np.abs(theta).max(initial=0.0)) ** 2
                * float(np.abs(v).max(initial=0.0)))
    if abs(lorentz_inner(theta, v)) > TANGENT_TOL * scale:
        raise DomainError("v is not tangent to the manifold at theta")
    n = lorentz_norm(v)
    if n < _ZERO_NORM:
        return theta.copy()
    return renormalize(np.cosh(n) * theta + np.sinh(n) * (v / n))


def is_hyperbolic_rotation(r_mat, tol: float) -> bool:
    """True iff R J R^T = J within tol (Frobenius) and R00 > 0 (sheet preserving)."""
    r_mat = np.asarray(r_mat, dtype=float)
    if r_mat.ndim != 2 or r_mat.shape[0] != r_mat.shape[1]:
        return False
    j = signature_matrix(r_mat.shape[0] - 1)
    if np.linalg.norm(r_mat @ j @ r_mat.T - j) > tol:
        return False
    return r_mat[0, 0] > 0


def random_hyperbolic_rotation(rng: np.random.Generator, r: int = 2,
                               max_boost: float = 1.0) -> np.ndarray:
    """A random sheet-preserving hyperbolic rotation (test/alignment helper).

    Product of a random spatial orthogonal rotation and a boost of random
    rapidity <= max_boost along a random axis.
    """
    q, _ = np.linalg.qr(rng.standard_normal((r, r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    spatial = np.eye(r + 1)
    spatial[1:, 1:] = q
    t = rng.uniform(-max_boost, max_boost)
    boost = np.eye(r + 1)
    boost[0, 0] = boost[1, 1] = np.cosh(t)
    boost[0, 1] = boost[1, 0] = np.sinh(t)
    return spatial @ boost


def write_positions(positions: np.ndarray, sink: io.TextIOBase, r: int | None = None) -> None:
    """Write one row per node: node id then the coordinates, 17 significant digits.

    `r` defaults to ncols - 1 (hyperbolic rows); Euclidean callers pass r = ncols.
    """
    positions = np.asarray(positions, dtype=float)
    if r is None:
        r = positions.shape[1] - 1
    sink.write(f"# dim r={r}\n")
    for i, row in enumerate(positions):
        coords = "\t".join(format(c, ".17g") for c in row)
        sink.write(f"{i}\t{coords}\n")


def read_positions(source: io.TextIOBase) -> np.ndarray:
    """Parse the positions TSV written by write_positions."""
    r = None
    rows: list[tuple[int, Sequence[float]]] = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            if r is None and "dim r=" in line:
                try:
                    r = int(line.split("dim r=")[1].split()[0])
                except ValueError as exc:
                    raise ParseError("malformed dim header", line=lineno) from exc
            continue
        parts = line.split("\t")
        try:
            idx = int(parts[0])
            coords = [float(v) for v in parts[1:]]
        except ValueError as exc:
            raise ParseError(f"malformed position row: {line!r}", line=lineno) from exc
        rows.append((idx, coords))
    if r is None:
        raise ParseError("missing '# dim r=<r>' header")
    if not rows:
        return np.zeros((0, r + 1))
    # Hyperbolic files carry r+1 columns, Euclidean ones r; trust the rows.
    ncols = len(rows[0][1])
    if ncols not in (r, r + 1):
        raise ParseError(f"expected {r} or {r + 1} coordinates per row, got {ncols}")
    out = np.zeros((len(rows), ncols))
    for idx, coords in rows:
        if len(coords) != ncols:
            raise ParseError(f"node {idx}: expected {ncols} coordinates, got {len(coords)}")
        if not 0 <= idx < len(rows):
            raise ParseError(f"node id {idx} out of range")
        out[idx] = coords
    return out
