"""Gram-matrix identifiability machinery.

Positions are identifiable only up to hyperbolic rotations; the Gram
matrix D = Theta J Theta^T is the invariant object. Canonicalization
picks one representative per equivalence class from the eigendecomposition
of D: the negative-eigenvalue column first (flipped onto the upper sheet),
then positive-eigenvalue columns in decreasing order with a
largest-entry-positive sign convention.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, DomainError, SignatureError
from .geometry import signature_matrix

__all__ = [
    "gram",
    "canonicalize",
    "gram_error",
    "align_positions",
    "sparsity_error",
]

_MANIFOLD_TOL = 1e-8


def gram(positions: np.ndarray) -> np.ndarray:
    """D = Theta J Theta^T for on-manifold rows; arcosh(-D_ij) is the distance."""
    positions = np.asarray(positions, dtype=float)
    j = signature_matrix(positions.shape[1] - 1)
    diag = np.einsum("id,de,ie->i", positions, j, positions)
    if np.any(np.abs(diag + 1.0) > 1e-6) or np.any(positions[:, 0] <= 0):
        raise DomainError("all rows must lie on the upper hyperboloid sheet")
    return positions @ j @ positions.T


def canonicalize(d: np.ndarray, r: int) -> np.ndarray:
    """Canonical positions from the eigendecomposition of the Gram matrix.

    Requires the indefinite signature (one negative, at most r positive
    nonzero eigenvalues); raises SignatureError with the spectrum attached
    otherwise. The output reproduces D and has on-manifold rows.
    """
    d = np.asarray(d, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise DimensionError(f"Gram matrix must be square, got {d.shape}")
    n = d.shape[0]
    vals, vecs = np.linalg.eigh(0.5 * (d + d.T))
    tol = 1e-6 * max(n, 1)
    neg = np.where(vals < -tol)[0]
    pos = np.where(vals > tol)[0]
    if len(neg) != 1 or len(pos) > r:
        raise SignatureError(
            f"expected 1 negative and <= {r} positive nonzero eigenvalues, "
            f"got {len(neg)} negative / {len(pos)} positive", spectrum=vals)
    order = [neg[0]] + list(pos[np.argsort(vals[pos])[::-1]])
    cols = vecs[:, order] * np.sqrt(np.abs(vals[order]))
    out = np.zeros((n, r + 1))
    out[:, :len(order)] = cols
    # Right-multiplying by J only negates the time column; the sign
    # conventions below absorb that. Flip the time column onto the upper
    # sheet, and each spatial column so its largest-|entry| is positive.
    if np.sum(out[:, 0] < 0) > np.sum(out[:, 0] > 0):
        out[:, 0] = -out[:, 0]
    for c in range(1, r + 1):
        col = out[:, c]
        if len(col) and col[np.argmax(np.abs(col))] < 0:
            out[:, c] = -col
    return out


def gram_error(d_hat: np.ndarray, d_true: np.ndarray) -> float:
    """Normalized squared Frobenius error ||D_hat - D_true||_F^2 / (N(N-1))."""
    d_hat = np.asarray(d_hat, dtype=float)
    d_true = np.asarray(d_true, dtype=float)
    if d_hat.shape != d_true.shape:
        raise DimensionError(f"shape mismatch {d_hat.shape} vs {d_true.shape}")
    n = d_hat.shape[0]
    if n < 2:
        raise DimensionError("need at least 2 nodes")
    return float(np.linalg.norm(d_hat - d_true) ** 2 / (n * (n - 1)))


def _procrustes_2x2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Orthogonal 2x2 W minimizing ||a W - b||_F."""
    u, _, vt = np.linalg.svd(a.T @ b)
    return u @ vt


def align_positions(theta_hat: np.ndarray, theta_true: np.ndarray,
                    r: int = 2) -> tuple[np.ndarray, float]:
    """Upper bound on the rotation-minimized position error.

    Canonicalizes both inputs, then searches sign flips of the spatial
    columns combined with a planar Procrustes rotation of the spatial
    block; the identity (no canonicalization) is in the candidate set, so
    the residual never exceeds ||theta_hat - theta_true||_F^2 / N.
    """
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_true = np.asarray(theta_true, dtype=float)
    if theta_hat.shape != theta_true.shape:
        raise DimensionError(f"shape mismatch {theta_hat.shape} vs {theta_true.shape}")
    if r != 2:
        raise DimensionError("alignment search is implemented for r = 2")
    n = theta_hat.shape[0]

    a = canonicalize(gram(theta_hat), r)
    b = canonicalize(gram(theta_true), r)

    candidates = [theta_hat]
    best_aligned = theta_hat
    best = float(np.linalg.norm(theta_hat - theta_true) ** 2 / n)
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            flipped = a.copy()
            flipped[:, 1] *= s1
            flipped[:, 2] *= s2
            candidates.append(flipped)
            mixed = flipped.copy()
            mixed[:, 1:] = flipped[:, 1:] @ _procrustes_2x2(flipped[:, 1:], b[:, 1:])
            candidates.append(mixed)
    for cand in candidates[1:]:
        resid = float(np.linalg.norm(cand - b) ** 2 / n)
        if resid < best:
            best = resid
            best_aligned = cand
    return best_aligned, best


def sparsity_error(alpha_hat: dict[int, float],
                   alpha_true: dict[int, float]) -> dict[int, float]:
    """Per-size relative errors |a_hat - a| / a; zero-truth sizes are absent."""
    if set(alpha_hat) != set(alpha_true):
        raise DimensionError(
            f"size sets differ: {sorted(alpha_hat)} vs {sorted(alpha_true)}")
    return {k: abs(alpha_hat[k] - alpha_true[k]) / alpha_true[k]
            for k in alpha_true if alpha_true[k] != 0.0}
