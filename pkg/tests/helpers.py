"""Shared test utilities: random on-manifold points and sample builders."""

from __future__ import annotations

import numpy as np

from hyperloom.hypergraph import LabeledSample, SampleRecord
from hyperloom.model import EUCLIDEAN, HYPERBOLIC, ModelParams


def random_manifold_points(rng, n, r=2, scale=1.0):
    """Rows on the upper hyperboloid sheet with N(0, scale^2) spatial parts."""
    pts = np.zeros((n, r + 1))
    pts[:, 1:] = rng.normal(scale=scale, size=(n, r))
    pts[:, 0] = np.sqrt(1.0 + np.sum(pts[:, 1:] ** 2, axis=1))
    return pts


def random_sample(rng, n_nodes, k_max=3, n_records=30, mu_low=0.2):
    """Random labeled sample with distinct (edge, z) records per stratum."""
    strata = {}
    for k in range(2, k_max + 1):
        seen = set()
        recs = []
        for _ in range(n_records):
            edge = tuple(sorted(rng.choice(n_nodes, size=k, replace=False).tolist()))
            z = int(rng.random() < 0.5)
            if (edge, z) in seen:
                continue
            seen.add((edge, z))
            mu = 1.0 if z else float(rng.uniform(mu_low, 1.0))
            recs.append(SampleRecord(edge, z, mu))
        strata[k] = tuple(recs)
    return LabeledSample(n_nodes, k_max, strata)


def random_instance(rng, n_nodes, geometry=HYPERBOLIC, k_max=3, n_records=30,
                    r=2, p=-20.0, scale=0.8):
    """Random (ModelParams, LabeledSample) pair for gradient and fit tests."""
    if geometry == HYPERBOLIC:
        positions = random_manifold_points(rng, n_nodes, r, scale)
    else:
        positions = rng.normal(scale=scale, size=(n_nodes, r))
    alphas = {k: float(rng.uniform(0.05, 1.0)) for k in range(2, k_max + 1)}
    params = ModelParams(positions, alphas, p, geometry)
    return params, random_sample(rng, n_nodes, k_max, n_records)


def finite_difference_grad(loss_of_positions, positions, node, h=1e-5):
    """Central finite differences of a loss over one node's ambient coords."""
    grad = np.zeros(positions.shape[1])
    for d in range(positions.shape[1]):
        plus = positions.copy()
        plus[node, d] += h
        minus = positions.copy()
        minus[node, d] -= h
        grad[d] = (loss_of_positions(plus) - loss_of_positions(minus)) / (2 * h)
    return grad
