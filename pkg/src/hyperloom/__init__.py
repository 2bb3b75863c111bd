"""Hyperbolic latent-space modeling of sparse hypergraphs.

Simulation from latent positions, case-control subsampled maximum
likelihood over the Lorentz manifold, identifiability-aware
canonicalization, and evaluation against a Euclidean baseline.
"""

__version__ = "0.1.0"
