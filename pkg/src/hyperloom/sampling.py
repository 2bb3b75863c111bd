"""Case-control sampling design and train/test splitting.

All realized hyperedges enter the sample with inclusion probability 1;
per stratum k, n controls per realized edge are drawn uniformly without
replacement from the implicit complement, each with
mu = min(1, n |E_k^1| / |E_k^0|). Strata use independent RNG substreams
(stream id = k for training, K + k for test-side resampling), so the
result is deterministic for a given seed regardless of scheduling.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import CapacityError, ConfigError
from .hypergraph import (Edge, Hypergraph, LabeledSample, SampleRecord,
                         enumerate_hyperedges)
from .rng import substream

log = logging.getLogger(__name__)

# When a stratum's complement is exhausted we must enumerate it; refuse
# to do that above this many candidate edges.
_EXHAUSTION_ENUM_CAP = 10**7

__all__ = ["DesignConfig", "case_control_sample", "train_test_split"]


@dataclass(frozen=True)
class DesignConfig:
    """Number of controls per realized hyperedge and the driving seed."""

    n_controls: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_controls < 1:
            raise ConfigError(f"n_controls must be >= 1, got {self.n_controls}")


def _draw_controls(n_nodes: int, k: int, want: int, realized: frozenset[Edge],
                   rng) -> list[Edge]:
    """`want` distinct unrealized size-k edges, uniform over the complement.

    Rejection sampling against the realized set and prior draws; sparse
    hypergraphs make the acceptance rate ~1.
    """
    chosen: set[Edge] = set()
    out: list[Edge] = []
    max_trials = 1000 * max(want, 1) + 10000
    trials = 0
    while len(out) < want:
        trials += 1
        if trials > max_trials:
            raise CapacityError(
                f"control sampling stalled in stratum k={k} "
                f"({len(out)}/{want} after {trials} proposals)")
        edge = tuple(sorted(rng.choice(n_nodes, size=k, replace=False).tolist()))
        if edge in realized or edge in chosen:
            continue
        chosen.add(edge)
        out.append(edge)
    return out


def case_control_sample(h: Hypergraph, cfg: DesignConfig,
                        stream_offset: int = 0) -> LabeledSample:
    """Stratified case-control LabeledSample with exact inclusion probabilities.

    `stream_offset` shifts the per-stratum RNG stream ids (the test-side
    protocol passes K so its controls are independent of training ones).
    """
    strata: dict[int, tuple[SampleRecord, ...]] = {}
    for k in range(2, h.k_max + 1):
        realized = h.sorted_edges(k)
        m1 = len(realized)
        if m1 == 0:
            continue
        records = [SampleRecord(e, 1, 1.0) for e in realized]
        total = math.comb(h.n_nodes, k)
        m0 = total - m1
        want = cfg.n_controls * m1
        rng = substream(cfg.seed, stream_offset + k)
        if m0 <= want:
            # Exhaustion: the whole complement enters with mu = 1.
            if total > _EXHAUSTION_ENUM_CAP:
                raise CapacityError(
                    f"stratum k={k}: complement exhausted but C(N,k)={total} "
                    "is too large to enumerate")
            log.warning(
                "stratum k=%d: only %d unrealized edges for %d requested "
                "controls; including the whole complement with mu=1", k, m0, want)
            realized_set = h.edges_of_size(k)
            controls = [e for e in enumerate_hyperedges(h.n_nodes, k)
                        if e not in realized_set]
            mu = 1.0
        else:
            controls = sorted(_draw_controls(h.n_nodes, k, want,
                                             h.edges_of_size(k), rng))
            mu = min(1.0, want / m0)
        records.extend(SampleRecord(e, 0, mu) for e in controls)
        strata[k] = tuple(records)
    return LabeledSample(h.n_nodes, h.k_max, strata)


def train_test_split(h: Hypergraph, train_fraction: float,
                     seed: int) -> tuple[Hypergraph, Hypergraph]:
    """Per-stratum random split: ceil(fraction * m) edges to train, rest to test."""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError(f"train_fraction must be in (0, 1), got {train_fraction}")
    train: list[Edge] = []
    test: list[Edge] = []
    for k in range(2, h.k_max + 1):
        edges = h.sorted_edges(k)
        if not edges:
            continue
        rng = substream(seed, k)
        order = rng.permutation(len(edges))
        n_train = math.ceil(train_fraction * len(edges))
        train.extend(edges[i] for i in order[:n_train])
        test.extend(edges[i] for i in order[n_train:])
    return (Hypergraph.from_edges(h.n_nodes, h.k_max, train),
            Hypergraph.from_edges(h.n_nodes, h.k_max, test))
