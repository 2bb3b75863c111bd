"""Hypergraph and labeled-sample data model with bit-exact text I/O.

Only realized hyperedges are stored; the (typically enormous) set of
unrealized ones is implicit. Edges are canonical ascending tuples of
0-based node indices. Both container types are immutable after
construction, so concurrent reads are safe.
"""

from __future__ import annotations

import io
import itertools
import math
from dataclasses import dataclass, field

from .errors import CapacityError, ParseError

ENUM_CAP = 10**7

Edge = tuple[int, ...]

__all__ = [
    "Edge",
    "Hypergraph",
    "SampleRecord",
    "LabeledSample",
    "canonical_edge",
    "enumerate_hyperedges",
    "parse_hypergraph",
    "write_hypergraph",
    "parse_sample",
    "write_sample",
]


def canonical_edge(nodes, n_nodes: int, k_max: int) -> Edge:
    """Sorted tuple form of a hyperedge, validated against N and K."""
    edge = tuple(sorted(int(v) for v in nodes))
    if len(set(edge)) != len(edge):
        raise ParseError(f"duplicate node in hyperedge {edge}")
    if not 2 <= len(edge) <= k_max:
        raise ParseError(f"hyperedge size {len(edge)} outside [2, {k_max}]")
    if edge[0] < 0 or edge[-1] >= n_nodes:
        raise ParseError(f"node index out of range in hyperedge {edge}")
    return edge


@dataclass(frozen=True)
class Hypergraph:
    """N nodes, max size K, and realized hyperedges stratified by size."""

    n_nodes: int
    k_max: int
    strata: dict[int, frozenset[Edge]] = field(default_factory=dict)

    @classmethod
    def from_edges(cls, n_nodes: int, k_max: int, edges) -> "Hypergraph":
        strata: dict[int, set[Edge]] = {k: set() for k in range(2, k_max + 1)}
        for e in edges:
            e = canonical_edge(e, n_nodes, k_max)
            strata[len(e)].add(e)
        return cls(n_nodes, k_max, {k: frozenset(v) for k, v in strata.items()})

    def edges_of_size(self, k: int) -> frozenset[Edge]:
        return self.strata.get(k, frozenset())

    def sorted_edges(self, k: int) -> list[Edge]:
        return sorted(self.edges_of_size(k))

    def all_edges(self) -> list[Edge]:
        out: list[Edge] = []
        for k in range(2, self.k_max + 1):
            out.extend(self.sorted_edges(k))
        return out

    def n_edges(self) -> int:
        return sum(len(v) for v in self.strata.values())


@dataclass(frozen=True)
class SampleRecord:
    """One labeled hyperedge: indicator z and inclusion probability mu."""

    edge: Edge
    z: int
    mu: float


@dataclass(frozen=True)
class LabeledSample:
    """Stratified (edge, z, mu) records; the estimator's input."""

    n_nodes: int
    k_max: int
    strata: dict[int, tuple[SampleRecord, ...]] = field(default_factory=dict)

    def records_of_size(self, k: int) -> tuple[SampleRecord, ...]:
        return self.strata.get(k, ())

    def sizes(self) -> list[int]:
        return sorted(k for k, recs in self.strata.items() if recs)

    def n_records(self) -> int:
        return sum(len(v) for v in self.strata.values())


def enumerate_hyperedges(n: int, k: int, cap: int = ENUM_CAP) -> list[Edge]:
    """All size-k hyperedges on n nodes in lexicographic order (oracle support)."""
    if not 2 <= k <= n:
        raise CapacityError(f"need 2 <= k <= n, got k={k}, n={n}")
    count = math.comb(n, k)
    if count > cap:
        raise CapacityError(f"C({n},{k}) = {count} exceeds cap {cap}")
    return list(itertools.combinations(range(n), k))


def _parse_header(lines) -> tuple[int, int, int]:
    """Read the '# nodes N' / '# max_size K' header; returns (N, K, lineno)."""
    n_nodes = k_max = None
    lineno = 0
    for lineno, line in lines:
        s = line.strip()
        if not s:
            continue
        if not s.startswith("#"):
            raise ParseError("missing '# nodes <N>' / '# max_size <K>' header", line=lineno)
        body = s[1:].split()
        if n_nodes is None:
            if len(body) != 2 or body[0] != "nodes":
                raise ParseError(f"expected '# nodes <N>', got {s!r}", line=lineno)
            n_nodes = int(body[1])
        else:
            if len(body) != 2 or body[0] != "max_size":
                raise ParseError(f"expected '# max_size <K>', got {s!r}", line=lineno)
            k_max = int(body[1])
            break
    if n_nodes is None or k_max is None:
        raise ParseError("incomplete header: need '# nodes <N>' then '# max_size <K>'")
    if n_nodes < 1 or k_max < 3:
        raise ParseError(f"invalid header: nodes={n_nodes}, max_size={k_max}")
    return n_nodes, k_max, lineno


def parse_hypergraph(source: io.TextIOBase) -> Hypergraph:
    """Parse the edge-list format; duplicate lines collapse to one edge."""
    lines = iter(enumerate(source, start=1))
    n_nodes, k_max, _ = _parse_header(lines)
    edges: set[Edge] = set()
    for lineno, line in lines:
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            nodes = [int(v) for v in s.split()]
        except ValueError as exc:
            raise ParseError(f"malformed edge line {s!r}", line=lineno) from exc
        try:
            edges.add(canonical_edge(nodes, n_nodes, k_max))
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return Hypergraph.from_edges(n_nodes, k_max, edges)


def write_hypergraph(h: Hypergraph, sink: io.TextIOBase) -> None:
    """Deterministic output: size-ascending, then lexicographic edge order."""
    sink.write(f"# nodes {h.n_nodes}\n")
    sink.write(f"# max_size {h.k_max}\n")
    for k in range(2, h.k_max + 1):
        for edge in h.sorted_edges(k):
            sink.write(" ".join(str(v) for v in edge) + "\n")


def parse_sample(source: io.TextIOBase) -> LabeledSample:
    """Parse the labeled-sample TSV: columns z, mu, then node indices."""
    lines = iter(enumerate(source, start=1))
    n_nodes, k_max, _ = _parse_header(lines)
    strata: dict[int, list[SampleRecord]] = {}
    seen: set[tuple[Edge, int]] = set()
    for lineno, line in lines:
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split("\t")
        if len(parts) < 4:
            raise ParseError(f"expected z, mu and >= 2 indices, got {s!r}", line=lineno)
        try:
            z = int(parts[0])
            mu = float(parts[1])
            nodes = [int(v) for v in parts[2:]]
        except ValueError as exc:
            raise ParseError(f"malformed sample line {s!r}", line=lineno) from exc
        if z not in (0, 1):
            raise ParseError(f"z must be 0 or 1, got {z}", line=lineno)
        if not 0.0 < mu <= 1.0:
            raise ParseError(f"mu must be in (0, 1], got {mu}", line=lineno)
        try:
            edge = canonical_edge(nodes, n_nodes, k_max)
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if (edge, z) in seen:
            raise ParseError(f"duplicate (edge, z) record {edge}", line=lineno)
        seen.add((edge, z))
        strata.setdefault(len(edge), []).append(SampleRecord(edge, z, mu))
    return LabeledSample(n_nodes, k_max, {k: tuple(v) for k, v in strata.items()})


def write_sample(sample: LabeledSample, sink: io.TextIOBase) -> None:
    """Deterministic TSV output; re-parses to an equal LabeledSample."""
    sink.write(f"# nodes {sample.n_nodes}\n")
    sink.write(f"# max_size {sample.k_max}\n")
    for k in sorted(sample.strata):
        for rec in sample.strata[k]:
            idx = "\t".join(str(v) for v in rec.edge)
            sink.write(f"{rec.z}\t{format(rec.mu, '.17g')}\t{idx}\n")
