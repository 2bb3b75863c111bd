import io
import math

import pytest

from hyperloom.errors import CapacityError, ParseError
from hyperloom.hypergraph import (Hypergraph, LabeledSample, SampleRecord,
                                  enumerate_hyperedges, parse_hypergraph,
                                  parse_sample, write_hypergraph, write_sample)
from hyperloom.rng import substream


class TestParseHypergraph:
    def test_basic_format(self):
        h = parse_hypergraph(io.StringIO("# nodes 4\n# max_size 3\n0 1\n0 1 2\n"))
        assert h.n_nodes == 4
        assert h.k_max == 3
        assert h.edges_of_size(2) == {(0, 1)}
        assert h.edges_of_size(3) == {(0, 1, 2)}

    def test_duplicate_lines_collapse(self):
        h = parse_hypergraph(io.StringIO("# nodes 3\n# max_size 3\n0 1\n1 0\n0 1\n"))
        assert h.edges_of_size(2) == {(0, 1)}

    def test_duplicate_node_rejected(self):
        with pytest.raises(ParseError):
            parse_hypergraph(io.StringIO("# nodes 3\n# max_size 3\n0 0 1\n"))

    def test_index_out_of_range(self):
        with pytest.raises(ParseError):
            parse_hypergraph(io.StringIO("# nodes 3\n# max_size 3\n0 5\n"))

    def test_oversized_edge(self):
        with pytest.raises(ParseError):
            parse_hypergraph(io.StringIO("# nodes 5\n# max_size 3\n0 1 2 3\n"))

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse_hypergraph(io.StringIO("0 1\n"))

    def test_parse_error_carries_line_number(self):
        with pytest.raises(ParseError) as err:
            parse_hypergraph(io.StringIO("# nodes 3\n# max_size 3\n0 1\nbad line\n"))
        assert err.value.line == 4


class TestWriteHypergraph:
    def test_roundtrip(self):
        h = Hypergraph.from_edges(6, 3, [(2, 1), (0, 5), (3, 1, 0)])
        buf = io.StringIO()
        write_hypergraph(h, buf)
        assert parse_hypergraph(io.StringIO(buf.getvalue())) == h

    def test_empty_hypergraph(self):
        buf = io.StringIO()
        write_hypergraph(Hypergraph.from_edges(4, 3, []), buf)
        assert buf.getvalue() == "# nodes 4\n# max_size 3\n"

    def test_byte_identical_writes(self):
        rng = substream(20)
        edges = [tuple(sorted(rng.choice(8, size=2, replace=False).tolist()))
                 for _ in range(10)]
        h = Hypergraph.from_edges(8, 3, edges)
        bufs = [io.StringIO(), io.StringIO()]
        for buf in bufs:
            write_hypergraph(h, buf)
        assert bufs[0].getvalue() == bufs[1].getvalue()

    def test_deterministic_order(self):
        h = Hypergraph.from_edges(4, 3, [(2, 3), (0, 1), (0, 1, 2)])
        buf = io.StringIO()
        write_hypergraph(h, buf)
        body = buf.getvalue().splitlines()[2:]
        assert body == ["0 1", "2 3", "0 1 2"]


class TestEnumerate:
    def test_pairs_of_four(self):
        assert enumerate_hyperedges(4, 2) == [(0, 1), (0, 2), (0, 3),
                                              (1, 2), (1, 3), (2, 3)]

    def test_single_full_edge(self):
        assert enumerate_hyperedges(5, 5) == [(0, 1, 2, 3, 4)]

    def test_binomial_count(self):
        assert len(enumerate_hyperedges(30, 4)) == math.comb(30, 4)

    def test_lexicographic_strictly_increasing(self):
        edges = enumerate_hyperedges(7, 3)
        assert edges == sorted(edges)
        assert len(set(edges)) == len(edges)

    def test_cap_enforced(self):
        with pytest.raises(CapacityError):
            enumerate_hyperedges(100, 5, cap=1000)


class TestSampleIO:
    def sample(self):
        return LabeledSample(5, 3, {
            2: (SampleRecord((0, 1), 1, 1.0), SampleRecord((2, 3), 0, 0.25)),
            3: (SampleRecord((0, 1, 4), 0, 0.125),),
        })

    def test_roundtrip(self):
        buf = io.StringIO()
        write_sample(self.sample(), buf)
        assert parse_sample(io.StringIO(buf.getvalue())) == self.sample()

    def test_mu_out_of_range(self):
        text = "# nodes 5\n# max_size 3\n0\t1.5\t0\t1\n"
        with pytest.raises(ParseError):
            parse_sample(io.StringIO(text))

    def test_bad_z(self):
        text = "# nodes 5\n# max_size 3\n2\t1\t0\t1\n"
        with pytest.raises(ParseError):
            parse_sample(io.StringIO(text))

    def test_duplicate_edge_label_pair_rejected(self):
        text = "# nodes 5\n# max_size 3\n0\t0.5\t0\t1\n0\t0.5\t1\t0\n"
        with pytest.raises(ParseError):
            parse_sample(io.StringIO(text))

    def test_same_edge_both_labels_allowed(self):
        text = "# nodes 5\n# max_size 3\n0\t0.5\t0\t1\n1\t1\t0\t1\n"
        sample = parse_sample(io.StringIO(text))
        assert sample.n_records() == 2
