import json
import math
import os

import numpy as np
import pytest

from hyperloom import cli, geometry as geo
from hyperloom.hypergraph import parse_hypergraph, parse_sample
from hyperloom.identify import gram


def run(*argv):
    return cli.main(list(argv))


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A small end-to-end pipeline shared by the read-only assertions."""
    d = tmp_path_factory.mktemp("pipeline")
    assert run("simulate", "--n", "25", "--alpha", "0.5,0.02",
               "--mh-iters", "300", "--density-reps", "50", "--seed", "1",
               "--out", str(d / "edges.hg"),
               "--positions-out", str(d / "pos.tsv")) == 0
    assert run("split", "--edges", str(d / "edges.hg"), "--split", "0.8",
               "--seed", "2", "--train-out", str(d / "train.hg"),
               "--test-out", str(d / "test.hg")) == 0
    assert run("sample", "--edges", str(d / "train.hg"), "--controls", "2",
               "--seed", "3", "--out", str(d / "sample.tsv")) == 0
    assert run("fit", "--sample", str(d / "sample.tsv"), "--max-iter", "4",
               "--seed", "4", "--out", str(d / "fitdir")) == 0
    assert run("sample", "--edges", str(d / "test.hg"), "--controls", "2",
               "--seed", "3", "--test-stream",
               "--out", str(d / "testsample.tsv")) == 0
    assert run("predict", "--params", str(d / "fitdir"),
               "--sample", str(d / "testsample.tsv"),
               "--out", str(d / "scores.tsv")) == 0
    assert run("eval", "--scores", str(d / "scores.tsv"),
               "--out", str(d / "metrics.csv")) == 0
    return d


class TestExitCodes:
    def test_unknown_flag(self):
        assert run("simulate", "--does-not-exist", "1") == 1

    def test_unknown_subcommand(self):
        assert run("frobnicate") == 1

    def test_missing_file(self, tmp_path):
        assert run("fit", "--sample", str(tmp_path / "nope.tsv"),
                   "--out", str(tmp_path / "out")) == 2

    def test_malformed_input(self, tmp_path):
        bad = tmp_path / "bad.hg"
        bad.write_text("no header\n")
        assert run("sample", "--edges", str(bad),
                   "--out", str(tmp_path / "s.tsv")) == 2

    def test_invalid_alpha(self, tmp_path):
        assert run("simulate", "--n", "10", "--alpha", "2.0",
                   "--out", str(tmp_path / "e.hg")) == 3


class TestOutputs:
    def test_simulate_contract(self, workdir):
        assert (workdir / "edges.hg").exists()
        manifest = json.loads((workdir / "edges.hg.manifest.json").read_text())
        assert manifest["command"] == "simulate"
        assert manifest["config"]["seed"] == 1
        assert "version" in manifest

    def test_outputs_reparse(self, workdir):
        with open(workdir / "edges.hg") as fh:
            h = parse_hypergraph(fh)
        assert h.n_nodes == 25
        with open(workdir / "sample.tsv") as fh:
            sample = parse_sample(fh)
        assert sample.n_records() > 0
        with open(workdir / "pos.tsv") as fh:
            pts = geo.read_positions(fh)
        assert pts.shape == (25, 3)

    def test_split_partitions(self, workdir):
        with open(workdir / "edges.hg") as fh:
            full = parse_hypergraph(fh)
        with open(workdir / "train.hg") as fh:
            train = parse_hypergraph(fh)
        with open(workdir / "test.hg") as fh:
            test = parse_hypergraph(fh)
        for k in (2, 3):
            assert train.edges_of_size(k) | test.edges_of_size(k) == \
                full.edges_of_size(k)

    def test_metrics_columns(self, workdir):
        lines = (workdir / "metrics.csv").read_text().splitlines()
        assert lines[0] == "stratum,auc_roc,auc_pr"
        assert lines[-1].startswith("pooled,")
        for line in lines[1:]:
            _, roc, pr = line.split(",")
            assert 0.0 <= float(roc) <= 1.0
            assert 0.0 <= float(pr) <= 1.0

    def test_fit_report(self, workdir):
        lines = (workdir / "fitdir" / "fit_report.csv").read_text().splitlines()
        assert lines[0].startswith("iteration,loss,alpha_2")
        losses = [float(line.split(",")[1]) for line in lines[1:]]
        assert all(b <= a + 1e-10 for a, b in zip(losses, losses[1:]))

    def test_gram_error_nonnegative(self, workdir, tmp_path):
        out = tmp_path / "gerr.csv"
        assert run("gram-error", "--est", str(workdir / "pos.tsv"),
                   "--truth", str(workdir / "pos.tsv"), "--out", str(out)) == 0
        header, values = out.read_text().splitlines()
        cols = dict(zip(header.split(","), values.split(",")))
        assert float(cols["gram_error"]) >= 0.0

    def test_canonicalize_preserves_gram(self, workdir, tmp_path):
        out = tmp_path / "canon.tsv"
        assert run("canonicalize", "--positions", str(workdir / "pos.tsv"),
                   "--out", str(out)) == 0
        with open(workdir / "pos.tsv") as fh:
            pts = geo.read_positions(fh)
        with open(out) as fh:
            canon = geo.read_positions(fh)
        np.testing.assert_allclose(gram(canon), gram(pts), atol=1e-7)

    def test_eval_degrees(self, workdir, tmp_path):
        out = tmp_path / "tv.csv"
        assert run("eval-degrees", "--observed", str(workdir / "edges.hg"),
                   "--simulated", str(workdir / "edges.hg"),
                   "--out", str(out)) == 0
        for line in out.read_text().splitlines()[1:]:
            assert float(line.split(",")[1]) == 0.0

    def test_centrality(self, workdir, tmp_path):
        out = tmp_path / "cent.tsv"
        assert run("centrality", "--edges", str(workdir / "edges.hg"),
                   "--out", str(out)) == 0
        scores = [float(line.split("\t")[1])
                  for line in out.read_text().splitlines()]
        assert len(scores) == 25
        assert np.linalg.norm(scores) == pytest.approx(1.0)


class TestConfigFile:
    def test_config_supplies_values(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("n = 12\nalpha = 0.5,0.01\nmh-iters = 100\n"
                           "density-reps = 20\nseed = 9\n")
        out = tmp_path / "e.hg"
        assert run("simulate", "--config", str(cfgfile), "--out", str(out)) == 0
        with open(out) as fh:
            assert parse_hypergraph(fh).n_nodes == 12

    def test_flags_override_config(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("n = 12\nalpha = 0.5,0.01\nmh-iters = 100\n"
                           "density-reps = 20\n")
        out = tmp_path / "e.hg"
        assert run("simulate", "--config", str(cfgfile), "--n", "7",
                   "--out", str(out)) == 0
        with open(out) as fh:
            assert parse_hypergraph(fh).n_nodes == 7

    def test_unknown_key_rejected(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("wibble = 3\n")
        assert run("simulate", "--config", str(cfgfile), "--n", "5",
                   "--alpha", "0.5", "--out", str(tmp_path / "e.hg")) == 1


class TestBench:
    def test_smoke(self, tmp_path):
        out = tmp_path / "bench.csv"
        assert run("bench", "--n", "20", "--reps", "2", "--alpha", "0.5,0.02",
                   "--mh-iters", "100", "--max-iter", "2",
                   "--out", str(out)) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 3
        for line in lines[1:]:
            fields = line.split(",")
            assert float(fields[3]) >= 0.0
            assert all(math.isfinite(float(v)) for v in fields[3:])
