"""Single executable exposing the full pipeline as subcommands.

Every run resolves its configuration from defaults, then an optional flat
"key = value" config file, then explicit flags; writes outputs atomically
(temp file + rename); and drops a JSON manifest next to the first output
recording the resolved configuration, seed, version and wall time.

Exit codes: 0 success, 1 usage error, 2 data/format error,
3 numeric/capacity error.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, estimator, evaluation, geometry, identify, model
from . import sampling, simulator
from .errors import (CapacityError, ConfigError, DegenerateError,
                     DimensionError, DomainError, HyperloomError,
                     LineSearchError, ParseError, SignatureError)
from .hypergraph import Hypergraph, parse_hypergraph, parse_sample
from .hypergraph import write_hypergraph, write_sample
from .model import EUCLIDEAN, HYPERBOLIC, ModelParams

_USAGE_EXIT = 1
_DATA_EXIT = 2
_NUMERIC_EXIT = 3

_DATA_ERRORS = (ParseError, OSError, DegenerateError)
_NUMERIC_ERRORS = (CapacityError, SignatureError, DomainError, DimensionError,
                   ConfigError, LineSearchError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(_USAGE_EXIT)


def _atomic_write(path: str, render) -> None:
    """Write via a sibling temp file and rename, so readers never see partials."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as sink:
            render(sink)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(first_out: str, command: str, resolved: dict,
                    wall: float) -> None:
    manifest = {
        "command": command,
        "config": {k: v for k, v in sorted(resolved.items())},
        "version": __version__,
        "wall_seconds": wall,
    }
    _atomic_write(first_out + ".manifest.json",
                  lambda sink: json.dump(manifest, sink, indent=2, sort_keys=True))


def _load_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if "=" not in s:
                raise ParseError(f"expected 'key = value', got {s!r}", line=lineno)
            key, _, value = s.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser):
    """Apply config-file values for flags not given explicitly on the line."""
    if not getattr(args, "config", None):
        return args
    file_values = _load_config_file(args.config)
    subparser = parser.subparser_map[args.command]
    actions = {a.dest: a for a in subparser._actions}
    for key, raw in file_values.items():
        if key == "config" or key not in actions:
            parser.error(f"unknown config key {key!r}")
        if getattr(args, f"_explicit_{key}", False):
            continue
        action = actions[key]
        if isinstance(action, argparse._StoreTrueAction):
            setattr(args, key, raw.lower() in ("1", "true", "yes"))
        elif action.type is not None:
            try:
                setattr(args, key, action.type(raw))
            except ValueError:
                parser.error(f"bad value for config key {key!r}: {raw!r}")
        else:
            setattr(args, key, raw)
    return args


class _Track(argparse.Action):
    """Record explicitly passed flags so the config file cannot override them."""

    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        setattr(namespace, f"_explicit_{self.dest}", True)


# Flags that must be present after merging the config file; they are not
# argparse-required so a config file may supply them.
_REQUIRED = {
    "simulate": ("n", "alpha", "out"),
    "sample": ("edges", "out"),
    "split": ("edges", "train_out", "test_out"),
    "fit": ("sample", "out"),
    "predict": ("params", "sample", "out"),
    "eval": ("scores", "out"),
    "eval-degrees": ("observed", "simulated", "out"),
    "centrality": ("edges", "out"),
    "canonicalize": ("positions", "out"),
    "gram-error": ("est", "truth", "out"),
    "bench": ("out",),
}


def _resolved(args: argparse.Namespace) -> dict:
    return {k: v for k, v in vars(args).items()
            if not k.startswith("_explicit_") and k not in ("func", "parser")}


def _read_hypergraph(path: str) -> Hypergraph:
    with open(path, encoding="utf-8") as fh:
        return parse_hypergraph(fh)


def _read_positions(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return geometry.read_positions(fh)


def _read_model(params_dir: str) -> ModelParams:
    positions = _read_positions(os.path.join(params_dir, "positions.tsv"))
    with open(os.path.join(params_dir, "params.tsv"), encoding="utf-8") as fh:
        return model.read_params(fh, positions)


def _parse_alphas(text: str) -> dict[int, float]:
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ConfigError("need at least one alpha value")
    return {k + 2: v for k, v in enumerate(values)}


def _cmd_simulate(args) -> None:
    alphas = _parse_alphas(args.alpha)
    k_max = max(alphas)
    if args.k_max != 0 and args.k_max != k_max:
        raise ConfigError(
            f"--k-max {args.k_max} disagrees with {len(alphas)} alpha values")
    cfg = simulator.SimConfig(gamma=args.gamma, rho=args.rho,
                              density_subset_size=args.density_subset,
                              density_reps=args.density_reps,
                              mh_iters=args.mh_iters, seed=args.seed)
    disk = simulator.generate_positions(args.n, cfg)
    positions = simulator.lift_positions(disk)
    params = ModelParams(positions, alphas, args.p, HYPERBOLIC)
    h = simulator.simulate_hypergraph(params, cfg)
    _atomic_write(args.out, lambda sink: write_hypergraph(h, sink))
    if args.positions_out:
        _atomic_write(args.positions_out,
                      lambda sink: geometry.write_positions(positions, sink))


def _cmd_sample(args) -> None:
    h = _read_hypergraph(args.edges)
    cfg = sampling.DesignConfig(n_controls=args.controls, seed=args.seed)
    sample = sampling.case_control_sample(
        h, cfg, stream_offset=h.k_max if args.test_stream else 0)
    _atomic_write(args.out, lambda sink: write_sample(sample, sink))


def _cmd_split(args) -> None:
    h = _read_hypergraph(args.edges)
    train, test = sampling.train_test_split(h, args.split, args.seed)
    _atomic_write(args.train_out, lambda sink: write_hypergraph(train, sink))
    _atomic_write(args.test_out, lambda sink: write_hypergraph(test, sink))


def _cmd_fit(args) -> None:
    with open(args.sample, encoding="utf-8") as fh:
        sample = parse_sample(fh)
    cfg = estimator.FitConfig(max_iters=args.max_iter, rel_tol=args.tol,
                              starts=args.starts, seed=args.seed)
    params, report = estimator.multi_start_fit(sample, cfg, geom=args.geometry,
                                               r=args.dim, p=args.p)
    os.makedirs(args.out, exist_ok=True)
    r = args.dim
    _atomic_write(os.path.join(args.out, "positions.tsv"),
                  lambda sink: geometry.write_positions(
                      params.positions, sink,
                      r=r if args.geometry == HYPERBOLIC else params.positions.shape[1]))
    _atomic_write(os.path.join(args.out, "params.tsv"),
                  lambda sink: model.write_params(params, sink))

    def render_report(sink):
        sizes = sorted(params.alphas)
        sink.write("iteration,loss," + ",".join(f"alpha_{k}" for k in sizes) + "\n")
        for i, (loss, alphas) in enumerate(zip(report.loss_trace,
                                               report.alpha_trace), start=1):
            vals = ",".join(format(alphas[k], ".17g") for k in sizes)
            sink.write(f"{i},{format(loss, '.17g')},{vals}\n")

    _atomic_write(os.path.join(args.out, "fit_report.csv"), render_report)


def _cmd_predict(args) -> None:
    params = _read_model(args.params)
    with open(args.sample, encoding="utf-8") as fh:
        sample = parse_sample(fh)
    records = [(rec.edge, rec.z) for k in sorted(sample.strata)
               for rec in sample.strata[k]]
    scored = evaluation.score_edges(params, records)

    def render(sink):
        for s in scored:
            idx = "\t".join(str(v) for v in s.edge)
            sink.write(f"{s.z}\t{format(s.score, '.17g')}\t{idx}\n")

    _atomic_write(args.out, render)


def _read_scores(path: str) -> list[evaluation.ScoredEdge]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split("\t")
            if len(parts) < 4:
                raise ParseError(f"expected z, score, indices: {s!r}", line=lineno)
            out.append(evaluation.ScoredEdge(
                tuple(int(v) for v in parts[2:]), int(parts[0]), float(parts[1])))
    return out


def _cmd_eval(args) -> None:
    scored = _read_scores(args.scores)
    by_k: dict[int, list] = {}
    for s in scored:
        by_k.setdefault(len(s.edge), []).append(s)

    rows = []
    curves = []
    for k in sorted(by_k):
        try:
            res = evaluation.binary_curves(by_k[k])
        except DegenerateError:
            continue
        rows.append((str(k), res["auc_roc"], res["auc_pr"]))
        curves.append((str(k), res))
    pooled = evaluation.binary_curves(scored)
    rows.append(("pooled", pooled["auc_roc"], pooled["auc_pr"]))
    curves.append(("pooled", pooled))

    def render(sink):
        sink.write("stratum,auc_roc,auc_pr\n")
        for name, roc, pr in rows:
            sink.write(f"{name},{format(roc, '.17g')},{format(pr, '.17g')}\n")

    def render_curves(sink):
        sink.write("stratum,curve,x,y\n")
        for name, res in curves:
            for x, y in res["roc"]:
                sink.write(f"{name},roc,{format(x, '.17g')},{format(y, '.17g')}\n")
            for x, y in res["pr"]:
                sink.write(f"{name},pr,{format(x, '.17g')},{format(y, '.17g')}\n")

    _atomic_write(args.out, render)
    _atomic_write(args.out + ".curves.csv", render_curves)


def _cmd_eval_degrees(args) -> None:
    observed = _read_hypergraph(args.observed)
    simulated = _read_hypergraph(args.simulated)

    def render(sink):
        sink.write("k,tv_distance\n")
        for k in range(2, min(observed.k_max, simulated.k_max) + 1):
            tv = evaluation.tv_distance(evaluation.size_k_degrees(observed, k),
                                        evaluation.size_k_degrees(simulated, k))
            sink.write(f"{k},{format(tv, '.17g')}\n")

    _atomic_write(args.out, render)


def _cmd_centrality(args) -> None:
    h = _read_hypergraph(args.edges)
    scores = evaluation.eigenvector_centrality(h)

    def render(sink):
        for i, v in enumerate(scores):
            sink.write(f"{i}\t{format(v, '.17g')}\n")

    _atomic_write(args.out, render)


def _cmd_canonicalize(args) -> None:
    positions = _read_positions(args.positions)
    r = positions.shape[1] - 1
    canon = identify.canonicalize(identify.gram(positions), r)
    _atomic_write(args.out, lambda sink: geometry.write_positions(canon, sink))


def _cmd_gram_error(args) -> None:
    est = _read_positions(args.est)
    truth = _read_positions(args.truth)
    d_err = identify.gram_error(identify.gram(est), identify.gram(truth))
    _, resid = identify.align_positions(est, truth, r=est.shape[1] - 1)

    sp_errors = {}
    if args.est_params and args.truth_params:
        est_params = _read_model(args.est_params)
        truth_params = _read_model(args.truth_params)
        sp_errors = identify.sparsity_error(est_params.alphas, truth_params.alphas)

    def render(sink):
        header = ["gram_error", "aligned_position_error"]
        values = [format(d_err, ".17g"), format(resid, ".17g")]
        for k in sorted(sp_errors):
            header.append(f"alpha_{k}_rel_error")
            values.append(format(sp_errors[k], ".17g"))
        sink.write(",".join(header) + "\n")
        sink.write(",".join(values) + "\n")

    _atomic_write(args.out, render)


def _replication_seed(seed: int, rep: int) -> int:
    return (seed + 0x9E3779B97F4A7C15 * (rep + 1)) % 2**64


def bench_recovery(n_nodes: int, reps: int, n_controls: int, alphas: dict,
                   gamma: float, rho: float, p: float, seed: int,
                   mh_iters: int = 2000, max_iters: int = 30,
                   density_reps: int = 50) -> list[dict]:
    """Generate -> simulate -> sample -> fit -> measure, one row per replication."""
    rows = []
    for rep in range(reps):
        t0 = time.perf_counter()
        rep_seed = _replication_seed(seed, rep)
        cfg = simulator.SimConfig(gamma=gamma, rho=rho, mh_iters=mh_iters,
                                  density_reps=density_reps, seed=rep_seed)
        disk = simulator.generate_positions(n_nodes, cfg)
        truth = ModelParams(simulator.lift_positions(disk), dict(alphas), p,
                            HYPERBOLIC)
        h = simulator.simulate_hypergraph(truth, cfg)
        sample = sampling.case_control_sample(
            h, sampling.DesignConfig(n_controls=n_controls, seed=rep_seed))
        fit_cfg = estimator.FitConfig(max_iters=max_iters, seed=rep_seed)
        fitted, _ = estimator.fit(sample, fit_cfg, geom=HYPERBOLIC, r=2, p=p)
        d_err = identify.gram_error(identify.gram(fitted.positions),
                                    identify.gram(truth.positions))
        sp = identify.sparsity_error(
            {k: fitted.alphas[k] for k in alphas}, dict(alphas))
        rows.append({
            "replication": rep,
            "n_nodes": n_nodes,
            "n_controls": n_controls,
            "gram_error": d_err,
            "alpha_errors": sp,
            "seconds": time.perf_counter() - t0,
        })
    return rows


def _cmd_bench(args) -> None:
    alphas = _parse_alphas(args.alpha)
    rows = bench_recovery(args.n, args.reps, args.controls, alphas,
                          args.gamma, args.rho, args.p, args.seed,
                          mh_iters=args.mh_iters, max_iters=args.max_iter)

    def render(sink):
        sizes = sorted(alphas)
        sink.write("replication,n_nodes,n_controls,gram_error,"
                   + ",".join(f"alpha_{k}_rel_error" for k in sizes)
                   + "\n")
        for row in rows:
            sp = ",".join(format(row["alpha_errors"][k], ".17g") for k in sizes)
            sink.write(f"{row['replication']},{row['n_nodes']},"
                       f"{row['n_controls']},{format(row['gram_error'], '.17g')},"
                       f"{sp}\n")

    _atomic_write(args.out, render)


def _add_common(sp):
    sp.add_argument("--config", action=_Track, default=None,
                    help="flat 'key = value' config file; flags override it")
    sp.add_argument("--seed", action=_Track, type=int, default=0)
    sp.add_argument("--fast", action="store_true",
                    help="permit nondeterministic parallel reduction "
                         "(currently identical to the default serial path)")


def build_parser() -> _Parser:
    parser = _Parser(prog="hyperloom",
                     description="Hyperbolic latent-space hypergraph modeling")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="generate a hypergraph from the model")
    _add_common(sp)
    sp.add_argument("--n", action=_Track, type=int, default=None)
    sp.add_argument("--k-max", action=_Track, type=int, default=0)
    sp.add_argument("--alpha", action=_Track, default=None,
                    help="comma-separated alpha_2,alpha_3,...")
    sp.add_argument("--p", action=_Track, type=float, default=-20.0)
    sp.add_argument("--gamma", action=_Track, type=float, default=3.0)
    sp.add_argument("--rho", action=_Track, type=float, default=0.5)
    sp.add_argument("--mh-iters", action=_Track, type=int, default=100_000)
    sp.add_argument("--density-subset", action=_Track, type=int, default=30)
    sp.add_argument("--density-reps", action=_Track, type=int, default=1000)
    sp.add_argument("--out", action=_Track, default=None)
    sp.add_argument("--positions-out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_simulate)

    sp = sub.add_parser("sample", help="case-control labeled sample")
    _add_common(sp)
    sp.add_argument("--edges", action=_Track, default=None)
    sp.add_argument("--controls", action=_Track, type=int, default=1)
    sp.add_argument("--test-stream", action="store_true",
                    help="use the test-side RNG streams (independent controls)")
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_sample)

    sp = sub.add_parser("split", help="stratified train/test split")
    _add_common(sp)
    sp.add_argument("--edges", action=_Track, default=None)
    sp.add_argument("--split", action=_Track, type=float, default=0.8)
    sp.add_argument("--train-out", action=_Track, default=None)
    sp.add_argument("--test-out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_split)

    sp = sub.add_parser("fit", help="maximum-likelihood estimation")
    _add_common(sp)
    sp.add_argument("--sample", action=_Track, default=None)
    sp.add_argument("--geometry", action=_Track,
                    choices=[HYPERBOLIC, EUCLIDEAN], default=HYPERBOLIC)
    sp.add_argument("--dim", action=_Track, type=int, default=2)
    sp.add_argument("--p", action=_Track, type=float, default=-20.0)
    sp.add_argument("--starts", action=_Track, type=int, default=1)
    sp.add_argument("--max-iter", action=_Track, type=int, default=100)
    sp.add_argument("--tol", action=_Track, type=float, default=1e-5)
    sp.add_argument("--out", action=_Track, default=None,
                    help="output directory (positions, params, fit report)")
    sp.set_defaults(func=_cmd_fit)

    sp = sub.add_parser("predict", help="score labeled hyperedges")
    _add_common(sp)
    sp.add_argument("--params", action=_Track, default=None,
                    help="fit output directory")
    sp.add_argument("--sample", action=_Track, default=None)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_predict)

    sp = sub.add_parser("eval", help="PR/ROC/AUC metrics from scores")
    _add_common(sp)
    sp.add_argument("--scores", action=_Track, default=None)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_eval)

    sp = sub.add_parser("eval-degrees", help="degree-distribution TV distances")
    _add_common(sp)
    sp.add_argument("--observed", action=_Track, default=None)
    sp.add_argument("--simulated", action=_Track, default=None)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_eval_degrees)

    sp = sub.add_parser("centrality", help="hypergraph eigenvector centrality")
    _add_common(sp)
    sp.add_argument("--edges", action=_Track, default=None)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_centrality)

    sp = sub.add_parser("canonicalize", help="canonical identifiable positions")
    _add_common(sp)
    sp.add_argument("--positions", action=_Track, default=None)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_canonicalize)

    sp = sub.add_parser("gram-error", help="estimation error metrics")
    _add_common(sp)
    sp.add_argument("--est", action=_Track, default=None)
    sp.add_argument("--truth", action=_Track, default=None)
    sp.add_argument("--est-params", action=_Track, default=None)
    sp.add_argument("--truth-params", action=_Track, default=None)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_gram_error)

    sp = sub.add_parser("bench", help="simulate/fit recovery benchmark")
    _add_common(sp)
    sp.add_argument("--n", action=_Track, type=int, default=200)
    sp.add_argument("--reps", action=_Track, type=int, default=2)
    sp.add_argument("--controls", action=_Track, type=int, default=1)
    sp.add_argument("--alpha", action=_Track, default="0.5,5e-4,5e-6")
    sp.add_argument("--p", action=_Track, type=float, default=-20.0)
    sp.add_argument("--gamma", action=_Track, type=float, default=3.0)
    sp.add_argument("--rho", action=_Track, type=float, default=0.5)
    sp.add_argument("--mh-iters", action=_Track, type=int, default=2000)
    sp.add_argument("--max-iter", action=_Track, type=int, default=30)
    sp.add_argument("--out", action=_Track, default=None)
    sp.set_defaults(func=_cmd_bench)

    parser.subparser_map = dict(sub.choices)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _merge_config(args, parser)
        for key in _REQUIRED.get(args.command, ()):
            if getattr(args, key) is None:
                parser.error(
                    f"missing required value --{key.replace('_', '-')}")
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else _USAGE_EXIT

    t0 = time.perf_counter()
    try:
        args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _DATA_EXIT
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT
    except HyperloomError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _NUMERIC_EXIT

    first_out = getattr(args, "out", None) or getattr(args, "train_out", None)
    if first_out:
        target = first_out if not os.path.isdir(first_out) else \
            os.path.join(first_out, "run")
        _write_manifest(target, args.command, _resolved(args),
                        time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
