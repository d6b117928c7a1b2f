"""Command-line entry point: ``sarjump <subcommand>``.

Exit codes: 0 success, 1 configuration/usage error, 2 run failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import experiment as exp
from .decoder import TransitionCounts, decode_all, snippet_plan
from .extraction import match_to_truth
from .model import (NoiseSpec, SarModel, load_dataset, load_model, save_dataset, save_model)
from .pipeline import identify
from .ptm import estimate_ptm, normalized_frobenius, unvisited_states
from .simulate import simulate
from .veronese import veronese_spec

EXIT_OK, EXIT_CONFIG, EXIT_RUN = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


class RunFailure(RuntimeError):
    pass


def write_counts(path, counts: TransitionCounts) -> None:
    n = counts.n
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["from"] + [f"to_{j + 1}" for j in range(n)])
        for i in range(n):
            w.writerow([i + 1] + [int(v) for v in counts.n_ij[i]])


def read_counts(path) -> TransitionCounts:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][0] != "from":
        raise exp.ConfigError(f"{path}: expected a 'from,to_1,..' counts table")
    return TransitionCounts([[int(v) for v in r[1:]] for r in rows[1:]])


def cmd_simulate(args) -> int:
    model, ptm, noise = load_model(args.model)
    if ptm is None:
        raise exp.ConfigError("model document needs a 'ptm' entry to simulate switching")
    if args.sigma2 is not None:
        noise = NoiseSpec(args.sigma2)
    if noise is None:
        raise exp.ConfigError("give --sigma2 or a 'noise' entry in the model document")
    ds = simulate(model, ptm, noise, args.n, seed=args.seed, input_kind=args.input)
    save_dataset(args.out, ds)
    return EXIT_OK


def cmd_identify(args) -> int:
    ds = load_dataset(args.data)
    ident = identify(ds, args.n_modes, sigma_max=args.sigma_max, grid=args.grid,
                     epsilon=args.epsilon, pool=args.pool, seed=args.seed)
    est = ident.sigma
    print(f"sigma*: {est.sigma!r}")
    print(f"status: {est.status}")
    print(f"min singular value: {est.min_singular_value!r}")
    note = " (default: 1e-3 x largest singular value)" if est.epsilon_default else ""
    print(f"epsilon: {est.epsilon!r}{note}")
    print("c_n: " + " ".join(repr(float(v)) for v in est.c_n))
    for i, b in enumerate(ident.b, 1):
        print(f"subsystem {i}: " + " ".join(repr(float(v)) for v in b))
    model = ident.model
    if args.truth:
        true_model, _, _ = load_model(args.truth)
        perm, err = match_to_truth(ident.b, true_model.coefficient_vectors())
        # relabel so mode i of the saved model estimates true mode i
        model = SarModel.from_coefficient_vectors(ident.b[list(perm)], ds.n_a)
        print("labels aligned to truth: " + " ".join(str(p + 1) for p in perm))
    save_model(args.out, model, noise=NoiseSpec(est.sigma**2))
    if args.dump_matrix:
        from .veronese import MomentStatistics
        spec = veronese_spec(args.n_modes, ds.n_a, ds.n_c)
        m = MomentStatistics.from_dataset(ds, spec).corrected(est.sigma)
        np.savetxt(args.dump_matrix, m, delimiter=",")
    if args.truth:
        report = args.report or str(Path(args.out).with_suffix(".errors.csv"))
        with open(report, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["true_subsystem", "estimated_subsystem", "coefficient", "true", "estimate", "abs_error"])
            names = ["-1"] + [f"a{j}" for j in range(1, ds.n_a + 1)] + [f"c{j}" for j in range(1, ds.n_c + 1)]
            tb = true_model.coefficient_vectors()
            for i, p in enumerate(perm):
                for q, name in enumerate(names[1:], 1):
                    w.writerow([i + 1, p + 1, name, repr(float(tb[i, q])),
                                repr(float(ident.b[p, q])), repr(float(err[i, q]))])
        print(f"max coefficient error: {float(err.max())!r}")
    return EXIT_OK


def cmd_decode(args) -> int:
    ds = load_dataset(args.data)
    model, _, noise = load_model(args.model)
    sigma = args.sigma if args.sigma is not None else (noise.sigma if noise else None)
    if sigma is None:
        raise exp.ConfigError("give --sigma or a 'noise' entry in the model document")
    plan = snippet_plan(ds.N, ds.n_a, args.n_l)
    decoding, counts = decode_all(ds, model, sigma, plan)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["start", "hypothesis", "loglik"])
        for d in decoding:
            w.writerow([d.start, " ".join(map(str, d.hypothesis)), repr(d.loglik)])
    counts_path = args.counts or str(Path(args.out).with_suffix(".counts.csv"))
    write_counts(counts_path, counts)
    print("n_ij:")
    for row in counts.n_ij:
        print(" ".join(str(int(v)) for v in row))
    if decoding.regularized:
        print(f"regularized covariances for hypotheses: {list(decoding.regularized)}")
    return EXIT_OK


def cmd_estimate_ptm(args) -> int:
    counts = read_counts(args.counts)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        P = estimate_ptm(counts, args.smoothing)
    unvisited = unvisited_states(counts)
    if unvisited and args.smoothing == 0:
        print(f"unvisited states set to uniform rows: {unvisited}")
    if args.smoothing:
        print(f"smoothing: {args.smoothing!r}")
    Path(args.out).write_text(json.dumps({"ptm": P.p.tolist(), "smoothing": args.smoothing},
                                         indent=2) + "\n")
    for row in P.p:
        print(" ".join(repr(float(v)) for v in row))
    if args.truth:
        _, true_ptm, _ = load_model(args.truth)
        if true_ptm is None:
            raise exp.ConfigError("truth document has no 'ptm' entry")
        print(f"normalized Frobenius: {normalized_frobenius(P, true_ptm)!r}")
    return EXIT_OK


def _experiment_config(args) -> exp.ExperimentConfig:
    cfg = exp.load_config(args.config) if args.config else exp.ExperimentConfig()
    overrides = {}
    for name in ("sigma2", "N", "seeds", "n_l", "epsilon", "sigma_max", "grid", "smoothing",
                 "master_seed", "input_kind"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    for name in ("n_modes", "n_a", "n_c", "a_range", "c_range"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = tuple(value) if name.endswith("range") else value
    if args.model is not None:
        if args.model == "random":
            overrides["model"] = overrides["ptm"] = "random"
        else:
            model, ptm, _ = load_model(args.model)
            overrides["model"] = model
            overrides["ptm"] = ptm if ptm is not None else "random"
    if args.out_dir is not None:
        overrides["output_dir"] = args.out_dir
    if args.true_params:
        overrides["use_true_params"] = True
    try:
        return replace(cfg, **overrides)
    except (TypeError, ValueError) as exc:
        raise exp.ConfigError(str(exc)) from exc


def cmd_experiment(args) -> int:
    cfg = _experiment_config(args)
    report = exp.run_experiment(cfg, args.workers)
    if not cfg.output_dir:
        sys.stdout.write(exp.report_csv(report))
    for r in report.runs:
        print(f"sigma2={r.sigma2:g} N={r.N} seed={r.seed} status={r.status} "
              f"norm={r.norm:.6f} gamma={r.gamma:.4f} sigma*={r.sigma_est:.4f}", file=sys.stderr)
    if report.failures:
        for r in report.failures:
            print(f"run failed (sigma2={r.sigma2:g}, N={r.N}, seed={r.seed}): {r.error}",
                  file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _experiment_config(args)
    rows = exp.run_convergence_sweep(cfg, args.workers)
    if not cfg.output_dir:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["sigma2", "seed", "N", "norm", "status"])
        for r in rows:
            w.writerow([r["sigma2"], r["seed"], r["N"], repr(r["norm"]), r["status"]])
    return EXIT_RUN if any(r["status"] != "ok" for r in rows) else EXIT_OK


def cmd_plot(args) -> int:
    rows = exp.read_sweep_csv(args.sweep)
    exp.write_svg(rows, args.out)
    return EXIT_OK


def _experiment_flags(p):
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--sigma2", type=float, nargs="+")
    p.add_argument("--N", type=int, nargs="+")
    p.add_argument("--seeds", type=int, nargs="+")
    p.add_argument("--n-l", dest="n_l", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--sigma-max", dest="sigma_max", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--smoothing", type=float)
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument("--input", dest="input_kind", choices=["uniform", "prbs", "gaussian"])
    p.add_argument("--model", help="model document (its ptm is used if present) or 'random'")
    p.add_argument("--n-modes", dest="n_modes", type=int, help="modes of a random model")
    p.add_argument("--n-a", dest="n_a", type=int, help="AR order of a random model")
    p.add_argument("--n-c", dest="n_c", type=int, help="input order of a random model")
    p.add_argument("--a-range", dest="a_range", type=float, nargs=2)
    p.add_argument("--c-range", dest="c_range", type=float, nargs=2)
    p.add_argument("--true-params", action="store_true",
                   help="inject the true sigma and coefficients (decoder ablation)")
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--workers", type=int, help=f"worker processes (default ${exp.WORKERS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sarjump", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a dataset from a model document")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True, help="number of samples N")
    p.add_argument("--sigma2", type=float, help="noise variance (overrides the document)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", choices=["uniform", "prbs", "gaussian"], default="uniform")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="estimate noise level and subsystems")
    p.add_argument("--data", required=True)
    p.add_argument("--n-modes", dest="n_modes", type=int, required=True)
    p.add_argument("--sigma-max", dest="sigma_max", type=float)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--pool", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="estimated model document")
    p.add_argument("--truth", help="true model document; enables the error report")
    p.add_argument("--report", help="coefficient error CSV (with --truth)")
    p.add_argument("--dump-matrix", dest="dump_matrix", help="write the corrected matrix as CSV")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("decode", help="maximum-likelihood switching on snippets")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--n-l", dest="n_l", type=int, default=2)
    p.add_argument("--sigma", type=float, help="noise std (overrides the document)")
    p.add_argument("--out", required=True, help="per-snippet decisions CSV")
    p.add_argument("--counts", help="transition counts CSV")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("estimate-ptm", help="transition matrix from counts")
    p.add_argument("--counts", required=True)
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--truth", help="model document holding the true ptm")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate_ptm)

    p = sub.add_parser("experiment", help="seeded simulate-and-identify runs")
    _experiment_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("sweep", help="PTM error against N")
    _experiment_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG line chart of a sweep CSV")
    p.add_argument("--sweep", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (exp.ConfigError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"sarjump: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"sarjump: run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
