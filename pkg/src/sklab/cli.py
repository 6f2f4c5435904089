"""Command-line entry point.

Exit status: 0 when every criterion passes, 1 when a criterion fails,
2 on configuration or usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from sklab import limits, models, skorokhod
from sklab.cadlag import CadlagPath
from sklab.errors import ConfigError, DomainError, UnsupportedError
from sklab.harness import config as hconfig
from sklab.harness import experiments, report
from sklab.rng import stream

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text: str) -> tuple:
    return tuple(int(float(v)) for v in _floats(text))


def _int(text: str) -> int:
    # accepts 1e5-style literals
    try:
        v = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if v != int(v):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(v)


def _write_json(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _seed(args) -> int:
    env = os.environ.get(hconfig.SEED_ENV)
    return int(env, 0) if env else args.seed


# -- simulate --------------------------------------------------------------


def cmd_simulate(args) -> int:
    model = models.MovingMaximaModel(args.alpha, args.coeffs)
    if args.order is not None and args.order != model.order:
        raise ConfigError(f"--order {args.order} disagrees with {len(args.coeffs)} coefficients")
    seed = _seed(args)
    a_n = models.norming(model, args.n, args.norming) if args.n >= 2 else 1.0
    samples = np.stack([models.moving_maxima_sequence(model, args.n, stream(seed, k)) for k in range(args.reps)])
    if args.out and args.out.endswith(".csv"):
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replica", "k", "x"])
            for r, row in enumerate(samples):
                for k, x in enumerate(row, start=1):
                    w.writerow([r, k, repr(float(x))])
    else:
        doc = {
            "model": model.to_dict(),
            "n": args.n,
            "reps": args.reps,
            "seed": seed,
            "norming": models.NormingMode.parse(args.norming).value,
            "a_n": a_n,
            "samples": samples.tolist(),
        }
        _write_json(doc, args.out)
    return EXIT_OK


# -- dist ------------------------------------------------------------------


def _load_path(path: str) -> CadlagPath:
    try:
        with open(path) as fh:
            return CadlagPath.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise ConfigError(f"cannot read path {path}: {exc}") from exc


def cmd_dist(args) -> int:
    x = _load_path(args.path_a)
    if args.metric == "omega":
        if args.delta is None:
            raise ConfigError("omega needs --delta")
        _write_json({"metric": "omega", "delta": args.delta, "value": skorokhod.omega_delta(x, args.delta)}, args.out)
        return EXIT_OK
    if args.path_b is None:
        raise ConfigError(f"{args.metric} needs two paths")
    y = _load_path(args.path_b)
    fn = skorokhod.m1_distance if args.metric == "m1" else skorokhod.wm1_distance
    res = fn(x, y, tolerance=args.tolerance)
    _write_json({"metric": args.metric, **res.to_dict()}, args.out)
    return EXIT_OK


# -- limit -----------------------------------------------------------------


def cmd_limit(args) -> int:
    spec = limits.LimitSpec(args.alpha, args.theta, args.cplus, args.cminus, args.r)
    ls = limits.simulate_limit_joint(spec, args.tgrid, args.trunc, args.reps, _seed(args))
    doc = {
        "spec": spec.to_dict(),
        "t_grid": list(ls.t_grid),
        "truncation": ls.truncation,
        "tail_bound": ls.tail_bound,
        "seed": ls.seed,
        "v": ls.v.tolist(),
        "w": ls.w.tolist(),
    }
    _write_json(doc, args.out)
    return EXIT_OK


# -- exp -------------------------------------------------------------------

_EXP_FLAGS = {
    "alpha": "alpha",
    "coeffs": "coefficients",
    "n": "n",
    "reps": "reps",
    "seed": "seed",
    "norming": "norming",
    "threads": "threads",
    "r_n": "r_n",
    "trunc": "truncation",
    "limit_reps": "limit_reps",
    "tgrid": "t_grid",
    "eps": "eps",
    "u": "u_values",
    "n_ladder": "n_ladder",
}


def cmd_exp(args) -> int:
    flags = {dest: getattr(args, src) for src, dest in _EXP_FLAGS.items()}
    if args.experiment == "e5" and args.n is not None and args.n_ladder is None:
        # a single --n sets the top of the ladder
        flags["n_ladder"] = tuple(sorted({1_000, 10_000, args.n} if args.n > 10_000 else {1_000, args.n}))
    file_settings = hconfig.load_file(args.config) if args.config else {}
    if flags["threads"] is None and "threads" not in file_settings:
        flags["threads"] = os.cpu_count() or 1
    cfg = hconfig.build_config(args.experiment, file_settings, flags)
    rep = experiments.run(cfg)
    if args.out:
        report.write_report(rep, args.out)
    if args.csv:
        report.write_curves(rep, args.csv)
    if not args.out or args.verbose:
        print(rep.to_json())
    for c in rep.criteria:
        status = "PASS" if c.passed else "FAIL"
        print(f"[{status}] {rep.experiment}.{c.name}: {c.value:.6g} {c.op} {c.threshold:.6g}", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_FAIL


# -- report ----------------------------------------------------------------


def _load_report(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc


def cmd_report(args) -> int:
    docs = [_load_report(p) for p in args.reports]
    if args.action == "merge":
        merged = report.merge_reports(docs)
        _write_json(merged, args.out)
        return EXIT_OK if merged["passed"] else EXIT_FAIL
    ok = True
    for d in docs:
        for r in d["reports"] if "reports" in d else [d]:
            good = report.recheck(r)
            print(f"{r.get('experiment', '?')}: {'PASS' if good else 'FAIL'}")
            ok = ok and good
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sklab", description="M1 distances, heavy-tailed models and limit-theorem experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="draw moving-maxima samples")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--order", type=int)
    s.add_argument("--coeffs", type=_floats, default=(1.0,))
    s.add_argument("--n", type=_int, required=True)
    s.add_argument("--reps", type=_int, default=1)
    s.add_argument("--seed", type=_int, default=42)
    s.add_argument("--norming", choices=["marginal", "innovation"], default="marginal")
    s.add_argument("--out", help="output .json or .csv (default: JSON to stdout)")
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("dist", help="M1 distances and oscillation of paths stored as JSON")
    d.add_argument("metric", choices=["m1", "wm1", "omega"])
    d.add_argument("path_a")
    d.add_argument("path_b", nargs="?")
    d.add_argument("--delta", type=float)
    d.add_argument("--tolerance", type=float, default=skorokhod.DEFAULT_TOLERANCE)
    d.add_argument("--out")
    d.set_defaults(func=cmd_dist)

    lm = sub.add_parser("limit", help="simulate the limit (V, W) from its series")
    lm.add_argument("--alpha", type=float, required=True)
    lm.add_argument("--theta", type=float, required=True)
    lm.add_argument("--cplus", type=float, required=True)
    lm.add_argument("--cminus", type=float, default=0.0)
    lm.add_argument("--r", type=float, default=1.0)
    lm.add_argument("--tgrid", type=_floats, default=(0.5, 1.0))
    lm.add_argument("--trunc", type=_int, default=limits.DEFAULT_TRUNCATION)
    lm.add_argument("--reps", type=_int, default=1000)
    lm.add_argument("--seed", type=_int, default=42)
    lm.add_argument("--out")
    lm.set_defaults(func=cmd_limit)

    e = sub.add_parser("exp", help="run an experiment and write its report")
    e.add_argument("experiment", choices=list(hconfig.EXPERIMENTS))
    e.add_argument("--config", help="TOML settings file (flags win)")
    e.add_argument("--alpha", type=float)
    e.add_argument("--coeffs", type=_floats)
    e.add_argument("--n", type=_int)
    e.add_argument("--reps", type=_int)
    e.add_argument("--seed", type=_int)
    e.add_argument("--norming", choices=["marginal", "innovation"])
    e.add_argument("--threads", type=_int)
    e.add_argument("--r-n", dest="r_n", type=_int)
    e.add_argument("--trunc", type=_int)
    e.add_argument("--limit-reps", dest="limit_reps", type=_int)
    e.add_argument("--tgrid", type=_floats)
    e.add_argument("--eps", type=float)
    e.add_argument("--u", type=_floats)
    e.add_argument("--n-ladder", dest="n_ladder", type=_ints)
    e.add_argument("--out", help="report JSON path (default: stdout)")
    e.add_argument("--csv", help="prefix for curve CSV files")
    e.add_argument("--verbose", action="store_true", help="also print the report when --out is given")
    e.set_defaults(func=cmd_exp)

    r = sub.add_parser("report", help="merge or recheck report files")
    r.add_argument("action", choices=["merge", "check"])
    r.add_argument("reports", nargs="+")
    r.add_argument("--out")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (ConfigError, DomainError, UnsupportedError) as exc:
        print(f"sklab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
