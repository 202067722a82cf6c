"""Command-line interface: ``lpm {sample,estimate,balance,demo,discretize}``.

CSV input is comma separated with a header row. Row indices are 0-based.
Exit status is 0 on success, 2 for usage or input-format errors and 3 for
domain errors such as probabilities outside [0, 1].
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

import numpy as np

from . import __version__
from .continuous import (
    ISSpec,
    Normal,
    Uniform,
    default_population_size,
    discretize,
    discretize_is,
    standardize,
)
from .estimation import (
    SCHEMA_VERSION,
    ht_estimate,
    local_mean_variance,
    spatial_balance,
)
from .experiments.harness import ExperimentConfig, replicate_rng
from .pivotal import PivotalSampler

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN = 0, 2, 3
EXPERIMENTS = ("integral", "option", "rare-event", "rainforest")


class UsageError(Exception):
    """Bad flags or malformed input; exit status 2."""


class DomainError(Exception):
    """Well-formed input the methods cannot handle; exit status 3."""


# -- input ------------------------------------------------------------------

def read_table(path):
    """Read a numeric CSV into (header, float matrix)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except (UnicodeDecodeError, csv.Error) as exc:
        raise UsageError(f"{path}: malformed CSV ({exc})") from exc
    if len(rows) < 2:
        raise UsageError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise UsageError(f"{path}: duplicate column names")
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise UsageError(
                f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}"
            )
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise UsageError(f"{path}: non-numeric value ({exc})") from exc
    if not np.all(np.isfinite(data)):
        raise UsageError(f"{path}: non-finite value")
    return header, data


def _column(header, data, name, path, required=True):
    if name in header:
        return data[:, header.index(name)]
    if required:
        raise UsageError(f"{path}: no column named {name!r}")
    return None


def _coord_block(header, data, names, exclude, path):
    if names:
        cols = [c.strip() for c in names.split(",") if c.strip()]
        missing = [c for c in cols if c not in header]
        if missing:
            raise UsageError(f"{path}: unknown coordinate columns {missing}")
    else:
        cols = [h for h in header if h not in exclude]
    return cols, data[:, [header.index(c) for c in cols]] if cols else None


def _distribution(args):
    q = args.dim
    if q < 1:
        raise UsageError("--dim must be at least 1")
    try:
        if args.dist == "uniform":
            return Uniform.cube(q, args.low, args.high)
        return Normal((args.mean,) * q, (args.sd,) * q)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


# -- output -----------------------------------------------------------------

def _emit(args, text):
    if not text.endswith("\n"):
        text += "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(x):
    return repr(float(x))


# -- commands ---------------------------------------------------------------

def cmd_sample(args):
    rng = np.random.default_rng(args.seed)
    if args.input:
        header, data = read_table(args.input)
        prob_col = args.prob_col or ("prob" if "prob" in header and args.n is None else None)
        probs = _column(header, data, prob_col, args.input) if prob_col else None
        names, X = _coord_block(header, data, args.coords, {prob_col, "prob"}, args.input)
        if X is None:
            raise UsageError(f"{args.input}: no coordinate columns")
    else:
        if args.N is None:
            raise UsageError("--dist needs --N")
        pop = discretize(_distribution(args), args.N, rng)
        X, probs = pop.coords, None
        names = [f"x{d}" for d in range(X.shape[1])]
        data, header = X, names
    N = X.shape[0]
    if probs is None:
        if args.n is None:
            raise UsageError("give --n, --prob-col or a 'prob' column")
        if not 1 <= args.n <= N:
            raise DomainError(f"--n must lie in [1, {N}], got {args.n}")
        probs = np.full(N, args.n / N)
    if args.standardize:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            X = standardize(X)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    try:
        res = PivotalSampler(probs, X, args.distance, args.method).sample(rng)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    idx = res.selected
    if args.format == "json":
        out = {
            "schema_version": SCHEMA_VERSION,
            "method": args.method,
            "N": N,
            "n": int(idx.size),
            "steps": res.steps,
            "indices": idx.tolist(),
        }
        if args.rows:
            out["rows"] = {"columns": header, "values": data[idx].tolist()}
        return _json(out)
    if args.rows:
        return _csv_text(["index"] + header, [[i] + [_num(v) for v in data[i]] for i in idx])
    return "".join(f"{i}\n" for i in idx)


def cmd_estimate(args):
    header, data = read_table(args.input)
    y = _column(header, data, args.y_col, args.input)
    pi = _column(header, data, args.prob_col, args.input)
    w = _column(header, data, args.weight_col, args.input, required=args.weight_col != "weight")
    if np.any(pi <= 0):
        raise DomainError("inclusion probabilities must be positive")
    if np.any(pi > 1):
        raise DomainError("inclusion probabilities cannot exceed 1")
    n = y.size
    # without --N the population size is estimated by sum(1 / pi)
    N = args.N if args.N is not None else int(round(float(np.sum(1.0 / pi))))
    try:
        report = ht_estimate(y, pi, N, weights=w)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    if args.nprime is not None:
        if not 2 <= args.nprime <= n:
            raise UsageError(f"--nprime must lie in [2, n={n}], got {args.nprime}")
        # the estimate is the mean of z, so the variance is computed on z
        z = n * (y if w is None else w * y) / (N * pi)
        exclude = {args.y_col, args.prob_col, args.weight_col}
        _, X = _coord_block(header, data, args.coords, exclude, args.input)
        if X is None:
            if args.nprime < n:
                raise UsageError("--nprime below n needs coordinate columns in the input")
            X = np.zeros((n, 1))
        report.variance = local_mean_variance(z, X, args.distance, args.nprime)
        report.n_prime = args.nprime
        report.method = "ht+local-mean"
    report.point = float(report.point)
    if args.format == "csv":
        d = report.to_dict()
        return _csv_text(list(d), [["" if v is None else v for v in d.values()]])
    return _json(report.to_dict())


def _balance_source(args, rng):
    """One (sample, reference) pair for a generated population."""
    dist = _distribution(args)
    N = args.N if args.N is not None else default_population_size(args.n)
    if not 1 <= args.n <= N:
        raise DomainError(f"--n must lie in [1, {N}], got {args.n}")
    cloud = discretize(dist, N, rng).coords
    if args.method == "iid":
        return dist.sample(args.n, rng), cloud
    probs = np.full(N, args.n / N)
    idx = PivotalSampler(probs, cloud, args.distance, args.method).sample(rng).selected
    return cloud[idx], cloud


def cmd_balance(args):
    if args.sample:
        if args.replicates != 1:
            raise UsageError("--replicates needs a generated population (--dist)")
        if not args.reference:
            raise UsageError("--sample needs --reference")
        _, S = read_table(args.sample)
        _, R = read_table(args.reference)
        if S.shape[1] != R.shape[1]:
            raise UsageError(
                f"dimension mismatch: sample has {S.shape[1]} columns, reference {R.shape[1]}"
            )
        try:
            rep = spatial_balance(S, R, np.random.default_rng(args.seed), args.distance)
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
        if args.format == "csv":
            return _csv_text(["index", "cell_mass"], [[i, _num(a)] for i, a in enumerate(rep.cell_masses)])
        return _json(rep.to_dict())
    if args.n is None:
        raise UsageError("--dist needs --n")
    if args.replicates < 1:
        raise UsageError("--replicates must be at least 1")
    seed = np.random.SeedSequence().entropy if args.seed is None else args.seed
    values = []
    for k in range(args.replicates):
        rng = replicate_rng(seed, k)
        S, R = _balance_source(args, rng)
        values.append(spatial_balance(S, R, rng, args.distance).balance)
    values = np.array(values)
    if args.format == "csv":
        return _csv_text(["replicate", "balance"], [[k, _num(b)] for k, b in enumerate(values)])
    return _json({
        "schema_version": SCHEMA_VERSION,
        "method": args.method,
        "n": args.n,
        "N": args.N if args.N is not None else default_population_size(args.n),
        "replicates": int(values.size),
        "balance": float(values.mean()),
        "balance_sd": float(values.std(ddof=1)) if values.size > 1 else None,
    })


def _demo_report(args):
    from .experiments import integral, option, rainforest, rare_event

    defaults = {
        "integral": (100, 10_000, 10_000, "lpm2"),
        "option": (100, 10_000, 10_000, "lpm2"),
        "rare-event": (100, 10_000, 10_000, "is+lpm2"),
        "rainforest": (50, 10_000, 200, "lpm2"),
    }[args.experiment]
    n = args.n if args.n is not None else defaults[0]
    N = args.N if args.N is not None else defaults[1]
    m = args.m if args.m is not None else defaults[2]
    method = args.method or defaults[3]
    params = {}
    if args.nprime is not None:
        params["n_prime"] = args.nprime
    if args.strata is not None:
        params["strata"] = args.strata
    if args.shift is not None:
        params["shift"] = args.shift
    try:
        cfg = ExperimentConfig(args.experiment, n, N, m, args.seed or 0, method, params)
        if args.experiment == "integral":
            if args.sweep:
                return integral.run_integral_sweep(cfg, args.sweep)
            return integral.run_integral_experiment(cfg)
        if args.experiment == "option":
            p = option.OptionParams(args.spot, args.strike, args.rate, args.sigma, args.maturity)
            return option.run_option_experiment(cfg, p)
        if args.experiment == "rare-event":
            return rare_event.run_rare_event_experiment(cfg)
        p = rainforest.RainforestParams(
            args.R, args.M, 0.0, args.epsilon, args.t_max
        )
        grid = args.xcrit if args.xcrit else rainforest.DEFAULT_GRID
        return rainforest.run_rainforest_experiment(cfg, p, grid)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


def cmd_demo(args):
    report = _demo_report(args)
    if args.format == "csv":
        return report.to_csv()
    return _json(report.to_dict(timing=args.timing))


def cmd_discretize(args):
    if args.N is None:
        raise UsageError("--N is required")
    if args.N < 1:
        raise UsageError("--N must be at least 1")
    rng = np.random.default_rng(args.seed)
    dist = _distribution(args)
    try:
        if args.proposal_shift is not None:
            if args.dist != "normal":
                raise UsageError("--proposal-shift applies to --dist normal")
            shifted = tuple(m + args.proposal_shift for m in dist.mean)
            pop = discretize_is(ISSpec(dist, Normal(shifted, dist.sd)), args.N, rng)
        else:
            pop = discretize(dist, args.N, rng)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc
    if args.format == "json":
        record = dict(pop.seed_record, seed=args.seed)
        return _json({
            "schema_version": SCHEMA_VERSION,
            "seed_record": record,
            "coords": pop.coords.tolist(),
            "weights": pop.weights.tolist(),
        })
    buf = io.StringIO()
    pop.to_csv(buf)
    return buf.getvalue()


# -- parser -----------------------------------------------------------------

def _u64(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=_u64, default=default,
                        help="unsigned 64-bit seed; equal seeds give identical output")
    parser.add_argument("--output", default=default, help="output path (default: stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default=default)


def _dist_flags(parser):
    parser.add_argument("--dim", type=int, default=1, help="dimension q of --dist")
    parser.add_argument("--low", type=float, default=0.0)
    parser.add_argument("--high", type=float, default=1.0)
    parser.add_argument("--mean", type=float, default=0.0)
    parser.add_argument("--sd", type=float, default=1.0)


def _method_flags(parser, methods=("lpm1", "lpm2")):
    parser.add_argument("--method", choices=methods, default="lpm2")
    parser.add_argument("--distance", choices=("euclidean", "cityblock", "chebyshev"),
                        default="euclidean")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lpm",
        description="Well-spread sampling with the local pivotal method.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("sample", help="select rows with LPM")
    _global_flags(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="population CSV")
    src.add_argument("--dist", choices=("uniform", "normal"), help="generate the population")
    _dist_flags(p)
    p.add_argument("--N", type=int, help="size of a generated population")
    size = p.add_mutually_exclusive_group()
    size.add_argument("--n", type=int, help="sample size, equal probabilities n/N")
    size.add_argument("--prob-col", help="column holding inclusion probabilities")
    p.add_argument("--coords", help="comma-separated coordinate columns (default: all others)")
    p.add_argument("--standardize", action="store_true", help="scale coordinates to unit sd")
    p.add_argument("--rows", action="store_true", help="also write the sampled rows")
    _method_flags(p)
    p.set_defaults(func=cmd_sample, default_format="csv")

    p = sub.add_parser("estimate", help="Horvitz-Thompson estimate from a sample CSV")
    _global_flags(p, suppress=True)
    p.add_argument("--input", required=True)
    p.add_argument("--y-col", default="y")
    p.add_argument("--prob-col", default="prob")
    p.add_argument("--weight-col", default="weight",
                   help="importance weights (used when the column exists)")
    p.add_argument("--coords", help="comma-separated coordinate columns (default: all others)")
    p.add_argument("--N", type=int, help="population size (default: round(sum(1/prob)))")
    p.add_argument("--nprime", type=int, help="neighbourhood size for the local-mean variance")
    p.add_argument("--distance", choices=("euclidean", "cityblock", "chebyshev"),
                   default="euclidean")
    p.set_defaults(func=cmd_estimate, default_format="json")

    p = sub.add_parser("balance", help="spatial balance of a sample")
    _global_flags(p, suppress=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--sample", help="sample CSV (coordinate columns only)")
    src.add_argument("--dist", choices=("uniform", "normal"), help="generate population and sample")
    p.add_argument("--reference", help="reference cloud CSV for --sample")
    _dist_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int, help="generated population size (default 100 n)")
    p.add_argument("--replicates", type=int, default=1)
    _method_flags(p, ("iid", "lpm1", "lpm2"))
    p.set_defaults(func=cmd_balance, default_format="json")

    p = sub.add_parser("demo", help="run a replicated experiment")
    _global_flags(p, suppress=True)
    p.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    p.add_argument("--method", choices=("iid", "lpm1", "lpm2", "stratified", "is", "is+lpm2"))
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--m", type=int, help="replicates")
    p.add_argument("--sweep", type=_int_list, help="integral: comma-separated N values")
    p.add_argument("--nprime", type=int, help="option: local-mean neighbourhood size")
    p.add_argument("--strata", type=int, help="integral: number of strata")
    p.add_argument("--shift", type=float, help="rare-event: proposal mean")
    p.add_argument("--spot", type=float, default=100.0)
    p.add_argument("--strike", type=float, default=120.0)
    p.add_argument("--rate", type=float, default=0.03)
    p.add_argument("--sigma", type=float, default=0.5)
    p.add_argument("--maturity", type=float, default=0.25)
    p.add_argument("--xcrit", type=_float_list, help="rainforest: comma-separated thresholds")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--M", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=1e-2)
    p.add_argument("--t-max", type=float, default=1e3)
    p.add_argument("--timing", action="store_true", help="include wall time in JSON")
    p.set_defaults(func=cmd_demo, default_format="json")

    p = sub.add_parser("discretize", help="write an iid cloud as CSV")
    _global_flags(p, suppress=True)
    p.add_argument("--dist", choices=("uniform", "normal"), required=True)
    _dist_flags(p)
    p.add_argument("--N", type=int)
    p.add_argument("--proposal-shift", type=float,
                   help="draw from a shifted unit normal and attach weights")
    p.set_defaults(func=cmd_discretize, default_format="csv")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = args.default_format
    try:
        text = args.func(args)
        _emit(args, text)
    except UsageError as exc:
        print(f"lpm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"lpm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        sys.stdout = None
        return EXIT_OK
    except OSError as exc:
        print(f"lpm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
