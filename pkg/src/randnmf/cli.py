"""Command-line harness: ``randnmf synth|fit|bench``.

Exit codes: 0 success, 1 runtime or data failure, 2 usage error.

Every output file ``path`` gets a ``path.manifest`` next to it: flat
``key=value`` lines holding the command, all options, the seed, a 64-bit
digest of the input file, the start time and the library version.
"""

import argparse
import csv
import datetime
import hashlib
import os
import statistics
import sys
import time

import numpy as np

from . import __version__
from .data_io import SYNTH_DISTS, read_matrix, synth_lowrank, write_matrix
from .errors import DataError, ParameterError
from .hals import INIT_SCHEMES, STOP_RULES, UPDATE_ORDERS, RegConfig, SolverOptions, hals_fit
from .rhals import RandomizedOptions, rhals_fit

METHODS = ("hals", "rhals")
BENCH_HEADER = ["method", "mean_time_s", "speedup_vs_hals", "iterations", "rel_err"]


class UsageError(Exception):
    pass


def file_digest(path):
    h = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(output, command, args, input_digest, started):
    lines = {
        "command": command,
        "output": os.fspath(output),
        "seed": getattr(args, "seed", ""),
        "input_digest": input_digest,
        "start_timestamp": started,
        "version": __version__,
    }
    for key, value in sorted(vars(args).items()):
        if key not in ("func", "command"):
            lines.setdefault(f"opt.{key}", value)
    with open(f"{output}.manifest", "w") as fh:
        for key, value in lines.items():
            fh.write(f"{key}={value}\n")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _load_input(path):
    X = read_matrix(path)
    neg = X < 0
    if neg.any():
        i, j = np.argwhere(neg)[0]
        raise DataError(f"input contains negative entries at ({i},{j})")
    return X


def _solver_options(args, shape):
    if args.rank < 1 or args.rank > min(shape):
        raise UsageError(f"--rank must be in [1, {min(shape)}], got {args.rank}")
    common = dict(
        rank=args.rank,
        max_iter=args.max_iter,
        tol=args.tol,
        init=args.init,
        update_order=args.order,
        stop=args.stop,
        seed=args.seed,
        reg=RegConfig(args.alpha_w, args.alpha_h, args.beta_w, args.beta_h),
    )
    try:
        return {
            "hals": SolverOptions(**common),
            "rhals": RandomizedOptions(
                **common,
                oversample=args.oversample,
                power_iters=args.power,
                trace_full_every=args.trace_full_every,
            ),
        }
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc


def _run(method, X, opts):
    fit = hals_fit if method == "hals" else rhals_fit
    t = time.perf_counter()
    factors, trace = fit(X, opts[method])
    return factors, trace, time.perf_counter() - t


def cmd_synth(args):
    started = _now()
    try:
        X = synth_lowrank(args.rows, args.cols, args.rank, noise=args.noise, seed=args.seed, dist=args.dist)
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    write_matrix(args.out, X)
    write_manifest(args.out, "synth", args, "none", started)
    return 0


def cmd_fit(args):
    started = _now()
    X = _load_input(args.input)
    digest = file_digest(args.input)
    opts = _solver_options(args, X.shape)
    factors, trace, elapsed = _run(args.method, X, opts)
    for path, M in ((args.out_w, factors.W), (args.out_h, factors.H)):
        if path:
            write_matrix(path, M)
            write_manifest(path, "fit", args, digest, started)
    if args.trace:
        trace.to_csv(args.trace)
        write_manifest(args.trace, "fit", args, digest, started)
    final = trace.final
    print(f"{args.method}: {final.iteration} sweeps, {elapsed:.3f} s, rel_err {final.rel_err:.3e} ({trace.stop_reason})")
    return 0


def cmd_bench(args):
    started = _now()
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise UsageError(f"--methods must be a comma list drawn from {METHODS}, got {args.methods!r}")
    if args.repeat < 1:
        raise UsageError(f"--repeat must be >= 1, got {args.repeat}")
    X = _load_input(args.input)
    digest = file_digest(args.input)
    opts = _solver_options(args, X.shape)

    rows = {}
    for method in methods:
        times = []
        for _ in range(args.repeat):
            _, trace, elapsed = _run(method, X, opts)
            times.append(elapsed)
        rows[method] = (statistics.fmean(times), trace.iterations, trace.final.rel_err)

    base = rows["hals"][0] if "hals" in rows else None
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_HEADER)
        for method, (mean_t, iters, rel) in rows.items():
            speedup = base / mean_t if base is not None else float("nan")
            writer.writerow([method, repr(mean_t), repr(speedup), iters, repr(rel)])
            print(f"{method}: {mean_t:.3f} s, speedup {speedup:.2f}, {iters} sweeps, rel_err {rel:.3e}")
    write_manifest(args.out, "bench", args, digest, started)
    return 0


def _add_solver_flags(p):
    p.add_argument("--input", required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--oversample", type=int, default=20)
    p.add_argument("--power", type=int, default=2)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--stop", choices=STOP_RULES, default="pgrad")
    p.add_argument("--init", choices=INIT_SCHEMES, default="svd")
    p.add_argument("--order", choices=UPDATE_ORDERS, default="grouped")
    p.add_argument("--alpha-w", type=float, default=0.0)
    p.add_argument("--alpha-h", type=float, default=0.0)
    p.add_argument("--beta-w", type=float, default=0.0)
    p.add_argument("--beta-h", type=float, default=0.0)
    p.add_argument("--trace-full-every", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="randnmf", description="Randomized HALS for nonnegative matrix factorization")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a nonnegative low-rank matrix")
    p.add_argument("--rows", type=int, required=True)
    p.add_argument("--cols", type=int, required=True)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--dist", choices=SYNTH_DISTS, default="rectified")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="factor a matrix file")
    _add_solver_flags(p)
    p.add_argument("--method", choices=METHODS, default="rhals")
    p.add_argument("--out-w")
    p.add_argument("--out-h")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bench", help="time solvers against deterministic HALS")
    _add_solver_flags(p)
    p.add_argument("--methods", default="hals,rhals")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"randnmf {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, OSError, ParameterError) as exc:
        print(f"randnmf {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
