"""Convergence traces of HALS and randomized HALS on a synthetic matrix.

Writes one trace CSV per method plus a side-by-side summary to ``--outdir``.

    python scripts/convergence_trace.py --rows 2000 --cols 1000 --rank 20
"""

import argparse
import os

import numpy as np

from randnmf import RandomizedOptions, SolverOptions, hals_fit, rhals_fit, synth_lowrank


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=2000)
    p.add_argument("--cols", type=int, default=1000)
    p.add_argument("--rank", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--sweeps", type=int, default=200)
    p.add_argument("--oversample", type=int, default=20)
    p.add_argument("--power", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", default="results/convergence")
    args = p.parse_args(argv)

    os.makedirs(args.outdir, exist_ok=True)
    X = synth_lowrank(args.rows, args.cols, args.rank, noise=args.noise, seed=args.seed)
    common = dict(rank=args.rank, max_iter=args.sweeps, stop="none", seed=args.seed)
    runs = {
        "hals": hals_fit(X, SolverOptions(**common)),
        # full error every sweep so both curves are comparable
        "rhals": rhals_fit(
            X, RandomizedOptions(**common, oversample=args.oversample, power_iters=args.power, trace_full_every=1)
        ),
    }
    for name, (_, trace) in runs.items():
        trace.to_csv(os.path.join(args.outdir, f"{name}.csv"))

    print(f"{'sweep':>6} {'hals rel_err':>14} {'rhals rel_err':>14}")
    h, r = runs["hals"][1], runs["rhals"][1]
    for it in sorted(set(np.unique(np.geomspace(1, args.sweeps, 12).astype(int))) | {0}):
        print(f"{it:>6} {h[it].rel_err:>14.3e} {r[it].rel_err:>14.3e}")
    print(f"time: hals {h.final.elapsed_s:.2f} s, rhals {r.final.elapsed_s:.2f} s")


if __name__ == "__main__":
    main()
