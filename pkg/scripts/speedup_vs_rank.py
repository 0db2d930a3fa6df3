"""Wall time of HALS and randomized HALS as the target rank grows.

    python scripts/speedup_vs_rank.py --rows 20000 --cols 2000 --ranks 10,20,40
"""

import argparse
import csv
import os
import statistics
import time

from randnmf import RandomizedOptions, SolverOptions, hals_fit, rhals_fit, synth_lowrank


def timed(fit, X, opts, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        _, trace = fit(X, opts)
        times.append(time.perf_counter() - t)
    return statistics.median(times), trace.final.rel_err


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=5000)
    p.add_argument("--cols", type=int, default=1000)
    p.add_argument("--ranks", default="5,10,20,40")
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results/speedup_vs_rank.csv")
    args = p.parse_args(argv)

    ranks = [int(r) for r in args.ranks.split(",")]
    rows = []
    for k in ranks:
        X = synth_lowrank(args.rows, args.cols, k, noise=0.01, seed=args.seed)
        common = dict(rank=k, max_iter=args.sweeps, stop="none", seed=args.seed)
        t_h, e_h = timed(hals_fit, X, SolverOptions(**common), args.repeat)
        t_r, e_r = timed(rhals_fit, X, RandomizedOptions(**common), args.repeat)
        rows.append([k, t_h, t_r, t_h / t_r, e_h, e_r])
        print(f"k={k:>3}: hals {t_h:.2f} s, rhals {t_r:.2f} s, speedup {t_h / t_r:.2f}, rel_err {e_h:.3e} / {e_r:.3e}")

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "hals_s", "rhals_s", "speedup", "hals_rel_err", "rhals_rel_err"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
