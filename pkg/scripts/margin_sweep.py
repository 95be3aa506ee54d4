#!/usr/bin/env python3
"""Sweep the safety margin on (rho, beta) and report iterations to convergence.

Usage: python3 scripts/margin_sweep.py [--family welsch] [--n 5] [--margins 1.01 1.05 1.5 3]
"""

import argparse
import csv
import sys

from ttextra.graph import ring
from ttextra.params import select_parameters
from ttextra.problems import FAMILIES, make_problem
from ttextra.solver import RunConfig, run


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="regularized_ls", choices=sorted(FAMILIES))
    ap.add_argument("--n", type=int, default=5)
    ap.add_argument("--p", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-iters", type=int, default=20000)
    ap.add_argument("--margins", type=float, nargs="+", default=[1.01, 1.05, 1.2, 1.5, 2.0, 3.0])
    args = ap.parse_args(argv)

    pb = make_problem(args.family, args.n, p=args.p, seed=args.seed)
    wr = csv.writer(sys.stdout, lineterminator="\n")
    wr.writerow(["margin", "rho", "beta", "a", "converged", "iterations", "descent_violations", "final_stationarity"])
    for m in args.margins:
        ps = select_parameters(ring(args.n), pb.l, margin=m)
        tr = run(pb, ps.W, ps.W_tilde, ps.A, ps.steps, RunConfig(max_iters=args.max_iters, record_stride=args.max_iters))
        s = ps.steps
        wr.writerow([m, f"{s.rho:.6g}", f"{s.beta:.6g}", f"{s.a:.6g}", tr.converged, tr.iterations,
                     tr.descent_violations, f"{tr.last.stationarity:.3e}"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
