"""Convergence trace of the trust-region solver on a few analytic problems.

    python3 scripts/solver_convergence.py --out runs/solver
"""

import argparse
from pathlib import Path

import numpy as np

from dfmpc.solver import solve, write_trace_csv

rosen = lambda p: (float(100 * (p[1] - p[0] ** 2) ** 2 + (1 - p[0]) ** 2), -1.0)  # noqa: E731

PROBLEMS = {
    "quadratic": (lambda p: ((p[0] - 3) ** 2, -1.0), [0.0], [-10.0], [10.0]),
    "active-bound": (lambda p: (p[0], 1 - p[0]), [5.0], [-10.0], [10.0]),
    "sphere-5d": (lambda p: (float(p @ p), -1.0), [0.7, -0.4, 0.9, 0.1, -0.8], [-1.0] * 5, [1.0] * 5),
    "rosenbrock": (rosen, [-1.2, 1.0], [-2.0, -2.0], [2.0, 2.0]),
    "disk": (lambda p: (p[0] + p[1], float(p @ p) - 1), [0.0, 0.0], [-2.0, -2.0], [2.0, 2.0]),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nev", type=int, default=1000)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    for name, (f, p0, lo, hi) in PROBLEMS.items():
        res = solve(f, p0, lo, hi, args.nev, trace=args.out is not None)
        print(f"{name:13s} p*={np.array2string(res.p_best, precision=6)} J={res.J_best:.3e} "
              f"g={res.g_best:.1e} evals={res.n_eval} rounds={res.rounds}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            write_trace_csv(args.out / f"{name}.csv", res.trace)


if __name__ == "__main__":
    main()
