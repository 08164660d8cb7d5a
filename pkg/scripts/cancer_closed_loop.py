"""Cyclic chemo/immunotherapy scenarios.

For each variant prints the lymphocyte minimum, the day the tumor first falls
below 1e-3 of its initial size and the drug totals.

    python3 scripts/cancer_closed_loop.py cancer cancer-umax-20
"""

import argparse
from pathlib import Path

import numpy as np

from dfmpc.cases import SCENARIOS, get_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    names = sorted(n for n in SCENARIOS if n.startswith("cancer"))
    ap.add_argument("names", nargs="*", default=["cancer", "cancer-umax-20"], choices=names)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    for name in args.names:
        sc = get_scenario(name)
        log = sc.run()
        x4 = log.xx[:, 3]
        below = np.flatnonzero(x4 < x4[0] * 1e-3)
        t_clear = f"{log.tt[below[0]]:g} d" if below.size else "never"
        dose = log.uu[:-1].sum(axis=0) * sc.definition.ode.tau
        print(
            f"{name}: N1={sc.definition.uparam.N1} N2={sc.definition.uparam.N2} "
            f"min x2={log.xx[:, 1].min():.4e} cleared at {t_clear} "
            f"x4(end)={x4[-1]:.2e} doses={dose.round(2).tolist()}"
        )
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            log.to_csv(args.out / f"{name}.csv")


if __name__ == "__main__":
    main()
