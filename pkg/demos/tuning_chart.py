"""Build a small tuning chart and read a (c, theta) pair off it.

A reduced (c, theta) grid is swept on a coarse mesh; the chart lists Ta/T
and delta_rho per cell, then the inverse lookup returns the repulsion
strength matching a target egress time and the correction angle giving a
flat chord profile.

    python demos/tuning_chart.py [--Ta 5.2] [--threads 1]
"""

import argparse

from crowdflow.simulation import Scenario
from crowdflow.sweep import as_grid, sweep, tune


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--Ta", type=float, default=5.2, help="target Ta/T")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    base = Scenario(h=1.0)
    cells = sweep(base, (2.5e-4, 7.5e-4, 12.5e-4), (1.0, 3.0, 5.0), threads=args.threads)
    cs, ths, Ta, dr = as_grid(cells)

    print("Ta/T" + "".join(f"{f'theta={t:g}':>12}" for t in ths))
    for i, c in enumerate(cs):
        print(f"{c:<8.2e}" + "".join(f"{v:12.3f}" for v in Ta[i]))
    print("\ndelta_rho" + "".join(f"{f'theta={t:g}':>12}" for t in ths))
    for i, c in enumerate(cs):
        print(f"{c:<8.2e} " + "".join(f"{v:12.3f}" for v in dr[i]))

    t = tune(cells, args.Ta)
    print(f"\ntarget Ta/T = {args.Ta}: c = {t.c:.3g}, theta for a flat profile = {t.theta:.3g} deg")
    print("(NaN means the target lies outside the swept grid)")


if __name__ == "__main__":
    main()
