"""Walk through one crowd event on the reference walkway.

Runs the reference scenario, then prints how the walkway mass evolves
through the filling, full and leaving regimes, the egress time and the
chord profile at mid-span.

    python demos/walkway_event.py [--c 5e-4] [--theta 2] [--kind rectangle]
"""

import argparse

import numpy as np

from crowdflow.observables import plateau_window, regime_sequence
from crowdflow.simulation import Scenario, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--c", type=float, default=5e-4)
    ap.add_argument("--theta", type=float, default=2.0)
    ap.add_argument("--kind", default="rectangle")
    args = ap.parse_args()

    scn = Scenario(kind=args.kind, c=args.c, theta_deg=args.theta)
    print(f"{scn.N:.0f} pedestrians cross a {scn.L:.0f} m x {scn.B:.0f} m {scn.kind} walkway "
          f"(free crossing time T = {scn.T_ref:.1f} s)")
    res = run(scn)
    mt = res.metrics

    print("\nwalkway occupancy (fraction of the crowd on the walkway):")
    for tt in np.linspace(0, mt.t[-1], 13):
        i = min(np.searchsorted(mt.t, tt), len(mt.t) - 1)
        bar = "#" * int(round(40 * mt.M[i]))
        print(f"  t/T = {mt.t[i]:5.2f}  {mt.M[i]:5.3f}  {bar}")

    win = plateau_window(mt.t, mt.M)
    print(f"\nregimes: {' -> '.join(regime_sequence(mt.t, mt.M))}")
    if win:
        print(f"full-walkway plateau from t/T = {mt.t[win[0]]:.2f} to {mt.t[win[1]]:.2f}, "
              f"peak density {mt.max_rho_plateau:.2f} ped/m^2")
    print(f"egress time Ta = {mt.Ta_over_T:.2f} T = {mt.Ta_over_T * scn.T_ref:.0f} s")

    shape = "centre-heavy" if mt.delta_rho > 0.05 else "wall-heavy" if mt.delta_rho < -0.05 else "flat"
    print(f"\nchord profile at mid-span (delta_rho = {mt.delta_rho:+.3f}, {shape}):")
    if mt.profile_y is not None:
        top = max(mt.profile_rho_p.max(), 1e-12)
        for y, r in zip(mt.profile_y, mt.profile_rho_p):
            print(f"  y = {y:+5.2f} m  {r:5.2f}  {'#' * int(round(30 * r / top))}")


if __name__ == "__main__":
    main()
