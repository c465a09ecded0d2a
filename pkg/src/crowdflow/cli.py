"""Command line front end: ``crowdflow run|sweep|mesh-info|validate-config``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .outputs import mesh_info, write_mesh_info, write_run, write_snapshot
from .simulation import Model, NumericalAbort, run
from .sweep import GRID_C, GRID_THETA, sweep, tune, write_sweep

log = logging.getLogger("crowdflow")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _load(args):
    scn = load_config(args.config)
    if getattr(args, "snapshot_every", None) is not None:
        if not args.snapshot_every > 0:
            raise ConfigError([f"--snapshot-every: must be positive (got {args.snapshot_every!r})"])
        scn = scn.replace(snapshot_every=args.snapshot_every)
    return scn


def cmd_run(args) -> int:
    scn = _load(args)
    model = Model(scn)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        res = run(scn, model)
    except NumericalAbort as exc:
        write_snapshot(out / "abort_snapshot.csv", model, exc.rho, model.velocity(exc.rho))
        print(f"error: {exc}; last valid state (t={exc.t:.6g}) written to {out / 'abort_snapshot.csv'}",
              file=sys.stderr)
        return 3
    data = write_run(out, model, res)
    print(json.dumps({k: data[k] for k in ("Ta_over_T", "delta_rho", "steps")}))
    return 0


def cmd_sweep(args) -> int:
    scn = _load(args)
    cells = sweep(scn, args.c, args.theta, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_sweep(out / "sweep.csv", cells)
    failed = sum(1 for c in cells if c.error)
    report = {"cells": len(cells), "failed": failed}
    if args.Ta_target is not None:
        t = tune(cells, args.Ta_target, args.drho_target)
        report["tuned_c"] = t.c
        report["tuned_theta"] = t.theta
        (out / "tuning.json").write_text(json.dumps({"Ta_target": args.Ta_target, "drho_target": args.drho_target,
                                                     "c": t.c, "theta": t.theta}, indent=2) + "\n")
    print(json.dumps(report))
    return 0


def cmd_mesh_info(args) -> int:
    model = Model(_load(args))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        info = write_mesh_info(Path(args.out) / "mesh_info.json", model)
    else:
        info = mesh_info(model)
    for k, v in info.items():
        print(f"{k:18s} {v}")
    return 0


def cmd_validate(args) -> int:
    _load(args)
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="crowdflow", description="Macroscopic crowd flow on walkways.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--config", required=True, help="TOML scenario file")
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker processes (sweep only)")
        sp.add_argument("--snapshot-every", type=float, default=None, help="snapshot interval in scaled time")

    sp = sub.add_parser("run", help="simulate one scenario")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="run a (c, theta) grid and write the tuning table")
    common(sp)
    sp.add_argument("--c", type=_floats, default=list(GRID_C), help="comma-separated c values")
    sp.add_argument("--theta", type=_floats, default=list(GRID_THETA), help="comma-separated theta values (deg)")
    sp.add_argument("--Ta-target", type=float, default=None, help="target Ta/T for the tuning lookup")
    sp.add_argument("--drho-target", type=float, default=0.0, help="target delta_rho for the tuning lookup")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("mesh-info", help="print mesh statistics")
    common(sp, out_required=False)
    sp.set_defaults(func=cmd_mesh_info)

    sp = sub.add_parser("validate-config", help="check a scenario file")
    common(sp, out_required=False)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
