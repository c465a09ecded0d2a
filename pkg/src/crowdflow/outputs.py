"""CSV and JSON writers for run artifacts.

Floats are written with ``repr`` so a rerun of the same scenario produces
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .field import export_field
from .simulation import Model, RunResult, Scenario


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def density_scales(scn: Scenario) -> tuple[float, float]:
    """Factors turning internal density into probability density and into ped/m^2."""
    total = scn.total_mass
    to_prob = 1.0 / total if total > 0 else 0.0
    to_ped = 1.0 / (scn.mass_per_ped * scn.L**2)
    return to_prob, to_ped


def write_snapshot(path, model: Model, rho: np.ndarray, w: np.ndarray) -> None:
    """One row per element: ``elem_id,x,y,rho,rho_p,wx,wy``.

    ``rho`` is the probability density in scaled units, ``rho_p`` the crowd
    density in pedestrians per square metre, ``w`` the scaled velocity.
    """
    to_prob, to_ped = density_scales(model.scn)
    C = model.mesh.centroids
    rows = ((k, C[k, 0], C[k, 1], rho[k] * to_prob, rho[k] * to_ped, w[k, 0], w[k, 1])
            for k in range(model.mesh.n_elements))
    _write_rows(path, ["elem_id", "x", "y", "rho", "rho_p", "wx", "wy"], rows)


def write_timeseries(path, res: RunResult, peds: bool = False) -> None:
    """``t,S,I,M,G`` per step; scaled time and mass, or seconds and pedestrians."""
    scn = res.scenario
    t, vals = res.t, (res.S, res.I, res.M, res.G)
    if peds:
        t = t * scn.T_ref
        vals = tuple(v / scn.mass_per_ped for v in vals)
    _write_rows(path, ["t", "S", "I", "M", "G"], zip(t, *vals))


def write_metrics(path, res: RunResult) -> None:
    mt = res.metrics
    _write_rows(path, ["t", "M", "G"], zip(mt.t, mt.M, mt.G))


def write_profile(path, res: RunResult) -> None:
    mt = res.metrics
    rows = [] if mt.profile_y is None else zip(mt.profile_y, mt.profile_rho_p)
    _write_rows(path, ["y", "rho_p"], rows)


def summary(res: RunResult) -> dict:
    mt = res.metrics
    scn = res.scenario
    Ta = mt.Ta_over_T
    return {
        "Ta_over_T": Ta if math.isfinite(Ta) else None,
        "Ta_seconds": Ta * scn.T_ref if math.isfinite(Ta) else None,
        "delta_rho": mt.delta_rho,
        "T_seconds": scn.T_ref,
        "max_rho_p_plateau": mt.max_rho_plateau,
        "plateau": None if mt.plateau is None else [float(mt.t[i]) for i in mt.plateau],
        "steps": res.steps,
        "t_end": float(res.t[-1]),
        "budget_drift": float(np.ptp(mt.budget())) if len(mt.t) else 0.0,
    }


def write_summary(path, res: RunResult) -> dict:
    data = summary(res)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


def mesh_info(model: Model) -> dict:
    """Mesh statistics in scaled units plus the metre values of the sizes."""
    data = model.mesh.info()
    L = model.scn.L
    data.update(L_m=L, h_min_m=data["h_min"] * L, h_max_m=data["h_max"] * L, area_m2=data["area"] * L**2)
    return data


def write_mesh_info(path, model: Model) -> dict:
    data = mesh_info(model)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


def write_run(out_dir, model: Model, res: RunResult) -> dict:
    """Every artifact of a completed run; returns the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_mesh_info(out / "mesh_info.json", model)
    export_field(model.mesh, model.field, out / "field.csv")
    write_timeseries(out / "timeseries.csv", res)
    write_timeseries(out / "timeseries_peds.csv", res, peds=True)
    write_metrics(out / "metrics.csv", res)
    write_profile(out / "profile.csv", res)
    snap_dir = out / "snapshots"
    if res.snapshots:
        snap_dir.mkdir(exist_ok=True)
    for i, (t, rho, w) in enumerate(res.snapshots):
        write_snapshot(snap_dir / f"snapshot_{i:04d}_t{t:.4f}.csv", model, rho, w)
    return write_summary(out / "summary.json", res)
