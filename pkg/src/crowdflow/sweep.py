"""Parameter sweeps over (c, theta) and the tuning-chart inverse lookup."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simulation import Scenario, run

log = logging.getLogger(__name__)

GRID_C = (2.5e-4, 5e-4, 7.5e-4, 10e-4, 12.5e-4)
GRID_THETA = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
HEADER = ("c", "theta", "Ta_over_T", "delta_rho")


@dataclass
class Cell:
    c: float
    theta: float  # degrees
    Ta_over_T: float = math.nan
    delta_rho: float = math.nan
    error: str | None = None


def run_cell(base: Scenario, c: float, theta: float) -> Cell:
    """One sweep cell; failures are caught and recorded, never raised."""
    try:
        res = run(base.replace(c=float(c), theta_deg=float(theta)))
        return Cell(float(c), float(theta), res.metrics.Ta_over_T, res.metrics.delta_rho)
    except Exception as exc:  # noqa: BLE001 - a sweep must survive any cell
        log.warning("cell c=%g theta=%g failed: %s", c, theta, exc)
        return Cell(float(c), float(theta), error=f"{type(exc).__name__}: {exc}")


def _cell_args(args):
    return run_cell(*args)


def sweep(base: Scenario, cs, thetas, threads: int = 1) -> list[Cell]:
    """Run every (c, theta) pair; rows come back in grid order whatever the pool does."""
    cs, thetas = list(cs), list(thetas)
    if not cs or not thetas:
        raise ValueError("sweep grids must be nonempty")
    jobs = [(base, c, th) for c in cs for th in thetas]
    if threads <= 1 or len(jobs) == 1:
        return [run_cell(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_cell_args, jobs))


def write_sweep(path, cells: list[Cell]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(HEADER)
        for cell in cells:
            w.writerow([repr(cell.c), repr(cell.theta), repr(float(cell.Ta_over_T)), repr(float(cell.delta_rho))])
    failed = [c for c in cells if c.error]
    if failed:
        err = Path(path).with_name(Path(path).stem + "_errors.csv")
        with open(err, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["c", "theta", "error"])
            for cell in failed:
                w.writerow([repr(cell.c), repr(cell.theta), cell.error])


def read_sweep(path) -> list[Cell]:
    with open(path, newline="") as fh:
        return [Cell(float(r["c"]), float(r["theta"]), float(r["Ta_over_T"]), float(r["delta_rho"]))
                for r in csv.DictReader(fh)]


def as_grid(cells: list[Cell]) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(cs, thetas, Ta[c, theta], drho[c, theta])`` from a list of cells."""
    cs = np.array(sorted({cell.c for cell in cells}))
    ths = np.array(sorted({cell.theta for cell in cells}))
    Ta = np.full((len(cs), len(ths)), np.nan)
    dr = np.full_like(Ta, np.nan)
    for cell in cells:
        i, j = np.searchsorted(cs, cell.c), np.searchsorted(ths, cell.theta)
        Ta[i, j], dr[i, j] = cell.Ta_over_T, cell.delta_rho
    return cs, ths, Ta, dr


def first_crossing(x, y, target: float) -> float:
    """Smallest ``x`` where the piecewise-linear ``y(x)`` reaches ``target``; NaN if it never does."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float) - target
    for i in range(len(x)):
        if y[i] == 0.0:
            return float(x[i])
        if i + 1 < len(x) and np.isfinite(y[i]) and np.isfinite(y[i + 1]) and y[i] * y[i + 1] < 0:
            return float(x[i] + (x[i + 1] - x[i]) * y[i] / (y[i] - y[i + 1]))
    return math.nan


@dataclass
class Tuning:
    c: float
    theta: float


def tune(cells: list[Cell], Ta_target: float, drho_target: float = 0.0, theta_ref: float | None = None) -> Tuning:
    """Read the sweep as tuning charts.

    ``c`` is picked where ``Ta/T`` reaches ``Ta_target`` along the column
    ``theta_ref`` (default: the grid theta nearest the middle of the range);
    then ``theta`` is picked where ``delta_rho``, interpolated to that ``c``,
    reaches ``drho_target``. Unreachable targets come back as NaN.
    """
    cs, ths, Ta, dr = as_grid(cells)
    if theta_ref is None:
        theta_ref = 0.5 * (ths[0] + ths[-1])
    j = int(np.argmin(np.abs(ths - theta_ref)))
    c = first_crossing(cs, Ta[:, j], Ta_target)
    if math.isnan(c):
        return Tuning(math.nan, math.nan)
    dr_at_c = np.array([np.interp(c, cs, dr[:, k]) for k in range(len(ths))])
    return Tuning(c, first_crossing(ths, dr_at_c, drho_target))
