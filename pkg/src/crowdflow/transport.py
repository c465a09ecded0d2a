"""Push-forward finite-volume transport on a fixed triangular mesh.

Every element is moved rigidly by its own velocity times the step, and its
mass is shared among the elements the translate overlaps, in proportion to
the overlap areas. Whatever part of a translate falls outside the mesh is
handled by the boundary: beyond an open outlet it leaves for good, anywhere
else it stays in the source element.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import translated_beyond, translated_overlaps
from .mesh import TriMesh

log = logging.getLogger(__name__)


class CFLError(RuntimeError):
    pass


class WallMode(str, enum.Enum):
    SCRAPE = "scrape"
    STOP = "stop"


@dataclass
class DensityField:
    """Piecewise-constant density, one value per mesh element."""

    mesh: TriMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_elements,):
            raise ValueError("density needs one value per element")
        if np.any(self.values < 0):
            raise ValueError("density must be nonnegative")

    @property
    def mass(self) -> float:
        return float(self.values @ self.mesh.areas)

    def masses(self) -> np.ndarray:
        return self.values * self.mesh.areas

    def copy(self) -> DensityField:
        return DensityField(self.mesh, self.values.copy())


def wall_correct(w, n, mode: WallMode | str = WallMode.SCRAPE) -> np.ndarray:
    """Remove (scrape) or cancel (stop) a velocity pointing out through a wall."""
    w = np.asarray(w, dtype=float)
    n = np.asarray(n, dtype=float)
    wn = float(w @ n)
    if wn <= 0.0:
        return w.copy()
    if WallMode(mode) is WallMode.SCRAPE:
        return w - wn * n
    return np.zeros_like(w)


def stable_dt(mesh: TriMesh, w: np.ndarray, safety: float = 0.5, dt_max: float = 0.01,
              h_min: float | None = None) -> float:
    """Largest step moving no element by more than ``safety * h_min``."""
    if not 0 < safety <= 1:
        raise ValueError("safety factor must lie in (0, 1]")
    h = mesh.h_min if h_min is None else h_min
    speed = float(np.max(np.hypot(w[:, 0], w[:, 1]))) if len(w) else 0.0
    if speed == 0.0:
        return dt_max
    return safety * h / speed


class Transporter:
    """Precomputed overlap candidates and boundary data for one mesh.

    ``outlet`` is ``"open"`` (mass crossing the outlet leaves the domain) or
    ``"sealed"`` (it is kept, as at any other boundary). ``reach`` is the
    largest displacement a step may apply (default ``h_min``); overlap
    candidates are searched within it.
    """

    def __init__(self, mesh: TriMesh, outlet: str = "open", mode: WallMode | str = WallMode.SCRAPE,
                 reach: float | None = None):
        if outlet not in ("open", "sealed"):
            raise ValueError("outlet must be 'open' or 'sealed'")
        if reach is not None and not reach > 0:
            raise ValueError("reach must be positive")
        self.mesh = mesh
        self.outlet = outlet
        self.mode = WallMode(mode)
        self.tris = np.ascontiguousarray(mesh.coords)
        self.reach = mesh.h_min if reach is None else float(reach)
        self._build_pairs()
        self._build_wall_normals()
        hi_x = self.tris[:, :, 0].max(axis=1)
        if outlet == "open":
            self.x_out = mesh.x_out
            self.near_outlet = np.flatnonzero(hi_x + self.reach >= self.x_out - 1e-12)
        else:
            self.x_out = math.inf
            self.near_outlet = np.empty(0, dtype=np.int64)

    def _build_pairs(self):
        m = self.mesh
        lo = self.tris.min(axis=1)
        hi = self.tris.max(axis=1)
        circ = float(np.max(np.linalg.norm(self.tris - m.centroids[:, None, :], axis=2)))
        radius = 2 * circ + self.reach
        grid = m.grid(radius)
        src, dst = [], []
        for k in range(m.n_elements):
            cand = grid.query(m.centroids[k], radius)
            ok = np.all(lo[cand] <= hi[k] + self.reach, axis=1) & np.all(hi[cand] >= lo[k] - self.reach, axis=1)
            cand = cand[ok]
            src.append(np.full(len(cand), k, dtype=np.int64))
            dst.append(cand)
        self.src = np.concatenate(src)
        self.dst = np.concatenate(dst)
        self._overlap = np.empty(len(self.src))

    def _build_wall_normals(self):
        m = self.mesh
        walls = m.edges_labelled("wall")
        node_elems: dict[int, list[int]] = {}
        for t, tri in enumerate(m.triangles):
            for a in tri:
                node_elems.setdefault(int(a), []).append(t)
        per_elem: dict[int, list[np.ndarray]] = {}
        for e in walls:
            n = m.edge_normals[e]
            for a in m.boundary_edges[e]:
                for t in node_elems[int(a)]:
                    lst = per_elem.setdefault(t, [])
                    if all(abs(float(n @ o) - 1.0) > 1e-12 for o in lst):
                        lst.append(n)
        width = max((len(v) for v in per_elem.values()), default=0)
        normals = np.zeros((m.n_elements, max(width, 1), 2))
        for t, lst in per_elem.items():
            normals[t, : len(lst)] = lst
        self.wall_normals = normals
        self.wall_elements = np.array(sorted(per_elem), dtype=np.int64)

    def correct(self, w: np.ndarray, mode: WallMode | str | None = None) -> np.ndarray:
        """Apply the wall condition to every element touching a wall."""
        mode = self.mode if mode is None else WallMode(mode)
        w = np.array(w, dtype=float)
        idx = self.wall_elements
        if len(idx) == 0:
            return w
        sub = w[idx]
        nrm = self.wall_normals[idx]
        if mode is WallMode.SCRAPE:
            for s in range(nrm.shape[1]):
                dot = np.einsum("ij,ij->i", sub, nrm[:, s])
                out = dot > 0
                sub[out] -= dot[out, None] * nrm[out, s]
        else:
            dot = np.einsum("ij,isj->is", sub, nrm)
            sub[np.any(dot > 0, axis=1)] = 0.0
        w[idx] = sub
        return w

    def stable_dt(self, w: np.ndarray, safety: float = 0.5, dt_max: float = 0.01) -> float:
        return stable_dt(self.mesh, w, safety, dt_max)

    def step(self, rho: np.ndarray, w: np.ndarray, dt: float) -> tuple[np.ndarray, float]:
        """One push-forward step. Returns the new density and the mass that left through the outlet."""
        m = self.mesh
        disp = np.ascontiguousarray(w, dtype=float) * dt
        max_disp = float(np.max(np.hypot(disp[:, 0], disp[:, 1]))) if len(disp) else 0.0
        if max_disp > self.reach * (1 + 1e-12):
            raise CFLError(f"step moves an element by {max_disp:.3g} > reach {self.reach:.3g}; reduce dt")
        if max_disp == 0.0:
            return rho.copy(), 0.0
        ov = self._overlap
        translated_overlaps(self.tris, disp, self.src, self.dst, ov)
        n = m.n_elements
        covered = np.bincount(self.src, weights=ov, minlength=n)
        gained = np.bincount(self.dst, weights=rho[self.src] * ov, minlength=n)
        beyond = np.zeros(n)
        if len(self.near_outlet):
            part = np.empty(len(self.near_outlet))
            translated_beyond(self.tris, disp, self.near_outlet, self.x_out, part)
            beyond[self.near_outlet] = part
        # rounding can leave kept at -1e-18 when a translate is fully covered
        kept = np.maximum(m.areas - covered - beyond, 0.0)
        new = (gained + rho * kept) / m.areas
        egress = float(rho @ beyond)
        return new, egress


def step(density: DensityField, w: np.ndarray, dt: float, transporter: Transporter | None = None) -> DensityField:
    """Functional form of :meth:`Transporter.step` on a :class:`DensityField`."""
    tr = transporter if transporter is not None else Transporter(density.mesh)
    new, _ = tr.step(density.values, w, dt)
    return DensityField(density.mesh, np.maximum(new, 0.0))
