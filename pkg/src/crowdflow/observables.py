"""Bulk and profile observables, and the statistical reading of the density."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import DOMAIN, TriMesh

log = logging.getLogger(__name__)

EPS_MASS = 1e-6


def egress_time(t, G, N: float, eps: float = EPS_MASS) -> float:
    """First time the cumulative egress reaches ``N`` (to within ``eps * N``); ``inf`` if never."""
    t = np.asarray(t, dtype=float)
    G = np.asarray(G, dtype=float)
    if N <= 0:
        return 0.0 if len(t) == 0 else float(t[0])
    hit = np.flatnonzero(G / N >= 1.0 - eps)
    return float(t[hit[0]]) if len(hit) else math.inf


def to_probability_density(rho: np.ndarray, areas: np.ndarray) -> np.ndarray:
    mass = float(rho @ areas)
    if mass <= 0:
        raise ValueError("cannot normalise a density with zero total mass")
    return rho / mass


def to_mass_density(rho: np.ndarray, areas: np.ndarray, N: float) -> np.ndarray:
    return N * to_probability_density(rho, areas)


def expected_count(rho: np.ndarray, areas: np.ndarray, region, N: float) -> float:
    """Expected number of pedestrians in the union of elements ``region``."""
    mass = float(rho @ areas)
    if mass <= 0:
        return 0.0
    region = np.asarray(region)
    if region.dtype == bool:
        region = np.flatnonzero(region)
    if len(region) == 0:
        return 0.0
    return N / mass * float(rho[region] @ areas[region])


def section_elements(mesh: TriMesh, x: float) -> np.ndarray:
    """Walkway elements cut by the vertical line at ``x``, ordered by centroid y.

    When ``x`` falls on a column of nodes the column just downstream is used.
    """
    c = mesh.coords[:, :, 0]
    lo, hi = c.min(axis=1), c.max(axis=1)
    tol = 1e-12
    hit = np.flatnonzero((lo <= x + tol) & (hi > x + tol) & (mesh.region == DOMAIN))
    return hit[np.argsort(mesh.centroids[hit, 1], kind="stable")]


@dataclass
class SectionSampler:
    """Centre-line and wall-adjacent elements of a chord section."""

    mesh: TriMesh
    x: float
    elements: np.ndarray = field(init=False)
    mid: np.ndarray = field(init=False)
    sides: np.ndarray = field(init=False)

    def __post_init__(self):
        el = section_elements(self.mesh, self.x)
        if len(el) < 3:
            raise ValueError(f"section x={self.x} cuts fewer than 3 elements")
        self.elements = el
        y = self.mesh.centroids[el, 1]
        ymid = 0.5 * (y.min() + y.max())
        d = np.abs(y - ymid)
        self.mid = el[d <= d.min() + 1e-12]
        self.sides = np.array([el[0], el[-1]])

    def rho_mid(self, rho) -> float:
        w = self.mesh.areas[self.mid]
        return float(rho[self.mid] @ w / w.sum())

    def rho_side(self, rho) -> float:
        return float(rho[self.sides].mean())

    def profile(self, rho) -> tuple[np.ndarray, np.ndarray]:
        return self.mesh.centroids[self.elements, 1], rho[self.elements]


def delta_rho(rho: np.ndarray, mesh: TriMesh, rho_capacity: float, x: float = 0.5) -> float:
    """Chord uniformity ``(rho_mid - rho_side) / rho_capacity`` at section ``x``.

    Positive when the crowd gathers along the centre line, negative when it
    gathers at the walls.
    """
    s = SectionSampler(mesh, x)
    return (s.rho_mid(rho) - s.rho_side(rho)) / rho_capacity


def plateau_window(t, M, frac: float = 0.02, level: float = 0.5) -> tuple[int, int] | None:
    """Index range ``[i0, i1]`` of the full-walkway regime.

    The longest run of samples with ``|dM/dt| <= frac * max|dM/dt|`` while
    ``M >= level * max M``.
    """
    t = np.asarray(t, dtype=float)
    M = np.asarray(M, dtype=float)
    if len(t) < 3 or M.max() <= 0:
        return None
    dM = np.gradient(M, t)
    flat = (np.abs(dM) <= frac * np.abs(dM).max()) & (M >= level * M.max())
    best, start = None, None
    for i, f in enumerate(np.append(flat, False)):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if best is None or i - 1 - start > best[1] - best[0]:
                best = (start, i - 1)
            start = None
    return best


def regime_sequence(t, M, frac: float = 0.02, level: float = 0.5) -> list[str]:
    """Regimes visited by the walkway mass history, in order.

    ``filling`` (M rising before the plateau), ``full`` (plateau) and
    ``leaving`` (M falling after it).
    """
    t = np.asarray(t, dtype=float)
    M = np.asarray(M, dtype=float)
    win = plateau_window(t, M, frac, level)
    if win is None:
        return []
    i0, i1 = win
    out = []
    if i0 > 0 and M[i0] > M[0] + 1e-12 and np.all(np.diff(M[: i0 + 1]) >= -1e-9 * M.max()):
        out.append("filling")
    out.append("full")
    if i1 < len(M) - 1 and M[-1] < M[i1]:
        out.append("leaving")
    return out


@dataclass
class RunMetrics:
    t: np.ndarray
    S: np.ndarray  # reservoir / N
    I: np.ndarray  # buffer / N
    M: np.ndarray  # walkway mass / N
    G: np.ndarray  # cumulative egress / N
    N: float
    T_ref: float  # L / V in seconds
    Ta: float  # scaled
    delta_rho: float
    plateau: tuple[int, int] | None
    max_rho_plateau: float  # pedestrians per m^2
    profile_y: np.ndarray | None = None
    profile_rho_p: np.ndarray | None = None

    @property
    def Ta_over_T(self) -> float:
        return self.Ta

    def budget(self) -> np.ndarray:
        """``S + I + M + G`` (all normalised by N); constant for a conservative run."""
        return self.S + self.I + self.M + self.G
