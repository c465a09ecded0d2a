"""Nonlocal repulsion restricted to a frontal sensory sector.

The sector of element ``k`` is centred at its centroid and oriented along
the desired velocity there. Because that orientation does not depend on the
density, the midpoint-rule quadrature of the interaction integral is a fixed
linear operator; :class:`InteractionOperator` assembles it once as two
sparse matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import sector_mask
from .mesh import TriMesh


@dataclass(frozen=True)
class InteractionParams:
    c: float = 5e-4
    R: float = 0.02  # scaled
    alpha: float = math.pi / 4
    r_min: float | None = None  # defaults to h_min / 2

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("repulsion strength c must be nonnegative")
        if not self.R > 0:
            raise ValueError("sensory radius R must be positive")
        if not 0 < self.alpha < math.pi / 2:
            raise ValueError("sector half-angle must lie in (0, pi/2)")
        if self.r_min is not None and not self.r_min > 0:
            raise ValueError("r_min must be positive")

    def clamp(self, mesh: TriMesh) -> float:
        return self.r_min if self.r_min is not None else 0.5 * mesh.h_min


def sector_neighbours(mesh: TriMesh, k: int, heading, params: InteractionParams) -> np.ndarray:
    """Sorted indices ``j != k`` whose centroid lies in the sector of element ``k``."""
    x = mesh.centroids[k]
    cand = mesh.grid(params.R).query(x, params.R)
    inside = sector_mask(x, heading, params.R, params.alpha, mesh.centroids[cand])
    out = cand[inside]
    return out[out != k]


def interaction_velocity(k: int, rho: np.ndarray, vd: np.ndarray, mesh: TriMesh,
                         params: InteractionParams) -> np.ndarray:
    """Interaction velocity at the centroid of element ``k`` by direct summation."""
    nb = sector_neighbours(mesh, k, vd[k], params)
    if len(nb) == 0:
        return np.zeros(2)
    d = mesh.centroids[nb] - mesh.centroids[k]
    r = np.hypot(d[:, 0], d[:, 1])
    e = d / r[:, None]
    w = rho[nb] * mesh.areas[nb] / np.maximum(r, params.clamp(mesh))
    return -params.c * (e * w[:, None]).sum(axis=0)


class InteractionOperator:
    """``v_i = c * (Wx @ rho, Wy @ rho)`` with the kernel geometry baked into ``W``."""

    def __init__(self, mesh: TriMesh, vd: np.ndarray, params: InteractionParams):
        self.mesh = mesh
        self.params = params
        r_min = params.clamp(mesh)
        rows, cols, wx, wy = [], [], [], []
        C = mesh.centroids
        for k in range(mesh.n_elements):
            nb = sector_neighbours(mesh, k, vd[k], params)
            if len(nb) == 0:
                continue
            d = C[nb] - C[k]
            r = np.hypot(d[:, 0], d[:, 1])
            s = -mesh.areas[nb] / (r * np.maximum(r, r_min))
            rows.append(np.full(len(nb), k))
            cols.append(nb)
            wx.append(s * d[:, 0])
            wy.append(s * d[:, 1])
        n = mesh.n_elements
        if rows:
            rows, cols = np.concatenate(rows), np.concatenate(cols)
            self.Wx = sp.csr_matrix((np.concatenate(wx), (rows, cols)), shape=(n, n))
            self.Wy = sp.csr_matrix((np.concatenate(wy), (rows, cols)), shape=(n, n))
        else:
            self.Wx = self.Wy = sp.csr_matrix((n, n))
        self.Wx.sort_indices()
        self.Wy.sort_indices()

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        if self.params.c == 0.0:
            return np.zeros((self.mesh.n_elements, 2))
        return self.params.c * np.column_stack([self.Wx @ rho, self.Wy @ rho])


def total_velocity(rho: np.ndarray, vd: np.ndarray, op: InteractionOperator) -> np.ndarray:
    """Desired plus interaction velocity per element, before any wall correction."""
    return vd + op(rho)
