"""Desired velocity as a normalised potential gradient.

On the rectangle the potential is known in closed form,
``u = -x + q y**2`` with ``q = tan(theta) / chord_ref``. On general walkways
the same potential is recovered from the Poisson problem ``lap u = 2q`` with
the wall flux ``du/dn = tan(theta) b(x) / chord_ref`` and Dirichlet data
``u = -x + q (y - yc(x))**2`` at both ends, solved with P1 finite elements.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import TriMesh

log = logging.getLogger(__name__)

GRAD_EPS = 1e-12


def rect_desired_velocity(theta: float, chord: float, y) -> np.ndarray:
    """Closed-form unit desired velocity on a rectangle of scaled chord ``chord``.

    ``y`` is measured from the centre line; returns shape ``(..., 2)``.
    """
    q = math.tan(theta) / chord
    y = np.asarray(y, dtype=float)
    s = -2.0 * q * y
    n = np.sqrt(1.0 + s * s)
    return np.stack([1.0 / n, s / n], axis=-1)


@dataclass(frozen=True)
class PotentialField:
    u: np.ndarray  # nodal potential
    grad: np.ndarray  # (Q, 2) element-constant gradient
    vd: np.ndarray  # (Q, 2) unit desired velocity
    theta: float
    q: float

    def u_centroid(self, mesh: TriMesh) -> np.ndarray:
        return self.u[mesh.triangles].mean(axis=1)


def _basis_gradients(mesh: TriMesh) -> np.ndarray:
    # (Q, 3, 2): gradient of each P1 hat function on each element
    c = mesh.coords
    x, y = c[:, :, 0], c[:, :, 1]
    det = 2.0 * mesh.areas
    g = np.empty_like(c)
    g[:, 0, 0] = y[:, 1] - y[:, 2]
    g[:, 1, 0] = y[:, 2] - y[:, 0]
    g[:, 2, 0] = y[:, 0] - y[:, 1]
    g[:, 0, 1] = x[:, 2] - x[:, 1]
    g[:, 1, 1] = x[:, 0] - x[:, 2]
    g[:, 2, 1] = x[:, 1] - x[:, 0]
    return g / det[:, None, None]


def element_gradients(mesh: TriMesh, u: np.ndarray) -> np.ndarray:
    return np.einsum("kij,ki->kj", _basis_gradients(mesh), u[mesh.triangles])


def normalize_gradient(grad: np.ndarray) -> np.ndarray:
    norm = np.hypot(grad[:, 0], grad[:, 1])
    vd = np.empty_like(grad)
    flat = norm < GRAD_EPS
    vd[~flat] = -grad[~flat] / norm[~flat, None]
    if flat.any():
        log.warning("%d elements have a vanishing potential gradient; using e_x there", int(flat.sum()))
        vd[flat] = (1.0, 0.0)
    return vd


def solve_potential(mesh: TriMesh, theta: float, spec=None) -> PotentialField:
    """P1 Galerkin solution of the mixed Dirichlet-Neumann potential problem."""
    spec = spec if spec is not None else mesh.spec
    if spec is None:
        raise ValueError("solve_potential needs a DomainSpec (pass spec= for loaded meshes)")
    for lab in ("inlet", "outlet", "wall"):
        if len(mesh.edges_labelled(lab)) == 0:
            raise ValueError(f"mesh has no {lab} edges")
    chord = spec.chord_ref
    tan_t = math.tan(theta)
    q = tan_t / chord
    nn = len(mesh.nodes)
    G = _basis_gradients(mesh)
    Ke = np.einsum("kid,kjd->kij", G, G) * mesh.areas[:, None, None]
    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    K = sp.csr_matrix((Ke.ravel(), (rows, cols)), shape=(nn, nn))

    # load: -int 2q phi + int_walls g phi
    f = np.zeros(nn)
    np.add.at(f, tri.ravel(), np.repeat(-2.0 * q * mesh.areas / 3.0, 3))
    walls = mesh.edges_labelled("wall")
    e = mesh.boundary_edges[walls]
    pa, pb = mesh.nodes[e[:, 0]], mesh.nodes[e[:, 1]]
    length = np.hypot(*(pb - pa).T)
    mid_x = 0.5 * (pa[:, 0] + pb[:, 0])
    g = tan_t * spec.b(mid_x) / chord
    np.add.at(f, e.ravel(), np.repeat(0.5 * g * length, 2))

    dir_nodes = np.union1d(mesh.nodes_labelled("inlet"), mesh.nodes_labelled("outlet"))
    xd, yd = mesh.nodes[dir_nodes, 0], mesh.nodes[dir_nodes, 1]
    ud = -xd + q * (yd - spec.yc(xd)) ** 2
    u = np.zeros(nn)
    u[dir_nodes] = ud
    free = np.setdiff1d(np.arange(nn), dir_nodes)
    A = K[free][:, free].tocsc()
    rhs = f[free] - K[free][:, dir_nodes] @ ud
    try:
        u[free] = spla.splu(A).solve(rhs)
    except RuntimeError as exc:
        raise np.linalg.LinAlgError(f"potential system is singular: {exc}") from exc
    res = np.linalg.norm(A @ u[free] - rhs) / max(np.linalg.norm(rhs), 1e-300)
    if not np.isfinite(res) or res > 1e-8:
        raise np.linalg.LinAlgError(f"potential solve did not converge (relative residual {res:.3g})")
    grad = element_gradients(mesh, u)
    return PotentialField(u, grad, normalize_gradient(grad), theta, q)


def closed_form_field(mesh: TriMesh, theta: float, chord: float) -> PotentialField:
    """Rectangle potential sampled at nodes, with the exact gradient at centroids."""
    q = math.tan(theta) / chord
    u = -mesh.nodes[:, 0] + q * mesh.nodes[:, 1] ** 2
    c = mesh.centroids
    grad = np.column_stack([-np.ones(len(c)), 2.0 * q * c[:, 1]])
    return PotentialField(u, grad, normalize_gradient(grad), theta, q)


def wall_boundary_flux(mesh: TriMesh, vd: np.ndarray) -> np.ndarray:
    """``v_d . n`` on every wall edge, using the owning element's velocity."""
    walls = mesh.edges_labelled("wall")
    owner = mesh.boundary_owner[walls]
    return np.einsum("ij,ij->i", vd[owner], mesh.edge_normals[walls])


@dataclass(frozen=True)
class AngleDiagnostics:
    y: np.ndarray
    gamma: np.ndarray
    alpha_i: np.ndarray
    beta: np.ndarray
    alpha_1: float
    alpha_2: float


def wall_angles(spec, x: float, dx: float = 1e-6) -> tuple[float, float, float, float]:
    """Upper/lower wall positions and their inclinations at section ``x``.

    Returns ``(y1, y2, alpha1, alpha2)`` with ``y1`` the upper wall.
    """

    def walls(s):
        yc, b = float(spec.yc(s)), float(spec.b(s))
        return yc + 0.5 * b, yc - 0.5 * b

    y1, y2 = walls(x)
    up1, lo1 = walls(x + dx)
    up0, lo0 = walls(x - dx)
    a1 = abs(math.atan((up1 - up0) / (2 * dx)))
    a2 = abs(math.atan((lo1 - lo0) / (2 * dx)))
    return y1, y2, a1, a2


def alpha_interp(y, y1: float, y2: float, alpha1: float, alpha2: float) -> np.ndarray:
    if y1 == y2:
        raise ValueError("degenerate chord section: y1 == y2")
    y = np.asarray(y, dtype=float)
    return np.abs(alpha1 * (y - y2) / (y1 - y2) - alpha2 * (y - y1) / (y2 - y1))


def locate(mesh: TriMesh, pts: np.ndarray) -> np.ndarray:
    """Element index containing each point (-1 when outside)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    radius = float(np.max(np.linalg.norm(mesh.coords - mesh.centroids[:, None, :], axis=2)))
    out = np.full(len(pts), -1, dtype=np.int64)
    c = mesh.coords
    for i, p in enumerate(pts):
        cand = mesh.grid(radius).query(p, radius)
        if len(cand) == 0:
            continue
        a, b, d = c[cand, 0], c[cand, 1], c[cand, 2]

        def side(u, v):
            return (v[:, 0] - u[:, 0]) * (p[1] - u[:, 1]) - (v[:, 1] - u[:, 1]) * (p[0] - u[:, 0])

        s = np.minimum(np.minimum(side(a, b), side(b, d)), side(d, a))
        best = int(np.argmax(s))
        if s[best] >= -1e-12:
            out[i] = cand[best]
    return out


def nodal_gradients(mesh: TriMesh, grad: np.ndarray) -> np.ndarray:
    """Area-weighted average of the element gradients around each node."""
    nn = len(mesh.nodes)
    acc = np.zeros((nn, 2))
    wsum = np.zeros(nn)
    for j in range(3):
        np.add.at(acc, mesh.triangles[:, j], grad * mesh.areas[:, None])
        np.add.at(wsum, mesh.triangles[:, j], mesh.areas)
    return acc / wsum[:, None]


def barycentric(mesh: TriMesh, k: np.ndarray, pts: np.ndarray) -> np.ndarray:
    c = mesh.coords[k]
    a, b, d = c[:, 0], c[:, 1], c[:, 2]

    def cross(u, v, p):
        return (v[:, 0] - u[:, 0]) * (p[:, 1] - u[:, 1]) - (v[:, 1] - u[:, 1]) * (p[:, 0] - u[:, 0])

    area2 = cross(a, b, d)
    return np.column_stack([cross(b, d, pts), cross(d, a, pts), cross(a, b, pts)]) / area2[:, None]


def angle_diagnostics(field: PotentialField, mesh: TriMesh, alpha1: float, alpha2: float,
                      x: float, y1: float, y2: float, n: int = 41) -> AngleDiagnostics:
    """Angles ``gamma``, ``alpha_i`` and ``beta = gamma - alpha_i`` along a chord section.

    The chord from ``y2`` (lower wall) to ``y1`` (upper wall) at abscissa ``x``
    is sampled at ``n`` points. The potential gradient is recovered at the
    nodes by patch averaging and interpolated linearly to the samples, which
    removes the element-size jitter of the piecewise-constant field.
    """
    if y1 == y2:
        raise ValueError("degenerate chord section: y1 == y2")
    ys = np.linspace(y2, y1, n)
    lo, hi = min(y1, y2), max(y1, y2)
    pts = np.column_stack([np.full(n, x), np.clip(ys, lo + 1e-12, hi - 1e-12)])
    k = locate(mesh, pts)
    if np.any(k < 0):
        raise ValueError("chord section leaves the mesh")
    lam = barycentric(mesh, k, pts)
    g = np.einsum("ij,ijd->id", lam, nodal_gradients(mesh, field.grad)[mesh.triangles[k]])
    v = -g
    gamma = np.arccos(np.clip(v[:, 0] / np.hypot(v[:, 0], v[:, 1]), -1.0, 1.0))
    ai = alpha_interp(ys, y1, y2, alpha1, alpha2)
    return AngleDiagnostics(ys, gamma, ai, gamma - ai, alpha1, alpha2)


def export_field(mesh: TriMesh, field: PotentialField, path) -> None:
    uc = field.u_centroid(mesh)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "u", "vdx", "vdy"])
        for (x, y), u, (a, b) in zip(mesh.centroids, uc, field.vd):
            w.writerow([repr(float(x)), repr(float(y)), repr(float(u)), repr(float(a)), repr(float(b))])
