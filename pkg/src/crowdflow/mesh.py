"""Triangular meshes of elongated walkways.

Coordinates are scaled by the walkway length, so the walkway proper spans
``0 <= x <= 1``; an optional entrance buffer occupies ``-depth <= x < 0``.
Boundary edges carry one of three labels: ``wall``, ``inlet``, ``outlet``.
"""

from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

LABELS = ("wall", "inlet", "outlet")
DOMAIN, BUFFER = 0, 1


@dataclass(frozen=True)
class DomainSpec:
    """Walkway geometry in scaled units.

    ``chord`` maps scaled x to the local chord amplitude and ``centerline``
    to the lateral offset of the walkway axis. Both are evaluated at
    ``x = 0`` throughout the entrance buffer.
    """

    kind: str = "rectangle"
    length: float = 100.0  # metres, only used for unit conversion
    chord_ref: float = 0.04
    chord: Callable[[np.ndarray], np.ndarray] | None = None
    centerline: Callable[[np.ndarray], np.ndarray] | None = None
    buffer_depth: float = 0.0

    def __post_init__(self):
        if not self.chord_ref > 0:
            raise ValueError("chord_ref must be positive")
        if self.buffer_depth < 0:
            raise ValueError("buffer_depth must be nonnegative")
        if self.chord_ref > 0.5:
            log.warning("aspect ratio %.3g is not small; the walkway is not elongated", self.chord_ref)

    def b(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.chord is None:
            return np.full_like(x, self.chord_ref)
        return np.asarray(self.chord(x), dtype=float) * np.ones_like(x)

    def yc(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        if self.centerline is None:
            return np.zeros_like(x)
        return np.asarray(self.centerline(x), dtype=float) * np.ones_like(x)

    def area(self) -> float:
        from scipy.integrate import quad

        a, _ = quad(lambda s: float(self.b(s)), 0.0, 1.0, limit=200, epsabs=1e-13, epsrel=1e-12)
        return a + self.buffer_depth * float(self.b(0.0))


def rectangle(chord_ref=0.04, buffer_depth=0.0, length=100.0) -> DomainSpec:
    return DomainSpec("rectangle", length, chord_ref, buffer_depth=buffer_depth)


def bottleneck(chord_ref=0.04, buffer_depth=0.0, length=100.0, depth=0.4, width=0.1, at=0.5) -> DomainSpec:
    def chord(x):
        return chord_ref * (1.0 - depth * np.exp(-(((x - at) / width) ** 2)))

    return DomainSpec("bottleneck", length, chord_ref, chord=chord, buffer_depth=buffer_depth)


def curved(chord_ref=0.04, buffer_depth=0.0, length=100.0, rise=0.05) -> DomainSpec:
    def centerline(x):
        return rise * np.sin(np.pi * x) ** 2

    return DomainSpec("curved", length, chord_ref, centerline=centerline, buffer_depth=buffer_depth)


def shifted(chord_ref=0.04, buffer_depth=0.0, length=100.0, shift=None, width=0.1, at=0.5) -> DomainSpec:
    s = chord_ref if shift is None else shift

    def centerline(x):
        return 0.5 * s * (1.0 + np.tanh((x - at) / width))

    return DomainSpec("shifted", length, chord_ref, centerline=centerline, buffer_depth=buffer_depth)


SHAPES = {"rectangle": rectangle, "bottleneck": bottleneck, "curved": curved, "shifted": shifted}


class BucketGrid:
    """Uniform bucket grid over 2-D points for fixed-radius queries."""

    def __init__(self, points: np.ndarray, cell: float):
        if not cell > 0:
            raise ValueError("cell size must be positive")
        self.points = np.asarray(points, dtype=float)
        self.cell = float(cell)
        self.origin = self.points.min(axis=0)
        keys = np.floor((self.points - self.origin) / self.cell).astype(np.int64)
        self.buckets: dict[tuple[int, int], np.ndarray] = {}
        groups = defaultdict(list)
        for i, (a, b) in enumerate(keys):
            groups[(a, b)].append(i)
        for k, v in groups.items():
            self.buckets[k] = np.array(v, dtype=np.int64)

    def query(self, x, radius: float) -> np.ndarray:
        """Sorted indices of points with ``|p - x| <= radius``."""
        x = np.asarray(x, dtype=float)
        lo = np.floor((x - radius - self.origin) / self.cell).astype(np.int64)
        hi = np.floor((x + radius - self.origin) / self.cell).astype(np.int64)
        found = []
        for a in range(lo[0], hi[0] + 1):
            for b in range(lo[1], hi[1] + 1):
                idx = self.buckets.get((a, b))
                if idx is not None:
                    found.append(idx)
        if not found:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(found)
        d = self.points[cand] - x
        keep = cand[np.hypot(d[:, 0], d[:, 1]) <= radius]
        keep.sort()
        return keep


class MeshError(ValueError):
    pass


@dataclass(eq=False)
class TriMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_labels: np.ndarray
    region: np.ndarray = None
    spec: DomainSpec | None = field(default=None, repr=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        tri = np.array(self.triangles, dtype=np.int64)
        p = self.nodes[tri]
        signed = 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )
        flip = signed < 0
        tri[flip] = tri[flip][:, ::-1]
        self.triangles = tri
        self.boundary_edges = np.array(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        self.boundary_labels = np.array(self.boundary_labels, dtype=object)
        if self.region is None:
            self.region = np.zeros(len(tri), dtype=np.int64)
        self.region = np.asarray(self.region, dtype=np.int64)
        self._grids: dict[float, BucketGrid] = {}
        self._check()
        for a in ("nodes", "triangles", "region"):
            getattr(self, a).setflags(write=False)

    def _check(self):
        if np.any(self.areas <= 0):
            raise MeshError("mesh has degenerate triangles")
        edges = np.sort(self.triangles[:, [[0, 1], [1, 2], [2, 0]]].reshape(-1, 2), axis=1)
        counts = Counter(map(tuple, edges))
        if max(counts.values()) > 2:
            raise MeshError("an edge is shared by more than two triangles")
        topo = {e for e, c in counts.items() if c == 1}
        labelled = {}
        for e, lab in zip(map(tuple, np.sort(self.boundary_edges, axis=1)), self.boundary_labels):
            if lab not in LABELS:
                raise MeshError(f"unknown boundary label {lab!r}")
            if e in labelled and labelled[e] != lab:
                raise MeshError(f"boundary edge {e} carries two labels")
            labelled[e] = lab
        missing = topo - labelled.keys()
        if missing:
            raise MeshError(f"{len(missing)} boundary edges are unlabelled, e.g. {sorted(missing)[0]}")
        extra = labelled.keys() - topo
        if extra:
            raise MeshError(f"{len(extra)} labelled edges are not on the boundary, e.g. {sorted(extra)[0]}")

    # -- derived geometry --------------------------------------------------

    @cached_property
    def coords(self) -> np.ndarray:
        """``(Q, 3, 2)`` vertex coordinates, counterclockwise."""
        return np.ascontiguousarray(self.nodes[self.triangles])

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.coords.mean(axis=1)

    @cached_property
    def sizes(self) -> np.ndarray:
        """Inscribed-circle diameter of every element."""
        c = self.coords
        per = np.linalg.norm(c - np.roll(c, -1, axis=1), axis=2).sum(axis=1)
        return 4.0 * self.areas / per

    @property
    def h_min(self) -> float:
        return float(self.sizes.min())

    @property
    def h_max(self) -> float:
        return float(self.sizes.max())

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @cached_property
    def bbox(self) -> tuple[float, float, float, float]:
        lo, hi = self.nodes.min(axis=0), self.nodes.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        """Outward unit normal of every boundary edge."""
        owner = self._edge_owner
        out = np.empty((len(self.boundary_edges), 2))
        for i, (a, b) in enumerate(self.boundary_edges):
            t = owner[(min(a, b), max(a, b))]
            tri = list(self.triangles[t])
            ia = tri.index(a)
            # orient the edge as it appears in the CCW triangle
            if tri[(ia + 1) % 3] != b:
                a, b = b, a
            d = self.nodes[b] - self.nodes[a]
            n = np.array([d[1], -d[0]])
            out[i] = n / np.hypot(*n)
        return out

    @cached_property
    def _edge_owner(self) -> dict:
        owner = {}
        for t, tri in enumerate(self.triangles):
            for j in range(3):
                a, b = tri[j], tri[(j + 1) % 3]
                owner.setdefault((min(a, b), max(a, b)), t)
        return owner

    @cached_property
    def boundary_owner(self) -> np.ndarray:
        return np.array(
            [self._edge_owner[(min(a, b), max(a, b))] for a, b in self.boundary_edges], dtype=np.int64
        )

    def edges_labelled(self, label: str) -> np.ndarray:
        return np.flatnonzero(self.boundary_labels == label)

    def nodes_labelled(self, label: str) -> np.ndarray:
        return np.unique(self.boundary_edges[self.edges_labelled(label)])

    @property
    def x_in(self) -> float:
        return float(self.nodes[self.nodes_labelled("inlet"), 0].min())

    @property
    def x_out(self) -> float:
        return float(self.nodes[self.nodes_labelled("outlet"), 0].max())

    @property
    def domain_elements(self) -> np.ndarray:
        return np.flatnonzero(self.region == DOMAIN)

    @property
    def buffer_elements(self) -> np.ndarray:
        return np.flatnonzero(self.region == BUFFER)

    def total_area(self) -> float:
        return float(self.areas.sum())

    def grid(self, cell: float) -> BucketGrid:
        g = self._grids.get(cell)
        if g is None:
            g = self._grids[cell] = BucketGrid(self.centroids, cell)
        return g

    def info(self) -> dict:
        census = Counter(self.boundary_labels.tolist())
        return {
            "elements": self.n_elements,
            "nodes": len(self.nodes),
            "h_min": self.h_min,
            "h_max": self.h_max,
            "area": self.total_area(),
            "area_domain": float(self.areas[self.region == DOMAIN].sum()),
            "area_buffer": float(self.areas[self.region == BUFFER].sum()),
            "min_element_area": float(self.areas.min()),
            "max_element_area": float(self.areas.max()),
            **{f"edges_{lab}": census.get(lab, 0) for lab in LABELS},
        }


def radius_query(mesh: TriMesh, x, R: float) -> np.ndarray:
    """Indices of elements whose centroid lies within distance ``R`` of ``x``."""
    if not R > 0:
        raise ValueError("query radius must be positive")
    return mesh.grid(float(R)).query(x, R)


def generate_mesh(spec: DomainSpec, h: float) -> TriMesh:
    """Structured split-quad triangulation mapped onto the walkway profile.

    The diagonal direction is mirrored about the centre line so that the
    mesh is symmetric chord-wise.
    """
    bmin = min(float(spec.b(np.linspace(0, 1, 2001)).min()), float(spec.b(0.0)))
    if not h > 0:
        raise ValueError("mesh size h must be positive")
    if bmin <= 0:
        raise ValueError("chord must be positive everywhere")
    if h >= bmin:
        raise ValueError(f"mesh size {h} is not smaller than the minimal chord {bmin:.4g}")
    nx = math.ceil(1.0 / h - 1e-9)
    xs = np.linspace(0.0, 1.0, nx + 1)
    if spec.buffer_depth > 0:
        nb = max(1, math.ceil(spec.buffer_depth / h - 1e-9))
        xs = np.concatenate([np.linspace(-spec.buffer_depth, 0.0, nb + 1)[:-1], xs])
    else:
        nb = 0
    ny = math.ceil(spec.chord_ref / h - 1e-9)
    ny += ny % 2
    eta = np.linspace(-0.5, 0.5, ny + 1)
    X, E = np.meshgrid(xs, eta, indexing="ij")
    Y = spec.yc(X) + E * spec.b(X)
    return _grid_mesh(X, Y, nb, spec)


def box_mesh(x0: float, x1: float, y0: float, y1: float, nx: int, ny: int) -> TriMesh:
    """Structured mesh of an axis-aligned box, inlet at ``x0`` and outlet at ``x1``."""
    ny += ny % 2
    X, Y = np.meshgrid(np.linspace(x0, x1, nx + 1), np.linspace(y0, y1, ny + 1), indexing="ij")
    return _grid_mesh(X, Y, 0, None)


def _grid_mesh(X: np.ndarray, Y: np.ndarray, nb: int, spec) -> TriMesh:
    # X, Y: (ncol, ny + 1) node coordinates; the first nb columns of cells are buffer
    ncol, ny = X.shape[0], X.shape[1] - 1
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return i * (ny + 1) + j

    tris, region = [], []
    for i in range(ncol - 1):
        reg = BUFFER if i < nb else DOMAIN
        for j in range(ny):
            a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            if j >= ny // 2:
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
            region += [reg, reg]
    edges, labels = [], []
    for i in range(ncol - 1):
        edges += [(nid(i, 0), nid(i + 1, 0)), (nid(i, ny), nid(i + 1, ny))]
        labels += ["wall", "wall"]
    for j in range(ny):
        edges += [(nid(0, j), nid(0, j + 1)), (nid(ncol - 1, j), nid(ncol - 1, j + 1))]
        labels += ["inlet", "outlet"]
    return TriMesh(nodes, np.array(tris), np.array(edges), np.array(labels, dtype=object), np.array(region), spec)


def save_mesh(mesh: TriMesh, path) -> None:
    lines = ["# crowdflow triangular mesh, scaled coordinates", f"nodes {len(mesh.nodes)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.nodes.tolist()]
    lines.append(f"triangles {mesh.n_elements}")
    lines += [f"{a} {b} {c} {r}" for (a, b, c), r in zip(mesh.triangles.tolist(), mesh.region.tolist())]
    lines.append(f"boundary {len(mesh.boundary_edges)}")
    lines += [f"{a} {b} {lab}" for (a, b), lab in zip(mesh.boundary_edges.tolist(), mesh.boundary_labels)]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> TriMesh:
    """Read the plain-text mesh format written by :func:`save_mesh`.

    Sections are ``nodes N`` (``x y``), ``triangles Q`` (``a b c [region]``)
    and ``boundary M`` (``a b label``); ``#`` starts a comment.
    """
    rows = []
    for raw in Path(path).read_text().splitlines():
        s = raw.split("#", 1)[0].strip()
        if s:
            rows.append(s.split())
    sections = {}
    i = 0
    try:
        while i < len(rows):
            name, count = rows[i][0], int(rows[i][1])
            if name not in ("nodes", "triangles", "boundary") or name in sections:
                raise MeshError(f"unexpected section header {' '.join(rows[i])!r}")
            sections[name] = rows[i + 1 : i + 1 + count]
            if len(sections[name]) != count:
                raise MeshError(f"section {name} is truncated")
            i += 1 + count
        nodes = np.array([[float(v) for v in r[:2]] for r in sections["nodes"]])
        tri_rows = sections["triangles"]
        tris = np.array([[int(v) for v in r[:3]] for r in tri_rows], dtype=np.int64)
        region = np.array([int(r[3]) if len(r) > 3 else DOMAIN for r in tri_rows], dtype=np.int64)
        bnd = sections.get("boundary", [])
        edges = np.array([[int(r[0]), int(r[1])] for r in bnd], dtype=np.int64).reshape(-1, 2)
        labels = np.array([r[2] for r in bnd], dtype=object)
    except (KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed mesh file {path}: {exc}") from exc
    if len(tris) and (tris.min() < 0 or tris.max() >= len(nodes)):
        raise MeshError("triangle references a missing node")
    return TriMesh(nodes, tris, edges, labels, region)
