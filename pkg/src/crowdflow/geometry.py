"""Planar primitives: convex polygons, rigid translation, clipping, sectors.

Polygons are stored as ``(n, 2)`` float arrays in counterclockwise order.
Everything here is pure; the batched triangle kernel at the bottom is the
hot path of the transport step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

# intersections below this area (scaled units) are treated as empty
AREA_EPS = 1e-14
# relative band inside which sector-boundary ties count as outside; structured
# meshes put many centroids exactly on r = R or on the 45 degree rays, and
# letting rounding decide would break mirror symmetry
SECTOR_TIE = 1e-9


def _signed_area(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class Polygon2:
    """Convex planar polygon with counterclockwise vertices.

    Clockwise input is reversed rather than rejected. Convexity is checked
    with a small tolerance; collinear vertices are allowed (the polygon is
    then flagged through :attr:`degenerate`).
    """

    __slots__ = ("vertices",)

    def __init__(self, vertices, check: bool = True):
        v = np.array(vertices, dtype=float).reshape(-1, 2)
        if check:
            if len(v) < 3:
                raise ValueError("a polygon needs at least 3 vertices")
            if not np.all(np.isfinite(v)):
                raise ValueError("polygon vertices must be finite")
        if _signed_area(v) < 0:
            v = v[::-1].copy()
        if check and not _is_convex(v):
            raise ValueError("polygon is not convex")
        v.setflags(write=False)
        self.vertices = v

    def __len__(self):
        return len(self.vertices)

    def __repr__(self):
        return f"Polygon2({self.vertices.tolist()})"

    @property
    def area(self) -> float:
        return polygon_area(self)

    @property
    def degenerate(self) -> bool:
        return polygon_area(self) <= AREA_EPS

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        x, y = v[:, 0], v[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        a = 0.5 * cross.sum()
        if abs(a) <= AREA_EPS:
            return v.mean(axis=0)
        return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)

    def bbox(self) -> tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])


def _is_convex(v: np.ndarray, tol: float = 1e-12) -> bool:
    d1 = np.roll(v, -1, axis=0) - v
    d2 = np.roll(d1, -1, axis=0)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    scale = max(float(np.abs(d1).max()) ** 2, 1e-300)
    return bool(np.all(cross >= -tol * scale))


def polygon_area(P: Polygon2) -> float:
    """Shoelace area. Zero (up to rounding) for collinear vertex lists."""
    return abs(_signed_area(P.vertices))


def translate(P: Polygon2, v) -> Polygon2:
    return Polygon2(P.vertices + np.asarray(v, dtype=float), check=False)


def _clip_halfplane(pts: list, ax: float, ay: float, bx: float, by: float) -> list:
    # keep the part left of the directed edge a->b
    out = []
    n = len(pts)
    if n == 0:
        return out
    ex, ey = bx - ax, by - ay
    px, py = pts[-1]
    sp = ex * (py - ay) - ey * (px - ax)
    for cx, cy in pts:
        sc = ex * (cy - ay) - ey * (cx - ax)
        if sc >= 0.0:
            if sp < 0.0:
                t = sp / (sp - sc)
                out.append((px + t * (cx - px), py + t * (cy - py)))
            out.append((cx, cy))
        elif sp >= 0.0:
            t = sp / (sp - sc)
            out.append((px + t * (cx - px), py + t * (cy - py)))
        px, py, sp = cx, cy, sc
    return out


def convex_intersection(P: Polygon2, Q: Polygon2) -> Polygon2 | None:
    """Intersection of two convex polygons, or ``None`` when (numerically) empty.

    Sutherland-Hodgman: the polygon with more vertices is clipped by each
    edge of the other, so the cost is linear in the total vertex count.
    """
    subject, clipper = (P, Q) if len(P) >= len(Q) else (Q, P)
    pts = [tuple(p) for p in subject.vertices]
    c = clipper.vertices
    m = len(c)
    for i in range(m):
        a, b = c[i], c[(i + 1) % m]
        pts = _clip_halfplane(pts, a[0], a[1], b[0], b[1])
        if not pts:
            return None
    if len(pts) < 3:
        return None
    out = Polygon2(pts, check=False)
    if polygon_area(out) <= AREA_EPS:
        return None
    return out


def intersection_area(P: Polygon2, Q: Polygon2) -> float:
    R = convex_intersection(P, Q)
    return 0.0 if R is None else polygon_area(R)


@dataclass(frozen=True)
class Sector:
    """Open circular sector: radius ``radius``, half-opening ``half_angle`` around ``heading``."""

    center: tuple[float, float]
    heading: tuple[float, float]
    radius: float
    half_angle: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("sector radius must be positive")
        if not 0 < self.half_angle < math.pi / 2:
            raise ValueError("half angle must lie in (0, pi/2)")
        hx, hy = self.heading
        norm = math.hypot(hx, hy)
        if norm == 0:
            raise ValueError("sector heading must be nonzero")
        object.__setattr__(self, "heading", (hx / norm, hy / norm))


def sector_contains(S: Sector, p) -> bool:
    dx = p[0] - S.center[0]
    dy = p[1] - S.center[1]
    r = math.hypot(dx, dy)
    if r == 0.0 or r >= S.radius * (1.0 - SECTOR_TIE):
        return False
    return (S.heading[0] * dx + S.heading[1] * dy) / r > math.cos(S.half_angle) + SECTOR_TIE


def sector_mask(center, heading, radius, half_angle, points: np.ndarray) -> np.ndarray:
    """Vectorised :func:`sector_contains` over an ``(m, 2)`` array of points."""
    d = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    r = np.hypot(d[:, 0], d[:, 1])
    h = np.asarray(heading, dtype=float)
    h = h / np.hypot(h[0], h[1])
    proj = d @ h
    inside = (r > 0) & (r < radius * (1.0 - SECTOR_TIE))
    inside[inside] = proj[inside] / r[inside] > math.cos(half_angle) + SECTOR_TIE
    return inside


# ---------------------------------------------------------------------------
# batched triangle kernel


@numba.njit(cache=True)
def _clip_tri_area(sx, sy, cx, cy, px, py, qx, qy):
    # area of (translated) source triangle s clipped by CCW triangle c;
    # px..qy are scratch buffers of length >= 9
    n = 3
    for i in range(3):
        px[i] = sx[i]
        py[i] = sy[i]
    for e in range(3):
        ax, ay = cx[e], cy[e]
        ex = cx[(e + 1) % 3] - ax
        ey = cy[(e + 1) % 3] - ay
        m = 0
        prx, pry = px[n - 1], py[n - 1]
        sp = ex * (pry - ay) - ey * (prx - ax)
        for i in range(n):
            ux, uy = px[i], py[i]
            sc = ex * (uy - ay) - ey * (ux - ax)
            if sc >= 0.0:
                if sp < 0.0:
                    t = sp / (sp - sc)
                    qx[m] = prx + t * (ux - prx)
                    qy[m] = pry + t * (uy - pry)
                    m += 1
                qx[m] = ux
                qy[m] = uy
                m += 1
            elif sp >= 0.0:
                t = sp / (sp - sc)
                qx[m] = prx + t * (ux - prx)
                qy[m] = pry + t * (uy - pry)
                m += 1
            prx, pry, sp = ux, uy, sc
        if m < 3:
            return 0.0
        for i in range(m):
            px[i] = qx[i]
            py[i] = qy[i]
        n = m
    a = 0.0
    for i in range(n):
        j = (i + 1) % n
        a += px[i] * py[j] - px[j] * py[i]
    a *= 0.5
    if a <= AREA_EPS:
        return 0.0
    return a


@numba.njit(cache=True)
def _halfplane_tri_area(sx, sy, x0):
    # area of triangle s in the half-plane x > x0
    px = np.empty(4)
    py = np.empty(4)
    m = 0
    prx, pry = sx[2], sy[2]
    sp = prx - x0
    for i in range(3):
        ux, uy = sx[i], sy[i]
        sc = ux - x0
        if sc > 0.0:
            if sp <= 0.0 and sp != sc:
                t = sp / (sp - sc)
                px[m] = prx + t * (ux - prx)
                py[m] = pry + t * (uy - pry)
                m += 1
            px[m] = ux
            py[m] = uy
            m += 1
        elif sp > 0.0:
            t = sp / (sp - sc)
            px[m] = prx + t * (ux - prx)
            py[m] = pry + t * (uy - pry)
            m += 1
        prx, pry, sp = ux, uy, sc
    if m < 3:
        return 0.0
    a = 0.0
    for i in range(m):
        j = (i + 1) % m
        a += px[i] * py[j] - px[j] * py[i]
    a = 0.5 * a
    if a <= AREA_EPS:
        return 0.0
    return a


@numba.njit(cache=True)
def translated_overlaps(tris, disp, src, dst, out):
    """``out[i] = |(tris[src[i]] + disp[src[i]]) ∩ tris[dst[i]]|`` for every pair."""
    sx = np.empty(3)
    sy = np.empty(3)
    cx = np.empty(3)
    cy = np.empty(3)
    px = np.empty(9)
    py = np.empty(9)
    qx = np.empty(9)
    qy = np.empty(9)
    for i in range(src.shape[0]):
        k = src[i]
        q = dst[i]
        dx = disp[k, 0]
        dy = disp[k, 1]
        for j in range(3):
            sx[j] = tris[k, j, 0] + dx
            sy[j] = tris[k, j, 1] + dy
            cx[j] = tris[q, j, 0]
            cy[j] = tris[q, j, 1]
        if (min(sx[0], sx[1], sx[2]) >= max(cx[0], cx[1], cx[2])
                or max(sx[0], sx[1], sx[2]) <= min(cx[0], cx[1], cx[2])
                or min(sy[0], sy[1], sy[2]) >= max(cy[0], cy[1], cy[2])
                or max(sy[0], sy[1], sy[2]) <= min(cy[0], cy[1], cy[2])):
            out[i] = 0.0
            continue
        out[i] = _clip_tri_area(sx, sy, cx, cy, px, py, qx, qy)


@numba.njit(cache=True)
def translated_beyond(tris, disp, idx, x0, out):
    """Area of each translated triangle ``idx[i]`` lying in the half-plane x > x0."""
    sx = np.empty(3)
    sy = np.empty(3)
    for i in range(idx.shape[0]):
        k = idx[i]
        for j in range(3):
            sx[j] = tris[k, j, 0] + disp[k, 0]
            sy[j] = tris[k, j, 1] + disp[k, 1]
        out[i] = _halfplane_tri_area(sx, sy, x0)
