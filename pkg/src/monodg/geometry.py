"""Per-element geometry: diameters, sub-triangulations, quadrature.

Volume quadrature on a polygon is composed triangle by triangle over a
sub-triangulation (centroid fan when the cell is star-shaped with
respect to its centroid, generic ear clipping otherwise).  Each
triangle carries a collapsed-square product rule (Gauss-Jacobi x
Gauss-Legendre) that is exact for the requested total degree and has
strictly positive weights.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .mesh import Mesh, MeshError, polygon_area


@dataclass(frozen=True)
class ElementGeometry:
    """Geometry of one polygonal cell."""

    vertices: np.ndarray      # (n, 2) CCW loop
    diameter: float           # max vertex-pair distance, mm
    bbox: tuple[float, float, float, float]   # (x0, y0, x1, y1)
    centroid: np.ndarray
    area: float
    sub_triangles: np.ndarray  # (nt, 3, 2)

    @property
    def bbox_area(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0) * (y1 - y0)


@dataclass(frozen=True)
class QuadratureRule:
    """Points (physical coordinates) and positive weights (mm^2 or mm)."""

    points: np.ndarray   # (nq, 2)
    weights: np.ndarray  # (nq,)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _tri_area2(a, b, c) -> float:
    """Twice the signed area of triangle (a, b, c)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _ear_clip(points: np.ndarray) -> list[tuple[int, int, int]]:
    """Triangulate a simple CCW polygon by ear clipping.

    Raises :class:`MeshError` when no ear can be found, which happens
    exactly for non-simple input.
    """
    n = len(points)
    idx = list(range(n))
    tris: list[tuple[int, int, int]] = []
    scale = float(np.abs(points).max()) or 1.0
    eps = 1e-14 * scale * scale
    guard = 0
    while len(idx) > 3:
        guard += 1
        if guard > 2 * n * n:
            raise MeshError("ear clipping failed: polygon is not simple")
        found = False
        m = len(idx)
        for j in range(m):
            i0, i1, i2 = idx[j - 1], idx[j], idx[(j + 1) % m]
            a, b, c = points[i0], points[i1], points[i2]
            if _tri_area2(a, b, c) <= eps:
                continue  # reflex or collinear corner
            # ear test: no other remaining vertex inside the candidate
            ok = True
            for i in idx:
                if i in (i0, i1, i2):
                    continue
                p = points[i]
                if (_tri_area2(a, b, p) >= -eps and _tri_area2(b, c, p) >= -eps
                        and _tri_area2(c, a, p) >= -eps):
                    ok = False
                    break
            if ok:
                tris.append((i0, i1, i2))
                idx.pop(j)
                found = True
                break
        if not found:
            raise MeshError("ear clipping failed: polygon is not simple")
    tris.append((idx[0], idx[1], idx[2]))
    return tris


def sub_triangulate(points: np.ndarray) -> np.ndarray:
    """Partition a simple CCW polygon into positive-area triangles.

    Prefers the centroid fan (valid for star-shaped cells, which covers
    essentially all Voronoi/agglomerated cells) and falls back to ear
    clipping.
    """
    n = len(points)
    area = polygon_area(points)
    cx = np.dot(points[:, 0] + np.roll(points[:, 0], -1),
                points[:, 0] * np.roll(points[:, 1], -1)
                - np.roll(points[:, 0], -1) * points[:, 1])
    cy = np.dot(points[:, 1] + np.roll(points[:, 1], -1),
                points[:, 0] * np.roll(points[:, 1], -1)
                - np.roll(points[:, 0], -1) * points[:, 1])
    centroid = np.array([cx, cy]) / (6.0 * area)

    scale = float(np.abs(points).max()) or 1.0
    fan = []
    star = True
    for i in range(n):
        a, b = points[i], points[(i + 1) % n]
        if _tri_area2(centroid, a, b) <= 1e-13 * scale * scale:
            star = False
            break
        fan.append((centroid, a, b))
    if star:
        return np.array(fan)
    tris = _ear_clip(points)
    return np.array([(points[i], points[j], points[k]) for i, j, k in tris])


def element_geometry(mesh: Mesh, k: int) -> ElementGeometry:
    """Geometry bundle for cell ``k``."""
    pts = mesh.cell_vertices(k)
    diffs = pts[:, None, :] - pts[None, :, :]
    diameter = float(np.sqrt((diffs ** 2).sum(-1)).max())
    x0, y0 = pts.min(axis=0)
    x1, y1 = pts.max(axis=0)
    area = polygon_area(pts)
    tris = sub_triangulate(pts)
    tri_area = 0.5 * np.abs(
        (tris[:, 1, 0] - tris[:, 0, 0]) * (tris[:, 2, 1] - tris[:, 0, 1])
        - (tris[:, 1, 1] - tris[:, 0, 1]) * (tris[:, 2, 0] - tris[:, 0, 0]))
    if abs(tri_area.sum() - area) > 1e-12 * max(area, 1e-30):
        raise MeshError(f"sub-triangulation of cell {k} does not cover it")
    cx = np.dot(pts[:, 0] + np.roll(pts[:, 0], -1),
                pts[:, 0] * np.roll(pts[:, 1], -1)
                - np.roll(pts[:, 0], -1) * pts[:, 1]) / (6.0 * area)
    cy = np.dot(pts[:, 1] + np.roll(pts[:, 1], -1),
                pts[:, 0] * np.roll(pts[:, 1], -1)
                - np.roll(pts[:, 0], -1) * pts[:, 1]) / (6.0 * area)
    return ElementGeometry(pts, diameter, (float(x0), float(y0), float(x1), float(y1)),
                           np.array([cx, cy]), area, tris)


@lru_cache(maxsize=64)
def _square_rule(order: int):
    """Collapsed-square rule for the reference triangle (0,0),(1,0),(1,1).

    Exact for total degree <= order; the Jacobi direction absorbs the
    collapse Jacobian, so all weights are positive.
    """
    n = max(1, (order + 2) // 2)
    xj, wj = roots_jacobi(n, 1.0, 0.0)      # weight (1-x) on [-1, 1]
    u = 0.5 * (1.0 - xj)                    # weight u on [0, 1], factor 1/4
    wu = 0.25 * wj
    xl, wl = roots_legendre(n)
    v = 0.5 * (xl + 1.0)
    wv = 0.5 * wl
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    return U.ravel(), V.ravel(), W.ravel()


def triangle_rule(tri: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Map the reference rule onto a physical triangle ``tri`` (3, 2)."""
    u, v, w = _square_rule(order)
    a, b, c = tri
    # reference map: (x, y) = (u, u v) on the triangle 0 <= y <= x <= 1
    pts = a[None, :] + np.outer(u, b - a) + np.outer(u * v, c - b)
    area2 = abs(_tri_area2(a, b, c))
    return pts, w * area2


def quadrature(geom: ElementGeometry, order: int) -> QuadratureRule:
    """Volume rule exact for bivariate total degree <= order on the cell."""
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    pts = []
    wts = []
    for tri in geom.sub_triangles:
        p, w = triangle_rule(tri, order)
        pts.append(p)
        wts.append(w)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts))


def segment_rule(p0: np.ndarray, p1: np.ndarray, order: int) -> QuadratureRule:
    """1D Gauss rule mapped onto the segment [p0, p1]."""
    n = max(1, (order + 2) // 2)
    x, w = roots_legendre(n)
    t = 0.5 * (x + 1.0)
    pts = p0[None, :] + np.outer(t, p1 - p0)
    length = float(np.hypot(*(p1 - p0)))
    return QuadratureRule(pts, 0.5 * w * length)
