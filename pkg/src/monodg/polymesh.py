"""Deterministic polygonal mesh generation on rectangles.

Builds centroidal-Voronoi-type meshes by Lloyd iteration.  Seed points
are mirrored across the four rectangle edges before each Voronoi call,
which clips the cells of the original points to the rectangle exactly
and keeps every region bounded.  Generation is seeded and fully
deterministic, so mesh files can be regenerated bit-identically.

This is artifact tooling: the solver itself only consumes mesh files.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import Voronoi

from .mesh import Mesh, build_mesh, write_mesh


def _mirror(points, bounds):
    x0, y0, x1, y1 = bounds
    left = points.copy()
    left[:, 0] = 2 * x0 - left[:, 0]
    right = points.copy()
    right[:, 0] = 2 * x1 - right[:, 0]
    bottom = points.copy()
    bottom[:, 1] = 2 * y0 - bottom[:, 1]
    top = points.copy()
    top[:, 1] = 2 * y1 - top[:, 1]
    return np.vstack([points, left, right, bottom, top])


def _cell_polygons(points, bounds):
    """Voronoi polygons of ``points`` clipped to the rectangle."""
    vor = Voronoi(_mirror(points, bounds))
    polys = []
    for i in range(len(points)):
        region = vor.regions[vor.point_region[i]]
        verts = vor.vertices[region]
        # mirrored construction keeps regions bounded; order CCW around
        # the generator (Voronoi cells are convex)
        ang = np.arctan2(verts[:, 1] - points[i, 1], verts[:, 0] - points[i, 0])
        polys.append(verts[np.argsort(ang)])
    return polys


def _polygon_centroid(verts):
    x, y = verts[:, 0], verts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def cvt_mesh(bounds, n_cells: int, seed: int = 0, lloyd_iters: int = 60,
             material_of=None) -> Mesh:
    """Lloyd-relaxed Voronoi mesh of an axis-aligned rectangle.

    Args:
        bounds: (x0, y0, x1, y1) rectangle.
        n_cells: number of polygonal cells.
        seed: RNG seed; identical seeds give identical meshes.
        lloyd_iters: centroidal relaxation sweeps.
        material_of: optional callable centroid -> integer label.
    """
    x0, y0, x1, y1 = bounds
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(x0, x1, n_cells),
                           rng.uniform(y0, y1, n_cells)])
    for _ in range(lloyd_iters):
        polys = _cell_polygons(pts, bounds)
        pts = np.array([_polygon_centroid(p) for p in polys])
    polys = _cell_polygons(pts, bounds)

    # snap onto the boundary and merge coincident vertices
    span = max(x1 - x0, y1 - y0)
    snap = 1e-9 * span
    vert_index: dict[tuple[int, int], int] = {}
    vertices: list[np.ndarray] = []
    cells = []
    for verts in polys:
        v = verts.copy()
        for axis, lo, hi in ((0, x0, x1), (1, y0, y1)):
            v[np.abs(v[:, axis] - lo) < snap, axis] = lo
            v[np.abs(v[:, axis] - hi) < snap, axis] = hi
        loop = []
        for p in v:
            key = (int(round(p[0] / snap)), int(round(p[1] / snap)))
            if key not in vert_index:
                vert_index[key] = len(vertices)
                vertices.append(p)
            vid = vert_index[key]
            if not loop or (loop[-1] != vid and loop[0] != vid):
                loop.append(vid)
        cells.append(loop)

    vertices = np.array(vertices)
    if material_of is None:
        materials = np.zeros(len(cells), dtype=int)
    else:
        materials = np.array(
            [int(material_of(_polygon_centroid(vertices[np.array(c)])))
             for c in cells])
    return build_mesh(vertices, cells, materials)


def two_cell_mesh() -> Mesh:
    """Two unit squares sharing an edge (handy in tests)."""
    vertices = [(0, 0), (1, 0), (2, 0), (2, 1), (1, 1), (0, 1)]
    cells = [[0, 1, 4, 5], [1, 2, 3, 4]]
    return build_mesh(np.array(vertices, dtype=float), cells)


def unit_square_mesh() -> Mesh:
    vertices = [(0, 0), (1, 0), (1, 1), (0, 1)]
    return build_mesh(np.array(vertices, dtype=float), [[0, 1, 2, 3]])


def generate_mesh_file(path, bounds, n_cells, seed=0, lloyd_iters=60,
                       material_of=None) -> Mesh:
    mesh = cvt_mesh(bounds, n_cells, seed, lloyd_iters, material_of)
    write_mesh(mesh, path)
    return mesh
