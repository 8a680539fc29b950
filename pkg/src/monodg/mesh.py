"""Polygonal mesh loading, validation, and topology.

Meshes are flat tilings of simple 2D polygons (Voronoi-type or
agglomerated cells).  The loader parses the plain-text mesh format,
derives the face (edge) topology with per-side outward normals, builds
the cell neighbor map, and validates the input: positive cell areas,
counter-clockwise vertex loops, and consistent face sharing.

Mesh file format (whitespace separated)::

    NV NC
    x y            # NV vertex lines, coordinates in mm
    m n v1 ... vn  # NC cell lines: material label, vertex count,
                   # zero-based CCW vertex indices

All objects in this module are immutable after construction and safe
for concurrent read access.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MeshError(ValueError):
    """Raised for malformed mesh text or invalid mesh topology."""


@dataclass(frozen=True)
class Face:
    """A mesh edge with side bookkeeping.

    ``endpoints`` are oriented as traversed by the first side cell's CCW
    loop; ``unit_normal`` points outward of that cell.  The second side,
    when present, sees the opposite normal.
    """

    endpoints: tuple[int, int]
    side_cells: tuple[int, ...]
    unit_normal: np.ndarray
    unit_tangent: np.ndarray
    length: float

    @property
    def is_interior(self) -> bool:
        return len(self.side_cells) == 2

    def normal(self, side: int) -> np.ndarray:
        """Outward unit normal of side ``side`` (0 or 1)."""
        return self.unit_normal if side == 0 else -self.unit_normal


@dataclass(frozen=True)
class Mesh:
    """Immutable polygonal mesh with derived topology."""

    vertices: np.ndarray                 # (n_vertices, 2), mm
    cells: tuple[np.ndarray, ...]        # CCW vertex index loops
    cell_material: np.ndarray            # (n_cells,) integer labels
    faces: tuple[Face, ...] = field(default=())
    cell_faces: tuple[tuple[int, ...], ...] = field(default=())
    neighbors: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def interior_faces(self):
        return [f for f in self.faces if f.is_interior]

    def boundary_faces(self):
        return [f for f in self.faces if not f.is_interior]

    def cell_vertices(self, k: int) -> np.ndarray:
        return self.vertices[self.cells[k]]


def polygon_area(points: np.ndarray) -> float:
    """Signed shoelace area of a closed polygon loop (CCW positive)."""
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _build_topology(vertices, cells):
    """Derive faces, per-cell face lists, and the neighbor map."""
    edge_sides: dict[tuple[int, int], list[tuple[int, int, int]]] = {}
    for k, loop in enumerate(cells):
        n = len(loop)
        for i in range(n):
            a, b = int(loop[i]), int(loop[(i + 1) % n])
            key = (a, b) if a < b else (b, a)
            edge_sides.setdefault(key, []).append((k, a, b))

    faces: list[Face] = []
    cell_faces: list[list[int]] = [[] for _ in cells]
    neighbors: list[set[int]] = [set() for _ in cells]
    for key in sorted(edge_sides):
        sides = edge_sides[key]
        if len(sides) > 2:
            raise MeshError(
                f"face {key} shared by {len(sides)} cells: "
                f"{sorted(s[0] for s in sides)}"
            )
        k0, a, b = sides[0]
        d = vertices[b] - vertices[a]
        length = float(np.hypot(d[0], d[1]))
        if length <= 0.0:
            raise MeshError(f"zero-length face {key} in cell {k0}")
        tangent = d / length
        normal = np.array([tangent[1], -tangent[0]])  # outward for CCW loops
        side_cells = tuple(s[0] for s in sides)
        fid = len(faces)
        faces.append(Face((a, b), side_cells, normal, tangent, length))
        for k in side_cells:
            cell_faces[k].append(fid)
        if len(side_cells) == 2:
            neighbors[side_cells[0]].add(side_cells[1])
            neighbors[side_cells[1]].add(side_cells[0])

    return (
        tuple(faces),
        tuple(tuple(cf) for cf in cell_faces),
        tuple(tuple(sorted(nb)) for nb in neighbors),
    )


def build_mesh(vertices, cells, cell_material=None) -> Mesh:
    """Validate raw arrays and derive the full topology."""
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[1] != 2:
        raise MeshError("vertices must be an (n, 2) array")
    cell_arrays = []
    for k, loop in enumerate(cells):
        loop = np.asarray(loop, dtype=int)
        if len(loop) < 3:
            raise MeshError(f"degenerate cell {k}: only {len(loop)} vertices")
        if len(set(loop.tolist())) != len(loop):
            raise MeshError(f"degenerate cell {k}: repeated vertex index")
        if loop.min() < 0 or loop.max() >= len(vertices):
            raise MeshError(f"cell {k} references vertex out of range")
        area = polygon_area(vertices[loop])
        if area <= 1e-14 * max(1.0, float(np.abs(vertices[loop]).max()) ** 2):
            raise MeshError(
                f"degenerate cell {k}: non-positive area {area:g} "
                "(vertex loops must be counter-clockwise)"
            )
        cell_arrays.append(loop)
    if cell_material is None:
        cell_material = np.zeros(len(cell_arrays), dtype=int)
    cell_material = np.asarray(cell_material, dtype=int)
    if len(cell_material) != len(cell_arrays):
        raise MeshError("one material label per cell required")

    faces, cell_faces, neighbors = _build_topology(vertices, cell_arrays)
    return Mesh(vertices, tuple(cell_arrays), cell_material,
                faces, cell_faces, neighbors)


def load_mesh(source: str) -> Mesh:
    """Parse mesh-file text into a validated :class:`Mesh`.

    ``source`` is the file *content*, not a path; see the module
    docstring for the format.
    """
    tokens = source.split()
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(tokens):
            raise MeshError(f"malformed mesh text: truncated while reading {what}")
        out = tokens[pos:pos + n]
        pos += n
        return out

    def ints(raw, what):
        try:
            return [int(t) for t in raw]
        except ValueError as exc:
            raise MeshError(f"malformed mesh text: bad integer in {what}: {exc}") from exc

    nv, nc = ints(take(2, "header"), "header")
    if nv < 3 or nc < 1:
        raise MeshError(f"malformed mesh text: implausible header NV={nv} NC={nc}")
    try:
        coords = np.array([float(t) for t in take(2 * nv, "vertices")], dtype=float)
    except ValueError as exc:
        raise MeshError(f"malformed mesh text: bad coordinate: {exc}") from exc
    vertices = coords.reshape(nv, 2)

    cells = []
    materials = []
    for k in range(nc):
        m, n = ints(take(2, f"cell {k} header"), f"cell {k} header")
        if n < 3:
            raise MeshError(f"degenerate cell {k}: only {n} vertices")
        loop = ints(take(n, f"cell {k} vertices"), f"cell {k} vertices")
        cells.append(loop)
        materials.append(m)
    if pos != len(tokens):
        raise MeshError(f"malformed mesh text: {len(tokens) - pos} trailing tokens")

    return build_mesh(vertices, cells, materials)


def read_mesh(path) -> Mesh:
    """Load a mesh from a file path."""
    with open(path, "r", encoding="utf-8") as fh:
        return load_mesh(fh.read())


def write_mesh(mesh: Mesh, path) -> None:
    """Write a mesh back out in the plain-text format."""
    lines = [f"{mesh.n_vertices} {mesh.n_cells}"]
    for v in mesh.vertices:
        lines.append(f"{v[0]:.17g} {v[1]:.17g}")
    for k, loop in enumerate(mesh.cells):
        idx = " ".join(str(int(i)) for i in loop)
        lines.append(f"{int(mesh.cell_material[k])} {len(loop)} {idx}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def shape_regularity_report(mesh: Mesh) -> dict:
    """Report (not enforce) min face-length / cell-diameter ratios."""
    from .geometry import element_geometry

    worst = np.inf
    ratios = []
    for k in range(mesh.n_cells):
        geom = element_geometry(mesh, k)
        fmin = min(mesh.faces[f].length for f in mesh.cell_faces[k])
        r = fmin / geom.diameter
        ratios.append(r)
        worst = min(worst, r)
    ratios = np.asarray(ratios)
    return {
        "min_face_over_diameter": float(worst),
        "median_face_over_diameter": float(np.median(ratios)),
    }
