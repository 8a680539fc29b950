"""File emission: legacy VTK snapshots, CSV series, line samples.

Snapshots are legacy VTK 2.0 ASCII polydata with POLYGONS cells and
three CELL_DATA arrays (polynomial degree, error indicator, cell-mean
potential).  All numbers are written with 9 significant digits so runs
are reproducible beyond plotting resolution.
"""
from __future__ import annotations

import os

import numpy as np

from .mesh import Mesh

FMT = "{:.9g}"


def _fmt(x) -> str:
    return FMT.format(float(x))


def write_snapshot(mesh: Mesh, fields: dict, path) -> None:
    """Write one VTK polydata snapshot.

    ``fields`` maps array names to per-cell values; every array must
    have one entry per cell.
    """
    for name, arr in fields.items():
        if len(arr) != mesh.n_cells:
            raise ValueError(f"field {name!r} has {len(arr)} entries for "
                             f"{mesh.n_cells} cells")
    lines = ["# vtk DataFile Version 2.0", "monodg snapshot", "ASCII",
             "DATASET POLYDATA", f"POINTS {mesh.n_vertices} double"]
    for v in mesh.vertices:
        lines.append(f"{_fmt(v[0])} {_fmt(v[1])} 0")
    size = sum(len(c) + 1 for c in mesh.cells)
    lines.append(f"POLYGONS {mesh.n_cells} {size}")
    for loop in mesh.cells:
        lines.append(str(len(loop)) + " " + " ".join(str(int(i)) for i in loop))
    lines.append(f"CELL_DATA {mesh.n_cells}")
    for name, arr in fields.items():
        arr = np.asarray(arr)
        if np.issubdtype(arr.dtype, np.integer):
            lines.append(f"SCALARS {name} int 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(str(int(v)) for v in arr)
        else:
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines.extend(_fmt(v) for v in arr)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot_cell_data(path, name):
    """Read back one CELL_DATA array from a snapshot (round-trip checks)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    n = None
    for i, line in enumerate(lines):
        if line.startswith("CELL_DATA"):
            n = int(line.split()[1])
        if line.startswith("SCALARS") and line.split()[1] == name:
            vals = lines[i + 2:i + 2 + n]
            return np.array([float(v) for v in vals])
    raise KeyError(f"array {name!r} not found in {path}")


def write_csv(path, header: str, rows) -> None:
    """CSV with 9-significant-digit numeric formatting."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating))
                              else str(v) for v in row) + "\n")


class SeriesWriter:
    """Accumulates (t, value...) rows and flushes them to CSV files."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.rows: dict[str, list] = {}

    def add(self, name: str, *row):
        self.rows.setdefault(name, []).append(row)

    def flush(self, headers: dict[str, str]):
        for name, rows in self.rows.items():
            header = headers.get(name, "t,v")
            write_csv(os.path.join(self.out_dir, name + ".csv"), header, rows)


def _point_in_polygon(poly: np.ndarray, p) -> bool:
    """Even-odd crossing test (boundary points count as inside)."""
    x, y = p
    inside = False
    n = len(poly)
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            t = (y - y0) / (y1 - y0)
            if x < x0 + t * (x1 - x0) + 1e-14:
                inside = not inside
    return inside


def sample_line(vol_evaluator, disc, U, y: float, x0: float, x1: float,
                n: int) -> np.ndarray:
    """Sample the DG field along a horizontal segment.

    Each point is evaluated through the basis of its containing cell
    (candidates ordered by centroid distance; nearest cell as the
    fallback for points off the mesh).  Returns (n, 2) rows of
    (x, value).
    """
    from .basis import eval_basis

    xs = np.linspace(x0, x1, n)
    pts = np.column_stack([xs, np.full(n, y)])
    centers = np.array([g.centroid for g in disc.geoms])
    out = np.empty(n)
    dofmap = vol_evaluator.dofmap
    for i, p in enumerate(pts):
        order = np.argsort(((centers - p) ** 2).sum(axis=1))
        k = int(order[0])
        for cand in order[:8]:
            if _point_in_polygon(disc.geoms[int(cand)].vertices, p):
                k = int(cand)
                break
        vals, _ = eval_basis(disc.geoms[k], int(dofmap.degrees[k]), p[None, :])
        out[i] = float(vals[:, 0] @ U[dofmap.block(k)])
    return np.column_stack([xs, out])
