"""Hierarchical modal basis and degree-dependent unknown layout.

Each cell carries a tensor-Legendre basis restricted to total degree
<= p_K and orthonormalized over the cell's axis-aligned bounding box.
Modes are ordered graded-lexicographically: all modes of total degree d
come before degree d+1, and within a degree block the y-exponent
increases.  The ordering is hierarchical, so the first (q+1)(q+2)/2
modes of any degree-p basis coincide with the degree-q basis; degree
changes are exact truncate/pad operations on coefficient blocks.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import ElementGeometry, quadrature


def local_dim(p: int) -> int:
    """Number of 2D polynomial modes of total degree <= p."""
    if p < 0:
        raise ValueError("degree must be >= 0")
    return (p + 1) * (p + 2) // 2


@lru_cache(maxsize=32)
def mode_exponents(p: int) -> np.ndarray:
    """(n_modes, 2) array of (x, y) exponents in graded-lex order."""
    modes = [(d - b, b) for d in range(p + 1) for b in range(d + 1)]
    return np.array(modes, dtype=int)


def validate_degrees(degrees, p_max: int) -> np.ndarray:
    degrees = np.asarray(degrees, dtype=int)
    if degrees.size and (degrees.min() < 1 or degrees.max() > p_max):
        raise ValueError(
            f"element degrees must lie in [1, {p_max}], "
            f"got range [{degrees.min()}, {degrees.max()}]")
    return degrees


@dataclass(frozen=True)
class DofMap:
    """Element-major layout of unknowns for a per-element degree field."""

    degrees: np.ndarray   # (n_cells,)
    sizes: np.ndarray     # (n_cells,) block sizes (p+1)(p+2)/2
    offsets: np.ndarray   # (n_cells,) start of each block
    total: int

    def block(self, k: int) -> slice:
        return slice(int(self.offsets[k]), int(self.offsets[k] + self.sizes[k]))


def build_dof_map(degrees) -> DofMap:
    """Contiguous element-major layout; reports the total unknown count."""
    degrees = np.asarray(degrees, dtype=int)
    if degrees.size and degrees.min() < 1:
        raise ValueError("element degrees must be >= 1")
    sizes = (degrees + 1) * (degrees + 2) // 2
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
    return DofMap(degrees, sizes, offsets, int(sizes.sum()))


def _legendre_table(t: np.ndarray, n_max: int, n_derivs: int) -> np.ndarray:
    """Legendre values and derivatives on [-1, 1].

    Returns ``tab[d, n, i]`` = d-th derivative of P_n at t[i], built by
    the three-term recurrence (stable for the small n used here).
    """
    t = np.asarray(t, dtype=float)
    tab = np.zeros((n_derivs + 1, n_max + 1, t.size))
    tab[0, 0] = 1.0
    if n_max >= 1:
        tab[0, 1] = t
        if n_derivs >= 1:
            tab[1, 1] = 1.0
    for n in range(1, n_max):
        tab[0, n + 1] = ((2 * n + 1) * t * tab[0, n] - n * tab[0, n - 1]) / (n + 1)
        for d in range(1, n_derivs + 1):
            tab[d, n + 1] = tab[d, n - 1] + (2 * n + 1) * tab[d - 1, n]
    return tab


def eval_basis(geom: ElementGeometry, p: int, points: np.ndarray,
               hessian: bool = False):
    """Evaluate the local modal basis at physical points.

    Returns ``(values, gradients)`` with shapes (n_modes, n_pts) and
    (n_modes, n_pts, 2); with ``hessian=True`` a third array of shape
    (n_modes, n_pts, 3) holding (dxx, dxy, dyy) is appended.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    x0, y0, x1, y1 = geom.bbox
    hx, hy = x1 - x0, y1 - y0
    xi = (2.0 * points[:, 0] - x0 - x1) / hx
    eta = (2.0 * points[:, 1] - y0 - y1) / hy
    nd = 2 if hessian else 1
    tx = _legendre_table(xi, p, nd)
    ty = _legendre_table(eta, p, nd)
    # 1D orthonormalization over the box sides
    norm_x = np.sqrt((2 * np.arange(p + 1) + 1) / hx)
    norm_y = np.sqrt((2 * np.arange(p + 1) + 1) / hy)
    sx, sy = 2.0 / hx, 2.0 / hy  # chain-rule factors d(xi)/dx, d(eta)/dy

    modes = mode_exponents(p)
    a, b = modes[:, 0], modes[:, 1]
    fx = norm_x[a][:, None]
    fy = norm_y[b][:, None]
    vx, vy = tx[0][a] * fx, ty[0][b] * fy
    dx, dy = tx[1][a] * fx * sx, ty[1][b] * fy * sy

    values = vx * vy
    gradients = np.stack([dx * vy, vx * dy], axis=-1)
    if not hessian:
        return values, gradients
    dxx = tx[2][a] * fx * sx * sx
    dyy = ty[2][b] * fy * sy * sy
    hess = np.stack([dxx * vy, dx * dy, vx * dyy], axis=-1)
    return values, gradients, hess


def project_L2(f, geom: ElementGeometry, p: int, quad_order: int | None = None)\
        -> np.ndarray:
    """L2-orthogonal projection of a scalar field onto P^p on the cell.

    ``f`` is a callable taking an (n, 2) point array.  Solves the local
    mass system (the basis is orthonormal over the bounding box, not
    the polygon).
    """
    rule = quadrature(geom, quad_order if quad_order is not None else 2 * p + 2)
    vals, _ = eval_basis(geom, p, rule.points)
    mass = (vals * rule.weights) @ vals.T
    rhs = vals @ (rule.weights * np.asarray(f(rule.points), dtype=float))
    try:
        return np.linalg.solve(mass, rhs)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            f"singular local mass matrix (broken quadrature?): {exc}") from exc
