"""Discretization workspace: cached quadrature, basis tables, and
global point-evaluation operators.

All expensive per-element and per-face basis evaluations are cached at
the maximal degree; because the basis is hierarchical, any lower-degree
table is a leading-row view of the cached one.  For a given per-element
degree field the workspace assembles sparse evaluation matrices mapping
coefficient vectors to values (and derivatives) at all volume or face
quadrature points, which keeps the per-step work inside vectorized
sparse kernels.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .basis import DofMap, eval_basis, local_dim
from .geometry import element_geometry, quadrature, segment_rule
from .mesh import Mesh


class Discretization:
    """Mesh-bound caches shared by assembly, indicators, and norms."""

    def __init__(self, mesh: Mesh, p_max: int, quad_order: int | None = None):
        self.mesh = mesh
        self.p_max = int(p_max)
        self.n_max = local_dim(self.p_max)
        self.quad_order = int(quad_order) if quad_order else 2 * self.p_max + 2

        self.geoms = [element_geometry(mesh, k) for k in range(mesh.n_cells)]
        self.h = np.array([g.diameter for g in self.geoms])
        self.areas = np.array([g.area for g in self.geoms])

        rules = [quadrature(g, self.quad_order) for g in self.geoms]
        counts = np.array([len(r.weights) for r in rules])
        self.vq_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(int)
        self.vq_points = np.vstack([r.points for r in rules])
        self.vq_weights = np.concatenate([r.weights for r in rules])
        self.vq_cell = np.repeat(np.arange(mesh.n_cells), counts)

        frules = [segment_rule(mesh.vertices[f.endpoints[0]],
                               mesh.vertices[f.endpoints[1]], self.quad_order)
                  for f in mesh.faces]
        fcounts = np.array([len(r.weights) for r in frules])
        self.fq_ptr = np.concatenate([[0], np.cumsum(fcounts)]).astype(int)
        self.fq_points = np.vstack([r.points for r in frules])
        self.fq_weights = np.concatenate([r.weights for r in frules])
        self.fq_face = np.repeat(np.arange(len(mesh.faces)), fcounts)

        self.interior_ids = np.array(
            [i for i, f in enumerate(mesh.faces) if f.is_interior], dtype=int)
        self.boundary_ids = np.array(
            [i for i, f in enumerate(mesh.faces) if not f.is_interior], dtype=int)

        self._vol_tab: list = [None] * mesh.n_cells
        self._vol_hess: list = [None] * mesh.n_cells
        self._face_tab: list = [None] * len(mesh.faces)

    # -- cached basis tables ------------------------------------------------

    def vol_points_of(self, k: int):
        sl = slice(self.vq_ptr[k], self.vq_ptr[k + 1])
        return self.vq_points[sl], self.vq_weights[sl]

    def vol_table(self, k: int):
        """(values, gradients) of all n_max modes at cell k's quad points."""
        if self._vol_tab[k] is None:
            pts, _ = self.vol_points_of(k)
            self._vol_tab[k] = eval_basis(self.geoms[k], self.p_max, pts)
        return self._vol_tab[k]

    def vol_hessian(self, k: int):
        """(dxx, dxy, dyy) mode table at cell k's quad points."""
        if self._vol_hess[k] is None:
            pts, _ = self.vol_points_of(k)
            self._vol_hess[k] = eval_basis(self.geoms[k], self.p_max, pts,
                                           hessian=True)[2]
        return self._vol_hess[k]

    def face_points_of(self, f: int):
        sl = slice(self.fq_ptr[f], self.fq_ptr[f + 1])
        return self.fq_points[sl], self.fq_weights[sl]

    def face_table(self, f: int):
        """Per-side (values, gradients) traces at face f's quad points.

        Boundary faces carry ``None`` for the missing side.
        """
        if self._face_tab[f] is None:
            face = self.mesh.faces[f]
            pts, _ = self.face_points_of(f)
            tabs = []
            for k in face.side_cells:
                tabs.append(eval_basis(self.geoms[k], self.p_max, pts))
            while len(tabs) < 2:
                tabs.append((None, None))
            self._face_tab[f] = (tabs[0][0], tabs[0][1], tabs[1][0], tabs[1][1])
        return self._face_tab[f]

    def drop_caches(self):
        self._vol_tab = [None] * self.mesh.n_cells
        self._vol_hess = [None] * self.mesh.n_cells
        self._face_tab = [None] * len(self.mesh.faces)


def _csr_from_blocks(n_rows, n_cols, row_ptr_blocks, col_offsets, datas):
    """CSR with one dense (rows x cols) block per entry, rows contiguous."""
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    for (r0, r1), c0, dat in zip(row_ptr_blocks, col_offsets, datas):
        indptr[r0 + 1:r1 + 1] = dat.shape[1]
    np.cumsum(indptr, out=indptr)
    indices = np.empty(indptr[-1], dtype=np.int64)
    data = np.empty(indptr[-1], dtype=float)
    for (r0, r1), c0, dat in zip(row_ptr_blocks, col_offsets, datas):
        cols = np.arange(c0, c0 + dat.shape[1], dtype=np.int64)
        block = np.broadcast_to(cols, dat.shape).ravel()
        indices[indptr[r0]:indptr[r1]] = block
        data[indptr[r0]:indptr[r1]] = dat.ravel()
    return sp.csr_matrix((data, indices, indptr), shape=(n_rows, n_cols))


class VolumeEvaluator:
    """Sparse maps from a coefficient vector to values/gradients at all
    volume quadrature points for a fixed degree layout."""

    def __init__(self, disc: Discretization, dofmap: DofMap):
        self.disc = disc
        self.dofmap = dofmap
        self.weights = disc.vq_weights
        self.cell_of_point = disc.vq_cell
        n_pts = len(disc.vq_weights)
        rows, offs = [], []
        vals, gxs, gys = [], [], []
        for k in range(disc.mesh.n_cells):
            n_k = int(dofmap.sizes[k])
            tab_v, tab_g = disc.vol_table(k)
            rows.append((int(disc.vq_ptr[k]), int(disc.vq_ptr[k + 1])))
            offs.append(int(dofmap.offsets[k]))
            vals.append(np.ascontiguousarray(tab_v[:n_k].T))
            gxs.append(np.ascontiguousarray(tab_g[:n_k, :, 0].T))
            gys.append(np.ascontiguousarray(tab_g[:n_k, :, 1].T))
        N = dofmap.total
        self.E = _csr_from_blocks(n_pts, N, rows, offs, vals)
        self.Gx = _csr_from_blocks(n_pts, N, rows, offs, gxs)
        self.Gy = _csr_from_blocks(n_pts, N, rows, offs, gys)
        self._Et = self.E.T.tocsr()

    def values(self, U):
        return self.E @ U

    def gradients(self, U):
        return self.Gx @ U, self.Gy @ U

    def load(self, point_values):
        """Vector of integrals (field, phi_j) from pointwise field samples."""
        return self._Et @ (self.weights * point_values)

    def cell_integrals(self, point_values):
        """Per-cell integrals of a pointwise field."""
        return np.add.reduceat(self.weights * point_values, self.disc.vq_ptr[:-1])

    def cell_means(self, U):
        return self.cell_integrals(self.values(U)) / self.disc.areas


class FaceEvaluator:
    """Two-sided traces (values and gradient components) on interior
    faces, as sparse maps over all interior-face quadrature points."""

    def __init__(self, disc: Discretization, dofmap: DofMap):
        self.disc = disc
        self.dofmap = dofmap
        mesh = disc.mesh
        ids = disc.interior_ids
        counts = np.array([disc.fq_ptr[f + 1] - disc.fq_ptr[f] for f in ids])
        self.row_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(int)
        self.face_ids = ids
        self.weights = np.concatenate(
            [disc.fq_weights[disc.fq_ptr[f]:disc.fq_ptr[f + 1]] for f in ids]) \
            if len(ids) else np.zeros(0)
        self.face_of_point = np.repeat(np.arange(len(ids)), counts) \
            if len(ids) else np.zeros(0, dtype=int)
        n_pts = int(counts.sum()) if len(ids) else 0
        N = dofmap.total

        mats = {}
        for side in (0, 1):
            rows, offs = [], []
            datas = {"v": [], "gx": [], "gy": []}
            for i, f in enumerate(ids):
                k = mesh.faces[f].side_cells[side]
                n_k = int(dofmap.sizes[k])
                v0, g0, v1, g1 = disc.face_table(f)
                v, g = (v0, g0) if side == 0 else (v1, g1)
                rows.append((int(self.row_ptr[i]), int(self.row_ptr[i + 1])))
                offs.append(int(dofmap.offsets[k]))
                datas["v"].append(np.ascontiguousarray(v[:n_k].T))
                datas["gx"].append(np.ascontiguousarray(g[:n_k, :, 0].T))
                datas["gy"].append(np.ascontiguousarray(g[:n_k, :, 1].T))
            for name, dat in datas.items():
                mats[(name, side)] = _csr_from_blocks(n_pts, N, rows, offs, dat)
        self.Tp, self.Tm = mats[("v", 0)], mats[("v", 1)]
        self.Gxp, self.Gxm = mats[("gx", 0)], mats[("gx", 1)]
        self.Gyp, self.Gym = mats[("gy", 0)], mats[("gy", 1)]

    def jumps(self, U):
        """u+ - u- at every interior-face quadrature point."""
        return self.Tp @ U - self.Tm @ U

    def per_face(self, point_values):
        """Integrate a pointwise quantity face by face."""
        if len(self.face_ids) == 0:
            return np.zeros(0)
        return np.add.reduceat(self.weights * point_values, self.row_ptr[:-1])
