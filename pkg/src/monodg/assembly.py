"""Block-sparse operators for the interior-penalty DG discretization.

The stiffness matrix splits as A = At + S: ``At`` collects the volume
term and the consistency/symmetrization face terms (entries between
fixed hierarchical modes do not depend on the degree field), ``S`` the
penalty jump-jump term whose face factor eta does depend on the local
degrees.  All local integrals are computed once at the maximal degree
and any degree layout is realized by slicing leading sub-blocks, so a
degree change reuses untouched blocks bit-exactly and "reassembling"
S reduces to rescaling cached face Grams with the new eta.

Only homogeneous Neumann boundaries appear in shipped problems, so
boundary faces contribute nothing to A; the Dirichlet penalty branch
exists for completeness but is unreachable from configurations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import DofMap, build_dof_map
from .space import Discretization


@dataclass(frozen=True)
class ModelCoefficients:
    """Membrane surface-to-volume ratio (1/mm) and capacitance (uF/mm^2)."""

    chi_m: float
    c_m: float

    def __post_init__(self):
        if self.chi_m <= 0 or self.c_m <= 0:
            raise ValueError("chi_m and c_m must be positive")


@dataclass(frozen=True)
class PenaltyConfig:
    eta0: float = 10.0

    def __post_init__(self):
        if self.eta0 <= 0:
            raise ValueError("eta0 must be positive")


class MaterialField:
    """Per-material 2x2 SPD conductivity tensors (mS/mm)."""

    def __init__(self, table: dict[int, np.ndarray]):
        self.table = {}
        for label, sig in table.items():
            sig = np.asarray(sig, dtype=float)
            if sig.shape == ():
                sig = float(sig) * np.eye(2)
            if sig.shape != (2, 2) or abs(sig[0, 1] - sig[1, 0]) > 1e-14:
                raise ValueError(f"material {label}: need symmetric 2x2 tensor")
            if np.linalg.eigvalsh(sig).min() <= 0:
                raise ValueError(f"material {label}: tensor not positive definite")
            self.table[int(label)] = sig

    @staticmethod
    def isotropic(value: float, label: int = 0) -> "MaterialField":
        return MaterialField({label: value * np.eye(2)})

    @staticmethod
    def fiber(sigma_l: float, sigma_n: float, normal, label: int = 0) -> "MaterialField":
        """sigma_l * I + (sigma_n - sigma_l) n (x) n for fiber normal n."""
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        sig = sigma_l * np.eye(2) + (sigma_n - sigma_l) * np.outer(n, n)
        return MaterialField({label: sig})

    def cell_tensors(self, mesh) -> np.ndarray:
        try:
            return np.array([self.table[int(m)] for m in mesh.cell_material])
        except KeyError as exc:
            raise KeyError(f"mesh uses material label {exc} missing from the "
                           "material table") from exc


def sigma_magnitude(sig: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric 2x2 tensor (penalty scale)."""
    a, b, c = sig[0, 0], sig[0, 1], sig[1, 1]
    return float(0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + b * b))


def penalty_value(p_plus, p_minus, h_plus, h_minus, s_plus, s_minus,
                  eta0: float) -> float:
    """Interior-face penalty: eta0 * avg(sigma) * avg(p^2) / harm(h)."""
    s_avg = 0.5 * (s_plus + s_minus)
    p2_avg = 0.5 * (p_plus ** 2 + p_minus ** 2)
    h_harm = 2.0 * h_plus * h_minus / (h_plus + h_minus)
    return eta0 * s_avg * p2_avg / h_harm


def penalty_boundary(p, h, s, eta0: float) -> float:
    """Dirichlet-face penalty (unreachable in shipped Neumann problems)."""
    return eta0 * s * p ** 2 / h


class OperatorCache:
    """All degree-independent local integrals at the maximal degree."""

    def __init__(self, disc: Discretization, material: MaterialField,
                 penalty: PenaltyConfig = PenaltyConfig()):
        self.disc = disc
        self.material = material
        self.penalty = penalty
        mesh = disc.mesh
        n_max = disc.n_max
        self.sigma_cell = material.cell_tensors(mesh)
        self.sigma_mag = np.array([sigma_magnitude(s) for s in self.sigma_cell])

        # block-diagonal mass and volume-stiffness blocks
        self.mass_blocks = []
        self.stiff_blocks = []
        for k in range(mesh.n_cells):
            _, w = disc.vol_points_of(k)
            v, g = disc.vol_table(k)
            self.mass_blocks.append((v * w) @ v.T)
            sig = self.sigma_cell[k]
            sgx = sig[0, 0] * g[:, :, 0] + sig[0, 1] * g[:, :, 1]
            sgy = sig[1, 0] * g[:, :, 0] + sig[1, 1] * g[:, :, 1]
            self.stiff_blocks.append((sgx * w) @ g[:, :, 0].T
                                     + (sgy * w) @ g[:, :, 1].T)

        # interior-face consistency/symmetrization and jump Grams
        self.cons = {}   # face id -> (C_pp, C_pm, C_mm)
        self.jump = {}   # face id -> (J_pp, J_pm, J_mm)
        for f in disc.interior_ids:
            face = mesh.faces[f]
            _, w = disc.face_points_of(f)
            vp, gp, vm, gm = disc.face_table(f)
            n = face.unit_normal
            kp, km = face.side_cells
            flux = []
            for g, k in ((gp, kp), (gm, km)):
                sig = self.sigma_cell[k]
                cx = n[0] * sig[0, 0] + n[1] * sig[0, 1]
                cy = n[0] * sig[0, 1] + n[1] * sig[1, 1]
                flux.append(cx * g[:, :, 0] + cy * g[:, :, 1])
            fp, fm = flux
            # sign of [[.]] per side relative to n = outward of side 0
            def cons_block(ti, ei, fj, ej, tj, fi):
                return -(0.5 * ei * (ti * w) @ fj.T + 0.5 * ej * (fi * w) @ tj.T)
            C_pp = cons_block(vp, +1.0, fp, +1.0, vp, fp)
            C_pm = cons_block(vp, +1.0, fm, -1.0, vm, fp)
            C_mm = cons_block(vm, -1.0, fm, -1.0, vm, fm)
            self.cons[int(f)] = (C_pp, C_pm, C_mm)
            J_pp = (vp * w) @ vp.T
            J_pm = -(vp * w) @ vm.T
            J_mm = (vm * w) @ vm.T
            self.jump[int(f)] = (J_pp, J_pm, J_mm)

    def face_penalty(self, f: int, degrees) -> float:
        face = self.disc.mesh.faces[f]
        kp, km = face.side_cells
        return penalty_value(degrees[kp], degrees[km],
                             self.disc.h[kp], self.disc.h[km],
                             self.sigma_mag[kp], self.sigma_mag[km],
                             self.penalty.eta0)


def _block_csr(blocks, rows_off, cols_off, rows_n, cols_n, shape):
    """Assemble dense blocks into one CSR matrix (duplicates summed)."""
    total = sum(b.size for b in blocks)
    data = np.empty(total)
    ri = np.empty(total, dtype=np.int64)
    ci = np.empty(total, dtype=np.int64)
    at = 0
    for b, r0, c0 in zip(blocks, rows_off, cols_off):
        nr, nc = b.shape
        sl = slice(at, at + b.size)
        data[sl] = b.ravel()
        ri[sl] = np.repeat(np.arange(r0, r0 + nr, dtype=np.int64), nc)
        ci[sl] = np.tile(np.arange(c0, c0 + nc, dtype=np.int64), nr)
        at += b.size
    mat = sp.coo_matrix((data, (ri, ci)), shape=shape)
    return mat.tocsr()


class AssembledOperators:
    """Mass, stiffness split, and penalties bound to one degree layout."""

    def __init__(self, cache: OperatorCache, dofmap: DofMap):
        self.cache = cache
        self.dofmap = dofmap
        self.disc = cache.disc
        self._build()

    def _build(self):
        cache, dofmap = self.cache, self.dofmap
        mesh = self.disc.mesh
        N = dofmap.total
        sizes, offsets = dofmap.sizes, dofmap.offsets

        mb, sb, ro, co = [], [], [], []
        for k in range(mesh.n_cells):
            n_k = int(sizes[k])
            mb.append(cache.mass_blocks[k][:n_k, :n_k])
            sb.append(cache.stiff_blocks[k][:n_k, :n_k])
            ro.append(int(offsets[k]))
            co.append(int(offsets[k]))
        self.M = _block_csr(mb, ro, co, None, None, (N, N))

        at_blocks = list(sb)
        at_r, at_c = list(ro), list(co)
        s_blocks, s_r, s_c = [], [], []
        self.face_eta = {}
        for f in self.disc.interior_ids:
            f = int(f)
            kp, km = mesh.faces[f].side_cells
            np_, nm = int(sizes[kp]), int(sizes[km])
            op_, om = int(offsets[kp]), int(offsets[km])
            C_pp, C_pm, C_mm = cache.cons[f]
            at_blocks += [C_pp[:np_, :np_], C_pm[:np_, :nm],
                          C_pm[:np_, :nm].T.copy(), C_mm[:nm, :nm]]
            at_r += [op_, op_, om, om]
            at_c += [op_, om, op_, om]
            eta = cache.face_penalty(f, dofmap.degrees)
            self.face_eta[f] = eta
            J_pp, J_pm, J_mm = cache.jump[f]
            s_blocks += [eta * J_pp[:np_, :np_], eta * J_pm[:np_, :nm],
                         eta * J_pm[:np_, :nm].T, eta * J_mm[:nm, :nm]]
            s_r += [op_, op_, om, om]
            s_c += [op_, om, op_, om]
        self.At = _block_csr(at_blocks, at_r, at_c, None, None, (N, N))
        if s_blocks:
            self.S = _block_csr(s_blocks, s_r, s_c, None, None, (N, N))
        else:
            self.S = sp.csr_matrix((N, N))
        self.A = (self.At + self.S).tocsr()

    def mass_block(self, k: int) -> np.ndarray:
        n_k = int(self.dofmap.sizes[k])
        return self.cache.mass_blocks[k][:n_k, :n_k]

    def constant_vector(self, value: float = 1.0) -> np.ndarray:
        """Coefficients of the globally constant function ``value``."""
        U = np.zeros(self.dofmap.total)
        for k in range(self.disc.mesh.n_cells):
            bbox_area = self.disc.geoms[k].bbox_area
            U[int(self.dofmap.offsets[k])] = value * np.sqrt(bbox_area)
        return U

    def solve_mass(self, rhs: np.ndarray) -> np.ndarray:
        """Apply M^-1 block by block (M is block diagonal)."""
        out = np.empty_like(rhs)
        for k in range(self.disc.mesh.n_cells):
            sl = self.dofmap.block(k)
            out[sl] = np.linalg.solve(self.mass_block(k), rhs[sl])
        return out


def assemble_operators(disc: Discretization, material: MaterialField,
                       degrees, penalty: PenaltyConfig = PenaltyConfig())\
        -> AssembledOperators:
    cache = OperatorCache(disc, material, penalty)
    return AssembledOperators(cache, build_dof_map(degrees))


def assemble_mass(disc: Discretization, material: MaterialField, degrees):
    """Block-diagonal Gram matrix of the modal basis for one layout."""
    return assemble_operators(disc, material, degrees).M


def assemble_stiffness(disc: Discretization, material: MaterialField,
                       degrees, eta0: float = 10.0):
    """Stiffness split (At, S): volume + consistency terms, and the
    penalty jump-jump part."""
    ops = assemble_operators(disc, material, degrees, PenaltyConfig(eta0))
    return ops.At, ops.S


def assemble_loads(vol, model, forcing, t_next: float, U, Y):
    """Load vectors for one step: stimulus F at the new time level,
    reaction load I and the ionic dynamics loads G from the current
    state.  ``vol`` is the VolumeEvaluator bound to the layout of U.
    """
    u_pts = vol.values(U)
    y_pts = None
    if Y is not None:
        y_pts = np.stack([vol.values(Y[l]) for l in range(Y.shape[0])])
    ionic = vol.load(model.reaction(u_pts, y_pts))
    dynamics = None
    m_vals = model.m_values(u_pts, y_pts)
    if m_vals is not None:
        dynamics = np.stack([vol.load(m_vals[l])
                             for l in range(m_vals.shape[0])])
    f_load = None
    if forcing is not None:
        vals = forcing.values(t_next, vol.disc.vq_points, vol.disc.vq_cell)
        f_load = vol.load(np.asarray(vals, dtype=float))
    return f_load, ionic, dynamics


def update_operators(ops: AssembledOperators, new_degrees) -> AssembledOperators:
    """Rebind operators to a new degree field.

    Blocks of unchanged elements are reused bit-exactly from the shared
    cache; changed diagonal and coupling blocks shrink or grow by
    leading-sub-block truncation/extension, and the jump-jump part is
    reassembled on every face whose penalty changed.
    """
    new_degrees = np.asarray(new_degrees, dtype=int)
    if len(new_degrees) != ops.disc.mesh.n_cells:
        raise ValueError("degree field size does not match the mesh")
    if new_degrees.max() > ops.disc.p_max:
        raise ValueError("degree exceeds the cached maximal degree")
    return AssembledOperators(ops.cache, build_dof_map(new_degrees))


def matrix_market_dump(mat: sp.spmatrix, path) -> None:
    """Coordinate text dump (row, col, value), for debugging."""
    coo = mat.tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
