"""Per-element a-posteriori error indicator and its components.

For each element the squared indicator is the sum of five squared
parts: the weighted interior residual, the normal-flux jump, the
penalty-weighted solution jump, the tangential-flux jump, and the data
oscillation of the stimulus.  Face terms are accumulated over each
element's own boundary, so an interior face contributes to both of its
neighbors.  Components are refreshed only on a requested subset of
elements; everywhere else previously computed (stale) values persist,
tracked per element by the step of last update.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import AssembledOperators
from .space import Discretization


@dataclass
class IndicatorField:
    """Indicator values, their components, and staleness bookkeeping."""

    tau: np.ndarray
    tau_r: np.ndarray
    tau_n: np.ndarray
    tau_j: np.ndarray
    tau_t: np.ndarray
    osc: np.ndarray
    last_update: np.ndarray   # step index of last refresh, -1 = never

    @staticmethod
    def empty(n_cells: int) -> "IndicatorField":
        z = np.zeros(n_cells)
        return IndicatorField(z.copy(), z.copy(), z.copy(), z.copy(), z.copy(),
                              z.copy(), np.full(n_cells, -1, dtype=int))

    def marking_value(self, kind: str = "full") -> np.ndarray:
        """Scalar driving the degree update: full tau, jump-only, or
        residual-only."""
        if kind == "full":
            return self.tau
        if kind == "jump":
            return self.tau_j
        if kind == "residual":
            return self.tau_r
        raise ValueError(f"unknown marking indicator {kind!r}")


def combine(tau_r, tau_n, tau_j, tau_t, osc) -> np.ndarray:
    """Root-sum-square of the five component fields."""
    return np.sqrt(np.asarray(tau_r) ** 2 + np.asarray(tau_n) ** 2
                   + np.asarray(tau_j) ** 2 + np.asarray(tau_t) ** 2
                   + np.asarray(osc) ** 2)


class IndicatorComputer:
    """Evaluates indicator components against the current operators.

    The element set passed to :meth:`refresh` controls exactly which
    entries of the field are recomputed.
    """

    def __init__(self, disc: Discretization, ops: AssembledOperators,
                 coeffs, model, forcing=None):
        self.disc = disc
        self.ops = ops
        self.coeffs = coeffs
        self.model = model
        self.forcing = forcing

    def rebind(self, ops: AssembledOperators):
        self.ops = ops

    # -- volume terms --------------------------------------------------------

    def _forcing_values(self, pts, cell, t):
        if self.forcing is None:
            return np.zeros(len(pts))
        return np.asarray(self.forcing.values(t, pts, cell), dtype=float)

    def residual_and_oscillation(self, U, U_prev, Y, t, dt, cells):
        """tau_r and data oscillation for the given cells.

        The time term uses the backward difference of the two snapshots,
        which must share the current layout.
        """
        dofmap = self.ops.dofmap
        if U_prev is not None and len(U_prev) != len(U):
            raise ValueError("solution snapshots live on different layouts")
        chi, cm = self.coeffs.chi_m, self.coeffs.c_m
        sig = self.ops.cache.sigma_cell
        tau_r = np.zeros(len(cells))
        osc = np.zeros(len(cells))
        for i, k in enumerate(cells):
            pts, w = self.disc.vol_points_of(k)
            n_k = int(dofmap.sizes[k])
            sl = dofmap.block(k)
            v, _ = self.disc.vol_table(k)
            hess = self.disc.vol_hessian(k)
            c_u = U[sl]
            u_pts = v[:n_k].T @ c_u
            if U_prev is None:
                du_dt = np.zeros_like(u_pts)
            else:
                du_dt = (u_pts - v[:n_k].T @ U_prev[sl]) / dt
            if Y is not None:
                y_pts = np.stack([v[:n_k].T @ Y[l][sl] for l in range(6)])
                f_pts = self.model.reaction(u_pts, y_pts)
            else:
                f_pts = self.model.reaction(u_pts, None)
            s = sig[k]
            div_flux = (s[0, 0] * (hess[:n_k, :, 0].T @ c_u)
                        + 2.0 * s[0, 1] * (hess[:n_k, :, 1].T @ c_u)
                        + s[1, 1] * (hess[:n_k, :, 2].T @ c_u))
            f_ext = self._forcing_values(pts, k, t)
            mass = self.ops.mass_block(k)
            coef = np.linalg.solve(mass, v[:n_k] @ (w * f_ext))
            pi_ext = v[:n_k].T @ coef
            resid = chi * f_pts - div_flux + chi * cm * du_dt - pi_ext
            h_k = self.disc.h[k]
            tau_r[i] = h_k * np.sqrt(np.dot(w, resid ** 2))
            osc[i] = h_k * np.sqrt(np.dot(w, (pi_ext - f_ext) ** 2))
        return tau_r, osc

    # -- face terms ------------------------------------------------------------

    def face_jump_integrals(self, U, face_ids=None):
        """Per-face integrals (flux-jump^2, eta*sol-jump^2, tang-jump^2).

        Boundary (Neumann) faces carry the one-sided flux in the first
        slot and zeros elsewhere.  ``face_ids`` limits the work to the
        given faces; other rows stay zero.
        """
        mesh = self.disc.mesh
        dofmap = self.ops.dofmap
        sig = self.ops.cache.sigma_cell
        n_faces = len(mesh.faces)
        out = np.zeros((n_faces, 3))
        if face_ids is None:
            face_ids = range(n_faces)
        for f in face_ids:
            face = mesh.faces[f]
            _, w = self.disc.face_points_of(f)
            vp, gp, vm, gm = self.disc.face_table(f)
            n, tvec = face.unit_normal, face.unit_tangent
            kp = face.side_cells[0]
            np_ = int(dofmap.sizes[kp])
            cp = U[dofmap.block(kp)]
            sp_ = sig[kp]
            gxp = gp[:np_, :, 0].T @ cp
            gyp = gp[:np_, :, 1].T @ cp
            fluxp_n = (sp_[0, 0] * gxp + sp_[0, 1] * gyp) * n[0] \
                + (sp_[1, 0] * gxp + sp_[1, 1] * gyp) * n[1]
            fluxp_t = (sp_[0, 0] * gxp + sp_[0, 1] * gyp) * tvec[0] \
                + (sp_[1, 0] * gxp + sp_[1, 1] * gyp) * tvec[1]
            if not face.is_interior:
                out[f, 0] = np.dot(w, fluxp_n ** 2)
                continue
            km = face.side_cells[1]
            nm = int(dofmap.sizes[km])
            cm_ = U[dofmap.block(km)]
            sm = sig[km]
            up = vp[:np_].T @ cp
            um = vm[:nm].T @ cm_
            gxm = gm[:nm, :, 0].T @ cm_
            gym = gm[:nm, :, 1].T @ cm_
            fluxm_n = (sm[0, 0] * gxm + sm[0, 1] * gym) * n[0] \
                + (sm[1, 0] * gxm + sm[1, 1] * gym) * n[1]
            fluxm_t = (sm[0, 0] * gxm + sm[0, 1] * gym) * tvec[0] \
                + (sm[1, 0] * gxm + sm[1, 1] * gym) * tvec[1]
            eta = self.ops.face_eta[f]
            out[f, 0] = np.dot(w, (fluxp_n - fluxm_n) ** 2)
            out[f, 1] = eta * np.dot(w, (up - um) ** 2)
            out[f, 2] = np.dot(w, (fluxp_t - fluxm_t) ** 2)
        return out

    def jump_terms(self, U, cells, face_integrals=None):
        """(tau_n, tau_j, tau_t) accumulated per element for ``cells``."""
        mesh = self.disc.mesh
        if face_integrals is None:
            face_integrals = self.face_jump_integrals(U)
        tau_n = np.zeros(len(cells))
        tau_j = np.zeros(len(cells))
        tau_t = np.zeros(len(cells))
        for i, k in enumerate(cells):
            h_k = self.disc.h[k]
            sn = sj = st = 0.0
            for f in mesh.cell_faces[k]:
                sn += face_integrals[f, 0]
                sj += face_integrals[f, 1]
                st += face_integrals[f, 2]
            tau_n[i] = np.sqrt(h_k * sn)
            tau_j[i] = np.sqrt(sj)
            tau_t[i] = np.sqrt(h_k * st)
        return tau_n, tau_j, tau_t

    # -- orchestration -----------------------------------------------------------

    def refresh(self, field: IndicatorField, U, U_prev, Y, t, dt, cells,
                step: int) -> IndicatorField:
        """Recompute all components on ``cells``; leave the rest stale."""
        cells = np.asarray(sorted(cells), dtype=int)
        if len(cells) == 0:
            return field
        tau_r, osc = self.residual_and_oscillation(U, U_prev, Y, t, dt, cells)
        touched = sorted({f for k in cells for f in self.disc.mesh.cell_faces[k]})
        face_int = self.face_jump_integrals(U, touched)
        tau_n, tau_j, tau_t = self.jump_terms(U, cells, face_int)
        field.tau_r[cells] = tau_r
        field.osc[cells] = osc
        field.tau_n[cells] = tau_n
        field.tau_j[cells] = tau_j
        field.tau_t[cells] = tau_t
        field.tau[cells] = combine(tau_r, tau_n, tau_j, tau_t, osc)
        field.last_update[cells] = step
        return field
