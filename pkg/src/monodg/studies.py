"""Experiment drivers: convergence tables, adaptive-vs-uniform
comparisons, and the marking-indicator comparison.

Each study runs complete simulations through the shared runner and
reports plain rows ready for CSV emission.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .analysis import (EnergyAccumulator, NormCalculator,
                       smallest_sigma_eigenvalue)
from .config import RunConfig
from .runner import build_simulation
from .simulation import Simulation


@dataclass
class ConvergenceRow:
    h: float
    ndof: int
    error: float
    rate: float | None


def _tracked_run(ctx, exact, mu, cubic_a):
    """Run a simulation while accumulating the energy-norm error."""
    sim = ctx.sim
    calc = NormCalculator(sim.disc, sim.ops, sim.vol, sim.faces())
    acc = EnergyAccumulator(calc, ctx.coeffs, mu, cubic_a)

    def obs(s: Simulation):
        if s.controller is not None:
            calc.rebind(s.ops, s.vol, s.faces())
        acc.add(s.t, s.state.U, exact=exact)

    sim.run([obs])
    return acc.energy(sim.state.U, exact=exact, t=sim.t), calc, acc


def convergence_study(base_cfg: RunConfig, meshes, p_values) -> dict:
    """Uniform-degree energy-norm errors over a mesh sequence.

    ``meshes`` is a list of Mesh objects (finest last); the base config
    supplies physics and time stepping.  Returns {p: [ConvergenceRow]}.
    """
    out: dict[int, list[ConvergenceRow]] = {}
    for p in p_values:
        rows: list[ConvergenceRow] = []
        for mesh in meshes:
            cfg = replace(base_cfg, p_max=p, adapt_enabled=False)
            ctx = build_simulation(cfg, mesh=mesh)
            mu = smallest_sigma_eigenvalue(ctx.material)
            err, _, _ = _tracked_run(ctx, ctx.wave, mu, ctx.cubic.a)
            h = float(ctx.sim.disc.h.max())
            rate = None
            if rows:
                rate = float(np.log(rows[-1].error / err)
                             / np.log(rows[-1].h / h))
            rows.append(ConvergenceRow(h, ctx.sim.ops.dofmap.total, float(err),
                                       rate))
        out[p] = rows
    return out


@dataclass
class CompareResult:
    snapshots: list            # (t, err_uniform, err_adaptive, ratio)
    ndof_uniform: int
    ndof_steady: float         # mean adaptive NDoF over the steady window
    ndof_final: int
    n_cells: int
    ndof_series: list          # (t, ndof) of the adaptive run
    spearman: list             # (t, rank corr of indicator vs cell error)
    tracking: list             # (t, |argmax-tau centroid - front|, 2h)


def adaptive_vs_uniform(cfg: RunConfig, snapshot_steps, steady_window,
                        mesh=None) -> CompareResult:
    """Run uniform-p_max and adaptive twins and compare L2 errors.

    Errors are measured against the analytic wave when the config
    provides one, otherwise against the uniform twin.
    """
    uni_cfg = replace(cfg, adapt_enabled=False)
    uni = build_simulation(uni_cfg, mesh=mesh)
    uni_snaps = {}

    def uobs(s):
        if s.state.step in snapshot_steps:
            uni_snaps[s.state.step] = s.state.U.copy()

    uni.sim.run([uobs])

    ad = build_simulation(cfg, mesh=mesh or uni.sim.mesh)
    ad_snaps = {}

    def aobs(s):
        if s.state.step in snapshot_steps:
            ad_snaps[s.state.step] = (s.state.U.copy(), s.ops, s.vol,
                                      s.faces(), s.indicator_values())

    ad.sim.run([aobs])

    rows = []
    spearman = []
    tracking = []
    for step in snapshot_steps:
        t = step * cfg.dt
        calc_u = NormCalculator(uni.sim.disc, uni.sim.ops, uni.sim.vol,
                                uni.sim.faces())
        U_a, ops_a, vol_a, fac_a, tau = ad_snaps[step]
        calc_a = NormCalculator(ad.sim.disc, ops_a, vol_a, fac_a)
        if uni.wave is not None:
            e_u = calc_u.l2(uni_snaps[step], exact=uni.wave, t=t)
            e_a = calc_a.l2(U_a, exact=uni.wave, t=t)
            spearman.append((t, _indicator_rank_correlation(
                ad.sim.disc, vol_a, U_a, uni.wave, t, tau)))
            k_peak = int(np.argmax(tau))
            x_peak = float(ad.sim.disc.geoms[k_peak].centroid[0])
            tracking.append((t, abs(x_peak - uni.wave.front_position(t)),
                             2.0 * float(ad.sim.disc.h.max())))
        else:
            u_ref = uni.sim.vol.E @ uni_snaps[step]
            u_ad = vol_a.values(U_a)
            e_u = 0.0
            e_a = float(np.sqrt(np.dot(uni.sim.vol.weights,
                                       (u_ad - u_ref) ** 2)))
        rows.append((t, e_u, e_a, e_a / e_u if e_u > 0 else np.inf))

    ndofs = [(r.t, r.ndof) for r in ad.sim.step_records]
    lo, hi = steady_window
    steady = [n for t, n in ndofs if lo <= t <= hi]
    return CompareResult(rows, uni.sim.ops.dofmap.total,
                         float(np.mean(steady)) if steady else float("nan"),
                         ad.sim.ops.dofmap.total, ad.sim.mesh.n_cells, ndofs,
                         spearman, tracking)


def _indicator_rank_correlation(disc, vol, U, exact, t, tau) -> float:
    """Spearman correlation between the indicator and the element-wise
    L2 error against the analytic reference (a reported fidelity
    metric, not an assertion)."""
    from scipy.stats import spearmanr

    err_pts = (vol.values(U) - exact.value(disc.vq_points, t)) ** 2
    cell_err = np.sqrt(vol.cell_integrals(err_pts))
    rho = spearmanr(tau, cell_err).statistic
    return float(rho)


def connected_components(mask, neighbors) -> int:
    """Number of connected clusters of flagged cells in the mesh
    adjacency graph."""
    mask = np.asarray(mask, dtype=bool)
    seen = np.zeros(len(mask), dtype=bool)
    comps = 0
    for start in np.flatnonzero(mask):
        start = int(start)
        if seen[start]:
            continue
        comps += 1
        stack = [start]
        seen[start] = True
        while stack:
            k = stack.pop()
            for j in neighbors[k]:
                if mask[j] and not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
    return comps


@dataclass
class MarkingResult:
    errors: dict                 # marking -> L2 error vs uniform reference
    ndof_final: dict
    degree_counts: dict
    thresholds: dict


def indicator_comparison(cfg: RunConfig, mesh=None) -> MarkingResult:
    """Three adaptive runs differing only in the marking indicator,
    measured against the uniform-degree twin at the final time."""
    uni = build_simulation(replace(cfg, adapt_enabled=False), mesh=mesh)
    uni.sim.run()
    u_ref = uni.sim.vol.values(uni.sim.state.U)
    w_ref = uni.sim.vol.weights

    errors, ndof, counts, thresholds = {}, {}, {}, {}
    for marking in ("full", "jump", "residual"):
        ctx = build_simulation(replace(cfg, marking=marking),
                               mesh=uni.sim.mesh)
        ctx.sim.run()
        u = ctx.sim.vol.values(ctx.sim.state.U)
        errors[marking] = float(np.sqrt(np.dot(w_ref, (u - u_ref) ** 2)))
        ndof[marking] = ctx.sim.ops.dofmap.total
        counts[marking] = np.bincount(ctx.sim.ops.dofmap.degrees,
                                      minlength=cfg.p_max + 1)[1:]
        thresholds[marking] = ctx.sim.controller.threshold
    return MarkingResult(errors, ndof, counts, thresholds)
