"""End-to-end time integration: operators, loads, stepping, and the
per-step adaptation pass.

A :class:`Simulation` owns the discretization caches, the operator
bindings for the current degree layout, the solver state, and (when
adaptivity is on) the indicator controller.  Observers registered on
``run`` see the simulation after every completed step and drive all
file output, so the core loop stays free of I/O.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .adaptivity import AdaptConfig, AdaptiveController, transfer_vector
from .assembly import (AssembledOperators, MaterialField, ModelCoefficients,
                       PenaltyConfig, assemble_operators)
from .indicator import IndicatorComputer
from .ionic import IonicState
from .mesh import Mesh
from .space import Discretization, FaceEvaluator, VolumeEvaluator
from .timestepping import CrankNicolson, SolverState, TimeGrid


@dataclass
class StepRecord:
    step: int
    t: float
    ndof: int


class Simulation:
    """Coupled monodomain/ionic solve on one mesh."""

    def __init__(self, mesh: Mesh, material: MaterialField,
                 coeffs: ModelCoefficients, model, grid: TimeGrid,
                 p_max: int = 5, eta0: float = 10.0, forcing=None,
                 adapt: AdaptConfig | None = None, quad_order=None,
                 initial_u=None, initial_y: IonicState | None = None,
                 initial_degrees=None):
        self.mesh = mesh
        self.material = material
        self.coeffs = coeffs
        self.model = model
        self.grid = grid
        self.forcing = forcing
        self.disc = Discretization(mesh, p_max, quad_order)

        if initial_degrees is None:
            initial_degrees = np.full(mesh.n_cells, p_max, dtype=int)
        self.ops = assemble_operators(self.disc, material, initial_degrees,
                                      PenaltyConfig(eta0))
        self.vol = VolumeEvaluator(self.disc, self.ops.dofmap)
        self._faces: FaceEvaluator | None = None
        self.cn = CrankNicolson(self.ops, coeffs, grid.dt)

        U0 = self._project(initial_u) if initial_u is not None \
            else np.zeros(self.ops.dofmap.total)
        Y0 = None
        if self.model.n_state:
            if initial_y is None:
                initial_y = self.model.initial_state()
            y_arr = initial_y.as_array()
            Y0 = np.stack([self.ops.constant_vector(float(y_arr[l]))
                           for l in range(self.model.n_state)])
        self.state = SolverState(U0, Y0)
        self.U_prev = U0.copy()

        self.controller = None
        if adapt is not None:
            computer = IndicatorComputer(self.disc, self.ops, coeffs,
                                         self.model, forcing)
            self.controller = AdaptiveController(computer, adapt)
            if adapt.cluster_on_initial:
                self.controller.computer.refresh(
                    self.controller.field, self.state.U, None, self.state.Y,
                    0.0, grid.dt, range(mesh.n_cells), step=0)
                self.controller.fix_threshold_from(
                    self.controller.field.marking_value(adapt.marking))

        self.step_records: list[StepRecord] = []
        self.adapt_stats = []

    # -- helpers ---------------------------------------------------------------

    @property
    def t(self) -> float:
        return self.state.step * self.grid.dt

    def _project(self, fn) -> np.ndarray:
        vals = np.asarray(fn(self.disc.vq_points), dtype=float)
        return self.ops.solve_mass(self.vol.load(vals))

    def faces(self) -> FaceEvaluator:
        if self._faces is None or self._faces.dofmap is not self.ops.dofmap:
            self._faces = FaceEvaluator(self.disc, self.ops.dofmap)
        return self._faces

    def point_fields(self):
        u_pts = self.vol.values(self.state.U)
        y_pts = None
        if self.state.Y is not None:
            y_pts = np.stack([self.vol.values(self.state.Y[l])
                              for l in range(self.state.Y.shape[0])])
        return u_pts, y_pts

    def _loads(self):
        from .assembly import assemble_loads

        f_load, ionic, dynamics = assemble_loads(
            self.vol, self.model, self.forcing, self.t + self.grid.dt,
            self.state.U, self.state.Y)
        return ionic, dynamics, f_load

    # -- stepping ----------------------------------------------------------------

    def step_once(self):
        ionic, dynamics, f_load = self._loads()
        self.U_prev = self.state.U
        self.state = self.cn.step(self.state, ionic, dynamics, f_load)

        cfg = self.controller.config if self.controller else None
        if cfg is not None and self.state.step % cfg.cadence == 0:
            old_map = self.ops.dofmap
            ops, U, Y, stats = self.controller.adapt(
                self.ops, self.state.U, self.U_prev, self.state.Y,
                self.t, self.grid.dt, self.state.step)
            self.adapt_stats.append(stats)
            if ops is not self.ops:
                if self.state.I_prev is not None:
                    self.state.I_prev = transfer_vector(
                        self.state.I_prev, old_map, ops.dofmap)
                self.U_prev = transfer_vector(self.U_prev, old_map, ops.dofmap)
                self.ops = ops
                self.vol = VolumeEvaluator(self.disc, ops.dofmap)
                self._faces = None
                self.cn.rebind(ops)
            self.state.U = U
            self.state.Y = Y
        self.step_records.append(
            StepRecord(self.state.step, self.t, self.ops.dofmap.total))

    def run(self, observers=()) -> dict:
        """Advance to the time horizon; observers fire after each step."""
        wall0 = time.perf_counter()
        for obs in observers:
            obs(self)   # state at t = 0
        for _ in range(self.grid.n_steps):
            self.step_once()
            for obs in observers:
                obs(self)
        u_pts, _ = self.point_fields()
        return {
            "steps": self.state.step,
            "t_end": self.t,
            "ndof": int(self.ops.dofmap.total),
            "u_min": float(u_pts.min()),
            "u_max": float(u_pts.max()),
            "wall_seconds": time.perf_counter() - wall0,
        }

    # -- reporting -----------------------------------------------------------------

    def cell_means(self) -> np.ndarray:
        return self.vol.cell_means(self.state.U)

    def degree_field(self) -> np.ndarray:
        return self.ops.dofmap.degrees.copy()

    def indicator_values(self) -> np.ndarray:
        if self.controller is None:
            return np.zeros(self.mesh.n_cells)
        return self.controller.field.tau.copy()
