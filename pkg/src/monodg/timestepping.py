"""Semi-implicit Crank-Nicolson advance of the coupled system.

The diffusion part is treated implicitly/explicitly in equal halves,
the reaction current fully explicitly through a second-order
extrapolation of its load vector, and the ionic state by one explicit
Euler step per time step.  The system matrix is factorized once and the
factorization is reused until a degree change invalidates it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import AssembledOperators, ModelCoefficients


class SolveError(RuntimeError):
    def __init__(self, residual):
        super().__init__(
            f"linear solve failed: relative residual {residual:.3e} "
            "(system may be indefinite; eta0 too small?)")
        self.residual = residual


@dataclass(frozen=True)
class TimeGrid:
    dt: float          # ms
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0 or self.n_steps < 1:
            raise ValueError("need dt > 0 and n_steps >= 1")

    @property
    def t_end(self) -> float:
        return self.dt * self.n_steps

    def time(self, k: int) -> float:
        return k * self.dt

    @staticmethod
    def from_horizon(dt: float, t_end: float) -> "TimeGrid":
        n = int(round(t_end / dt))
        if abs(n * dt - t_end) > 1e-9 * max(t_end, 1.0):
            raise ValueError(f"dt = {dt} does not divide the horizon {t_end}")
        return TimeGrid(dt, n)


@dataclass
class SolverState:
    """Coefficient vectors of the potential and the six ionic blocks,
    plus the two-deep reaction-load history used by the extrapolation."""

    U: np.ndarray
    Y: np.ndarray | None      # (6, N) or None for the cubic model
    I_prev: np.ndarray | None = None   # reaction load at step k-1
    step: int = 0

    def copy(self) -> "SolverState":
        return SolverState(self.U.copy(),
                           None if self.Y is None else self.Y.copy(),
                           None if self.I_prev is None else self.I_prev.copy(),
                           self.step)


def extrapolate_ionic(i_k: np.ndarray, i_km1: np.ndarray) -> np.ndarray:
    """Second-order explicit predictor 1.5*I^k - 0.5*I^{k-1}."""
    if i_k.shape != i_km1.shape:
        raise ValueError("ionic history vectors differ in length")
    return 1.5 * i_k - 0.5 * i_km1


def solve_linear(matrix, rhs: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Direct sparse solve with a relative-residual guarantee."""
    lu = spla.splu(sp.csc_matrix(matrix))
    x = lu.solve(rhs)
    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return x
    res = np.linalg.norm(matrix @ x - rhs) / norm
    if not np.isfinite(res) or res > tol:
        raise SolveError(res)
    return x


class CrankNicolson:
    """Time stepper bound to one operator layout.

    ``rebind`` installs freshly updated operators after a degree change
    and drops the cached factorization.
    """

    def __init__(self, ops: AssembledOperators, coeffs: ModelCoefficients,
                 dt: float):
        self.coeffs = coeffs
        self.dt = dt
        self.rebind(ops)

    def rebind(self, ops: AssembledOperators):
        self.ops = ops
        self._lu = None

    def _factorization(self):
        if self._lu is None:
            cc = self.coeffs.chi_m * self.coeffs.c_m
            lhs = (cc * self.ops.M + 0.5 * self.dt * self.ops.A).tocsc()
            self._lu = spla.splu(lhs)
            self._lhs = lhs
        return self._lu

    def step(self, state: SolverState, ionic_load: np.ndarray,
             dynamics_loads: np.ndarray | None,
             forcing_load: np.ndarray | None) -> SolverState:
        """One Crank-Nicolson update.

        ``ionic_load`` is the reaction load I^k assembled from the
        current state; ``dynamics_loads`` the (6, N) ionic dynamics
        loads G^k (None for the cubic model); ``forcing_load`` the
        stimulus load at t^{k+1}.
        """
        cc = self.coeffs.chi_m * self.coeffs.c_m
        dt = self.dt
        i_prev = state.I_prev if state.I_prev is not None else ionic_load
        i_pred = extrapolate_ionic(ionic_load, i_prev)

        rhs = cc * (self.ops.M @ state.U) - 0.5 * dt * (self.ops.A @ state.U)
        rhs -= self.coeffs.chi_m * dt * i_pred
        if forcing_load is not None:
            rhs += dt * forcing_load

        lu = self._factorization()
        u_new = lu.solve(rhs)
        res = np.linalg.norm(self._lhs @ u_new - rhs)
        scale = np.linalg.norm(rhs)
        if scale > 0 and (not np.isfinite(res / scale) or res / scale > 1e-8):
            raise SolveError(res / scale)
        if not np.all(np.isfinite(u_new)):
            raise FloatingPointError(f"non-finite potential at step {state.step + 1}")

        y_new = None
        if state.Y is not None:
            if dynamics_loads is None:
                raise ValueError("ionic model active but no dynamics loads given")
            y_new = np.empty_like(state.Y)
            for l in range(state.Y.shape[0]):
                y_new[l] = state.Y[l] - dt * self.ops.solve_mass(dynamics_loads[l])
            if not np.all(np.isfinite(y_new)):
                raise FloatingPointError(
                    f"non-finite ionic state at step {state.step + 1}")

        return SolverState(u_new, y_new, ionic_load.copy(), state.step + 1)
