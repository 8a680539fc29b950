"""Degree adaptation: threshold clustering, update laws, active-set
bookkeeping, and solution transfer.

One adaptation pass runs after a time step: refresh the indicator on
the active element subset, fix the global threshold by two-cluster
k-means after the first step, map indicator values to target degrees
through the arctan law, smooth by at most one degree per element, then
rebind operators and transfer coefficient vectors to the new layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assembly import AssembledOperators, update_operators
from .basis import DofMap, build_dof_map
from .indicator import IndicatorComputer, IndicatorField


# -- threshold selection -------------------------------------------------------

def kmeans2(values) -> tuple[float, float]:
    """Two-cluster 1D Lloyd clustering.

    Centroids start at (min, max) and iterate to a fixed assignment;
    ties go to the lower centroid.  Returns sorted centroids; equal
    inputs collapse both centroids onto the common value.
    """
    values = np.sort(np.asarray(values, dtype=float))  # permutation-proof
    if values.size == 0:
        raise ValueError("k-means needs at least one value")
    c1, c2 = float(values[0]), float(values[-1])
    if c1 == c2:
        return c1, c2
    assign = None
    for _ in range(1000):
        d1 = np.abs(values - c1)
        d2 = np.abs(values - c2)
        new_assign = d2 < d1          # ties (d1 == d2) stay with the lower
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        if assign.any():
            c2 = float(values[assign].mean())
        if (~assign).any():
            c1 = float(values[~assign].mean())
    lo, hi = sorted((c1, c2))
    return lo, hi


def threshold_from_centroids(c1: float, c2: float, mode: str = "min") -> float:
    """Fixed-for-the-run threshold from the cluster centroids."""
    if mode == "min":
        return min(c1, c2)
    if mode == "mean":
        return 0.5 * (c1 + c2)
    raise ValueError(f"unknown threshold mode {mode!r}")


# -- degree update laws ----------------------------------------------------------

def degree_from_indicator(tau_k, tau_threshold: float, p_max: int):
    """Ceiled arctan map of tau/threshold onto [1, p_max]."""
    if tau_threshold <= 0:
        raise ValueError("threshold must be positive")
    raw = np.ceil(p_max * (2.0 / np.pi) * np.arctan(np.asarray(tau_k, dtype=float)
                                                    / tau_threshold))
    return np.clip(raw, 1, p_max).astype(int)


def smooth_update(p_old, p_arctan):
    """Move at most one degree toward the arctan target."""
    p_old = np.asarray(p_old, dtype=int)
    p_arctan = np.asarray(p_arctan, dtype=int)
    up = np.minimum(p_old + 1, p_arctan)
    down = np.maximum(p_old - 1, p_arctan)
    return np.where(p_old <= p_arctan, up, down)


# -- active set -------------------------------------------------------------------

@dataclass
class ActiveSet:
    """Elements whose indicator is refreshed this step."""

    cells: set[int]
    updated_prev: np.ndarray   # bool per element: degree changed last pass

    @staticmethod
    def initial(n_cells: int) -> "ActiveSet":
        return ActiveSet(set(range(n_cells)),
                         np.zeros(n_cells, dtype=bool))


def update_active_set(prev: ActiveSet, degrees, neighbors, p_max: int) -> ActiveSet:
    """Seed set = elements updated last pass or sitting at p_max; grow by
    one ring of mesh neighbors."""
    degrees = np.asarray(degrees)
    seed = set(np.flatnonzero(prev.updated_prev | (degrees == p_max)).tolist())
    grown = set(seed)
    for k in seed:
        grown.update(neighbors[k])
    return ActiveSet(grown, prev.updated_prev.copy())


# -- solution transfer ---------------------------------------------------------------

def transfer_vector(vec: np.ndarray, old: DofMap, new: DofMap) -> np.ndarray:
    """Truncate/pad per-element coefficient blocks between layouts."""
    if len(vec) != old.total:
        raise ValueError("vector does not match the old layout")
    out = np.zeros(new.total)
    for k in range(len(old.sizes)):
        n = int(min(old.sizes[k], new.sizes[k]))
        o0, n0 = int(old.offsets[k]), int(new.offsets[k])
        out[n0:n0 + n] = vec[o0:o0 + n]
    return out


def transfer_solution(U, Y, old: DofMap, new: DofMap):
    """Apply the hierarchical truncate/pad to the potential and every
    ionic block."""
    U_new = transfer_vector(U, old, new)
    Y_new = None
    if Y is not None:
        Y_new = np.stack([transfer_vector(Y[l], old, new)
                          for l in range(Y.shape[0])])
    return U_new, Y_new


# -- the adaptation pass ----------------------------------------------------------------

@dataclass
class AdaptConfig:
    p_max: int = 5
    threshold_mode: str = "min"
    cadence: int = 1              # steps between adaptation passes
    full_sweep_period: int = 200  # force a whole-mesh refresh this often
    marking: str = "full"         # full | jump | residual
    cluster_on_initial: bool = False

    def __post_init__(self):
        if self.p_max < 1 or self.cadence < 1 or self.full_sweep_period < 1:
            raise ValueError("p_max, cadence, and full_sweep_period must be >= 1")


@dataclass
class AdaptStats:
    step: int
    t: float
    ndof: int
    n_updated: int
    degree_counts: np.ndarray   # count of elements at p = 1 .. p_max
    n_checked: int


class AdaptiveController:
    """Owns the indicator field, threshold, and active set across a run."""

    def __init__(self, computer: IndicatorComputer, config: AdaptConfig):
        self.computer = computer
        self.config = config
        n_cells = computer.disc.mesh.n_cells
        self.field = IndicatorField.empty(n_cells)
        self.active = ActiveSet.initial(n_cells)
        self.threshold: float | None = None
        self.centroids: tuple[float, float] | None = None
        self._passes = 0

    # threshold floor for a quiescent start: round-off-sized indicators
    # must read as inactive, while genuine activity sits orders of
    # magnitude above this scale (indicator units)
    THRESHOLD_FLOOR = 1e-8

    def fix_threshold_from(self, values) -> float:
        self.centroids = kmeans2(values)
        self.threshold = threshold_from_centroids(*self.centroids,
                                                  self.config.threshold_mode)
        if self.threshold < self.THRESHOLD_FLOOR:
            self.threshold = self.THRESHOLD_FLOOR
        return self.threshold

    def adapt(self, ops: AssembledOperators, U, U_prev, Y, t, dt, step):
        """One pass of the adaptation algorithm after step ``step``.

        Returns (ops, U, Y, stats); operators are rebound only when some
        degree actually changed.
        """
        cfg = self.config
        mesh = self.computer.disc.mesh
        n_cells = mesh.n_cells
        self._passes += 1

        self.active = update_active_set(self.active, ops.dofmap.degrees,
                                        mesh.neighbors, cfg.p_max)
        if step <= cfg.cadence or not self.active.cells:
            # first pass refreshes everything; an empty set falls back to
            # a full sweep so the recursion cannot starve
            self.active = ActiveSet(set(range(n_cells)), self.active.updated_prev)
        elif self._passes % max(1, cfg.full_sweep_period // cfg.cadence) == 0:
            self.active = ActiveSet(set(range(n_cells)), self.active.updated_prev)

        self.computer.rebind(ops)
        self.computer.refresh(self.field, U, U_prev, Y, t, dt,
                              self.active.cells, step)

        if self.threshold is None:
            self.fix_threshold_from(self.field.marking_value(cfg.marking))

        marking = self.field.marking_value(cfg.marking)
        p_target = degree_from_indicator(marking, self.threshold, cfg.p_max)
        old_degrees = ops.dofmap.degrees
        new_degrees = smooth_update(old_degrees, p_target)
        changed = new_degrees != old_degrees
        self.active.updated_prev = changed

        if changed.any():
            old_map = ops.dofmap
            ops = update_operators(ops, new_degrees)
            U, Y = transfer_solution(U, Y, old_map, ops.dofmap)
        counts = np.bincount(new_degrees, minlength=cfg.p_max + 1)[1:cfg.p_max + 1]
        stats = AdaptStats(step, t, ops.dofmap.total, int(changed.sum()),
                           counts, len(self.active.cells))
        return ops, U, Y, stats
