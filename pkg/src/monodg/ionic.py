"""Reaction models: cubic benchmark nonlinearity and the six-variable
conductance-based neuron model, plus a standalone 0D integrator.

The six-variable model couples transmembrane potential to intracellular
sodium, extracellular potassium, intracellular calcium, and three
Hodgkin-Huxley-type gates (sodium activation m, sodium inactivation h,
potassium activation n).  Currents follow the usual outward-positive
convention I = G * (u - E), so the ODE for the potential reads
du/dt = -(I_Na + I_K + I_Cl)/C + forcing.

Unit bookkeeping: potentials in mV, time in ms, conductances in
mS/cm^2, currents in uA/cm^2, concentrations in mM.  Ion-concentration
rates (pump, glia uptake, bath diffusion) are natively per-second and
are divided by tau = 1000 to advance in ms.  When the reaction enters
the tissue equation the current density converts from per-cm^2 to
per-mm^2 (factor 0.01) to match the mm-based conductivity tensor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CURRENT_CM2_TO_MM2 = 0.01   # uA/cm^2 -> uA/mm^2
NERNST = 26.64              # RT/F at body temperature, mV


# -- cubic benchmark model ---------------------------------------------------

@dataclass(frozen=True)
class CubicReactionParams:
    """Bistable cubic reaction a*(u-v_rest)(u-v_thres)(u-v_depol)."""

    a: float = 1.4e-5        # mS mm^-2 mV^-2
    v_rest: float = -85.0    # mV
    v_thres: float = -57.6
    v_depol: float = 30.0

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("cubic coefficient a must be positive")
        if not (self.v_rest <= self.v_thres <= self.v_depol):
            raise ValueError("cubic roots must satisfy v_rest <= v_thres <= v_depol")


def cubic_f(u, params: CubicReactionParams):
    """Reaction current density (uA/mm^2) of the cubic model."""
    return params.a * (u - params.v_rest) * (u - params.v_thres) * (u - params.v_depol)


# -- six-variable conductance model ------------------------------------------

@dataclass(frozen=True)
class BarretoCressmanParams:
    """Conductances (mS/cm^2), glial/pump/diffusion rates, and the fixed
    concentration bookkeeping constants of the conductance model."""

    g_na: float = 100.0
    g_nal: float = 0.0175
    g_k: float = 40.0
    g_kl: float = 0.05
    g_ahp: float = 0.01
    g_cll: float = 0.05
    g_ca: float = 0.1
    g_glia: float = 66.66     # mM/s
    k_bath: float = 8.0       # mM (4.0 is the physiological value)
    rho_pump: float = 1.25    # mM/s
    eps_diff: float = 1.2     # 1/s
    gamma: float = 0.044      # mM cm^2 / uC, current -> concentration rate
    beta_vol: float = 7.0     # intra/extra-cellular volume ratio
    tau_conc: float = 1000.0  # ms per s for the concentration block
    phi_gate: float = 3.0     # gating temperature factor
    e_ca: float = 120.0       # mV
    cl_i: float = 6.0         # mM, fixed
    cl_o: float = 130.0       # mM, fixed

    def __post_init__(self):
        for name in ("g_na", "g_nal", "g_k", "g_kl", "g_ahp", "g_cll", "g_ca",
                     "g_glia"):
            if getattr(self, name) < 0:
                raise ValueError(f"conductance {name} must be >= 0")
        if self.k_bath <= 0:
            raise ValueError("k_bath must be positive")


@dataclass(frozen=True)
class IonicState:
    """State vector: concentrations (mM) and gates (dimensionless)."""

    na_i: float = 15.5
    k_o: float = 7.8
    ca_i: float = 0.0
    m: float = 0.0936      # sodium activation (enters cubed)
    h: float = 0.96859     # sodium inactivation
    n: float = 0.08553     # potassium activation (enters to the fourth)

    def as_array(self) -> np.ndarray:
        return np.array([self.na_i, self.k_o, self.ca_i, self.m, self.h, self.n])

    @staticmethod
    def from_array(y) -> "IonicState":
        return IonicState(*(float(v) for v in y))


def _ratio(x):
    """x / (1 - exp(-x)) with the removable singularity handled."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-9
    safe = np.where(small, 1.0, x)
    out = safe / (-np.expm1(-safe))
    return np.where(small, 1.0 + 0.5 * x, out)


def gate_rates(u):
    """HH-type opening/closing rates (1/ms) for the m, h, n gates."""
    u = np.asarray(u, dtype=float)
    a_m = _ratio(0.1 * (u + 30.0))
    b_m = 4.0 * np.exp(-(u + 55.0) / 18.0)
    a_h = 0.07 * np.exp(-(u + 44.0) / 20.0)
    b_h = 1.0 / (1.0 + np.exp(-0.1 * (u + 14.0)))
    a_n = 0.1 * _ratio(0.1 * (u + 34.0))
    b_n = 0.125 * np.exp(-(u + 44.0) / 80.0)
    return (a_m, b_m), (a_h, b_h), (a_n, b_n)


def gate_steady_states(u):
    """(g_inf, tau_g) pairs for the three gates."""
    out = []
    for a, b in gate_rates(u):
        out.append((a / (a + b), 1.0 / (a + b)))
    return out


def reversal_potentials(na_i, k_o, params: BarretoCressmanParams):
    """Nernst potentials with the usual conservation closures.

    The unresolved concentrations follow the companion constraints
    na_o = 144 - beta*(na_i - 18) and k_i = 140 + (18 - na_i).
    """
    na_i = np.asarray(na_i, dtype=float)
    k_o = np.asarray(k_o, dtype=float)
    na_o = 144.0 - params.beta_vol * (na_i - 18.0)
    k_i = 140.0 + (18.0 - na_i)
    if np.any(na_i <= 0) or np.any(k_o <= 0) or np.any(na_o <= 0) \
            or np.any(k_i <= 0):
        raise ValueError("non-finite reversal potential: a concentration is "
                         "zero or negative")
    e_na = NERNST * np.log(na_o / na_i)
    e_k = NERNST * np.log(k_o / k_i)
    e_cl = NERNST * np.log(params.cl_i / params.cl_o)
    return e_na, e_k, e_cl


def bc_currents(u, y, params: BarretoCressmanParams):
    """Sodium, potassium, chloride current densities (uA/cm^2).

    ``y`` is an IonicState or a (6, ...) array broadcastable against u.
    """
    if isinstance(y, IonicState):
        y = y.as_array()
    na_i, k_o, ca_i, m, h, n = y
    e_na, e_k, e_cl = reversal_potentials(na_i, k_o, params)
    i_na = (params.g_nal + params.g_na * m ** 3 * h) * (u - e_na)
    i_k = (params.g_k * n ** 4 + params.g_ahp * ca_i / (1.0 + ca_i)
           + params.g_kl) * (u - e_k)
    i_cl = params.g_cll * (u - e_cl)
    return i_na, i_k, i_cl


def bc_rhs(u, y, params: BarretoCressmanParams):
    """Time derivatives (per ms) of the six ionic-state components.

    Pump, glia, and bath-diffusion fluxes are per-second and divided by
    tau_conc; pump stoichiometry is 3 Na out / 2 K in, with the volume
    ratio carrying intracellular rates to the extracellular side.
    """
    if isinstance(y, IonicState):
        y = y.as_array()
    na_i, k_o, ca_i, m, h, n = [np.asarray(v, dtype=float) for v in y]
    u = np.asarray(u, dtype=float)
    i_na, i_k, _ = bc_currents(u, (na_i, k_o, ca_i, m, h, n), params)

    i_pump = params.rho_pump / ((1.0 + np.exp((25.0 - na_i) / 3.0))
                                * (1.0 + np.exp(5.5 - k_o)))
    i_glia = params.g_glia / (1.0 + np.exp((18.0 - k_o) / 2.5))
    i_diff = params.eps_diff * (k_o - params.k_bath)

    beta, gamma, tau = params.beta_vol, params.gamma, params.tau_conc
    d_na = (-gamma * i_na - 3.0 * i_pump) / tau
    d_k = (beta * gamma * i_k - 2.0 * beta * i_pump - i_glia - i_diff) / tau
    d_ca = (-0.002 * params.g_ca * (u - params.e_ca)
            / (1.0 + np.exp(-(25.0 + u) / 2.5)) - ca_i / 80.0)

    phi = params.phi_gate
    (a_m, b_m), (a_h, b_h), (a_n, b_n) = gate_rates(u)
    d_m = phi * (a_m * (1.0 - m) - b_m * m)
    d_h = phi * (a_h * (1.0 - h) - b_h * h)
    d_n = phi * (a_n * (1.0 - n) - b_n * n)

    out = np.array([d_na, d_k, d_ca, d_m, d_h, d_n])
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite ionic right-hand side")
    return out


# -- tissue-equation adapters --------------------------------------------------

class CubicModel:
    """Cubic reaction for the tissue equation; carries no ionic state."""

    n_state = 0

    def __init__(self, params: CubicReactionParams):
        self.params = params

    def reaction(self, u, y=None):
        return cubic_f(u, self.params)

    def m_values(self, u, y=None):
        return None

    def initial_state(self):
        return None


class ConductanceModel:
    """Six-variable conductance model in tissue units.

    ``reaction`` returns the total current density converted to
    uA/mm^2; ``m_values`` returns the ionic dynamics vector m = -dy/dt
    whose loads drive the explicit state update.
    """

    n_state = 6

    def __init__(self, params: BarretoCressmanParams,
                 initial: IonicState = IonicState()):
        self.params = params
        self._initial = initial

    def reaction(self, u, y):
        i_na, i_k, i_cl = bc_currents(u, y, self.params)
        return CURRENT_CM2_TO_MM2 * (i_na + i_k + i_cl)

    def m_values(self, u, y):
        return -bc_rhs(u, y, self.params)

    def initial_state(self) -> IonicState:
        return self._initial


# -- external forcing ---------------------------------------------------------

@dataclass(frozen=True)
class ForcingSpec:
    """Time-gated stimulus A / (1 + exp(sin t)) supported on a region.

    The region is an axis-aligned box (x0, y0, x1, y1) or None for the
    whole domain; ``cells`` may list explicit cell ids instead.
    """

    amplitude: float = 0.0
    box: tuple[float, float, float, float] | None = None
    cells: frozenset[int] | None = None

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("forcing amplitude must be >= 0")

    def gate(self, t: float) -> float:
        return self.amplitude / (1.0 + np.exp(np.sin(t)))

    def mask(self, points: np.ndarray, cell_of_point=None) -> np.ndarray:
        if self.cells is not None and cell_of_point is not None:
            return np.isin(cell_of_point, list(self.cells))
        if self.box is None:
            return np.ones(len(points), dtype=bool)
        x0, y0, x1, y1 = self.box
        return ((points[:, 0] >= x0) & (points[:, 0] <= x1)
                & (points[:, 1] >= y0) & (points[:, 1] <= y1))

    def values(self, t, points, cells=None):
        """Stimulus density at time t (tissue-equation interface)."""
        points = np.atleast_2d(points)
        if self.amplitude == 0.0:
            return np.zeros(len(points))
        return self.gate(t) * self.mask(points, cells).astype(float)


def forcing_value(t, points, spec: ForcingSpec | None):
    """Stimulus density at time t and the given points."""
    points = np.atleast_2d(points)
    if spec is None or spec.amplitude == 0.0:
        return np.zeros(len(points))
    return spec.gate(t) * spec.mask(points).astype(float)


# -- standalone 0D integrator -------------------------------------------------

@dataclass
class Trace0D:
    t: np.ndarray
    u: np.ndarray
    y: np.ndarray            # (6, n_steps+1)
    spike_times: list[float]
    clamp_events: int


class BlowUpError(RuntimeError):
    def __init__(self, step, t, u):
        super().__init__(f"0D model blew up at step {step} (t={t:g} ms, u={u:g} mV)")
        self.step = step


def _scalar_rates(u, na_i, k_o, ca_i, m, h, n, p: BarretoCressmanParams):
    """Scalar-math evaluation of currents and state derivatives.

    Same formulas as :func:`bc_currents`/:func:`bc_rhs`, written with
    plain floats so the point model steps fast; equivalence is covered
    by a test.
    """
    na_o = 144.0 - p.beta_vol * (na_i - 18.0)
    k_i = 140.0 + (18.0 - na_i)
    e_na = NERNST * math.log(na_o / na_i)
    e_k = NERNST * math.log(k_o / k_i)
    e_cl = NERNST * math.log(p.cl_i / p.cl_o)
    i_na = (p.g_nal + p.g_na * m ** 3 * h) * (u - e_na)
    i_k = (p.g_k * n ** 4 + p.g_ahp * ca_i / (1.0 + ca_i) + p.g_kl) * (u - e_k)
    i_cl = p.g_cll * (u - e_cl)

    i_pump = p.rho_pump / ((1.0 + math.exp((25.0 - na_i) / 3.0))
                           * (1.0 + math.exp(5.5 - k_o)))
    i_glia = p.g_glia / (1.0 + math.exp((18.0 - k_o) / 2.5))
    i_diff = p.eps_diff * (k_o - p.k_bath)
    d_na = (-p.gamma * i_na - 3.0 * i_pump) / p.tau_conc
    d_k = (p.beta_vol * p.gamma * i_k - 2.0 * p.beta_vol * i_pump
           - i_glia - i_diff) / p.tau_conc
    d_ca = (-0.002 * p.g_ca * (u - p.e_ca)
            / (1.0 + math.exp(-(25.0 + u) / 2.5)) - ca_i / 80.0)

    x_m = 0.1 * (u + 30.0)
    a_m = 1.0 + 0.5 * x_m if abs(x_m) < 1e-9 else x_m / (1.0 - math.exp(-x_m))
    b_m = 4.0 * math.exp(-(u + 55.0) / 18.0)
    a_h = 0.07 * math.exp(-(u + 44.0) / 20.0)
    b_h = 1.0 / (1.0 + math.exp(-0.1 * (u + 14.0)))
    x_n = 0.1 * (u + 34.0)
    a_n = 0.1 * (1.0 + 0.5 * x_n) if abs(x_n) < 1e-9 \
        else 0.1 * x_n / (1.0 - math.exp(-x_n))
    b_n = 0.125 * math.exp(-(u + 44.0) / 80.0)
    phi = p.phi_gate
    d_m = phi * (a_m * (1.0 - m) - b_m * m)
    d_h = phi * (a_h * (1.0 - h) - b_h * h)
    d_n = phi * (a_n * (1.0 - n) - b_n * n)
    return (i_na + i_k + i_cl), (d_na, d_k, d_ca, d_m, d_h, d_n)


def integrate_0d(params: BarretoCressmanParams, u0: float, y0: IonicState,
                 dt: float, t_end: float, forcing: ForcingSpec | None = None,
                 c_m: float = 0.01, in_region: bool = True) -> Trace0D:
    """Forward-Euler point model matching the tissue scheme's explicit
    ionic update.

    ``c_m`` is the membrane capacitance in uF/mm^2 (0.01 corresponds to
    the standard 1 uF/cm^2).  In the point model the stimulus amplitude
    is taken as a membrane current density (uA/cm^2), entering on the
    same footing as the ionic currents.  Gates are clamped to [0, 1]
    after each step and clamp events are counted.  Spikes are upward
    zero crossings with a 1 ms refractory window.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n_steps = int(round(t_end / dt))
    t = np.linspace(0.0, n_steps * dt, n_steps + 1)
    u = np.empty(n_steps + 1)
    y = np.empty((6, n_steps + 1))
    u[0] = u0
    y[:, 0] = y0.as_array()
    clamp_events = 0
    spikes: list[float] = []
    c_area = c_m * 100.0   # uF/mm^2 -> uF/cm^2 to match uA/cm^2 currents
    amp = forcing.amplitude if (forcing is not None and in_region) else 0.0
    ui = float(u0)
    na_i, k_o, ca_i, m, h, n = (float(v) for v in y[:, 0])
    for i in range(n_steps):
        total_current, dy = _scalar_rates(ui, na_i, k_o, ca_i, m, h, n,
                                          params)
        du = -total_current / c_area
        if amp:
            du += amp / (1.0 + math.exp(math.sin(i * dt))) / c_area
        u_new = ui + dt * du
        na_i += dt * dy[0]
        k_o += dt * dy[1]
        ca_i += dt * dy[2]
        m += dt * dy[3]
        h += dt * dy[4]
        n += dt * dy[5]
        if m < 0.0 or m > 1.0:
            m = min(max(m, 0.0), 1.0)
            clamp_events += 1
        if h < 0.0 or h > 1.0:
            h = min(max(h, 0.0), 1.0)
            clamp_events += 1
        if n < 0.0 or n > 1.0:
            n = min(max(n, 0.0), 1.0)
            clamp_events += 1
        u[i + 1] = u_new
        y[0, i + 1], y[1, i + 1], y[2, i + 1] = na_i, k_o, ca_i
        y[3, i + 1], y[4, i + 1], y[5, i + 1] = m, h, n
        if abs(u_new) > 500.0:
            raise BlowUpError(i + 1, t[i + 1], u_new)
        if ui <= 0.0 < u_new and (not spikes or t[i + 1] - spikes[-1] >= 1.0):
            spikes.append(float(t[i + 1]))
        ui = u_new
    return Trace0D(t, u, y, spikes, clamp_events)
