"""Run configuration: flat ``key = value`` text with dotted sections.

Example::

    mesh = meshes/strip.mesh
    model = cubic
    dt = 0.02
    t_end = 30.0
    material.0 = 0.0081
    adapt.enabled = true
    adapt.p_max = 4
    ic.kind = wave

Unknown keys, missing required keys, and out-of-range values raise
:class:`ConfigError` naming the offending key.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Validated settings for one simulation run."""

    mesh_path: str
    model: str                      # cubic | barreto-cressman
    dt: float
    t_end: float
    materials: dict[int, tuple]     # label -> (sxx, sxy, syy)
    chi_m: float = 140.0
    c_m: float = 0.01
    eta0: float = 10.0
    p_max: int = 5
    quad_order: int | None = None
    # cubic parameters
    cubic_a: float = 1.4e-5
    v_rest: float = -85.0
    v_thres: float = -57.6
    v_depol: float = 30.0
    # ionic-model parameters (conductance model)
    k_bath: float = 8.0
    ionic_initial: tuple = (15.5, 7.8, 0.0, 0.0936, 0.96859, 0.08553)
    # adaptation
    adapt_enabled: bool = False
    threshold_mode: str = "min"
    cadence: int = 1
    full_sweep_period: int = 200
    marking: str = "full"
    cluster_on_initial: bool = False
    # initial condition
    ic_kind: str = "constant"       # constant | wave | double_wave | region
    ic_value: float = -85.0
    ic_region_value: float = -50.0
    ic_region_box: tuple | None = None
    wave_eps: float | None = None   # None -> compatibility value
    wave_speed: float | None = None
    wave_x0: float = 0.0
    wave_compatible: bool = True
    dw_a: float = -1.5
    dw_eps_a: float = 0.05
    dw_b: float = 3.0
    dw_eps_b: float = 0.05
    # forcing
    forcing_kind: str = "none"      # none | sine-gate | manufactured
    forcing_amplitude: float = 0.0
    forcing_box: tuple | None = None
    # output
    out_dir: str = "out"
    snapshot_every: int = 0         # 0 = no snapshots
    line_sample: tuple | None = None  # (y, x0, x1, n)

    @property
    def n_steps(self) -> int:
        n = int(round(self.t_end / self.dt))
        if abs(n * self.dt - self.t_end) > 1e-9 * max(self.t_end, 1.0):
            raise ConfigError("dt must divide t_end")
        return n


_BOOL = {"true": True, "false": False, "on": True, "off": False,
         "1": True, "0": False}

# key -> (target attribute, parser); material.* handled separately
_SCALARS = {
    "mesh": ("mesh_path", str),
    "model": ("model", str),
    "dt": ("dt", float),
    "t_end": ("t_end", float),
    "chi_m": ("chi_m", float),
    "c_m": ("c_m", float),
    "penalty.eta0": ("eta0", float),
    "quad.order": ("quad_order", int),
    "cubic.a": ("cubic_a", float),
    "cubic.v_rest": ("v_rest", float),
    "cubic.v_thres": ("v_thres", float),
    "cubic.v_depol": ("v_depol", float),
    "bc.k_bath": ("k_bath", float),
    "adapt.enabled": ("adapt_enabled", "bool"),
    "adapt.p_max": ("p_max", int),
    "adapt.threshold_mode": ("threshold_mode", str),
    "adapt.cadence": ("cadence", int),
    "adapt.full_sweep_period": ("full_sweep_period", int),
    "adapt.marking": ("marking", str),
    "adapt.cluster_on_initial": ("cluster_on_initial", "bool"),
    "ic.kind": ("ic_kind", str),
    "ic.value": ("ic_value", float),
    "ic.region_value": ("ic_region_value", float),
    "wave.eps": ("wave_eps", float),
    "wave.speed": ("wave_speed", float),
    "wave.x0": ("wave_x0", float),
    "wave.compatible": ("wave_compatible", "bool"),
    "double_wave.a": ("dw_a", float),
    "double_wave.eps_a": ("dw_eps_a", float),
    "double_wave.b": ("dw_b", float),
    "double_wave.eps_b": ("dw_eps_b", float),
    "forcing.kind": ("forcing_kind", str),
    "forcing.amplitude": ("forcing_amplitude", float),
    "output.dir": ("out_dir", str),
    "output.snapshot_every": ("snapshot_every", int),
}

_BOXES = {
    "ic.region_box": "ic_region_box",
    "forcing.box": "forcing_box",
}


def _parse_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        yield key.strip(), value.strip(), lineno


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse and validate configuration text."""
    seen: dict[str, str] = {}
    materials: dict[int, tuple] = {}
    others: dict[str, object] = {}
    for key, value, lineno in _parse_lines(text):
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (line {lineno})")
        seen[key] = value
        if key.startswith("material."):
            try:
                label = int(key.split(".", 1)[1])
            except ValueError as exc:
                raise ConfigError(f"bad material label in {key!r}") from exc
            parts = [float(v) for v in value.split()]
            if len(parts) == 1:
                materials[label] = (parts[0], 0.0, parts[0])
            elif len(parts) == 3:
                materials[label] = tuple(parts)
            else:
                raise ConfigError(
                    f"{key}: need 1 (isotropic) or 3 (sxx sxy syy) numbers")
        elif key in _BOXES:
            parts = [float(v) for v in value.split()]
            if len(parts) != 4:
                raise ConfigError(f"{key}: need 4 numbers (x0 y0 x1 y1)")
            others[_BOXES[key]] = tuple(parts)
        elif key == "ic.ionic_initial":
            parts = [float(v) for v in value.split()]
            if len(parts) != 6:
                raise ConfigError("ic.ionic_initial: need 6 numbers")
            others["ionic_initial"] = tuple(parts)
        elif key == "output.line_sample":
            parts = value.split()
            if len(parts) != 4:
                raise ConfigError("output.line_sample: need 'y x0 x1 n'")
            others["line_sample"] = (float(parts[0]), float(parts[1]),
                                     float(parts[2]), int(parts[3]))
        elif key in _SCALARS:
            attr, parser = _SCALARS[key]
            try:
                if parser == "bool":
                    others[attr] = _BOOL[value.lower()]
                else:
                    others[attr] = parser(value)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{key}: cannot parse {value!r}") from exc
        else:
            raise ConfigError(f"unknown key {key!r} (line {lineno})")

    for required in ("mesh", "model", "dt", "t_end"):
        if required not in seen:
            raise ConfigError(f"missing required key {required!r}")
    if not materials:
        raise ConfigError("missing required key 'material.<label>'")

    cfg = RunConfig(mesh_path=others.pop("mesh_path"),
                    model=others.pop("model"),
                    dt=others.pop("dt"), t_end=others.pop("t_end"),
                    materials=materials, **others)
    _validate(cfg, base_dir)
    return cfg


def _validate(cfg: RunConfig, base_dir: str):
    if cfg.dt <= 0:
        raise ConfigError("dt: must be positive")
    if cfg.t_end <= 0:
        raise ConfigError("t_end: must be positive")
    cfg.n_steps  # checks divisibility
    if cfg.model not in ("cubic", "barreto-cressman"):
        raise ConfigError(f"model: unknown model {cfg.model!r}")
    if cfg.p_max < 1:
        raise ConfigError("adapt.p_max: must be >= 1")
    if cfg.eta0 <= 0:
        raise ConfigError("penalty.eta0: must be positive")
    if cfg.threshold_mode not in ("min", "mean"):
        raise ConfigError("adapt.threshold_mode: must be 'min' or 'mean'")
    if cfg.marking not in ("full", "jump", "residual"):
        raise ConfigError("adapt.marking: must be full, jump, or residual")
    if cfg.cadence < 1 or cfg.full_sweep_period < 1:
        raise ConfigError("adapt.cadence and adapt.full_sweep_period: must be >= 1")
    if cfg.ic_kind not in ("constant", "wave", "double_wave", "region"):
        raise ConfigError(f"ic.kind: unknown kind {cfg.ic_kind!r}")
    if cfg.forcing_kind not in ("none", "sine-gate", "manufactured"):
        raise ConfigError(f"forcing.kind: unknown kind {cfg.forcing_kind!r}")
    if cfg.forcing_amplitude < 0:
        raise ConfigError("forcing.amplitude: must be >= 0")
    if cfg.snapshot_every < 0:
        raise ConfigError("output.snapshot_every: must be >= 0")
    path = cfg.mesh_path if os.path.isabs(cfg.mesh_path) \
        else os.path.join(base_dir, cfg.mesh_path)
    if not os.path.exists(path):
        raise ConfigError(f"mesh: file not found: {cfg.mesh_path}")
    cfg.mesh_path = path
    for label, (sxx, sxy, syy) in cfg.materials.items():
        tr, det = sxx + syy, sxx * syy - sxy * sxy
        if tr <= 0 or det <= 0:
            raise ConfigError(f"material.{label}: tensor not positive definite")


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))
