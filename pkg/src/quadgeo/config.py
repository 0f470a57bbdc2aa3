"""Flat ``key = value`` text files for parameters, gains, trajectories and runs.

Blank lines and ``#`` comments are ignored. Unknown keys are rejected so
typos do not silently fall back to defaults.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from quadgeo.control import ControlGains
from quadgeo.model import VehicleParams
from quadgeo.sim import format_float
from quadgeo.trajectory import FlatTrajectory, Helix, Hover, YawBangBang


class ConfigError(ValueError):
    pass


def read_kv(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such file")
    out: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def write_kv(path, items: dict) -> None:
    lines = []
    for k, v in items.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = format_float(v)
        lines.append(f"{k} = {v}")
    Path(path).write_text("\n".join(lines) + "\n")


def _float(kv: dict, key: str, path, default=None) -> float:
    if key not in kv:
        if default is None:
            raise ConfigError(f"{path}: missing key {key!r}")
        return default
    try:
        value = float(kv[key])
    except ValueError:
        raise ConfigError(f"{path}: {key} = {kv[key]!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{path}: {key} must be finite")
    return value


def _bool(kv: dict, key: str, path, default: bool) -> bool:
    if key not in kv:
        return default
    v = kv[key].lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{path}: {key} = {kv[key]!r} is not a boolean")


def _reject_unknown(kv: dict, allowed, path) -> None:
    extra = sorted(set(kv) - set(allowed))
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(extra)}")


# --- vehicle parameters -----------------------------------------------------

PARAM_KEYS = {
    "mass": "mass",
    "arm_x": "arm_x",
    "arm_y": "arm_y",
    "thrust_coeff": "thrust_coeff",
    "drag_coeff": "drag_coeff",
    "drag_offset": "drag_offset",
    "theta1": "theta1",
    "theta2": "theta2",
    "pwm0": "pwm0",
    "u_max": "u_max",
}
INERTIA_KEYS = ("inertia_xx", "inertia_yy", "inertia_zz", "inertia_xy", "inertia_xz", "inertia_yz")
INERTIA_UNITS = {"kg*m^2": 1.0, "kg*mm^2": 1e-6}


def load_params(path) -> VehicleParams:
    kv = read_kv(path)
    _reject_unknown(kv, list(PARAM_KEYS) + list(INERTIA_KEYS) + ["inertia_units"], path)
    d = VehicleParams()
    values = {attr: _float(kv, key, path, getattr(d, attr)) for key, attr in PARAM_KEYS.items()}
    units = kv.get("inertia_units", "kg*m^2")
    if units not in INERTIA_UNITS:
        raise ConfigError(f"{path}: inertia_units must be one of {', '.join(INERTIA_UNITS)}")
    scale = INERTIA_UNITS[units]
    J0 = d.inertia / scale
    xx, yy, zz, xy, xz, yz = (
        _float(kv, k, path, float(J0[i, j]))
        for k, (i, j) in zip(INERTIA_KEYS, [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)])
    )
    values["inertia"] = scale * np.array([[xx, xy, xz], [xy, yy, yz], [xz, yz, zz]])
    try:
        return VehicleParams(**values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_params(params: VehicleParams, path) -> None:
    J = params.inertia
    items = {key: float(getattr(params, attr)) for key, attr in PARAM_KEYS.items()}
    items["inertia_units"] = "kg*m^2"
    for k, (i, j) in zip(INERTIA_KEYS, [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]):
        items[k] = float(J[i, j])
    write_kv(path, items)


# --- gains ------------------------------------------------------------------

GAIN_KEYS = ("k_r", "k_v", "k_R", "k_omega")


def load_gains(path) -> ControlGains:
    kv = read_kv(path)
    _reject_unknown(kv, GAIN_KEYS, path)
    d = ControlGains()
    try:
        return ControlGains(**{k: _float(kv, k, path, getattr(d, k)) for k in GAIN_KEYS})
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def dump_gains(gains: ControlGains, path) -> None:
    write_kv(path, {k: float(getattr(gains, k)) for k in GAIN_KEYS})


# --- trajectories -----------------------------------------------------------

TRAJ_KEYS = {
    "hover": ("x", "y", "z", "psi", "duration"),
    "helix": ("radius", "period", "v_z", "z0", "ramp", "duration"),
    "yaw_bangbang": ("alpha", "T", "x", "y", "z"),
}


def load_trajectory(path) -> FlatTrajectory:
    kv = read_kv(path)
    kind = kv.pop("kind", None)
    if kind not in TRAJ_KEYS:
        raise ConfigError(f"{path}: kind must be one of {', '.join(TRAJ_KEYS)}")
    _reject_unknown(kv, TRAJ_KEYS[kind], path)
    try:
        if kind == "hover":
            r0 = tuple(_float(kv, k, path, 0.0) for k in ("x", "y"))
            return Hover(
                (*r0, _float(kv, "z", path, 1.0)),
                _float(kv, "psi", path, 0.0),
                horizon=_float(kv, "duration", path, 10.0),
            )
        if kind == "helix":
            d = Helix()
            return Helix(**{k: _float(kv, k, path, getattr(d, k)) for k in ("radius", "period", "v_z", "z0", "ramp")},
                         horizon=_float(kv, "duration", path, d.horizon))
        r0 = (_float(kv, "x", path, 0.0), _float(kv, "y", path, 0.0), _float(kv, "z", path, 0.0))
        return YawBangBang(_float(kv, "alpha", path, 1.0), _float(kv, "T", path, 2.0), r0)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from None


# --- simulation settings ----------------------------------------------------

@dataclass
class RunSettings:
    """Simulation settings for a CLI run; the initial state is the reference
    at t = 0 perturbed by the given offsets."""

    dt: float = 1e-3
    control_period: float = 2e-3
    duration: float | None = None
    mode: str = "full"
    plant_bias: bool = False
    noise_pos: float = 0.0
    noise_att: float = 0.0
    offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    euler_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    psi1: float = 0.99
    bound_B: float | None = None
    rms_start: float | None = None


SIM_KEYS = (
    "dt", "control_period", "duration", "mode", "plant_bias", "noise_pos", "noise_att",
    "init_dx", "init_dy", "init_dz", "init_roll", "init_pitch", "init_yaw", "psi1", "bound_B", "rms_start",
)


def load_settings(path) -> RunSettings:
    kv = read_kv(path)
    _reject_unknown(kv, SIM_KEYS, path)
    d = RunSettings()
    mode = kv.get("mode", d.mode)
    if mode not in ("full", "attitude_only"):
        raise ConfigError(f"{path}: mode must be 'full' or 'attitude_only'")
    return RunSettings(
        dt=_float(kv, "dt", path, d.dt),
        control_period=_float(kv, "control_period", path, d.control_period),
        duration=_float(kv, "duration", path, math.nan) if "duration" in kv else None,
        mode=mode,
        plant_bias=_bool(kv, "plant_bias", path, d.plant_bias),
        noise_pos=_float(kv, "noise_pos", path, 0.0),
        noise_att=_float(kv, "noise_att", path, 0.0),
        offset=tuple(_float(kv, k, path, 0.0) for k in ("init_dx", "init_dy", "init_dz")),
        euler_offset=tuple(_float(kv, k, path, 0.0) for k in ("init_roll", "init_pitch", "init_yaw")),
        psi1=_float(kv, "psi1", path, d.psi1),
        bound_B=_float(kv, "bound_B", path, math.nan) if "bound_B" in kv else None,
        rms_start=_float(kv, "rms_start", path, math.nan) if "rms_start" in kv else None,
    )


# --- sweeps -----------------------------------------------------------------

DEFAULT_SWEEP = ((4.0, 2.0), (6.0, 3.0), (8.0, 4.0), (10.0, 5.0))


@dataclass
class SweepSpec:
    pairs: list[tuple[float, float]] = field(default_factory=lambda: list(DEFAULT_SWEEP))
    k_R: float = 0.6
    k_omega: float = 0.15
    traj: str | None = None
    sim: str | None = None

    def __post_init__(self):
        if not self.pairs:
            raise ConfigError("sweep needs at least one gain pair")
        for pair in self.pairs:
            if not all(g > 0 for g in pair):
                raise ConfigError(f"sweep gains must be positive, got {pair}")


def parse_pairs(text: str) -> list[tuple[float, float]]:
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            kr, kv = item.split(":")
            pairs.append((float(kr), float(kv)))
        except ValueError:
            raise ConfigError(f"bad gain pair {item!r}; expected k_r:k_v") from None
    return pairs


def load_sweep(path) -> SweepSpec:
    kv = read_kv(path)
    _reject_unknown(kv, ("pairs", "k_R", "k_omega", "traj", "sim"), path)
    base = Path(path).parent

    def rel(key):
        return str(base / kv[key]) if key in kv else None

    return SweepSpec(
        pairs=parse_pairs(kv["pairs"]) if "pairs" in kv else list(DEFAULT_SWEEP),
        k_R=_float(kv, "k_R", path, 0.6),
        k_omega=_float(kv, "k_omega", path, 0.15),
        traj=rel("traj"),
        sim=rel("sim"),
    )
