"""Experiment drivers: tracking runs, gain sweeps and RMS reports."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from quadgeo.closed_loop import GeometricController, state_on_reference
from quadgeo.config import RunSettings
from quadgeo.control import ControlGains, check_initial_conditions, check_trajectory_bound
from quadgeo.model import VehicleParams
from quadgeo.sim import SimConfig, SimLog, SimulationDiverged, format_float, run
from quadgeo.so3 import attitude_error_value
from quadgeo.trajectory import FlatTrajectory, Helix, sample_accelerations


def rms(series) -> float:
    """Root mean square of a non-empty series."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("rms of an empty series")
    return float(np.sqrt(np.mean(x * x)))


def rms_window_start(flat: FlatTrajectory, settings: RunSettings) -> float:
    if settings.rms_start is not None:
        return settings.rms_start
    return flat.ramp if isinstance(flat, Helix) else 0.0


def run_duration(flat: FlatTrajectory, settings: RunSettings) -> float:
    if settings.duration is not None:
        return settings.duration
    if math.isfinite(flat.horizon):
        return flat.horizon
    return 10.0


@dataclass
class TrackingRun:
    log: SimLog
    preconditions_ok: bool
    psi0: float
    bound_ok: bool
    bound_peak: float
    bound_B: float
    rms_start: float

    def rms_per_axis(self) -> np.ndarray:
        mask = self.log.t >= self.rms_start - 1e-12
        e = self.log.e_r[mask]
        if len(e) == 0:
            # run ended before the window opened
            return np.full(3, np.nan)
        return np.array([rms(e[:, i]) for i in range(3)])


def track(
    flat: FlatTrajectory,
    params: VehicleParams,
    gains: ControlGains,
    settings: RunSettings | None = None,
    seed: int = 0,
) -> TrackingRun:
    """Closed-loop run starting on the reference, perturbed per ``settings``."""
    settings = settings or RunSettings()
    controller = GeometricController(flat, params, gains)
    state0 = state_on_reference(flat, params, settings.offset, settings.euler_offset, gains)
    ref0 = controller.reference(0.0, state0)
    ok = check_initial_conditions(state0, ref0, params, gains, settings.psi1)
    duration = run_duration(flat, settings)
    B = settings.bound_B if settings.bound_B is not None else 2.0 * params.weight
    bound_ok, peak = check_trajectory_bound(sample_accelerations(flat, duration, settings.control_period), params, B)
    config = SimConfig(
        dt=settings.dt,
        duration=duration,
        control_period=settings.control_period,
        mode=settings.mode,
        plant_bias=settings.plant_bias,
        initial_state=state0,
        noise_pos=settings.noise_pos,
        noise_att=settings.noise_att,
        seed=seed,
    )
    log = run(config, controller, params)
    return TrackingRun(
        log=log,
        preconditions_ok=ok,
        psi0=attitude_error_value(state0.R, ref0.R_d),
        bound_ok=bound_ok,
        bound_peak=peak,
        bound_B=B,
        rms_start=rms_window_start(flat, settings),
    )


def summary_text(result: TrackingRun, gains: ControlGains, psi1: float) -> str:
    log = result.log
    err = np.linalg.norm(log.e_r, axis=1)
    per_axis = result.rms_per_axis()
    lines = [
        f"gains: k_r={gains.k_r:g} k_v={gains.k_v:g} k_R={gains.k_R:g} k_omega={gains.k_omega:g}",
        f"ticks: {len(log)}  duration: {format_float(log.t[-1])} s",
        f"max |e_r|: {format_float(err.max())} m",
        f"final |e_r|: {format_float(err[-1])} m",
        f"rms window start: {format_float(result.rms_start)} s",
        "rms e_x e_y e_z: " + " ".join(format_float(x) for x in per_axis) + " m",
        f"thrust bound: max |m g e3 + m a_d| = {format_float(result.bound_peak)} N,"
        f" B = {format_float(result.bound_B)} N -> {'ok' if result.bound_ok else 'VIOLATED'}",
        f"initial condition: Psi(0) = {format_float(result.psi0)}, psi1 = {format_float(psi1)}"
        f" -> {'ok' if result.preconditions_ok else 'FAILED'}",
        f"saturated ticks: {log.saturated_ticks}",
        f"degenerate ticks: {log.degenerate_ticks}",
    ]
    return "\n".join(lines) + "\n"


# --- sweeps -----------------------------------------------------------------

REPORT_HEADER = ("k_r", "k_v", "e_x_rms", "e_y_rms", "e_z_rms", "argmin", "status")


@dataclass
class SweepRow:
    k_r: float
    k_v: float
    rms: np.ndarray
    status: str = "ok"
    argmin: bool = False

    @property
    def total(self) -> float:
        return float(np.sqrt(np.sum(self.rms**2))) if self.status == "ok" else math.inf


def _sweep_one(args):
    flat, params, gains, settings, seed, log_path = args
    try:
        result = track(flat, params, gains, settings, seed)
    except SimulationDiverged as exc:
        return SweepRow(gains.k_r, gains.k_v, np.full(3, np.nan), status=f"diverged: {exc}")
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        result.log.to_csv(log_path)
    return SweepRow(gains.k_r, gains.k_v, result.rms_per_axis())


def sweep(
    pairs,
    k_R: float,
    k_omega: float,
    flat: FlatTrajectory,
    params: VehicleParams,
    settings: RunSettings | None = None,
    seed: int = 0,
    jobs: int = 1,
    log_dir=None,
) -> list[SweepRow]:
    """One tracking run per (k_r, k_v); rows in input order, best row flagged.

    The best row minimises the combined RMS sqrt(e_x^2 + e_y^2 + e_z^2).
    """
    settings = settings or RunSettings()
    tasks = []
    for i, (kr, kv) in enumerate(pairs):
        gains = ControlGains(kr, kv, k_R, k_omega)
        log_path = None if log_dir is None else Path(log_dir) / f"{i:02d}_kr{kr:g}_kv{kv:g}" / "log.csv"
        tasks.append((flat, params, gains, settings, seed, log_path))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    else:
        rows = [_sweep_one(t) for t in tasks]
    totals = [r.total for r in rows]
    if any(math.isfinite(x) for x in totals):
        best = int(np.argmin(totals))
        rows[best] = replace(rows[best], argmin=True)
    return rows


def write_report(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        for r in rows:
            w.writerow(
                [format_float(r.k_r), format_float(r.k_v)]
                + [format_float(x) for x in r.rms]
                + [int(r.argmin), r.status]
            )


def read_report(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
