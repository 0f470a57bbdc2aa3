"""Command-line entry point: ``quadgeo {simulate,sweep,identify,export-plots}``.

Exit codes: 0 success, 1 runtime or model failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from quadgeo import harness, ident
from quadgeo.config import (
    ConfigError,
    RunSettings,
    SweepSpec,
    dump_params,
    load_gains,
    load_params,
    load_settings,
    load_sweep,
    load_trajectory,
)
from quadgeo.control import ControlGains
from quadgeo.model import VehicleParams
from quadgeo.sim import LOG_COLUMNS, SimulationDiverged, format_float, read_table, write_table
from quadgeo.trajectory import Helix, YawBangBang

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2

TRAJECTORY_COLUMNS = ("t", "x", "y", "z", "x_d", "y_d", "z_d", "e_x", "e_y", "e_z")


class UsageError(Exception):
    pass


def _params(args) -> VehicleParams:
    return load_params(args.params) if args.params else VehicleParams()


def _gains(args) -> ControlGains:
    return load_gains(args.gains) if args.gains else ControlGains()


def _out_dir(args, default_name: str) -> Path:
    out = Path(args.out) / (args.name or default_name)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    params = _params(args)
    gains = _gains(args)
    flat = load_trajectory(args.traj) if args.traj else Helix()
    settings = load_settings(args.sim) if args.sim else RunSettings()
    result = harness.track(flat, params, gains, settings, seed=args.seed)
    out = _out_dir(args, "simulate")
    result.log.to_csv(out / "log.csv")
    text = harness.summary_text(result, gains, settings.psi1)
    (out / "summary.txt").write_text(text)
    if not result.preconditions_ok:
        print("warning: initial condition violates the exponential-stability precondition", file=sys.stderr)
    if not result.bound_ok:
        print("warning: reference exceeds the thrust bound B", file=sys.stderr)
    print(text, end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    spec = load_sweep(args.sweep) if args.sweep else SweepSpec()
    params = _params(args)
    traj_path = args.traj or spec.traj
    sim_path = args.sim or spec.sim
    flat = load_trajectory(traj_path) if traj_path else Helix()
    settings = load_settings(sim_path) if sim_path else RunSettings()
    out = _out_dir(args, "sweep")
    rows = harness.sweep(
        spec.pairs, spec.k_R, spec.k_omega, flat, params, settings,
        seed=args.seed, jobs=args.jobs, log_dir=out / "runs",
    )
    harness.write_report(out / "report.csv", rows)
    for r in rows:
        mark = "*" if r.argmin else " "
        vals = " ".join(format_float(x) for x in r.rms)
        print(f"{mark} k_r={r.k_r:g} k_v={r.k_v:g} rms(x y z)={vals} {r.status}")
    return EXIT_OK if all(r.status == "ok" for r in rows) else EXIT_RUNTIME


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def cmd_identify(args) -> int:
    params = _params(args)
    gains = _gains(args)
    out = _out_dir(args, f"identify-{args.kind}")
    kind = args.kind
    samples = None
    if kind == "actuator-line":
        line = ident.actuator_line_from_kv(args.kv, args.u_max, args.pwm0)
        fitted = params.replace(theta1=line.theta1, theta2=line.theta2, pwm0=args.pwm0, u_max=args.u_max)
        print(f"theta2 = {line.theta2:.2f} rad/s")
        print(f"theta1 = {line.theta1:.3f} rad/s")
    else:
        if args.samples:
            samples = ident.read_samples(args.samples)
        elif kind == "thrust-hover":
            samples = ident.gen_hover_experiment(_floats(args.payloads), params, gains)
        elif kind == "thrust-scale":
            samples = ident.gen_scale_experiment(_floats(args.pwm_levels), params)
        else:
            samples = []
            for i, alpha in enumerate(_floats(args.alphas)):
                samples += ident.gen_yaw_experiment(
                    YawBangBang(alpha, args.yaw_period), params, gains,
                    plant_bias=args.plant_bias, gyro_noise=args.gyro_noise, seed=args.seed + i,
                )
        if kind in ("thrust-hover", "thrust-scale"):
            if not all(isinstance(s, ident.ThrustSample) for s in samples):
                raise UsageError("thrust fit needs omega_mean,thrust samples")
            c = ident.fit_thrust_coeff(samples)
            res = ident.thrust_fit_residuals(samples, c)
            fitted = params.replace(thrust_coeff=c)
            print(f"thrust_coeff = {format_float(c)} N s^2/rad^2")
        else:
            if not all(isinstance(s, ident.TorqueSample) for s in samples):
                raise UsageError("drag fit needs sq_diff,tau_z samples")
            b1, b2 = ident.fit_drag_coeff(samples)
            res = ident.drag_fit_residuals(samples, b1, b2)
            fitted = params.replace(drag_coeff=b1, drag_offset=b2)
            print(f"drag_coeff = {format_float(b1)} N m s^2/rad^2")
            print(f"drag_offset = {format_float(b2)} N m")
        print(f"samples: {len(samples)}")
        print(f"residual rms: {format_float(harness.rms(res))}")
        ident.write_samples(out / "samples.csv", samples)
    dump_params(fitted, out / "params.txt")
    return EXIT_OK


def cmd_export_plots(args) -> int:
    path = Path(args.log)
    if not path.is_file():
        raise ConfigError(f"{path}: no such file")
    header, data = read_table(path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if header == LOG_COLUMNS:
        idx = {n: i for i, n in enumerate(header)}
        cols = ["t", "r_x", "r_y", "r_z", "r_d_x", "r_d_y", "r_d_z", "e_r_x", "e_r_y", "e_r_z"]
        table = data[:, [idx[c] for c in cols]]
        target, names = out / "trajectory.csv", TRAJECTORY_COLUMNS
    elif tuple(header) == ident.THRUST_HEADER:
        table, target, names = data, out / "thrust_curve.csv", ident.THRUST_HEADER
    elif tuple(header) == ident.TORQUE_HEADER:
        table, target, names = data, out / "torque_line.csv", ident.TORQUE_HEADER
    else:
        raise ConfigError(f"{path}: unrecognised header")
    if not np.all(np.isfinite(table)):
        bad = int(np.argmax(~np.all(np.isfinite(table), axis=1))) + 2
        raise ConfigError(f"{path}: row {bad} contains non-finite values")
    with open(target, "w", newline="") as fh:
        write_table(fh, names, table)
    print(target)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="vehicle parameter file")
    common.add_argument("--gains", help="controller gains file")
    common.add_argument("--traj", help="trajectory spec file")
    common.add_argument("--sim", help="simulation settings file")
    common.add_argument("--out", default="out", help="output root directory")
    common.add_argument("--name", help="run name (subdirectory of --out)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1)

    parser = argparse.ArgumentParser(prog="quadgeo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="closed-loop tracking run")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="position-gain sweep with RMS report")
    p.add_argument("sweep", nargs="?", help="sweep spec file (default: the four-pair sweep)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("identify", parents=[common], help="parameter identification")
    p.add_argument("kind", choices=["thrust-hover", "thrust-scale", "drag-yaw", "actuator-line"])
    p.add_argument("--samples", help="sample CSV (data mode); otherwise synthetic experiments are run")
    p.add_argument("--payloads", default="0,0.05,0.1,0.15,0.2,0.25", help="kg, comma-separated")
    p.add_argument("--pwm-levels", default="0.05,0.1,0.15,0.2,0.25,0.3")
    p.add_argument("--alphas", default="1,2,4,6,8", help="yaw accelerations, rad/s^2")
    p.add_argument("--yaw-period", type=float, default=2.0)
    p.add_argument("--plant-bias", action="store_true", help="add the yaw torque offset in the plant")
    p.add_argument("--gyro-noise", type=float, default=ident.DEFAULT_GYRO_NOISE)
    p.add_argument("--kv", type=float, default=2450.0)
    p.add_argument("--u-max", type=float, default=16.8)
    p.add_argument("--pwm0", type=float, default=0.0305)
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("export-plots", help="plot-ready CSVs from a log or sample file")
    p.add_argument("log")
    p.add_argument("--out", default="out/plots")
    p.set_defaults(func=cmd_export_plots)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationDiverged, ident.IdentificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
