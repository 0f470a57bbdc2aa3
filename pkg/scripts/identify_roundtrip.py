"""Synthetic identification: generate experiments from known parameters and fit them back."""

import argparse

import numpy as np

from quadgeo.ident import (
    actuator_line_from_kv,
    fit_drag_coeff,
    fit_thrust_coeff,
    gen_hover_experiment,
    gen_scale_experiment,
    gen_yaw_experiment,
)
from quadgeo.model import VehicleParams
from quadgeo.trajectory import YawBangBang


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gyro-noise", type=float, default=0.01, help="rad/s")
    ap.add_argument("--plant-bias", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    p = VehicleParams()

    line = actuator_line_from_kv(2450, 16.8, p.pwm0)
    print(f"actuator line  theta2 {line.theta2:9.3f}  theta1 {line.theta1:9.3f}"
          f"  (defaults {p.theta2}, {p.theta1})")

    c_hover = fit_thrust_coeff(gen_hover_experiment([0.0, 0.05, 0.1, 0.15, 0.2, 0.25], p))
    c_scale = fit_thrust_coeff(gen_scale_experiment(np.linspace(0.05, 0.3, 6), p))
    print(f"thrust coeff   true {p.thrust_coeff:.5e}  hover {c_hover:.5e}  scale {c_scale:.5e}")

    samples = []
    for i, alpha in enumerate([1.0, 2.0, 4.0, 6.0, 8.0]):
        samples += gen_yaw_experiment(YawBangBang(alpha, 2.0), p, plant_bias=args.plant_bias,
                                      gyro_noise=args.gyro_noise, seed=args.seed + i)
    b1, b2 = fit_drag_coeff(samples)
    truth = p.drag_offset if args.plant_bias else 0.0
    print(f"drag coeff     true {p.drag_coeff:.5e}  fit {b1:.5e}")
    print(f"drag offset    true {truth:+.4f}  fit {b2:+.4f}  ({len(samples)} samples)")


if __name__ == "__main__":
    main()
