"""Position-gain sweep on the default helix; writes out/gain_sweep/report.csv."""

import argparse
import time
from pathlib import Path

from quadgeo.config import DEFAULT_SWEEP, RunSettings
from quadgeo.harness import sweep, write_report
from quadgeo.model import VehicleParams
from quadgeo.trajectory import Helix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/gain_sweep")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--noise-pos", type=float, default=0.0, help="position measurement noise, m")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    rows = sweep(DEFAULT_SWEEP, 0.6, 0.15, Helix(), VehicleParams(), RunSettings(noise_pos=args.noise_pos),
                 jobs=args.jobs, log_dir=out / "runs")
    write_report(out / "report.csv", rows)
    print(f"{'k_r':>5} {'k_v':>5} {'e_x':>10} {'e_y':>10} {'e_z':>10}")
    for r in rows:
        print(f"{r.k_r:5g} {r.k_v:5g} " + " ".join(f"{x:10.5f}" for x in r.rms) + ("  <- best" if r.argmin else ""))
    print(f"{time.perf_counter() - t0:.1f} s, report in {out / 'report.csv'}")


if __name__ == "__main__":
    main()
