"""Temporal beam splitting into k equal recalls and recall/reference interference."""

import argparse

import numpy as np

from ats_memory.analysis import visibility
from ats_memory.core import TWO_PI
from ats_memory.protocols import (
    EXP_UNITS as U, calibrate_splitter, experimental_medium, interference_sweep,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ways", type=int, nargs="+", default=[2, 4])
    ap.add_argument("--phases", type=int, default=8)
    args = ap.parse_args()

    med = experimental_medium()
    for k in args.ways:
        cal = calibrate_splitter(k, med, U.time(40.0), U.time(150.0), U.time(150.0))
        res = cal.plan.run(med, cal.plan.grid(med))
        t1 = cal.plan.read_times[0]
        # undo spin decay between reads so equal splitting shows as equal numbers
        e = [res.window_energy(*w) * np.exp(2 * med.gamma_s * (t - t1))
             for (_, w), t in zip(cal.plan.recall_windows(), cal.plan.read_times)]
        print(f"{k}-way areas/pi {np.round(np.array(cal.areas) / np.pi, 3).tolist()} "
              f"decay-corrected recall energies {np.round(e, 5).tolist()}")

    thetas = np.linspace(0, TWO_PI, args.phases, endpoint=False)
    pts, _ = interference_sweep(med, thetas, 0.0, U.time(200.0), U.time(40.0))
    v = visibility([(p.theta_s, p.intensity) for p in pts])
    print(f"interference visibility {v.visibility:.4f}")


if __name__ == "__main__":
    main()
