"""Forward and backward efficiency against d at fixed F, solver vs closed form."""

import argparse
import os

import numpy as np

from ats_memory.core import Direction
from ats_memory.efficiency_model import Engine, SweepSpec, sweep, sweep_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--F", type=float, default=12.0)
    ap.add_argument("--d-max", type=float, default=120.0)
    ap.add_argument("--d-step", type=float, default=6.0)
    ap.add_argument("--jobs", type=int, default=int(os.environ.get("ATS_SIM_JOBS", "1")))
    ap.add_argument("--prefix", default="sweep")
    args = ap.parse_args()

    ds = tuple(np.arange(args.d_step, args.d_max + 1e-9, args.d_step))
    for direction, tag in ((Direction.FORWARD, "fwd"), (Direction.BACKWARD, "bwd")):
        rows = sweep(SweepSpec(ds, (args.F,), direction, Engine.BOTH), jobs=args.jobs)
        path = f"{args.prefix}_{tag}_F{args.F:g}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(sweep_csv(rows))
        best = max((r for r in rows if r.ok), key=lambda r: r.eta_solver)
        print(f"{tag}: best solver eta {best.eta_solver:.4f} at d={best.d:g} "
              f"(analytic {best.eta_analytic:.4f}); wrote {path}")


if __name__ == "__main__":
    main()
