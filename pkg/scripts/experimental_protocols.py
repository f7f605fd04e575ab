"""Storage protocols with the experimental effective medium (times in ns).

Compares constant, interrupted and pulsed control, runs the pulse
compression/stretching pair and fits the storage-time decay.
"""

import argparse

from ats_memory.analysis import decay_fit, metrics
from ats_memory.core import time_to_bandwidth
from ats_memory.protocols import (
    EXP_UNITS as U, constant_control_plan, experimental_medium, interrupted_control_plan,
    pulsed_plan,
)


def recall(plan, med):
    res = plan.run(med, plan.grid(med))
    return res, plan.efficiencies(res)["recall_1"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--fwhm", type=float, default=40.0, help="signal FWHM, ns")
    ap.add_argument("--storage", type=float, default=230.0, help="storage time, ns")
    ap.add_argument("--gamma-s", type=float, default=0.25, help="spin decay, MHz")
    args = ap.parse_args()

    med = experimental_medium(gamma_s_mhz=args.gamma_s)
    tau, T = U.time(args.fwhm), U.time(args.storage)
    b = time_to_bandwidth(tau)
    print(f"constant    {recall(constant_control_plan(b, n_recalls=1), med)[1]:.4f}")
    print(f"interrupted {recall(interrupted_control_plan(b, T), med)[1]:.4f}")
    print(f"pulsed      {recall(pulsed_plan(tau, T), med)[1]:.4f}")

    for f_in, f_out in ((60.0, 30.0), (30.0, 60.0)):
        plan = pulsed_plan(U.time(f_in), U.time(200.0), write_fwhm=U.time(f_in),
                           read_fwhm=U.time(f_out))
        res, eta = recall(plan, med)
        m = metrics(res.t, res.E_in, res.E_out, plan.windows)
        print(f"shaping {f_in:g}->{f_out:g} ns: width ratio "
              f"{m.fwhm['recall_1'] / m.fwhm['input']:.3f}, eta {eta:.4f}")

    pts = [(Tns, recall(pulsed_plan(tau, U.time(Tns)), med)[1]) for Tns in range(100, 601, 100)]
    fit = decay_fit(pts)
    print(f"decay: T_d = {fit.T_d:.1f} ns")


if __name__ == "__main__":
    main()
