"""Closed-form efficiency estimates and the d-F sweep harness.

The analytic model is a product of independent factors: re-absorption limited
mapping, set by the effective optical depth d/2F, and the fraction of
polarization surviving one ATS period, exp(-1/F).
"""

from __future__ import annotations

import csv
import enum
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .core import Direction, MediumParams
from .protocols import matched_pulsed_plan


class Engine(enum.Enum):
    ANALYTIC = "analytic"
    SOLVER = "solver"
    BOTH = "both"


@dataclass(frozen=True)
class AnalyticParams:
    d: float
    F: float

    def __post_init__(self):
        if not self.F > 0:
            raise ValueError(f"F must be positive, got {self.F}")
        if self.d < 0:
            raise ValueError(f"d must be >= 0, got {self.d}")

    @property
    def d_tilde(self) -> float:
        return self.d / (2.0 * self.F)


def _check(d, F):
    if not F > 0:
        raise ValueError(f"F must be positive, got {F}")
    if d < 0:
        raise ValueError(f"d must be >= 0, got {d}")


def eta_forward(d: float, F: float) -> float:
    """Forward-recall estimate dt^2 exp(-dt) exp(-1/F), with dt = d/2F."""
    _check(d, F)
    x = d / (2.0 * F)
    return x * x * math.exp(-x) * math.exp(-1.0 / F)


def eta_backward(d: float, F: float) -> float:
    _check(d, F)
    x = d / (2.0 * F)
    return (-math.expm1(-x)) ** 2 * math.exp(-1.0 / F)


def eta_experimental(d_A: float, F_eff: float, T: float, T_d: float) -> float:
    """Forward estimate with an exp(-T/T_d) storage decay factor.

    T and T_d only need to share units.
    """
    if not T_d > 0:
        raise ValueError("T_d must be positive")
    if T < 0:
        raise ValueError("T must be >= 0")
    return eta_forward(d_A, F_eff) * math.exp(-T / T_d)


# Intermediate factors of the analytic model.  Only their products are
# compared with the solver.

def absorption_fraction(d: float, F: float) -> float:
    """Share of the input absorbed by the doublet, 1 - exp(-d/2F)."""
    _check(d, F)
    return -math.expm1(-d / (2.0 * F))


def ats_survival(F: float) -> float:
    """Polarization surviving one ATS period 2pi/Omega at gamma_e = 1/2."""
    if not F > 0:
        raise ValueError("F must be positive")
    return math.exp(-1.0 / F)


def forward_reemission(d: float, F: float) -> float:
    """Forward mapping factor dt exp(-dt); squared it gives write x read."""
    _check(d, F)
    x = d / (2.0 * F)
    return x * math.exp(-x / 2.0)


@dataclass(frozen=True)
class SweepSpec:
    d_values: tuple[float, ...]
    F_values: tuple[float, ...]
    direction: Direction = Direction.FORWARD
    engine: Engine = Engine.BOTH
    worker_count_hint: int = 1
    n_z: int = 200

    def __post_init__(self):
        object.__setattr__(self, "d_values", tuple(float(x) for x in self.d_values))
        object.__setattr__(self, "F_values", tuple(float(x) for x in self.F_values))
        if not self.d_values or not self.F_values:
            raise ValueError("sweep grids must be non-empty")

    def cells(self) -> list[tuple[float, float]]:
        # row-major: d outer, F inner
        return [(d, F) for d in self.d_values for F in self.F_values]


@dataclass(frozen=True)
class SweepRow:
    d: float
    F: float
    direction: Direction
    eta_analytic: float | None
    eta_solver: float | None
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def solver_efficiency(d: float, F: float, direction: Direction, n_z: int = 200) -> float:
    """Pulsed 2pi/2pi memory efficiency from the solver (gamma_e = 1/2, gamma_s = 0)."""
    plan = matched_pulsed_plan(F, direction)
    med = MediumParams(d, 0.5, 0.0, direction=direction)
    res = plan.run(med, plan.grid(med, n_z=n_z))
    return plan.efficiencies(res)["recall_1"]


def _cell(args) -> SweepRow:
    d, F, direction, engine, n_z = args
    analytic = solver = None
    try:
        if engine in (Engine.ANALYTIC, Engine.BOTH):
            fn = eta_forward if direction is Direction.FORWARD else eta_backward
            analytic = fn(d, F)
        if engine in (Engine.SOLVER, Engine.BOTH):
            solver = solver_efficiency(d, F, direction, n_z)
    except Exception as exc:  # a failed cell must not abort the sweep
        msg = f"{type(exc).__name__}: {exc}".replace(",", ";").replace("\n", " ")
        return SweepRow(d, F, direction, analytic, solver, "error: " + msg)
    return SweepRow(d, F, direction, analytic, solver)


def sweep(spec: SweepSpec, jobs: int | None = None) -> list[SweepRow]:
    """Evaluate every (d, F) cell; results are ordered d-major regardless of jobs."""
    jobs = jobs or spec.worker_count_hint or 1
    tasks = [(d, F, spec.direction, spec.engine, spec.n_z) for d, F in spec.cells()]
    if jobs <= 1 or len(tasks) <= 1:
        return [_cell(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks), os.cpu_count() or 1) or 1) as ex:
        # map preserves submission order
        return list(ex.map(_cell, tasks))


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6g}"


SWEEP_HEADER = ("d", "F", "direction", "eta_analytic", "eta_solver", "status")


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in rows:
        w.writerow([_fmt(r.d), _fmt(r.F), r.direction.value, _fmt(r.eta_analytic),
                    _fmt(r.eta_solver), r.status])
    return buf.getvalue()
