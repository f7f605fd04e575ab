"""Maxwell-Bloch integrator for a resonant Lambda ensemble.

In Gamma units and with z measured in units of L, the integrated system is

    dE/dz = i k P
    dP/dt = -gamma_e P + i k E + (i/2) Omega(t) S
    dS/dt = -gamma_s S + (i/2) Omega*(t) P

with k = sqrt(d gamma_e / 2) and the boundary E(0, t) given by the input.
The field is treated quasi-statically (L/c is negligible against the pulse
durations) and rebuilt from P by cumulative trapezoidal quadrature in z at
every Runge-Kutta stage.  With this normalisation |E|^2 is a photon flux and
|P|^2 + |S|^2 an excitation density, so

    d|E|^2/dz + d(|P|^2 + |S|^2)/dt = -2 gamma_e |P|^2 - 2 gamma_s |S|^2

which is what the energy ledger checks.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import ControlSchedule, MediumParams, SignalSpec

STABILITY_SAFETY = 0.05
DEFAULT_NZ = 200
DEFAULT_PROBES = (0.05, 0.95)


class SolverError(RuntimeError):
    pass


class StabilityError(SolverError):
    pass


class NumericalError(SolverError):
    pass


class EventError(SolverError):
    pass


class EventKind(enum.Enum):
    CONTROL_OFF = "control_off"
    CONTROL_ON = "control_on"
    SPIN_FLIP = "spinflip"


@dataclass(frozen=True, order=True)
class TimedEvent:
    t: float
    kind: EventKind = EventKind.SPIN_FLIP


def _shortest_fwhm(schedule: ControlSchedule, signal: SignalSpec) -> float:
    widths = [p.fwhm for p in schedule.gauss_pulses()] + [p.fwhm for p in signal.pulses]
    return min(widths) if widths else math.inf


def max_stable_dt(medium: MediumParams, schedule: ControlSchedule, signal: SignalSpec,
                  t_start: float, t_end: float, safety: float = STABILITY_SAFETY) -> float:
    omax = schedule.max_abs(t_start, t_end)
    limits = [
        1.0 / omax if omax > 0 else math.inf,
        1.0 / medium.gamma_e if medium.gamma_e > 0 else math.inf,
        _shortest_fwhm(schedule, signal),
    ]
    lim = min(limits)
    if math.isinf(lim):
        lim = 1.0
    return safety * lim


@dataclass(frozen=True)
class SimGrid:
    n_z: int = DEFAULT_NZ
    dt: float = 1e-2
    t_end: float = 10.0
    t_start: float = 0.0

    def __post_init__(self):
        if int(self.n_z) != self.n_z or self.n_z < 2:
            raise ValueError(f"n_z must be an integer >= 2, got {self.n_z}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")

    @property
    def n_steps(self) -> int:
        return int(math.ceil((self.t_end - self.t_start) / self.dt - 1e-9))

    @classmethod
    def auto(cls, medium: MediumParams, schedule: ControlSchedule, signal: SignalSpec,
             events: Sequence[TimedEvent] = (), *, n_z: int = DEFAULT_NZ,
             t_end: float | None = None, t_start: float = 0.0,
             safety: float = STABILITY_SAFETY) -> "SimGrid":
        """Grid obeying the stability rule, long enough to see the last recall."""
        if t_end is None:
            t_end = _auto_t_end(schedule, signal, events, t_start)
        dt = max_stable_dt(medium, schedule, signal, t_start, t_end, safety)
        # round the step count up so t_end lands on the grid
        n = int(math.ceil((t_end - t_start) / dt))
        return cls(n_z=n_z, dt=(t_end - t_start) / n, t_end=t_end, t_start=t_start)

    def refined(self, dt_factor: float = 1.0, nz_factor: int = 1) -> "SimGrid":
        return SimGrid(self.n_z * nz_factor, self.dt * dt_factor, self.t_end, self.t_start)


def _auto_t_end(schedule, signal, events, t_start) -> float:
    widths = [p.fwhm for p in schedule.gauss_pulses()] + [p.fwhm for p in signal.pulses]
    dur = max(widths) if widths else 1.0
    marks = [t_start]
    marks += [p.t0 for p in signal.pulses] + [p.t0 for p in schedule.gauss_pulses()]
    marks += [e.t for e in events]
    for seg in schedule.segments:
        if hasattr(seg, "t_start"):
            marks.append(seg.t_start)
    return max(marks) + 6.0 * dur


@dataclass
class FieldState:
    E: np.ndarray
    P: np.ndarray
    S: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if not (len(self.E) == len(self.P) == len(self.S)):
            raise ValueError("E, P, S must share the spatial grid")

    @classmethod
    def zeros(cls, n_z: int, t: float = 0.0) -> "FieldState":
        z = np.zeros(n_z, dtype=complex)
        return cls(z.copy(), z.copy(), z.copy(), t)


@dataclass(frozen=True)
class EnergyLedger:
    energy_in: float
    energy_out: float
    energy_stored_final: float
    energy_decayed: float

    @property
    def balance_error(self) -> float:
        """Relative mismatch of in = out + stored + decayed."""
        if self.energy_in == 0:
            return abs(self.energy_out + self.energy_stored_final + self.energy_decayed)
        total = self.energy_out + self.energy_stored_final + self.energy_decayed
        return abs(self.energy_in - total) / self.energy_in


@dataclass(frozen=True)
class SimResult:
    t: np.ndarray
    E_in: np.ndarray
    E_out: np.ndarray
    omega_c: np.ndarray
    probe_z: tuple[float, ...]
    S2_probe: np.ndarray  # (n_t, n_probes)
    P2_probe: np.ndarray
    E2_probe: np.ndarray
    spin_energy: np.ndarray  # integral of |S|^2 over z, per time sample
    pol_energy: np.ndarray
    ledger: EnergyLedger
    final_state: FieldState
    grid: SimGrid
    medium: MediumParams
    scheme: str
    digest: str
    maps: dict = field(default_factory=dict)

    def window_energy(self, t0: float, t1: float, which: str = "out") -> float:
        """Trapezoidal integral of |E|^2 over [t0, t1], clipped to the run.

        The window edges are interpolated so the result does not jump as
        grid points enter or leave the window.
        """
        trace = np.abs(self.E_out if which == "out" else self.E_in) ** 2
        t0, t1 = max(t0, self.t[0]), min(t1, self.t[-1])
        if not t1 > t0:
            return 0.0
        m = (self.t > t0) & (self.t < t1)
        tt = np.concatenate(([t0], self.t[m], [t1]))
        yy = np.concatenate(([np.interp(t0, self.t, trace)], trace[m], [np.interp(t1, self.t, trace)]))
        return float(np.trapezoid(yy, tt))

    def spin_energy_at(self, t: float) -> float:
        return float(np.interp(t, self.t, self.spin_energy))


def _cumtrapz(y: np.ndarray, dz: float) -> np.ndarray:
    out = np.empty_like(y)
    out[..., 0] = 0.0
    np.cumsum(0.5 * (y[..., 1:] + y[..., :-1]), axis=-1, out=out[..., 1:])
    out *= dz
    return out


def _field(P, e0, k, dz):
    """E(z) from P with E(0) = e0 (e0 broadcasts over leading axes)."""
    return np.asarray(e0)[..., None] + 1j * k * _cumtrapz(P, dz)


def _rhs(P, S, e0, om, k, dz, ge, gs, det):
    E = _field(P, e0, k, dz)
    dP = -ge * P + 1j * k * E + 0.5j * om * S
    dS = -gs * S + 0.5j * np.conj(om) * P
    if det is not None:
        dP = dP - 1j * det * P
        dS = dS - 1j * det * S
    return dP, dS


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
    return h.hexdigest()[:16]


def check_stability(medium, schedule, signal, grid: SimGrid) -> None:
    lim = max_stable_dt(medium, schedule, signal, grid.t_start, grid.t_end)
    if grid.dt > lim * (1 + 1e-9):
        raise StabilityError(f"dt={grid.dt:.6g} exceeds stability limit {lim:.6g}")


def apply_event(state: FieldState, event: TimedEvent, omega_now: complex = 0.0,
                gamma_e: float = 0.5) -> FieldState:
    """Apply a timed event to the medium state.

    A spin flip mirrors S(z) -> S(L - z), which is how backward read-out is
    realised on a forward grid. Control on/off events only validate timing;
    the schedule itself carries the control.
    """
    thresh = 1e-6 * (gamma_e if gamma_e > 0 else 1.0)
    if event.kind is EventKind.SPIN_FLIP:
        if abs(omega_now) > thresh:
            raise EventError(
                f"spin flip at t={event.t:.6g} while control is on (|Omega|={abs(omega_now):.3g})"
            )
        return FieldState(state.E.copy(), state.P.copy(), state.S[::-1].copy(), state.t)
    if event.kind is EventKind.CONTROL_OFF and abs(omega_now) > thresh:
        raise EventError(f"control_off at t={event.t:.6g} but |Omega|={abs(omega_now):.3g}")
    if event.kind is EventKind.CONTROL_ON and abs(omega_now) <= thresh:
        raise EventError(f"control_on at t={event.t:.6g} but control is off")
    return state


def simulate(medium: MediumParams, schedule: ControlSchedule, signal: SignalSpec,
             grid: SimGrid, events: Iterable[TimedEvent] = (), *,
             scheme: str = "rk4", probes: Sequence[float] = DEFAULT_PROBES,
             detuning: Callable[[np.ndarray], np.ndarray] | None = None,
             initial: FieldState | None = None, map_every: int = 0) -> SimResult:
    """Integrate the Maxwell-Bloch system over ``grid``.

    ``detuning`` (optional, Gamma units, function of t) adds a two-photon
    detuning to P and S; the protocol simulations leave it unset.
    ``map_every`` > 0 stores |S|^2, |P|^2, |E|^2 over the whole medium every
    that many steps (in ``result.maps``).
    """
    if scheme not in ("rk4", "euler"):
        raise ValueError(f"unknown scheme {scheme!r}")
    events = list(events)
    if any(b.t < a.t for a, b in zip(events, events[1:])):
        raise EventError("events must be sorted by time")
    check_stability(medium, schedule, signal, grid)

    nz, dt, n = grid.n_z, grid.dt, grid.n_steps
    dz = 1.0 / (nz - 1)
    k = medium.propagation_coupling()
    ge, gs = medium.gamma_e, medium.gamma_s
    t = grid.t_start + dt * np.arange(n + 1)
    t_half = t[:-1] + 0.5 * dt
    om_full, om_half = schedule.evaluate(t), schedule.evaluate(t_half)
    e0_full, e0_half = signal(t), signal(t_half)
    if detuning is not None:
        det_full = np.asarray(detuning(t), dtype=float)
        det_half = np.asarray(detuning(t_half), dtype=float)
    else:
        det_full = det_half = None

    if initial is None:
        P = np.zeros(nz, dtype=complex)
        S = np.zeros(nz, dtype=complex)
    else:
        P, S = initial.P.astype(complex), initial.S.astype(complex)

    probe_idx = [int(round(p * (nz - 1))) for p in probes]
    E_out = np.empty(n + 1, dtype=complex)
    S2p = np.empty((n + 1, len(probes)))
    P2p = np.empty((n + 1, len(probes)))
    E2p = np.empty((n + 1, len(probes)))
    spin_e = np.empty(n + 1)
    pol_e = np.empty(n + 1)
    maps = {"t": [], "S2": [], "P2": [], "E2": []} if map_every else {}

    event_steps: dict[int, list[TimedEvent]] = {}
    for ev in events:
        i = int(round((ev.t - grid.t_start) / dt))
        if i < 0 or i > n:
            raise EventError(f"event at t={ev.t} outside the simulated window")
        event_steps.setdefault(i, []).append(ev)

    def record(i):
        E = _field(P, e0_full[i], k, dz)
        E_out[i] = E[-1]
        aS, aP, aE = np.abs(S) ** 2, np.abs(P) ** 2, np.abs(E) ** 2
        S2p[i] = aS[probe_idx]
        P2p[i] = aP[probe_idx]
        E2p[i] = aE[probe_idx]
        spin_e[i] = np.trapezoid(aS, dx=dz)
        pol_e[i] = np.trapezoid(aP, dx=dz)
        if map_every and i % map_every == 0:
            maps["t"].append(t[i])
            maps["S2"].append(aS)
            maps["P2"].append(aP)
            maps["E2"].append(aE)

    def fire(i):
        nonlocal P, S
        for ev in event_steps.get(i, ()):
            # timing is validated at the event instant, not the nearest grid point
            st = apply_event(FieldState(_field(P, e0_full[i], k, dz), P, S, t[i]), ev,
                             schedule.evaluate(ev.t), ge)
            P, S = st.P, st.S

    fire(0)
    record(0)
    for i in range(n):
        dfull = None if det_full is None else det_full[i]
        if scheme == "euler":
            dP, dS = _rhs(P, S, e0_full[i], om_full[i], k, dz, ge, gs, dfull)
            P = P + dt * dP
            S = S + dt * dS
        else:
            dh = None if det_half is None else det_half[i]
            dn = None if det_full is None else det_full[i + 1]
            k1P, k1S = _rhs(P, S, e0_full[i], om_full[i], k, dz, ge, gs, dfull)
            k2P, k2S = _rhs(P + 0.5 * dt * k1P, S + 0.5 * dt * k1S, e0_half[i], om_half[i],
                            k, dz, ge, gs, dh)
            k3P, k3S = _rhs(P + 0.5 * dt * k2P, S + 0.5 * dt * k2S, e0_half[i], om_half[i],
                            k, dz, ge, gs, dh)
            k4P, k4S = _rhs(P + dt * k3P, S + dt * k3S, e0_full[i + 1], om_full[i + 1],
                            k, dz, ge, gs, dn)
            P = P + (dt / 6.0) * (k1P + 2.0 * k2P + 2.0 * k3P + k4P)
            S = S + (dt / 6.0) * (k1S + 2.0 * k2S + 2.0 * k3S + k4S)
        if not (np.isfinite(P).all() and np.isfinite(S).all()):
            raise NumericalError(f"non-finite state at step {i + 1} (t={t[i + 1]:.6g})")
        fire(i + 1)
        record(i + 1)

    e_in = float(np.trapezoid(np.abs(e0_full) ** 2, t))
    e_out = float(np.trapezoid(np.abs(E_out) ** 2, t))
    loss_rate = 2.0 * ge * pol_e + 2.0 * gs * spin_e
    e_dec = float(np.trapezoid(loss_rate, t))
    if initial is not None:
        # energy already in the medium at t_start counts as input
        e_in += float(np.trapezoid(np.abs(initial.P) ** 2 + np.abs(initial.S) ** 2, dx=dz))
    ledger = EnergyLedger(e_in, e_out, float(spin_e[-1] + pol_e[-1]), e_dec)
    final = FieldState(_field(P, e0_full[-1], k, dz), P, S, float(t[-1]))
    if maps:
        maps = {key: np.array(v) for key, v in maps.items()}
    return SimResult(
        t=t, E_in=e0_full, E_out=E_out, omega_c=om_full, probe_z=tuple(probes),
        S2_probe=S2p, P2_probe=P2p, E2_probe=E2p, spin_energy=spin_e, pol_energy=pol_e,
        ledger=ledger, final_state=final, grid=grid, medium=medium, scheme=scheme,
        digest=_digest(medium, schedule, signal, grid, events, scheme), maps=maps,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    eta_coarse: float
    eta_half_dt: float
    eta_double_nz: float

    @property
    def dt_rel_change(self) -> float:
        return abs(self.eta_coarse - self.eta_half_dt) / self.eta_coarse if self.eta_coarse else 0.0

    @property
    def nz_rel_change(self) -> float:
        return abs(self.eta_coarse - self.eta_double_nz) / self.eta_coarse if self.eta_coarse else 0.0


def retrieval_efficiency(res: SimResult, window: tuple[float, float] | None = None,
                         signal: SignalSpec | None = None) -> float:
    """Output energy in ``window`` over total input energy.

    Without a window, everything leaving the medium after the last input
    pulse has passed (centre + 3 fwhm) counts as retrieved.
    """
    e_in = float(np.trapezoid(np.abs(res.E_in) ** 2, res.t))
    if e_in == 0:
        return 0.0
    if window is None:
        if signal is None or not signal.pulses:
            raise ValueError("need a window or the input signal")
        t0 = max(p.t0 + 3.0 * p.fwhm for p in signal.pulses)
        window = (t0, res.t[-1])
    return res.window_energy(*window) / e_in


def convergence_probe(medium, schedule, signal, grid, events=(), window=None,
                      scheme: str = "rk4") -> ConvergenceReport:
    """Efficiency on the base grid, with dt halved, and with n_z doubled."""
    etas = []
    for g in (grid, grid.refined(dt_factor=0.5), grid.refined(nz_factor=2)):
        res = simulate(medium, schedule, signal, g, events, scheme=scheme)
        etas.append(retrieval_efficiency(res, window, signal))
    return ConvergenceReport(*etas)
