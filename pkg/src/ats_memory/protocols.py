"""Builders for the storage, recall and manipulation sequences.

Each builder returns a :class:`ProtocolPlan`: control schedule, input signal,
timed events and named analysis windows.  Windows named ``transmitted`` and
``recall_k`` apply to the output trace, ``input`` to the boundary trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import (
    TWO_PI,
    ConstSegment,
    ControlSchedule,
    Direction,
    GaussianPulse,
    GaussSegment,
    MediumParams,
    SignalSpec,
    UnitSystem,
    bandwidth_to_time,
    effective_params,
    peak_for_area,
    pulse_area,
    total_duration,
)
from .solver import FieldState, SimGrid, SimResult, TimedEvent, EventKind, simulate

# leading margin before the first pulse centre, in units of its fwhm
LEAD_FWHM = 4.0
# half width of a recall window, in units of the relevant fwhm
RECALL_HALF_WIDTH = 3.0
# spacing below which two read pulses are considered overlapping, in fwhm
MIN_READ_SEPARATION = 3.0
FLIP_CLEARANCE = 4.5


class ProtocolError(ValueError):
    pass


class NonMonotoneError(ProtocolError):
    def __init__(self, msg, samples):
        super().__init__(msg)
        self.samples = samples


@dataclass(frozen=True)
class ProtocolPlan:
    schedule: ControlSchedule
    signal: SignalSpec
    events: tuple[TimedEvent, ...] = ()
    windows: dict = field(default_factory=dict)
    t_end: float = 0.0
    # centres of write/read pulses (or read-on instants), for bookkeeping
    write_times: tuple[float, ...] = ()
    read_times: tuple[float, ...] = ()

    def recall_windows(self) -> list[tuple[str, tuple[float, float]]]:
        return [(k, v) for k, v in self.windows.items() if k.startswith("recall_")]

    def grid(self, medium: MediumParams, n_z: int = 200, **kw) -> SimGrid:
        return SimGrid.auto(medium, self.schedule, self.signal, self.events,
                            n_z=n_z, t_end=self.t_end, **kw)

    def run(self, medium: MediumParams, grid: SimGrid | None = None, **kw) -> SimResult:
        grid = grid or self.grid(medium)
        return simulate(medium, self.schedule, self.signal, grid, self.events, **kw)

    def efficiencies(self, res: SimResult) -> dict[str, float]:
        e_in = res.window_energy(*self.windows["input"], which="in")
        if e_in == 0:
            return {}
        return {k: res.window_energy(*w) / e_in for k, w in self.recall_windows()}


def _check_windows(windows: dict) -> None:
    out = [(k, w) for k, w in windows.items() if k != "input"]
    for k, (a, b) in out:
        if not b > a:
            raise ProtocolError(f"window {k} is empty: ({a}, {b})")
    for (k1, w1), (k2, w2) in zip(out, out[1:]):
        if w2[0] < w1[1] - 1e-12:
            raise ProtocolError(f"windows {k1} and {k2} overlap")


def _signal(t0, fwhm, amplitude=1.0, phase=0.0) -> GaussianPulse:
    return GaussianPulse(t0, fwhm, amplitude, phase)


def constant_control_plan(b_fwhm: float, n_recalls: int = 3, *, omega_c: float | None = None,
                          amplitude: float = 1.0, phase: float = 0.0) -> ProtocolPlan:
    """Control on throughout; recalls repeat every 2pi/Omega_c.

    The control Rabi frequency is bandwidth matched, Omega_c = 2 pi B_fwhm,
    unless ``omega_c`` is given.
    """
    if not b_fwhm > 0:
        raise ProtocolError("bandwidth must be positive")
    tau = bandwidth_to_time(b_fwhm)
    om = TWO_PI * b_fwhm if omega_c is None else omega_c
    if not om > 0:
        raise ProtocolError("control Rabi frequency must be positive")
    t_delay = TWO_PI / om
    t0 = LEAD_FWHM * tau
    t_end = t0 + (n_recalls + 1) * t_delay
    sched = ControlSchedule([ConstSegment(om, 0.0, t_end + t_delay)])
    windows = {"input": (0.0, t0 + LEAD_FWHM * tau), "transmitted": (0.0, t0 + 0.5 * t_delay)}
    for k in range(1, n_recalls + 1):
        windows[f"recall_{k}"] = (t0 + (k - 0.5) * t_delay, t0 + (k + 0.5) * t_delay)
    _check_windows(windows)
    return ProtocolPlan(sched, SignalSpec([_signal(t0, tau, amplitude, phase)]), (), windows,
                        t_end, (t0,), tuple(t0 + k * t_delay for k in range(1, n_recalls + 1)))


def write_cut_time(t0: float, tau: float, omega_c: float, area: float = TWO_PI) -> float:
    """Instant at which a constant control has swept ``area`` since the input began.

    The input is taken to begin half its conventional total duration before
    its centre.
    """
    return t0 - 0.5 * total_duration(tau) + area / omega_c


def interrupted_control_plan(b_fwhm: float, storage_time: float, *, omega_c: float | None = None,
                             dt_min: float = 1e-3, amplitude: float = 1.0) -> ProtocolPlan:
    """Constant control switched off after a 2pi write and back on after ``storage_time``."""
    if storage_time < 0:
        raise ProtocolError("storage time must be >= 0")
    if 0 < storage_time < dt_min:
        raise ProtocolError(f"storage time {storage_time} is shorter than one time step")
    tau = bandwidth_to_time(b_fwhm)
    om = TWO_PI * b_fwhm if omega_c is None else omega_c
    t_delay = TWO_PI / om
    t0 = LEAD_FWHM * tau
    t_cut = write_cut_time(t0, tau, om)
    t_on = t_cut + storage_time
    t_end = t0 + storage_time + 2.5 * t_delay
    if storage_time == 0:
        segs = [ConstSegment(om, 0.0, t_end + t_delay)]
        events = ()
    else:
        segs = [ConstSegment(om, 0.0, t_cut), ConstSegment(om, t_on, t_end + t_delay)]
        events = (TimedEvent(t_cut, EventKind.CONTROL_OFF), TimedEvent(t_on, EventKind.CONTROL_ON))
    windows = {
        "input": (0.0, t0 + LEAD_FWHM * tau),
        "transmitted": (0.0, t0 + 0.5 * t_delay),
        "recall_1": (t0 + 0.5 * t_delay + storage_time, t0 + 1.5 * t_delay + storage_time),
    }
    _check_windows(windows)
    return ProtocolPlan(ControlSchedule(segs), SignalSpec([_signal(t0, tau, amplitude)]),
                        events, windows, t_end, (t_cut,), (t_on,))


def _flip_time(t_write, f_write, t_read, f_read) -> float:
    a = t_write + FLIP_CLEARANCE * f_write
    b = t_read - FLIP_CLEARANCE * f_read
    if b <= a:
        raise ProtocolError("write and read pulses too close for a backward spin flip")
    return 0.5 * (a + b)


def pulsed_plan(signal_fwhm: float, storage_time: float, *, write_fwhm: float | None = None,
                read_fwhm: float | None = None, write_area: float = TWO_PI,
                read_area: float = TWO_PI, write_phase: float = 0.0, read_phase: float = 0.0,
                signal_phase: float = 0.0, amplitude: float = 1.0,
                direction: Direction = Direction.FORWARD, omega_max: float | None = None,
                reference: GaussianPulse | None = None) -> ProtocolPlan:
    """Gaussian write co-centred with the input, gaussian read ``storage_time`` later.

    Peaks follow from the requested areas.  ``reference`` adds an extra input
    pulse (used for interference at the recall).
    """
    write_fwhm = signal_fwhm if write_fwhm is None else write_fwhm
    read_fwhm = write_fwhm if read_fwhm is None else read_fwhm
    for name, a in (("write", write_area), ("read", read_area)):
        if not 0 < a <= 2 * TWO_PI + 1e-12:
            raise ProtocolError(f"{name} area {a} outside (0, 4pi]")
    for f in (signal_fwhm, write_fwhm, read_fwhm):
        if not f > 0:
            raise ProtocolError("pulse widths must be positive")
    w = GaussSegment.from_area(write_area, 0.0, write_fwhm, write_phase)
    r = GaussSegment.from_area(read_area, 0.0, read_fwhm, read_phase)
    if omega_max is not None:
        for name, seg in (("write", w), ("read", r)):
            if seg.pulse.peak > omega_max:
                raise ProtocolError(
                    f"{name} peak Rabi frequency {seg.pulse.peak:.4g} exceeds limit {omega_max:.4g}"
                )
    widest = max(signal_fwhm, write_fwhm, read_fwhm)
    t0 = LEAD_FWHM * widest
    t_r = t0 + storage_time
    if storage_time <= 0:
        raise ProtocolError("storage time must be positive for pulsed operation")
    w = GaussSegment.from_area(write_area, t0, write_fwhm, write_phase)
    r = GaussSegment.from_area(read_area, t_r, read_fwhm, read_phase)
    pulses = [_signal(t0, signal_fwhm, amplitude, signal_phase)]
    if reference is not None:
        pulses.append(reference)
    events: tuple[TimedEvent, ...] = ()
    if direction is Direction.BACKWARD:
        events = (TimedEvent(_flip_time(t0, write_fwhm, t_r, read_fwhm)),)
    mid = 0.5 * (t0 + t_r)
    half = RECALL_HALF_WIDTH * max(signal_fwhm, read_fwhm)
    t_end = t_r + 2 * half
    windows = {
        "input": (0.0, t0 + LEAD_FWHM * signal_fwhm),
        "transmitted": (0.0, mid),
        "recall_1": (max(mid, t_r - half), t_r + half),
    }
    _check_windows(windows)
    return ProtocolPlan(ControlSchedule([w, r]), SignalSpec(pulses), events, windows, t_end,
                        (t0,), (t_r,))


def matched_pulsed_plan(F: float, direction: Direction = Direction.FORWARD,
              storage_fwhm: float = 12.0) -> ProtocolPlan:
    """Pulsed 2pi/2pi memory whose constant-equivalent control is F (Gamma units).

    Input bandwidth is matched to the ATS, B = F/2pi, and write/read pulses
    share the input profile.
    """
    tau = bandwidth_to_time(F / TWO_PI)
    return pulsed_plan(tau, storage_fwhm * tau, direction=direction)


@dataclass(frozen=True)
class ReadSpec:
    time: float
    area: float
    phase: float = 0.0
    fwhm: float | None = None


def splitter_plan(reads: Sequence[ReadSpec], signal: SignalSpec, *,
                  write_area: float = TWO_PI, write_fwhm: float | None = None,
                  write_phase: float = 0.0) -> ProtocolPlan:
    """A 2pi write on the (first) input pulse followed by k partial reads."""
    if not signal.pulses:
        raise ProtocolError("splitter needs an input pulse")
    if not reads:
        raise ProtocolError("need at least one read")
    p_in = signal.pulses[0]
    wf = p_in.fwhm if write_fwhm is None else write_fwhm
    segs = [GaussSegment.from_area(write_area, p_in.t0, wf, write_phase)]
    prev_t, prev_f = p_in.t0, wf
    for i, rd in enumerate(reads):
        if not 0 < rd.area <= TWO_PI + 1e-12:
            raise ProtocolError(f"read {i + 1}: area {rd.area} outside (0, 2pi]")
        f = rd.fwhm or wf
        if rd.time <= prev_t:
            raise ProtocolError("read times must be strictly increasing")
        if rd.time - prev_t < MIN_READ_SEPARATION * max(f, prev_f):
            raise ProtocolError(f"read {i + 1} overlaps the previous control pulse")
        segs.append(GaussSegment.from_area(rd.area, rd.time, f, rd.phase))
        prev_t, prev_f = rd.time, f
    centres = [p_in.t0] + [r.time for r in reads]
    widths = [wf] + [r.fwhm or wf for r in reads]
    windows = {"input": (0.0, p_in.t0 + LEAD_FWHM * p_in.fwhm),
               "transmitted": (0.0, 0.5 * (centres[0] + centres[1]))}
    for k in range(1, len(centres)):
        lo = 0.5 * (centres[k - 1] + centres[k])
        hi = 0.5 * (centres[k] + centres[k + 1]) if k + 1 < len(centres) else \
            centres[k] + RECALL_HALF_WIDTH * max(widths[k], p_in.fwhm)
        windows[f"recall_{k}"] = (lo, hi)
    _check_windows(windows)
    t_end = windows[f"recall_{len(reads)}"][1] + RECALL_HALF_WIDTH * p_in.fwhm
    return ProtocolPlan(ControlSchedule(segs), signal, (), windows, t_end, (p_in.t0,),
                        tuple(r.time for r in reads))


def interference_plan(theta_s: float, theta_r: float, storage_time: float, *,
                      signal_fwhm: float, ref_amplitude: float = 1.0,
                      control_phase: float = 0.0, amplitude: float = 1.0) -> ProtocolPlan:
    """Store a signal of phase theta_s; send a reference of phase theta_r at recall."""
    tau = signal_fwhm
    t0 = LEAD_FWHM * tau
    ref = GaussianPulse(t0 + storage_time, tau, ref_amplitude, theta_r) if ref_amplitude else None
    return pulsed_plan(tau, storage_time, signal_phase=theta_s, write_phase=control_phase,
                       read_phase=control_phase, amplitude=amplitude, reference=ref)


@dataclass(frozen=True)
class InterferencePoint:
    theta_s: float
    intensity: float
    # phase of the recalled field at its peak, without the reference
    recall_phase: float


def _peak_sample(res: SimResult, window) -> tuple[int, complex]:
    m = np.flatnonzero((res.t >= window[0]) & (res.t <= window[1]))
    j = m[int(np.argmax(np.abs(res.E_out[m])))]
    return int(j), complex(res.E_out[j])


def interference_sweep(medium: MediumParams, thetas: Sequence[float], theta_r: float,
                       storage_time: float, signal_fwhm: float,
                       n_z: int = 200) -> tuple[list[InterferencePoint], float]:
    """Recall a signal of phase theta_s against a fixed-phase reference.

    The reference is centred on the recall peak and scaled so that, alone,
    it leaves the medium with the recall's peak amplitude.  The intensity is
    read at that peak instant.  Returns the sweep and the reference amplitude.
    """
    probe_plan = interference_plan(0.0, theta_r, storage_time, signal_fwhm=signal_fwhm,
                                   ref_amplitude=0.0)
    grid = probe_plan.grid(medium, n_z=n_z)
    rec = probe_plan.run(medium, grid)
    j, a = _peak_sample(rec, probe_plan.windows["recall_1"])
    t_peak = float(rec.t[j])

    def plan(theta_s, amp_s, amp_r):
        p = interference_plan(theta_s, theta_r, storage_time, signal_fwhm=signal_fwhm,
                              ref_amplitude=0.0, amplitude=amp_s)
        if amp_r:
            ref = GaussianPulse(t_peak, signal_fwhm, amp_r, theta_r)
            p = replace(p, signal=SignalSpec(p.signal.pulses + (ref,)))
        return p

    ref_only = simulate(medium, plan(0.0, 0.0, 1.0).schedule, plan(0.0, 0.0, 1.0).signal, grid)
    amp_r = abs(a) / abs(ref_only.E_out[j])
    out = []
    for th in thetas:
        alone = simulate(medium, plan(th, 1.0, 0.0).schedule, plan(th, 1.0, 0.0).signal, grid)
        pl = plan(th, 1.0, amp_r)
        both = simulate(medium, pl.schedule, pl.signal, grid)
        out.append(InterferencePoint(float(th), float(abs(both.E_out[j]) ** 2),
                                     float(np.angle(alone.E_out[j]))))
    return out, float(amp_r)


def two_input_interference_plan(theta_1: float, theta_2: float, *, signal_fwhm: float,
                                separation: float, read_delay: float,
                                areas: tuple[float, float, float] = (TWO_PI, math.pi, TWO_PI),
                                control_phase: float = 0.0) -> ProtocolPlan:
    """Two inputs mapped by controls of areas 2pi and pi, then one read.

    The first control is co-centred with input 1, the second with input 2, and
    the third (read) follows ``read_delay`` after the second.
    """
    tau = signal_fwhm
    t1 = LEAD_FWHM * tau
    t2 = t1 + separation
    t3 = t2 + read_delay
    if separation < MIN_READ_SEPARATION * tau or read_delay < MIN_READ_SEPARATION * tau:
        raise ProtocolError("control pulses overlap")
    sig = SignalSpec([GaussianPulse(t1, tau, 1.0, theta_1), GaussianPulse(t2, tau, 1.0, theta_2)])
    segs = [GaussSegment.from_area(a, tc, tau, control_phase) for a, tc in zip(areas, (t1, t2, t3))]
    half = RECALL_HALF_WIDTH * tau
    windows = {"input": (0.0, t2 + LEAD_FWHM * tau), "transmitted": (0.0, 0.5 * (t2 + t3)),
               "recall_1": (0.5 * (t2 + t3), t3 + half)}
    _check_windows(windows)
    return ProtocolPlan(ControlSchedule(segs), sig, (), windows, t3 + 2 * half, (t1, t2), (t3,))


def write_area(plan: ProtocolPlan) -> float:
    """Area of the write stage (everything before the first read)."""
    seg = plan.schedule.segments[0]
    if isinstance(seg, GaussSegment):
        p = seg.pulse
        return pulse_area(ControlSchedule([seg]), p.t0 - 10 * p.fwhm, p.t0 + 10 * p.fwhm)
    t_cut = plan.write_times[0]
    sig0 = plan.signal.pulses[0]
    start = sig0.t0 - 0.5 * total_duration(sig0.fwhm)
    return pulse_area(plan.schedule, start, t_cut)


# ---------------------------------------------------------------- calibration

@dataclass
class ReadProbe:
    """Re-simulates one read pulse acting on a stored state."""

    medium: MediumParams
    state: FieldState
    t_read: float
    fwhm: float
    window: tuple[float, float]
    phase: float = 0.0
    n_z: int | None = None

    def energy(self, area: float) -> float:
        if area <= 0:
            return 0.0
        seg = GaussSegment.from_area(area, self.t_read, self.fwhm, self.phase)
        sched = ControlSchedule([seg])
        n_z = self.n_z or len(self.state.S)
        grid = SimGrid.auto(self.medium, sched, SignalSpec(), n_z=n_z, t_start=self.state.t,
                            t_end=self.window[1])
        res = simulate(self.medium, sched, SignalSpec(), grid, initial=self.state)
        return res.window_energy(*self.window)

    def scan(self, n: int = 9) -> tuple[np.ndarray, np.ndarray]:
        areas = np.linspace(TWO_PI / n, TWO_PI, n)
        return areas, np.array([self.energy(a) for a in areas])


@dataclass(frozen=True)
class SplitCalibration:
    area: float
    fraction: float
    samples: tuple[tuple[float, float], ...]


def _bisect_area(probe: ReadProbe, target: float, areas, energies, rel_tol: float) -> tuple[float, float]:
    """Area in (0, 2pi] whose read releases ``target`` (energies monotone)."""
    j = int(np.searchsorted(energies, target))
    if j >= len(areas):
        return float(areas[-1]), float(energies[-1])
    lo = 0.0 if j == 0 else float(areas[j - 1])
    hi = float(areas[j])
    e = float(energies[j])
    mid = hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        e = probe.energy(mid)
        if abs(e - target) <= rel_tol * target:
            break
        if e < target:
            lo = mid
        else:
            hi = mid
    return mid, e


def _monotone_scan(probe: ReadProbe, n: int):
    """Sample the read response and keep its rising branch.

    The search interval runs from zero area up to the sampled maximum; the
    response must increase strictly on it.
    """
    areas, energies = probe.scan(n)
    top = float(energies.max())
    if top <= 0:
        raise ProtocolError("nothing to retrieve: spin wave is empty")
    samples = tuple(zip(areas.tolist(), (energies / top).tolist()))
    j = int(np.argmax(energies)) + 1
    if np.any(np.diff(energies[:j]) <= 0):
        raise NonMonotoneError("retrieved energy is not monotone in the read area", samples)
    return areas[:j], energies[:j], samples


def calibrate_split_area(target_fraction: float, medium: MediumParams, state: FieldState,
                         t_read: float, fwhm: float, *, phase: float = 0.0,
                         window: tuple[float, float] | None = None, tol: float = 1e-3,
                         n_samples: int = 9, n_z: int | None = None) -> SplitCalibration:
    """Read area that releases ``target_fraction`` of what a full 2pi read would.

    ``state`` is the medium at time ``state.t`` (control off), before the read
    centred at ``t_read``.  The response is checked to be monotone in the
    area on ``n_samples`` points before bisecting; ``tol`` is absolute on the
    fraction.
    """
    if not 0 < target_fraction <= 1:
        raise ProtocolError("target fraction must lie in (0, 1]")
    window = window or (state.t, t_read + RECALL_HALF_WIDTH * fwhm)
    probe = ReadProbe(medium, state, t_read, fwhm, window, phase, n_z)
    if target_fraction == 1:
        return SplitCalibration(TWO_PI, 1.0, ((TWO_PI, 1.0),))
    areas, energies, samples = _monotone_scan(probe, n_samples)
    full = probe.energy(TWO_PI)
    a, e = _bisect_area(probe, target_fraction * full, areas, energies, tol / target_fraction)
    return SplitCalibration(a, e / full, samples)


@dataclass(frozen=True)
class SplitterCalibration:
    plan: ProtocolPlan
    areas: tuple[float, ...]
    # decay-corrected output energy every read was tuned to
    target_energy: float


def _state_at(medium, plan_segments, sig, t, n_z) -> FieldState:
    sched = ControlSchedule(plan_segments)
    grid = SimGrid.auto(medium, sched, sig, n_z=n_z, t_end=t)
    return simulate(medium, sched, sig, grid).final_state


def calibrate_splitter(k: int, medium: MediumParams, signal_fwhm: float, first_read: float,
                       spacing: float, *, n_z: int = 200, rel_tol: float = 1e-4,
                       n_samples: int = 9) -> SplitterCalibration:
    """Read areas for a k-way temporal beam splitter with equal outputs.

    Every read except the last (a full 2pi read) is tuned so that its output
    energy, multiplied back by exp((t_j - t_1)/T_d) for spin decay, equals a
    common target.  The target itself is adjusted until the final read also
    delivers it.
    """
    from scipy.optimize import brentq

    if k < 1:
        raise ProtocolError("k must be >= 1")
    tau = signal_fwhm
    t0 = LEAD_FWHM * tau
    sig = SignalSpec([GaussianPulse(t0, tau, 1.0)])
    times = [t0 + first_read + j * spacing for j in range(k)]
    if k == 1:
        plan = splitter_plan([ReadSpec(times[0], TWO_PI)], sig)
        return SplitterCalibration(plan, (TWO_PI,), float("nan"))
    decay = 2.0 * medium.gamma_s
    write = GaussSegment.from_area(TWO_PI, t0, tau)

    def mid(j):
        return 0.5 * ((times[j - 1] if j else t0) + times[j])

    def window(j):
        hi = 0.5 * (times[j] + times[j + 1]) if j + 1 < k else times[j] + RECALL_HALF_WIDTH * tau
        return (mid(j), hi)

    state0 = _state_at(medium, [write], sig, mid(0), n_z)
    probe0 = ReadProbe(medium, state0, times[0], tau, window(0), n_z=n_z)
    areas0, energies0, _ = _monotone_scan(probe0, n_samples)
    cache = {}

    def run_chain(target):
        areas = []
        outs = []
        segs = [write]
        state, probe, a_s, e_s = state0, probe0, areas0, energies0
        for j in range(k):
            if j:
                state = _state_at(medium, segs, sig, mid(j), n_z)
                probe = ReadProbe(medium, state, times[j], tau, window(j), n_z=n_z)
            if j == k - 1:
                a, e = TWO_PI, probe.energy(TWO_PI)
            else:
                if j:
                    a_s, e_s, _ = _monotone_scan(probe, n_samples)
                want = target * math.exp(-decay * (times[j] - times[0]))
                a, e = _bisect_area(probe, want, a_s, e_s, rel_tol)
            areas.append(a)
            outs.append(e * math.exp(decay * (times[j] - times[0])))
            segs.append(GaussSegment.from_area(a, times[j], tau))
        cache[target] = areas
        return outs[-1] - target

    # equal shares sit near R_full/k; start the bracket there and widen if needed
    hi = min(1.0, 1.5 / (k - 1)) * float(energies0[-1])
    lo = 0.2 * hi / k
    while run_chain(lo) < 0:
        lo *= 0.2
    target = brentq(run_chain, lo, hi, rtol=rel_tol)
    if target not in cache:
        run_chain(target)
    areas = cache[target]
    plan = splitter_plan([ReadSpec(t, a) for t, a in zip(times, areas)], sig)
    return SplitterCalibration(plan, tuple(float(a) for a in areas), float(target))


def with_signal_scale(plan: ProtocolPlan, k: complex) -> ProtocolPlan:
    return replace(plan, signal=plan.signal.scaled(k))


# ------------------------------------------------------- experimental settings

# natural linewidth Gamma/2pi of the memory transition, in MHz
GAMMA_REF_MHZ = 7.7
EXP_UNITS = UnitSystem.physical(GAMMA_REF_MHZ)
# measured OD, ATS broadening and spin decoherence (MHz as omega/2pi)
EXP_D = 3.5
EXP_BROADENING_MHZ = 1.9
EXP_GAMMA_S_MHZ = 0.25


def experimental_medium(gamma_s_mhz: float = EXP_GAMMA_S_MHZ, d_exp: float = EXP_D,
                        broadening_mhz: float = EXP_BROADENING_MHZ,
                        direction: Direction = Direction.FORWARD) -> MediumParams:
    """Effective medium for the cold-atom demonstration, in Gamma units.

    Rabi-frequency inhomogeneity is folded into a larger polarization decay
    rate and a correspondingly lower optical depth.
    """
    u = EXP_UNITS
    eff = effective_params(0.5, u.rate(broadening_mhz), d_exp)
    return MediumParams(eff.d_eff, eff.gamma_e_eff, u.rate(gamma_s_mhz), direction=direction,
                        broadening_delta_gamma_ats=u.rate(broadening_mhz))
