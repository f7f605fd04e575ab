"""Acceptance criteria, each at its stated tolerance.

Every test records a one-line PASS/FAIL verdict (shown in the terminal
summary) before asserting.
"""

import math
from pathlib import Path

import numpy as np
import pytest
from scipy.signal import find_peaks

from ats_memory.analysis import decay_fit, metrics, visibility
from ats_memory.core import (
    TWO_PI, ConstSegment, ControlSchedule, Direction, GaussianPulse, GaussSegment, MediumParams,
    SignalSpec, UnitSystem, time_to_bandwidth,
)
from ats_memory.efficiency_model import (
    Engine, SweepSpec, eta_experimental, eta_forward, solver_efficiency, sweep,
)
from ats_memory.expfile import ExpFileError, parse, serialize
from ats_memory.protocols import (
    EXP_UNITS, calibrate_splitter, constant_control_plan, experimental_medium, matched_pulsed_plan,
    interference_sweep, interrupted_control_plan, pulsed_plan,
)
from ats_memory.solver import SimGrid, convergence_probe, simulate
from ats_memory.spectroscopy import Spectrum, fit_ats, susceptibility_od

from acc_report import report
import oracles

U = EXP_UNITS
EXPERIMENTS = sorted((Path(__file__).parent.parent / "experiments").glob("*.ats"))


def revival_run(n_z=200):
    plan = constant_control_plan(7.0 / TWO_PI, n_recalls=3)
    med = MediumParams(13.0, 0.5, 0.0)
    grid = plan.grid(med, n_z=n_z)
    return plan, med, grid, plan.run(med, grid)


# ------------------------------------------------------------------------ 1

def test_acc01_revival_train():
    plan, _, _, res = revival_run()
    td = TWO_PI / 7.0
    y = np.abs(res.E_out) ** 2
    idx, _ = find_peaks(y)
    idx = [i for i in idx if res.t[i] > plan.windows["transmitted"][1] and y[i] > 1e-6 * y.max()]
    peaks = res.t[idx]
    spacing = np.diff(peaks) / td
    energies = [res.window_energy(*w) for _, w in plan.recall_windows()]
    ok_count = len(peaks) >= 3
    ok_space = ok_count and bool(np.all(np.abs(spacing[:2] - 1) <= 0.05))
    ok_decr = all(b < a for a, b in zip(energies, energies[1:]))
    ok = report(1, ok_count and ok_space and ok_decr,
                f"revival peaks at {np.round(peaks, 3).tolist()}, spacing/(2pi/Omega) "
                f"{np.round(spacing, 3).tolist()}, window energies decreasing: {ok_decr}")
    assert ok


# ------------------------------------------------------------------------ 2

def test_acc02_forward_curve():
    F = 12.0
    ds = [float(d) for d in range(12, 73, 3)]
    rows = sweep(SweepSpec(tuple(ds), (F,), Direction.FORWARD, Engine.BOTH))
    dt = np.array([r.d / (2 * F) for r in rows])
    sol = np.array([r.eta_solver for r in rows])
    ana = np.array([r.eta_analytic for r in rows])
    j = int(np.argmax(sol))
    in_band = (dt >= 0.5) & (dt <= 3.0)
    gap = float(np.max(np.abs(sol - ana)[in_band]))
    ok_max = 0.50 <= sol[j] <= 0.545 and 1.5 <= dt[j] <= 2.2
    ok = report(2, ok_max and gap <= 0.05,
                f"max eta_solver {sol[j]:.4f} at d~{dt[j]:.2f}; max |solver-analytic| "
                f"on d~[0.5,3] = {gap:.4f}")
    assert ok


# ------------------------------------------------------------------------ 3

def test_acc03_backward():
    F = 12.0
    ds = (5.0, 25.0, 45.0, 65.0, 85.0, 105.0)
    rows = sweep(SweepSpec(ds, (F,), Direction.BACKWARD, Engine.SOLVER))
    etas = [r.eta_solver for r in rows]
    eta85 = etas[ds.index(85.0)]
    mono = all(b >= a for a, b in zip(etas, etas[1:]))
    ok = report(3, abs(eta85 - 0.90) <= 0.03 and mono,
                f"eta_b(d=85,F=12) = {eta85:.4f}; over d={list(ds)}: "
                f"{[round(e, 4) for e in etas]} monotone: {mono}")
    assert ok


# ------------------------------------------------------------------------ 4

def test_acc04_forward_bound():
    rng = np.random.default_rng(20240604)
    d = 10 ** rng.uniform(-2, 3.5, 10_000)
    F = 10 ** rng.uniform(-2, 3, 10_000)
    vals = np.array([eta_forward(a, b) for a, b in zip(d, F)])
    bound = 4 * math.exp(-2)
    worst = float(vals.max())
    ok = report(4, bool(np.all(vals <= bound)),
                f"max eta_forward over 10^4 random (d, F) = {worst:.6f} <= {bound:.6f}")
    assert ok


# ------------------------------------------------------------------------ 5

def test_acc05_experimental_replication():
    med = experimental_medium()
    tau = U.time(40.0)
    b = time_to_bandwidth(tau)
    const = constant_control_plan(b, n_recalls=1)
    eta_c = const.efficiencies(const.run(med, const.grid(med)))["recall_1"]
    intr = interrupted_control_plan(b, U.time(230.0))
    eta_i = intr.efficiencies(intr.run(med, intr.grid(med)))["recall_1"]
    puls = pulsed_plan(tau, U.time(230.0))
    eta_p = puls.efficiencies(puls.run(med, puls.grid(med)))["recall_1"]
    oks = (abs(eta_c - 0.13) <= 0.03, abs(eta_i - 0.073) <= 0.02, abs(eta_p - 0.078) <= 0.02)
    ok = report(5, all(oks),
                f"constant {eta_c:.4f} (0.13+-0.03) {'ok' if oks[0] else 'out'}; "
                f"interrupted T=230ns {eta_i:.4f} (0.073+-0.02) {'ok' if oks[1] else 'out'}; "
                f"pulsed {eta_p:.4f} (0.078+-0.02) {'ok' if oks[2] else 'out'}")
    assert ok


# ------------------------------------------------------------------------ 6

def test_acc06_closed_form_experimental():
    eta = eta_experimental(2.3, 1.0, 200.0, 300.0)
    ok = report(6, abs(eta - 0.079) <= 0.002 and abs(eta - oracles.ETA_EXP_2P3_1_200_300) < 1e-12,
                f"eta_experimental(2.3, 1, 200, 300) = {eta:.6f}")
    assert ok


# ------------------------------------------------------------------------ 7

def test_acc07_ats_spectroscopy():
    d, om = 13.0, 7.0
    x = np.linspace(-2 * om, 2 * om, 1401)
    fit = fit_ats(Spectrum(x, susceptibility_od(x, d, 0.5, 0.0, om)))
    null = susceptibility_od(0.0, d, 0.5, 0.0, om)
    ok_sp = abs(fit.delta_A / om - 1) <= 0.02
    ok_w = all(abs(w / 0.5 - 1) <= 0.05 for w in fit.widths)
    ok_h = all(abs(h / d - 1) <= 0.03 for h in fit.peak_ods)
    ok = report(7, ok_sp and ok_w and ok_h and null == 0.0,
                f"spacing {fit.delta_A:.4f} (7), widths {np.round(fit.widths, 4).tolist()} (0.5), "
                f"peak od {np.round(fit.peak_ods, 3).tolist()} ({d}), od(0) = {null}")
    assert ok


# ------------------------------------------------------------------------ 8

def shaping(f_in_ns, f_read_ns, storage_ns=200.0):
    med = experimental_medium()
    plan = pulsed_plan(U.time(f_in_ns), U.time(storage_ns), write_fwhm=U.time(f_in_ns),
                       read_fwhm=U.time(f_read_ns))
    res = plan.run(med, plan.grid(med))
    m = metrics(res.t, res.E_in, res.E_out, plan.windows)
    return m.fwhm["recall_1"] / m.fwhm["input"], m.efficiency["recall_1"]


def test_acc08_pulse_shaping():
    r_c, e_c = shaping(60.0, 30.0)
    r_s, e_s = shaping(30.0, 60.0)
    oks = (abs(r_c / 0.5 - 1) <= 0.15, abs(e_c - 0.074) <= 0.02,
           abs(r_s / 2.0 - 1) <= 0.15, abs(e_s - 0.086) <= 0.02)
    ok = report(8, all(oks),
                f"compress ratio {r_c:.3f} (0.5+-15%) eta {e_c:.4f} (0.074+-0.02); "
                f"stretch ratio {r_s:.3f} (2.0+-15%) eta {e_s:.4f} (0.086+-0.02); "
                f"per-check {list(oks)}")
    assert ok


# ------------------------------------------------------------------------ 9

def _argmax_refined(a, y):
    j = int(np.argmax(y))
    if 0 < j < len(y) - 1:
        y0, y1, y2 = y[j - 1], y[j], y[j + 1]
        h = a[1] - a[0]
        den = y0 - 2 * y1 + y2
        return a[j] + (0.5 * h * (y0 - y2) / den if den else 0.0)
    return a[j]


def test_acc09_optimal_area():
    med = experimental_medium()
    tau, T = U.time(40.0), U.time(200.0)
    areas = np.arange(1.0, 3.01, 0.25) * math.pi

    def eta(wa, ra):
        plan = pulsed_plan(tau, T, write_area=wa, read_area=ra)
        return plan.efficiencies(plan.run(med, plan.grid(med)))["recall_1"]

    ew = np.array([eta(a, TWO_PI) for a in areas])
    er = np.array([eta(TWO_PI, a) for a in areas])
    aw, ar = _argmax_refined(areas, ew) / math.pi, _argmax_refined(areas, er) / math.pi
    ok = report(9, 1.5 <= aw <= 2.5 and 1.5 <= ar <= 2.5,
                f"best write area {aw:.3f}pi, best read area {ar:.3f}pi (band [1.5pi, 2.5pi])")
    assert ok


# ----------------------------------------------------------------------- 10

def test_acc10_interference():
    med = experimental_medium()
    thetas = np.linspace(0, TWO_PI, 8, endpoint=False)
    pts, _ = interference_sweep(med, thetas, 0.0, U.time(200.0), U.time(40.0))
    v = visibility([(p.theta_s, p.intensity) for p in pts])
    shift = np.unwrap([p.recall_phase - p.theta_s for p in pts])
    spread = math.degrees(float(np.ptp(shift)))
    ok = report(10, v.visibility >= 0.99 and v.fit_residual <= 0.01 and spread <= 2.0,
                f"V = {v.visibility:.5f}, residual/amplitude = {v.fit_residual:.2e}, "
                f"retrieved-phase offset spread {spread:.3f} deg")
    assert ok


# ----------------------------------------------------------------------- 11

def _split_spread(k):
    med = experimental_medium()
    cal = calibrate_splitter(k, med, U.time(40.0), U.time(150.0), U.time(150.0))
    plan = cal.plan
    res = plan.run(med, plan.grid(med))
    t1 = plan.read_times[0]
    e = [res.window_energy(*w) * math.exp(2 * med.gamma_s * (t - t1))
         for (_, w), t in zip(plan.recall_windows(), plan.read_times)]
    return max(e) / min(e) - 1, cal.areas


def test_acc11_beam_splitting():
    s2, a2 = _split_spread(2)
    s4, a4 = _split_spread(4)
    plan = matched_pulsed_plan(12.0, Direction.BACKWARD)
    med = MediumParams(85.0, direction=Direction.BACKWARD)
    res = plan.run(med, plan.grid(med))
    t_w, t_r = plan.write_times[0], plan.read_times[0]
    f = plan.signal.pulses[0].fwhm
    post_write = res.spin_energy_at(0.5 * (t_w + t_r))
    residual = float(res.spin_energy[-1]) / post_write
    ok = report(11, s2 <= 0.05 and s4 <= 0.05 and residual <= 0.02,
                f"2-way spread {s2:.2e} areas/pi {np.round(np.array(a2) / math.pi, 3).tolist()}; "
                f"4-way spread {s4:.2e} areas/pi {np.round(np.array(a4) / math.pi, 3).tolist()}; "
                f"residual spin after 2pi read (d=85, F=12) {residual:.4f}")
    assert ok


# ----------------------------------------------------------------------- 12

def test_acc12_decay():
    med = experimental_medium(gamma_s_mhz=0.24)
    pts = []
    for T in range(100, 601, 100):
        plan = pulsed_plan(U.time(40.0), U.time(float(T)))
        pts.append((float(T), plan.efficiencies(plan.run(med, plan.grid(med)))["recall_1"]))
    fit = decay_fit(pts)
    expected = 1.0 / (2 * TWO_PI * 0.24e6) * 1e9
    err = abs(fit.T_d / expected - 1)
    ok = report(12, err <= 0.03, f"T_d = {fit.T_d:.1f} ns vs 1/(2 gamma_s) = {expected:.1f} ns "
                                 f"({100 * err:.2f}%)")
    assert ok


# ----------------------------------------------------------------------- 13

def _local_oscillation_spacing():
    med = MediumParams(0.1, 0.5, 0.0)
    om = 7.0
    sched = ControlSchedule([ConstSegment(om, 0.0, 12.0)])
    sig = SignalSpec([GaussianPulse(0.5, 0.1, 1.0)])
    grid = SimGrid.auto(med, sched, sig, n_z=50, t_end=6.0)
    res = simulate(med, sched, sig, grid)
    idx, _ = find_peaks(res.S2_probe[:, 0])
    idx = idx[res.t[idx] > 1.0]
    return np.diff(res.t[idx]) * om / TWO_PI


def test_acc13_numerics():
    checks = {}
    plan, med, grid, base = revival_run()
    rep = convergence_probe(med, plan.schedule, plan.signal, grid,
                            window=plan.windows["recall_1"])
    checks["dt"] = rep.dt_rel_change < 1e-3
    checks["n_z"] = rep.nz_rel_change < 5e-3

    lossless = MediumParams(13.0, 0.0, 0.0)
    g = plan.grid(lossless)
    led = simulate(lossless, plan.schedule, plan.signal, g).ledger
    checks["lossless"] = abs(led.energy_out / led.energy_in - 1) <= 0.01

    small = SimGrid.auto(med, plan.schedule, plan.signal, n_z=100, t_end=4.0)
    ref = simulate(med, plan.schedule, plan.signal, small)
    lin = []
    for k in (2.0, 1j):
        out = simulate(med, plan.schedule, plan.signal.scaled(k), small).E_out
        lin.append(np.max(np.abs(out - k * ref.E_out)) / np.max(np.abs(k * ref.E_out)))
    checks["linearity"] = max(lin) < 1e-10
    again = simulate(med, plan.schedule, plan.signal, small)
    checks["determinism"] = again.E_out.tobytes() == ref.E_out.tobytes()

    tau = 0.4
    pp = pulsed_plan(tau, 8 * tau)
    pg = pp.grid(med, n_z=100)
    a = simulate(med, pp.schedule, pp.signal, pg)
    b = simulate(med, pp.schedule.with_phase_offset(0.9), pp.signal, pg)
    checks["control phase"] = np.max(np.abs(np.abs(a.E_out) ** 2 - np.abs(b.E_out) ** 2)) < 1e-8
    w = pp.windows["recall_1"]
    j = np.flatnonzero((a.t >= w[0]) & (a.t <= w[1]))
    j = j[np.argmax(np.abs(a.E_out[j]))]
    shifts = []
    for th in (0.3, 1.7, -2.5):
        c = simulate(med, pp.schedule, pp.signal.scaled(np.exp(1j * th)), pg)
        shifts.append(np.angle(c.E_out[j] / a.E_out[j]) - th)
    checks["signal phase"] = max(abs(s) for s in shifts) < 1e-8

    vac = simulate(med, plan.schedule, SignalSpec(), small)
    checks["zero state"] = not np.any(vac.E_out) and not np.any(vac.spin_energy)

    spacing = _local_oscillation_spacing()
    checks["local oscillation"] = len(spacing) >= 2 and bool(np.all(np.abs(spacing - 1) <= 0.05))

    ok = report(13, all(checks.values()),
                f"dt change {rep.dt_rel_change:.2e}, n_z change {rep.nz_rel_change:.2e}, "
                f"lossless out/in {led.energy_out / led.energy_in:.6f}, linearity {max(lin):.1e}, "
                f"area spacing/2pi {np.round(spacing[:4], 4).tolist()}; "
                f"failed: {[k for k, v in checks.items() if not v]}")
    assert ok


# ----------------------------------------------------------------------- 14

MINIMAL = """\
[medium]
d = 13
gamma_e = 0.5
gamma_s = 0

[signal]
gauss peak=1 t0=1.6 fwhm=0.395

[control]
const rabi=7 from=0 to=20
"""

ERROR_CASES = [
    (MINIMAL.replace("const rabi=7 from=0 to=20", "gauss peak=1 area=2pi t0=2 fwhm=1"), "E_CONFLICT", 10),
    (MINIMAL.replace("fwhm=0.395", "fwhm=-3"), "E_RANGE", 7),
    (MINIMAL.replace("from=0 to=20", "from=20 to=0"), "E_RANGE", 10),
    (MINIMAL.replace("gamma_s = 0", "gamma_q = 0"), "E_UNKNOWN_KEY", 4),
    (MINIMAL.replace("[control]", "[controls]"), "E_UNKNOWN_KEY", 9),
    (MINIMAL.replace("d = 13", "d = 1.3.0"), "E_SYNTAX", 2),
    (MINIMAL.replace("[medium]\nd = 13\ngamma_e = 0.5\ngamma_s = 0\n", ""), "E_MISSING_SECTION", 6),
    (MINIMAL.replace("[signal]\ngauss peak=1 t0=1.6 fwhm=0.395\n", ""), "E_MISSING_SECTION", 8),
    (MINIMAL.replace("[control]\nconst rabi=7 from=0 to=20\n", ""), "E_MISSING_SECTION", 8),
]


def _mutate(rng, text: bytes) -> bytes:
    b = bytearray(text)
    for _ in range(int(rng.integers(1, 6))):
        op = int(rng.integers(0, 6))
        pos = int(rng.integers(0, len(b) + 1))
        if op == 0 and b:
            del b[min(pos, len(b) - 1)]
        elif op == 1:
            b[pos:pos] = bytes([int(rng.integers(0, 256))])
        elif op == 2 and b:
            b[min(pos, len(b) - 1)] = int(rng.choice(list(b"=[]#\" \n-.0123456789epiabcdz")))
        elif op == 3:
            lines = bytes(b).split(b"\n")
            i, j = rng.integers(0, len(lines), 2)
            lines[i], lines[j] = lines[j], lines[i]
            b = bytearray(b"\n".join(lines))
        elif op == 4:
            lines = bytes(b).split(b"\n")
            i = int(rng.integers(0, len(lines)))
            lines.insert(i, lines[int(rng.integers(0, len(lines)))])
            b = bytearray(b"\n".join(lines))
        else:
            b[pos:pos] = rng.choice([b"pi", b"deg", b"1e400", b"nan", b"[grid]", b"area=2pi",
                                     b"\xff\xfe", b"=", b"peak=-1", b"\r\n"])
    return bytes(b)


def test_acc14_parser():
    rng = np.random.default_rng(7)
    seeds = [p.read_bytes() for p in EXPERIMENTS] + [MINIMAL.encode()]
    crashes, valid = [], 0
    for i in range(10_000):
        if i % 5 == 0:
            data = rng.bytes(int(rng.integers(0, 400)))
        else:
            data = _mutate(rng, seeds[i % len(seeds)])
        try:
            parse(data)
            valid += 1
        except ExpFileError as e:
            if not (isinstance(e.line, int) and e.line >= 1 and e.token is not None):
                crashes.append((data, e))
        except Exception as e:  # anything else is a crash
            crashes.append((data, e))
    kinds_ok = True
    for text, kind, line in ERROR_CASES:
        try:
            parse(text)
            kinds_ok = False
        except ExpFileError as e:
            kinds_ok &= (e.kind, e.line) == (kind, line)
    rt_ok = True
    for p in EXPERIMENTS:
        spec = parse(p.read_text())
        text = serialize(spec)
        rt_ok &= parse(text) == spec and serialize(parse(text)) == text
    ok = report(14, not crashes and kinds_ok and rt_ok,
                f"fuzz: 10^4 inputs, {len(crashes)} crashes, {valid} parsed; error kinds/lines "
                f"{'ok' if kinds_ok else 'WRONG'}; exact round-trip of {len(EXPERIMENTS)} files "
                f"{'ok' if rt_ok else 'WRONG'}")
    assert ok, crashes[:3]
