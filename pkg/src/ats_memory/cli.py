"""Command-line entry point: ``ats-sim run|sweep|spectrum|analyze``.

Exit codes: 0 success, 1 bad usage, 2 unreadable/invalid input,
3 numerical failure, 4 every sweep row failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np
from scipy.signal import find_peaks, peak_widths

from . import analysis, expfile, spectroscopy
from .core import Direction, MediumParams
from .efficiency_model import Engine, SweepSpec, sweep, sweep_csv
from .solver import SimGrid, SolverError, simulate

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC, EXIT_ALL_FAILED = 0, 1, 2, 3, 4

TRACE_COLUMNS = ("t", "E_in_re", "E_in_im", "E_out_re", "E_out_im", "S2_probe_near",
                 "S2_probe_far", "P2_probe_near", "P2_probe_far", "omega_c_re", "omega_c_im")


def atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _warn(msg: str) -> None:
    print(msg, file=sys.stderr)


def _f(x: float) -> str:
    return f"{x:.9g}"


# ------------------------------------------------------------------ windows

def infer_windows(t: np.ndarray, omega: np.ndarray, e_in: np.ndarray) -> dict:
    """Analysis windows guessed from the control and input traces.

    Two or more control pulses: the first writes, the rest read; recall
    windows run between midpoints of consecutive pulses.  Constant control:
    recalls every 2pi/Omega after the input peak, shifted by any off period.
    """
    t = np.asarray(t, dtype=float)
    t_lo, t_hi = float(t[0]), float(t[-1])
    win = {"input": (t_lo, t_hi)}
    a2 = np.abs(omega) ** 2
    if not np.any(a2 > 0):
        win["transmitted"] = (t_lo, t_hi)
        return win
    top = a2.max()
    idx, props = find_peaks(np.concatenate(([0.0], a2, [0.0])), prominence=0.02 * top)
    idx = idx - 1
    if len(idx) >= 2:
        w = peak_widths(np.concatenate(([0.0], a2, [0.0])), idx + 1, rel_height=0.5)[0]
        dt = float(t[1] - t[0])
        fwhm = w * dt
        centres = t[idx]
        half = 3.0 * max(float(fwhm.max()), _fwhm(t, e_in) or 0.0)
        win["transmitted"] = (t_lo, 0.5 * (centres[0] + centres[1]))
        for k in range(1, len(centres)):
            lo = 0.5 * (centres[k - 1] + centres[k])
            hi = 0.5 * (centres[k] + centres[k + 1]) if k + 1 < len(centres) else \
                min(t_hi, centres[k] + half)
            win[f"recall_{k}"] = (float(lo), float(hi))
        return win
    on = a2 > 1e-12 * top
    om0 = float(np.median(np.abs(omega[on])))
    t_delay = 2.0 * math.pi / om0
    t0 = float(t[int(np.argmax(np.abs(e_in)))]) if np.any(e_in != 0) else t_lo
    edges = np.flatnonzero(np.diff(on.astype(int)))
    gap = 0.0
    offs = [i for i in edges if on[i] and not on[i + 1]]
    ons = [i for i in edges if not on[i] and on[i + 1]]
    if offs and ons and ons[0] > offs[0]:
        gap = float(t[ons[0] + 1] - t[offs[0] + 1])
    win["transmitted"] = (t_lo, min(t_hi, t0 + 0.5 * t_delay))
    k = 1
    while t0 + (k + 0.5) * t_delay + gap <= t_hi + 1e-12:
        win[f"recall_{k}"] = (t0 + (k - 0.5) * t_delay + gap, t0 + (k + 0.5) * t_delay + gap)
        k += 1
        if gap:
            break
    return win


def _fwhm(t, e):
    y = np.abs(e) ** 2
    return analysis._half_max_width(np.asarray(t), y) if np.any(y > 0) else None


def parse_windows(spec: str) -> dict:
    """``name:a:b,name:a:b`` -> {name: (a, b)}."""
    out = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        name, a, b = part.split(":")
        out[name.strip()] = (float(a), float(b))
    return out


# ---------------------------------------------------------------------- run

def trace_rows(res, units, dt_output: float | None) -> str:
    """Traces resampled on k * dt_output, k = 0 .. floor(t_end / dt_output)."""
    t = res.t
    t_file = np.array([units.time_out(x) for x in t])
    if dt_output is None:
        dt_output = units.time_out(res.grid.dt)
    n_rows = int(math.floor(t_file[-1] / dt_output + 1e-9)) + 1
    ts = dt_output * np.arange(n_rows)

    def interp(y):
        y = np.asarray(y)
        if np.iscomplexobj(y):
            return np.interp(ts, t_file, y.real) + 1j * np.interp(ts, t_file, y.imag)
        return np.interp(ts, t_file, y)

    e_in, e_out = interp(res.E_in), interp(res.E_out)
    s2 = [interp(res.S2_probe[:, j]) for j in range(2)]
    p2 = [interp(res.P2_probe[:, j]) for j in range(2)]
    om = interp(res.omega_c)
    if units.mode.value == "physical":
        om = om * units.rate_out(1.0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for i in range(n_rows):
        w.writerow([_f(ts[i]), _f(e_in[i].real), _f(e_in[i].imag), _f(e_out[i].real),
                    _f(e_out[i].imag), _f(s2[0][i]), _f(s2[1][i]), _f(p2[0][i]), _f(p2[1][i]),
                    _f(om[i].real), _f(om[i].imag)])
    return buf.getvalue()


def cmd_run(args) -> int:
    try:
        raw = Path(args.file).read_bytes()
    except OSError as exc:
        _warn(f"error: cannot read {args.file}: {exc}")
        return EXIT_INPUT
    try:
        spec = expfile.parse(raw)
    except expfile.ExpFileError as exc:
        _warn(f"error: {exc}")
        return EXIT_INPUT
    try:
        setup = expfile.build(spec)
        grid = setup.grid
        if args.dt is not None:
            dt = spec.units.time(args.dt)
            n = max(1, int(math.ceil((grid.t_end - grid.t_start) / dt - 1e-9)))
            grid = SimGrid(grid.n_z, (grid.t_end - grid.t_start) / n, grid.t_end, grid.t_start)
        res = simulate(setup.medium, setup.schedule, setup.signal, grid, setup.events,
                       scheme="euler" if args.euler else "rk4")
        windows = infer_windows(res.t, res.omega_c, res.E_in)
        met = analysis.result_metrics(res, windows)
    except (SolverError, ValueError, FloatingPointError) as exc:
        _warn(f"error: numerical failure: {exc}")
        return EXIT_NUMERIC
    out = Path(args.out)
    traces = trace_rows(res, spec.units, args.dt_output)
    led = res.ledger
    summary = met.to_dict()
    summary["ledger"] = {"energy_in": led.energy_in, "energy_out": led.energy_out,
                         "energy_stored_final": led.energy_stored_final,
                         "energy_decayed": led.energy_decayed,
                         "balance_error": led.balance_error}
    summary["digest"] = res.digest
    summary["scheme"] = res.scheme
    summary["units"] = "gamma"
    summary["grid"] = {"n_z": grid.n_z, "dt": grid.dt, "t_end": grid.t_end}
    text = json.dumps(summary, indent=2, sort_keys=True, default=analysis._json_default)
    traces_path = out / (spec.outputs.traces_path or "traces.csv")
    summary_path = out / (spec.outputs.summary_path or "summary.json")
    atomic_write(traces_path, traces)
    atomic_write(summary_path, text + "\n")
    print(json.dumps({"traces": str(traces_path), "summary": str(summary_path),
                      "efficiencies": met.efficiency}, sort_keys=True))
    return EXIT_OK


# -------------------------------------------------------------------- sweep

def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:step`` (stop included when on the grid)."""
    text = text.strip()
    if ":" in text:
        a, b, s = (float(x) for x in text.split(":"))
        if s <= 0 or b < a:
            raise ValueError(f"bad range {text!r}")
        n = int(math.floor((b - a) / s + 1e-9))
        return [a + i * s for i in range(n + 1)]
    vals = [float(x) for x in text.split(",") if x.strip()]
    if not vals:
        raise ValueError("empty list")
    return vals


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("ATS_SIM_JOBS", "1")))
    except ValueError:
        return 1


def cmd_sweep(args) -> int:
    try:
        ds, Fs = parse_grid(args.d), parse_grid(args.F)
        spec = SweepSpec(tuple(ds), tuple(Fs),
                         Direction.FORWARD if args.direction == "fwd" else Direction.BACKWARD,
                         Engine(args.engine), args.jobs, args.n_z)
    except ValueError as exc:
        _warn(f"error: {exc}")
        return EXIT_INPUT
    rows = sweep(spec, jobs=args.jobs)
    text = sweep_csv(rows)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if not r.ok]
    for r in failed:
        _warn(f"warning: cell d={r.d:g} F={r.F:g}: {r.status}")
    return EXIT_ALL_FAILED if len(failed) == len(rows) else EXIT_OK


# ----------------------------------------------------------------- spectrum

def parse_range(text: str) -> np.ndarray:
    a, b, n = text.split(":")
    n = int(n)
    if n < 2:
        raise ValueError("need at least 2 points")
    return np.linspace(float(a), float(b), n)


def cmd_spectrum(args) -> int:
    try:
        x = parse_range(args.range)
        med = MediumParams(args.d, args.gamma_e, args.gamma_s)
        sp = spectroscopy.swept_probe_spectrum(med, args.omega_c, x,
                                               spectroscopy.SpectrumMode(args.mode))
    except ValueError as exc:
        _warn(f"error: {exc}")
        return EXIT_INPUT
    summary = {"mode": args.mode, "points": len(x)}
    if "warning" in sp.metadata:
        _warn(f"warning: {sp.metadata['warning']}")
    if args.fit:
        try:
            f = spectroscopy.fit_ats(sp)
            summary["fit"] = {"delta_A": f.delta_A, "widths": list(f.widths),
                              "peak_ods": list(f.peak_ods), "residual_rms": f.residual_rms}
        except spectroscopy.SingleLine as exc:
            _warn(f"warning: SingleLine: {exc}")
    if args.out:
        atomic_write(args.out, sp.to_csv())
        if "fit" in summary:
            atomic_write(str(args.out) + ".fit.json",
                         json.dumps(summary["fit"], indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(sp.to_csv())
        return EXIT_OK
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------------ analyze

def read_traces(path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != TRACE_COLUMNS:
        raise ValueError("trace CSV header does not match the schema")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(TRACE_COLUMNS) or len(data) < 2:
        raise ValueError("trace CSV has wrong shape")
    return {c: data[:, i] for i, c in enumerate(TRACE_COLUMNS)}


def _read_pairs(path, header) -> list[tuple[float, float]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if rows and [c.strip() for c in rows[0]] == list(header):
        rows = rows[1:]
    return [(float(a), float(b)) for a, b in rows]


def cmd_analyze(args) -> int:
    try:
        tr = read_traces(args.traces)
        e_in = tr["E_in_re"] + 1j * tr["E_in_im"]
        e_out = tr["E_out_re"] + 1j * tr["E_out_im"]
        om = tr["omega_c_re"] + 1j * tr["omega_c_im"]
        windows = parse_windows(args.windows) if args.windows else infer_windows(tr["t"], om, e_in)
        met = analysis.metrics(tr["t"], e_in, e_out, windows)
        vis_pts = _read_pairs(args.visibility, ("theta", "intensity")) if args.visibility else None
        dec_pts = _read_pairs(args.decay, ("T", "efficiency")) if args.decay else None
    except (OSError, ValueError, KeyError) as exc:
        _warn(f"error: {exc}")
        return EXIT_INPUT
    out = met.to_dict()
    f_in = met.fwhm.get("input")
    f_rec = met.fwhm.get("recall_1")
    if f_in and f_rec:
        out["compression"] = f_in / f_rec
    try:
        if vis_pts is not None:
            v = analysis.visibility(vis_pts)
            out["visibility"] = {"visibility": v.visibility, "phase_offset": v.phase_offset,
                                 "fit_residual": v.fit_residual, "constant": v.constant}
        if dec_pts is not None:
            d = analysis.decay_fit(dec_pts)
            out["decay"] = {"T_d": None if math.isinf(d.T_d) else d.T_d,
                            "amplitude": d.amplitude, "residual": d.residual,
                            "no_decay": d.no_decay}
    except analysis.AnalysisError as exc:
        _warn(f"error: {exc}")
        return EXIT_INPUT
    text = json.dumps(out, indent=2, sort_keys=True, default=analysis._json_default) + "\n"
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ats-sim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate an experiment file")
    r.add_argument("file")
    r.add_argument("--out", default=".", help="output directory")
    r.add_argument("--dt-output", type=float, default=None,
                   help="trace sampling step in file time units")
    r.add_argument("--dt", type=float, default=None, help="override the solver step")
    r.add_argument("--euler", action="store_true", help="forward Euler instead of RK4")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="efficiency over a (d, F) grid")
    s.add_argument("--d", required=True, help="list a,b,c or range start:stop:step")
    s.add_argument("--F", required=True)
    s.add_argument("--direction", choices=("fwd", "bwd"), default="fwd")
    s.add_argument("--engine", choices=("analytic", "solver", "both"), default="both")
    s.add_argument("--jobs", type=int, default=default_jobs())
    s.add_argument("--n-z", type=int, default=200)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("spectrum", help="probe absorption spectrum")
    sp.add_argument("--d", type=float, required=True)
    sp.add_argument("--gamma-e", type=float, default=0.5)
    sp.add_argument("--gamma-s", type=float, default=0.0)
    sp.add_argument("--omega-c", type=float, required=True)
    sp.add_argument("--range", required=True, help="A:B:N detuning grid")
    sp.add_argument("--mode", choices=("closed", "swept"), default="closed")
    sp.add_argument("--fit", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spectrum)

    a = sub.add_parser("analyze", help="metrics from a trace CSV")
    a.add_argument("traces")
    a.add_argument("--windows", help="name:a:b,name:a:b")
    a.add_argument("--visibility", help="CSV of theta,intensity")
    a.add_argument("--decay", help="CSV of T,efficiency")
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
