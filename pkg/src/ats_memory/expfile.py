"""Line-oriented experiment description files (``.ats``).

Example::

    [units]
    mode = "gamma"

    [medium]
    d = 13
    gamma_e = 0.5
    gamma_s = 0

    [signal]
    gauss peak=1 t0=1.6 fwhm=0.395

    [control]
    const rabi=7 from=0 to=20

    [events]
    spinflip t=12

Values in the file are in the declared units: with ``mode = "physical"``
rates are MHz (omega/2pi) and times ns.  Parsed specs keep file units;
:func:`build` converts to Gamma units for the solver.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

from .core import (
    GAUSS_AREA_FACTOR,
    TWO_PI,
    ConstSegment,
    ControlSchedule,
    Direction,
    GaussianPulse,
    GaussSegment,
    MediumParams,
    SignalSpec,
    UnitMode,
    UnitSystem,
)
from .solver import SimGrid, TimedEvent, EventKind

SECTIONS = ("units", "medium", "signal", "control", "grid", "output", "events")
REQUIRED = ("medium", "signal", "control")
SIG_DIGITS = 9

_NUM = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_NUM_RE = re.compile(_NUM)
_ANGLE_RE = re.compile(rf"({_NUM})?(pi|deg)?")
_KEY_RE = re.compile(r"[a-z_][a-z0-9_]*")
_HEADER_RE = re.compile(r"\[([^\]]*)\]")
_KV_RE = re.compile(r"([^=\s]+)\s*=\s*(.*)")
_QUOTED_RE = re.compile(r'"([^"]*)"')


class ExpFileError(ValueError):
    def __init__(self, kind: str, line: int, token: str, message: str):
        super().__init__(f"{kind} at line {line}: {message} ({token!r})")
        self.kind = kind
        self.line = line
        self.token = token
        self.message = message


@dataclass(frozen=True)
class GridOverrides:
    n_z: int | None = None
    dt: float | None = None
    t_end: float | None = None


@dataclass(frozen=True)
class Outputs:
    traces_path: str | None = None
    summary_path: str | None = None


@dataclass(frozen=True)
class ExperimentSpec:
    medium: MediumParams
    signal: SignalSpec = field(default_factory=SignalSpec)
    control: ControlSchedule = field(default_factory=ControlSchedule)
    units: UnitSystem = field(default_factory=UnitSystem)
    grid: GridOverrides = field(default_factory=GridOverrides)
    events: tuple[TimedEvent, ...] = ()
    outputs: Outputs = field(default_factory=Outputs)


# ------------------------------------------------------------------ values

def parse_number(tok: str) -> float:
    if not _NUM_RE.fullmatch(tok):
        raise ValueError(tok)
    x = float(tok)
    if not math.isfinite(x):
        raise ValueError(tok)
    return x


def parse_angle(tok: str) -> float:
    """``1.5``, ``2pi``, ``pi``, ``-0.5pi`` or ``90deg``; bare numbers are radians."""
    m = _ANGLE_RE.fullmatch(tok)
    if not m or (m.group(1) is None and m.group(2) != "pi"):
        raise ValueError(tok)
    num = parse_number(m.group(1)) if m.group(1) is not None else 1.0
    if m.group(2) == "pi":
        return num * math.pi
    if m.group(2) == "deg":
        return math.radians(num)
    return num


def fmt_number(x: float) -> str:
    s = f"{x:.{SIG_DIGITS}g}"
    return "0" if s == "-0" else s


def fmt_angle(x: float) -> str:
    if x == 0:
        return "0"
    return fmt_number(x / math.pi) + "pi"


def _unit_scale(units: UnitSystem) -> float:
    """Omega * t per (rate unit * time unit) in the file's units."""
    return 1.0 if units.mode is UnitMode.GAMMA else TWO_PI * 1e-3


def peak_from_area(area: float, fwhm: float, units: UnitSystem) -> float:
    return area / (GAUSS_AREA_FACTOR * fwhm * _unit_scale(units))


# ------------------------------------------------------------------ parsing

class _Parser:
    def __init__(self, text: str):
        self.lines = text.split("\n")
        self.seen: dict[str, int] = {}
        self.kv: dict[str, dict[str, tuple[str, int]]] = {s: {} for s in SECTIONS}
        self.control: list[tuple[str, dict, int]] = []
        self.signal: list[tuple[str, dict, int]] = []
        self.events: list[tuple[str, dict, int]] = []

    def err(self, kind, line, token, msg):
        raise ExpFileError(kind, line, token, msg)

    def run(self) -> ExperimentSpec:
        section = None
        for no, raw in enumerate(self.lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("["):
                m = _HEADER_RE.fullmatch(line)
                if not m:
                    self.err("E_SYNTAX", no, line, "malformed section header")
                name = m.group(1).strip()
                if name not in SECTIONS:
                    self.err("E_UNKNOWN_KEY", no, name, "unknown section")
                if name in self.seen:
                    self.err("E_CONFLICT", no, name, "section given twice")
                self.seen[name] = no
                section = name
                continue
            if section is None:
                self.err("E_SYNTAX", no, line.split()[0], "content before the first section")
            if section in ("control", "signal", "events"):
                self._event_line(section, line, no)
            else:
                self._kv_line(section, line, no)
        # a trailing newline does not start another line
        n = len(self.lines) - (1 if self.lines and self.lines[-1] == "" else 0)
        last = max(1, n)
        for name in REQUIRED:
            if name not in self.seen:
                self.err("E_MISSING_SECTION", last, name, "required section missing")
        return self._assemble()

    def _kv_line(self, section, line, no):
        m = _KV_RE.fullmatch(line)
        if not m:
            self.err("E_SYNTAX", no, line, "expected 'key = value'")
        key, val = m.group(1), m.group(2).strip()
        if not _KEY_RE.fullmatch(key):
            self.err("E_SYNTAX", no, key, "keys are lowercase ASCII identifiers")
        if key not in _KV_KEYS[section]:
            self.err("E_UNKNOWN_KEY", no, key, f"unknown key in [{section}]")
        if key in self.kv[section]:
            self.err("E_CONFLICT", no, key, "key given twice")
        if not val:
            self.err("E_SYNTAX", no, key, "missing value")
        self.kv[section][key] = (val, no)

    def _event_line(self, section, line, no):
        parts = line.split()
        kind, rest = parts[0], parts[1:]
        allowed = _LINE_KINDS[section]
        if kind not in allowed:
            if _KEY_RE.fullmatch(kind):
                self.err("E_UNKNOWN_KEY", no, kind, f"unknown line kind in [{section}]")
            self.err("E_SYNTAX", no, kind, "expected a line kind")
        params: dict[str, str] = {}
        for p in rest:
            if p.count("=") != 1:
                self.err("E_SYNTAX", no, p, "expected key=value")
            k, v = p.split("=")
            if not _KEY_RE.fullmatch(k) or not v:
                self.err("E_SYNTAX", no, p, "expected key=value")
            if k not in allowed[kind][0] and k not in allowed[kind][1]:
                self.err("E_UNKNOWN_KEY", no, k, f"unknown parameter for '{kind}'")
            if k in params:
                self.err("E_CONFLICT", no, k, "parameter given twice")
            params[k] = v
        if kind == "gauss" and section == "control" and "peak" in params and "area" in params:
            self.err("E_CONFLICT", no, "area", "give either peak or area, not both")
        required = allowed[kind][0]
        if kind == "gauss" and section == "control" and "area" in params:
            required = tuple(r for r in required if r != "peak")
        for r in required:
            if r not in params:
                self.err("E_SYNTAX", no, kind, f"missing parameter '{r}'")
        getattr(self, section).append((kind, params, no))

    # values
    def _num(self, tok, no, key):
        try:
            return parse_number(tok)
        except ValueError:
            self.err("E_SYNTAX", no, tok, f"bad number for '{key}'")

    def _ang(self, tok, no, key):
        try:
            return parse_angle(tok)
        except ValueError:
            self.err("E_SYNTAX", no, tok, f"bad angle for '{key}'")

    def _str(self, tok, no, key):
        m = _QUOTED_RE.fullmatch(tok)
        if not m:
            self.err("E_SYNTAX", no, tok, f"'{key}' needs a quoted string")
        return m.group(1)

    def _get(self, section, key, conv, default=None):
        if key not in self.kv[section]:
            return default, None
        tok, no = self.kv[section][key]
        return conv(tok, no, key), no

    def _assemble(self) -> ExperimentSpec:
        # units
        mode_s, no = self._get("units", "mode", self._str, "gamma")
        try:
            mode = UnitMode(mode_s)
        except ValueError:
            self.err("E_RANGE", no, mode_s, "mode must be \"gamma\" or \"physical\"")
        gref, no = self._get("units", "gamma_ref", self._num)
        if gref is not None and not gref > 0:
            self.err("E_RANGE", no, self.kv["units"]["gamma_ref"][0], "gamma_ref must be positive")
        units = UnitSystem(mode) if gref is None else UnitSystem(mode, gref)

        # medium
        if "d" not in self.kv["medium"]:
            self.err("E_SYNTAX", self.seen["medium"], "d", "[medium] needs 'd'")
        vals = {}
        for key, default in (("d", None), ("gamma_e", 0.5), ("gamma_s", 0.0), ("length_l", 1.0),
                             ("broadening", 0.0)):
            v, no = self._get("medium", key, self._num, default)
            lower_ok = v > 0 if key == "length_l" else v >= 0
            if not lower_ok:
                self.err("E_RANGE", no, self.kv["medium"][key][0], f"'{key}' out of range")
            vals[key] = v
        dir_s, no = self._get("medium", "direction", self._str, "forward")
        try:
            direction = Direction(dir_s)
        except ValueError:
            self.err("E_RANGE", no, dir_s, "direction must be \"forward\" or \"backward\"")
        medium = MediumParams(vals["d"], vals["gamma_e"], vals["gamma_s"], vals["length_l"],
                              direction, vals["broadening"])

        # signal
        pulses = []
        for _, p, no in self.signal:
            t0 = self._num(p["t0"], no, "t0")
            fwhm = self._num(p["fwhm"], no, "fwhm")
            peak = self._num(p["peak"], no, "peak")
            phase = self._ang(p["phase"], no, "phase") if "phase" in p else 0.0
            if not fwhm > 0:
                self.err("E_RANGE", no, p["fwhm"], "fwhm must be positive")
            pulses.append(GaussianPulse(t0, fwhm, peak, phase))

        # control
        segs = []
        for kind, p, no in self.control:
            phase = self._ang(p["phase"], no, "phase") if "phase" in p else 0.0
            if kind == "const":
                rabi = self._num(p["rabi"], no, "rabi")
                a = self._num(p["from"], no, "from")
                b = self._num(p["to"], no, "to")
                if not b > a:
                    self.err("E_RANGE", no, p["to"], "need from < to")
                segs.append(ConstSegment(rabi, a, b, phase))
            else:
                t0 = self._num(p["t0"], no, "t0")
                fwhm = self._num(p["fwhm"], no, "fwhm")
                if not fwhm > 0:
                    self.err("E_RANGE", no, p["fwhm"], "fwhm must be positive")
                if "area" in p:
                    area = self._ang(p["area"], no, "area")
                    if not area > 0:
                        self.err("E_RANGE", no, p["area"], "area must be positive")
                    peak = peak_from_area(area, fwhm, units)
                    segs.append(GaussSegment(GaussianPulse(t0, fwhm, peak, phase), area))
                else:
                    peak = self._num(p["peak"], no, "peak")
                    segs.append(GaussSegment(GaussianPulse(t0, fwhm, peak, phase)))

        # grid
        nz, no = self._get("grid", "n_z", self._num)
        if nz is not None and (nz != int(nz) or nz < 2 or nz > 1e6):
            self.err("E_RANGE", no, self.kv["grid"]["n_z"][0], "n_z must be an integer >= 2")
        dt, no = self._get("grid", "dt", self._num)
        if dt is not None and not dt > 0:
            self.err("E_RANGE", no, self.kv["grid"]["dt"][0], "dt must be positive")
        t_end, no = self._get("grid", "t_end", self._num)
        if t_end is not None and not t_end > 0:
            self.err("E_RANGE", no, self.kv["grid"]["t_end"][0], "t_end must be positive")
        grid = GridOverrides(None if nz is None else int(nz), dt, t_end)

        # events
        events = []
        for _, p, no in self.events:
            t = self._num(p["t"], no, "t")
            if t < 0:
                self.err("E_RANGE", no, p["t"], "event time must be >= 0")
            if events and t < events[-1].t:
                self.err("E_RANGE", no, p["t"], "events must be in time order")
            events.append(TimedEvent(t, EventKind.SPIN_FLIP))

        traces, _ = self._get("output", "traces", self._str)
        summary, _ = self._get("output", "summary", self._str)
        return ExperimentSpec(medium, SignalSpec(pulses), ControlSchedule(segs), units, grid,
                              tuple(events), Outputs(traces, summary))


_KV_KEYS = {
    "units": ("mode", "gamma_ref"),
    "medium": ("d", "gamma_e", "gamma_s", "length_l", "direction", "broadening"),
    "grid": ("n_z", "dt", "t_end"),
    "output": ("traces", "summary"),
}
# line kind -> (required params, optional params)
_LINE_KINDS = {
    "control": {"const": (("rabi", "from", "to"), ("phase",)),
                "gauss": (("peak", "t0", "fwhm"), ("phase", "area"))},
    "signal": {"gauss": (("peak", "t0", "fwhm"), ("phase",))},
    "events": {"spinflip": (("t",), ())},
}


def parse(text: str | bytes) -> ExperimentSpec:
    """Parse an experiment file; every failure is an :class:`ExpFileError`."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            line = bytes(text)[: exc.start].count(b"\n") + 1
            raise ExpFileError("E_SYNTAX", line, repr(bytes(text)[exc.start:exc.start + 1]),
                               "invalid UTF-8") from None
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    return _Parser(text).run()


# ------------------------------------------------------------- serialization

def serialize(spec: ExperimentSpec) -> str:
    """Canonical text: fixed section order, sorted keys, 9 significant digits."""
    u, m = spec.units, spec.medium
    out = ["[units]"]
    # gamma_ref only matters in physical mode
    if u.mode is UnitMode.PHYSICAL:
        out.append(f"gamma_ref = {fmt_number(u.gamma_ref)}")
    out += [f'mode = "{u.mode.value}"', ""]
    med = {"broadening": fmt_number(m.broadening_delta_gamma_ats), "d": fmt_number(m.d),
           "direction": f'"{m.direction.value}"', "gamma_e": fmt_number(m.gamma_e),
           "gamma_s": fmt_number(m.gamma_s), "length_l": fmt_number(m.length_L)}
    out += ["[medium]"] + [f"{k} = {med[k]}" for k in sorted(med)] + [""]
    out.append("[signal]")
    for p in spec.signal.pulses:
        out.append(f"gauss fwhm={fmt_number(p.fwhm)} peak={fmt_number(p.peak)} "
                   f"phase={fmt_angle(p.phase)} t0={fmt_number(p.t0)}")
    out += ["", "[control]"]
    for s in spec.control.segments:
        if isinstance(s, ConstSegment):
            out.append(f"const from={fmt_number(s.t_start)} phase={fmt_angle(s.phase)} "
                       f"rabi={fmt_number(s.omega)} to={fmt_number(s.t_end)}")
        elif s.area is not None:
            p = s.pulse
            out.append(f"gauss area={fmt_angle(s.area)} fwhm={fmt_number(p.fwhm)} "
                       f"phase={fmt_angle(p.phase)} t0={fmt_number(p.t0)}")
        else:
            p = s.pulse
            out.append(f"gauss fwhm={fmt_number(p.fwhm)} peak={fmt_number(p.peak)} "
                       f"phase={fmt_angle(p.phase)} t0={fmt_number(p.t0)}")
    g = spec.grid
    grid = {k: v for k, v in (("dt", g.dt), ("n_z", g.n_z), ("t_end", g.t_end)) if v is not None}
    if grid:
        out += ["", "[grid]"] + [f"{k} = {fmt_number(grid[k])}" for k in sorted(grid)]
    o = spec.outputs
    outs = {k: v for k, v in (("summary", o.summary_path), ("traces", o.traces_path)) if v is not None}
    if outs:
        out += ["", "[output]"] + [f'{k} = "{outs[k]}"' for k in sorted(outs)]
    flips = [e for e in spec.events if e.kind is EventKind.SPIN_FLIP]
    if flips:
        out += ["", "[events]"] + [f"spinflip t={fmt_number(e.t)}" for e in flips]
    return "\n".join(out) + "\n"


def equivalent(a: ExperimentSpec, b: ExperimentSpec, rtol: float = 5e-9) -> bool:
    """Structural equality up to the 9-digit canonical precision."""

    def close(x, y):
        if isinstance(x, float) or isinstance(y, float):
            if x is None or y is None:
                return x is y
            return math.isclose(x, y, rel_tol=rtol, abs_tol=1e-300)
        return x == y

    def walk(x, y):
        if type(x) is not type(y):
            if isinstance(x, (int, float)) and isinstance(y, (int, float)):
                return close(float(x), float(y))
            return False
        if hasattr(x, "__dataclass_fields__"):
            return all(walk(getattr(x, f), getattr(y, f)) for f in x.__dataclass_fields__)
        if isinstance(x, tuple):
            return len(x) == len(y) and all(walk(p, q) for p, q in zip(x, y))
        if isinstance(x, float):
            return close(x, y)
        return x == y

    return walk(a, b)


# ------------------------------------------------------------ solver glue

@dataclass(frozen=True)
class SolverSetup:
    medium: MediumParams
    schedule: ControlSchedule
    signal: SignalSpec
    grid: SimGrid
    events: tuple[TimedEvent, ...]


def to_gamma_units(spec: ExperimentSpec) -> ExperimentSpec:
    """The same experiment with every quantity in Gamma units."""
    u = spec.units
    if u.mode is UnitMode.GAMMA:
        return spec
    m = spec.medium
    med = replace(m, gamma_e=u.rate(m.gamma_e), gamma_s=u.rate(m.gamma_s),
                  broadening_delta_gamma_ats=u.rate(m.broadening_delta_gamma_ats))
    sig = SignalSpec(GaussianPulse(u.time(p.t0), u.time(p.fwhm), p.peak, p.phase)
                     for p in spec.signal.pulses)
    segs = []
    for s in spec.control.segments:
        if isinstance(s, ConstSegment):
            segs.append(ConstSegment(u.rate(s.omega), u.time(s.t_start), u.time(s.t_end), s.phase))
        else:
            p = s.pulse
            segs.append(GaussSegment(GaussianPulse(u.time(p.t0), u.time(p.fwhm), u.rate(p.peak),
                                                   p.phase), s.area))
    g = spec.grid
    grid = GridOverrides(g.n_z, None if g.dt is None else u.time(g.dt),
                         None if g.t_end is None else u.time(g.t_end))
    events = tuple(TimedEvent(u.time(e.t), e.kind) for e in spec.events)
    return ExperimentSpec(med, sig, ControlSchedule(segs), UnitSystem(UnitMode.GAMMA, u.gamma_ref),
                          grid, events, spec.outputs)


def build(spec: ExperimentSpec) -> SolverSetup:
    """Solver inputs in Gamma units, with the grid filled in from the stability rule."""
    g = to_gamma_units(spec)
    n_z = g.grid.n_z or 200
    grid = SimGrid.auto(g.medium, g.control, g.signal, g.events, n_z=n_z, t_end=g.grid.t_end)
    if g.grid.dt is not None:
        n = max(1, int(math.ceil((grid.t_end - grid.t_start) / g.grid.dt - 1e-9)))
        grid = SimGrid(n_z, (grid.t_end - grid.t_start) / n, grid.t_end, grid.t_start)
    return SolverSetup(g.medium, g.control, g.signal, grid, g.events)


def from_plan(plan, medium: MediumParams, units: UnitSystem | None = None,
              grid: GridOverrides | None = None, outputs: Outputs | None = None) -> ExperimentSpec:
    """Experiment spec (Gamma units) for a protocol plan.

    Control on/off events are carried by the schedule itself; only spin
    flips are written as events.
    """
    flips = tuple(e for e in plan.events if e.kind is EventKind.SPIN_FLIP)
    return ExperimentSpec(medium, plan.signal, plan.schedule, units or UnitSystem(),
                          grid or GridOverrides(t_end=plan.t_end), flips, outputs or Outputs())
