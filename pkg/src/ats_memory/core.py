"""Units, domain types, pulse envelopes and pulse-area arithmetic.

Everything downstream works in Gamma units: the radiative decay rate of the
excited state is 1, times are in 1/Gamma and Rabi frequencies in Gamma.
:class:`UnitSystem` converts laboratory MHz (quoted as omega/2pi) and ns at the
boundary.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * math.pi
LN2 = math.log(2.0)
# integral of exp(-2 ln2 x^2) dx over the real line, per unit fwhm
GAUSS_AREA_FACTOR = math.sqrt(math.pi / (2.0 * LN2))
TIME_BANDWIDTH_PRODUCT = 0.44
TOTAL_DURATION_FACTOR = 2.25


class UnitMode(enum.Enum):
    GAMMA = "gamma"
    PHYSICAL = "physical"


class Direction(enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


@dataclass(frozen=True)
class UnitSystem:
    """Conversion between laboratory units and Gamma units.

    ``gamma_ref`` is Gamma in rad/s and only matters in physical mode.
    Physical rates are given as f = omega/2pi in MHz, physical times in ns.
    """

    mode: UnitMode = UnitMode.GAMMA
    gamma_ref: float = TWO_PI * 6.0666e6

    def __post_init__(self):
        if not self.gamma_ref > 0:
            raise ValueError("gamma_ref must be positive")

    @classmethod
    def physical(cls, gamma_mhz: float) -> "UnitSystem":
        """Physical units with Gamma/2pi = ``gamma_mhz`` MHz."""
        return cls(UnitMode.PHYSICAL, TWO_PI * gamma_mhz * 1e6)

    @property
    def gamma_mhz(self) -> float:
        return self.gamma_ref / TWO_PI / 1e6

    def rate(self, value: float) -> float:
        """Rate in file units -> Gamma units."""
        if self.mode is UnitMode.GAMMA:
            return value
        return TWO_PI * value * 1e6 / self.gamma_ref

    def rate_out(self, value: float) -> float:
        if self.mode is UnitMode.GAMMA:
            return value
        return value * self.gamma_ref / (TWO_PI * 1e6)

    def time(self, value: float) -> float:
        """Time in file units -> 1/Gamma."""
        if self.mode is UnitMode.GAMMA:
            return value
        return value * 1e-9 * self.gamma_ref

    def time_out(self, value: float) -> float:
        if self.mode is UnitMode.GAMMA:
            return value
        return value / (1e-9 * self.gamma_ref)


@dataclass(frozen=True)
class MediumParams:
    """Atomic ensemble. Rates in Gamma units; ``d`` is the peak intensity OD."""

    d: float
    gamma_e: float = 0.5
    gamma_s: float = 0.0
    length_L: float = 1.0
    direction: Direction = Direction.FORWARD
    broadening_delta_gamma_ats: float = 0.0

    def __post_init__(self):
        if self.d < 0:
            raise ValueError(f"optical depth must be >= 0, got {self.d}")
        if self.gamma_e < 0:
            raise ValueError(f"gamma_e must be >= 0, got {self.gamma_e}")
        if self.gamma_s < 0:
            raise ValueError(f"gamma_s must be >= 0, got {self.gamma_s}")
        if self.broadening_delta_gamma_ats < 0:
            raise ValueError("broadening must be >= 0")
        if not self.length_L > 0:
            raise ValueError("length_L must be positive")

    def coupling(self, c: float = 1.0) -> float:
        """Collective coupling g*sqrt(N) = sqrt(c d gamma_e / 2L)."""
        return math.sqrt(c * self.d * self.gamma_e / (2.0 * self.length_L))

    def propagation_coupling(self) -> float:
        """g*sqrt(N)*L/c, the dimensionless spatial coupling.

        Only the product with :meth:`coupling` is physical (d*gamma_e/2); both
        are normalised to sqrt(d*gamma_e/2) so that L and c drop out.
        """
        return math.sqrt(self.d * self.gamma_e / 2.0)


@dataclass(frozen=True)
class GaussianPulse:
    """Gaussian amplitude envelope with intensity FWHM ``fwhm``."""

    t0: float
    fwhm: float
    peak: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError(f"fwhm must be positive, got {self.fwhm}")

    def __call__(self, t):
        return envelope_eval(self, t)

    @property
    def area(self) -> float:
        return abs(self.peak) * GAUSS_AREA_FACTOR * self.fwhm


def envelope_eval(pulse: GaussianPulse, t):
    t = np.asarray(t, dtype=float)
    x = (t - pulse.t0) / pulse.fwhm
    val = pulse.peak * np.exp(-2.0 * LN2 * x * x) * np.exp(1j * pulse.phase)
    return val if val.ndim else complex(val)


def peak_for_area(area: float, fwhm: float) -> float:
    """Peak Rabi frequency of a gaussian with the given area."""
    if not fwhm > 0:
        raise ValueError("fwhm must be positive")
    return area / (GAUSS_AREA_FACTOR * fwhm)


@dataclass(frozen=True)
class ConstSegment:
    omega: float
    t_start: float
    t_end: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(
                f"const segment needs t_end > t_start ({self.t_start}, {self.t_end})"
            )

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        on = (t >= self.t_start) & (t < self.t_end)
        return np.where(on, self.omega * np.exp(1j * self.phase), 0.0 + 0.0j)

    def breakpoints(self) -> tuple[float, ...]:
        return (self.t_start, self.t_end)


@dataclass(frozen=True)
class GaussSegment:
    pulse: GaussianPulse
    # area the segment was specified with, if any (kept for serialization)
    area: float | None = None

    @classmethod
    def from_area(cls, area: float, t0: float, fwhm: float, phase: float = 0.0):
        return cls(GaussianPulse(t0, fwhm, peak_for_area(area, fwhm), phase), area)

    def __call__(self, t):
        return np.asarray(envelope_eval(self.pulse, t), dtype=complex)

    def breakpoints(self) -> tuple[float, ...]:
        return ()


Segment = Union[ConstSegment, GaussSegment]


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise control Rabi frequency; overlapping segments add coherently."""

    segments: tuple[Segment, ...] = ()

    def __init__(self, segments: Iterable[Segment] = ()):
        object.__setattr__(self, "segments", tuple(segments))

    def __call__(self, t):
        return self.evaluate(t)

    def evaluate(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.zeros(t_arr.shape, dtype=complex)
        for seg in self.segments:
            out = out + seg(t_arr)
        return out if out.ndim else complex(out)

    def with_phase_offset(self, theta: float) -> "ControlSchedule":
        segs = []
        for seg in self.segments:
            if isinstance(seg, ConstSegment):
                segs.append(ConstSegment(seg.omega, seg.t_start, seg.t_end, seg.phase + theta))
            else:
                p = seg.pulse
                segs.append(GaussSegment(GaussianPulse(p.t0, p.fwhm, p.peak, p.phase + theta), seg.area))
        return ControlSchedule(segs)

    def gauss_pulses(self) -> list[GaussianPulse]:
        return [s.pulse for s in self.segments if isinstance(s, GaussSegment)]

    def max_abs(self, t_from: float, t_to: float, n: int = 4001) -> float:
        """Max |Omega| over a window (sampled, plus every segment peak)."""
        ts = list(np.linspace(t_from, t_to, n))
        for seg in self.segments:
            if isinstance(seg, GaussSegment) and t_from <= seg.pulse.t0 <= t_to:
                ts.append(seg.pulse.t0)
            elif isinstance(seg, ConstSegment):
                ts.extend(x for x in (seg.t_start, seg.t_end - 1e-12) if t_from <= x <= t_to)
        if not self.segments:
            return 0.0
        return float(np.max(np.abs(self.evaluate(np.array(ts)))))

    def breakpoints(self) -> list[float]:
        pts = set()
        for seg in self.segments:
            pts.update(seg.breakpoints())
        return sorted(pts)


@dataclass(frozen=True)
class SignalSpec:
    """Superposition of gaussian input pulses; empty means vacuum."""

    pulses: tuple[GaussianPulse, ...] = ()

    def __init__(self, pulses: Iterable[GaussianPulse] = ()):
        object.__setattr__(self, "pulses", tuple(pulses))

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.zeros(t_arr.shape, dtype=complex)
        for p in self.pulses:
            out = out + envelope_eval(p, t_arr)
        return out if out.ndim else complex(out)

    def scaled(self, k: complex) -> "SignalSpec":
        """Multiply every pulse amplitude by the complex factor ``k``."""
        mag, ph = cmath.polar(complex(k))
        return SignalSpec(GaussianPulse(p.t0, p.fwhm, p.peak * mag, p.phase + ph) for p in self.pulses)


def pulse_area(schedule: ControlSchedule, t_from: float, t_to: float) -> float:
    """Integral of |Omega_c(t)| over [t_from, t_to]."""
    if t_to < t_from:
        raise ValueError(f"reversed window: t_from={t_from} > t_to={t_to}")
    if t_to == t_from or not schedule.segments:
        return 0.0
    pts = [t_from]
    pts += [b for b in schedule.breakpoints() if t_from < b < t_to]
    pts.append(t_to)
    # gaussian centres and +-fwhm marks help adaptive quadrature find narrow pulses
    for p in schedule.gauss_pulses():
        for x in (p.t0 - 2 * p.fwhm, p.t0 - p.fwhm, p.t0, p.t0 + p.fwhm, p.t0 + 2 * p.fwhm):
            if t_from < x < t_to:
                pts.append(x)
    pts = sorted(set(pts))
    total = 0.0
    f = lambda t: abs(schedule.evaluate(t))  # noqa: E731
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=200)
        total += val
    return total


def bandwidth_to_time(b_fwhm: float) -> float:
    """Intensity FWHM duration of a transform-limited gaussian of bandwidth ``b_fwhm``."""
    if not b_fwhm > 0:
        raise ValueError(f"bandwidth must be positive, got {b_fwhm}")
    return TIME_BANDWIDTH_PRODUCT / b_fwhm


def time_to_bandwidth(tau_fwhm: float) -> float:
    if not tau_fwhm > 0:
        raise ValueError(f"duration must be positive, got {tau_fwhm}")
    return TIME_BANDWIDTH_PRODUCT / tau_fwhm


def total_duration(tau_fwhm: float) -> float:
    """Conventional full duration of a pulse, 2.25 x its FWHM."""
    return TOTAL_DURATION_FACTOR * tau_fwhm


@dataclass(frozen=True)
class EffectiveParams:
    gamma_e_eff: float
    d_eff: float
    F_eff: float


def effective_params(gamma_exp: float, delta_gamma_ats: float, d_exp: float,
                     omega_c: float = 0.0) -> EffectiveParams:
    """Fold ATS line broadening into a larger polarization decay rate.

    ``gamma_exp`` is Gamma_exp/2 (the bare optical coherence decay rate).
    """
    if min(gamma_exp, delta_gamma_ats, d_exp, omega_c) < 0:
        raise ValueError("rates and optical depth must be non-negative")
    g_eff = (2.0 * gamma_exp + 2.0 * delta_gamma_ats) / 2.0
    if g_eff == 0:
        raise ValueError("effective decay rate is zero")
    d_eff = d_exp * gamma_exp / g_eff
    return EffectiveParams(g_eff, d_eff, omega_c / (2.0 * g_eff))
