"""Weak-probe absorption spectra of the driven Lambda system and ATS fits."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.optimize import curve_fit
from scipy.signal import find_peaks

from .core import MediumParams
from .solver import STABILITY_SAFETY, _field, _rhs

NOISE_FLOOR = 0.02
# sweep rate (Gamma^2) above which a swept spectrum is flagged non-adiabatic
ADIABATIC_RATE = 0.1


class SingleLine(ValueError):
    """Fewer than two resolvable absorption peaks."""


class SpectrumMode(enum.Enum):
    CLOSED = "closed"
    SWEPT = "swept"


@dataclass
class Spectrum:
    detunings: np.ndarray
    od: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.od = np.asarray(self.od, dtype=float)
        if self.detunings.shape != self.od.shape or self.od.ndim != 1:
            raise ValueError("detunings and od must be 1-D arrays of equal length")
        if not np.all(np.isfinite(self.od)):
            raise ValueError("od must be finite")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("detuning", "od"))
        for x, y in zip(self.detunings, self.od):
            w.writerow((f"{x:.9g}", f"{y:.9g}"))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, measured: bool = True) -> "Spectrum":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["detuning", "od"]:
            raise ValueError("spectrum CSV must start with header 'detuning,od'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float).reshape(-1, 2)
        sp = cls(data[:, 0], data[:, 1])
        floor = -0.05 if measured else 0.0
        if np.any(sp.od < floor):
            raise ValueError(f"od below {floor}")
        return sp


def susceptibility_od(delta, d: float, gamma_e: float, gamma_s: float, omega_c: float):
    """Weak-probe optical depth of the resonantly driven Lambda system.

    od = d Re[gamma_e (gamma_s - i delta) / ((gamma_e - i delta)(gamma_s - i delta) + Omega^2/4)]
    """
    if not gamma_e > 0:
        raise ValueError("gamma_e must be positive")
    x = np.asarray(delta, dtype=float)
    if omega_c == 0:
        # bare two-level line; avoids 0/0 at the two-photon resonance when gamma_s = 0
        chi = gamma_e / (gamma_e - 1j * x)
    else:
        two = gamma_s - 1j * x
        chi = gamma_e * two / ((gamma_e - 1j * x) * two + 0.25 * omega_c ** 2)
    out = d * chi.real
    return out if out.ndim else float(out)


def _steady_transmission(medium: MediumParams, omega_c: float, detunings: np.ndarray,
                         n_z: int, ramp: float, t_hold: float) -> np.ndarray:
    """|E_out/E_in|^2 after a CW probe has been on long enough, per detuning.

    All detunings are integrated together as a leading array axis.  The probe
    is switched on with a raised-cosine ramp of length ``ramp``.
    """
    k = medium.propagation_coupling()
    ge, gs = medium.gamma_e, medium.gamma_s
    dz = 1.0 / (n_z - 1)
    limits = [1.0 / ge, ramp]
    if omega_c:
        limits.append(1.0 / abs(omega_c))
    dmax = float(np.max(np.abs(detunings))) if len(detunings) else 0.0
    if dmax:
        limits.append(1.0 / dmax)
    dt = STABILITY_SAFETY * min(limits)
    t_end = ramp + t_hold
    n = int(math.ceil(t_end / dt))
    dt = t_end / n
    # the closed form uses (gamma - i delta); the solver term is -i det
    det = -np.asarray(detunings, dtype=float)[:, None]
    P = np.zeros((len(detunings), n_z), dtype=complex)
    S = np.zeros_like(P)

    def probe(t):
        return 0.5 * (1 - math.cos(math.pi * t / ramp)) if t < ramp else 1.0

    for i in range(n):
        t = i * dt
        e0, eh, e1 = probe(t), probe(t + 0.5 * dt), probe(t + dt)
        k1P, k1S = _rhs(P, S, e0, omega_c, k, dz, ge, gs, det)
        k2P, k2S = _rhs(P + 0.5 * dt * k1P, S + 0.5 * dt * k1S, eh, omega_c, k, dz, ge, gs, det)
        k3P, k3S = _rhs(P + 0.5 * dt * k2P, S + 0.5 * dt * k2S, eh, omega_c, k, dz, ge, gs, det)
        k4P, k4S = _rhs(P + dt * k3P, S + dt * k3S, e1, omega_c, k, dz, ge, gs, det)
        P = P + (dt / 6.0) * (k1P + 2 * k2P + 2 * k3P + k4P)
        S = S + (dt / 6.0) * (k1S + 2 * k2S + 2 * k3S + k4S)
    E_out = _field(P, np.ones(len(detunings)), k, dz)[:, -1]
    return np.abs(E_out) ** 2


def settle_time(gamma_e: float, gamma_s: float, omega_c: float, detunings,
                tol: float = 1e-7, cap: float = 4000.0) -> float:
    """Time for the slowest local transient to fall below ``tol``."""
    rates = []
    for x in np.atleast_1d(detunings):
        m = np.array([[-(gamma_e - 1j * x), 0.5j * omega_c],
                      [0.5j * omega_c, -(gamma_s - 1j * x)]])
        rates.append(np.min(-np.linalg.eigvals(m).real))
    slow = max(min(rates), 1.0 / cap)
    return min(-math.log(tol) / slow, cap)


def swept_probe_spectrum(medium: MediumParams, omega_c: float, detunings,
                         mode: SpectrumMode = SpectrumMode.CLOSED, *,
                         sweep_duration: float | None = None, n_z: int = 60,
                         ramp: float = 10.0) -> Spectrum:
    """Absorption spectrum od = ln(P_in/P_out) on a detuning grid (Gamma units).

    CLOSED evaluates :func:`susceptibility_od`.  SWEPT propagates a CW probe
    through the Maxwell-Bloch solver with a detuning term on the optical and
    spin coherences; a slow chirp is the staircase of these steady states, so
    each grid point is an independent simulation.  ``sweep_duration`` is the
    time a real chirp would take over the grid; a rate above ADIABATIC_RATE
    is recorded as a warning in the metadata.
    """
    x = np.asarray(detunings, dtype=float)
    meta = {"mode": SpectrumMode(mode).value}
    if sweep_duration is not None and len(x) > 1:
        rate = float(np.ptp(x)) / sweep_duration
        meta["sweep_rate"] = rate
        if rate > ADIABATIC_RATE:
            meta["warning"] = f"non-adiabatic sweep: rate {rate:.3g} Gamma^2"
    if SpectrumMode(mode) is SpectrumMode.CLOSED:
        od = susceptibility_od(x, medium.d, medium.gamma_e, medium.gamma_s, omega_c)
        return Spectrum(x, np.atleast_1d(od), meta)
    hold = settle_time(medium.gamma_e, medium.gamma_s, omega_c, x)
    if hold >= 4000.0:
        meta["warning"] = "steady state not reached within the hold time"
    trans = _steady_transmission(medium, omega_c, x, n_z, ramp, hold)
    meta["hold_time"] = hold
    return Spectrum(x, -np.log(np.maximum(trans, 1e-300)), meta)


# -------------------------------------------------------------------- fitting

@dataclass(frozen=True)
class AtsFit:
    delta_A: float
    widths: tuple[float, float]
    peak_ods: tuple[float, float]
    centers: tuple[float, float]
    residual_rms: float


def _lorentz(x, h, c, w):
    return h / (1.0 + (2.0 * (x - c) / w) ** 2)


def _two_lorentz(x, h1, c1, w1, h2, c2, w2):
    return _lorentz(x, h1, c1, w1) + _lorentz(x, h2, c2, w2)


def _rough_fwhm(x, y, j) -> float:
    half = 0.5 * y[j]
    lo = j
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = j
    while hi < len(y) - 1 and y[hi] > half:
        hi += 1
    return max(float(x[hi] - x[lo]), float(np.min(np.diff(x))) * 2)


def fit_ats(spectrum: Spectrum, smooth: int = 5) -> AtsFit:
    """Two-Lorentzian least-squares fit of an Autler-Townes doublet.

    Peaks are the two highest local maxima of the ``smooth``-point moving
    average that clear NOISE_FLOOR * max(od); each is fitted within +-2 of
    its rough FWHM before a joint refinement.
    """
    x, y = spectrum.detunings, spectrum.od
    order = np.argsort(x)
    x, y = x[order], y[order]
    if len(x) < 7:
        raise SingleLine("spectrum too short to resolve a doublet")
    ys = uniform_filter1d(y, size=smooth, mode="nearest")
    top = float(np.max(ys))
    if top <= 0:
        raise SingleLine("no absorption")
    idx, props = find_peaks(ys, height=NOISE_FLOOR * top, prominence=NOISE_FLOOR * top)
    if len(idx) < 2:
        raise SingleLine(f"found {len(idx)} resolvable peak(s)")
    best = idx[np.argsort(props["peak_heights"])[-2:]]
    best.sort()
    p0 = []
    for j in best:
        w = _rough_fwhm(x, ys, j)
        m = np.abs(x - x[j]) <= 2 * w
        try:
            pj, _ = curve_fit(_lorentz, x[m], y[m], p0=(y[j], x[j], w), maxfev=5000)
        except RuntimeError:
            pj = (y[j], x[j], w)
        p0.extend(pj)
    w1, w2 = abs(p0[2]), abs(p0[5])
    m = (x >= p0[1] - 2 * w1) & (x <= p0[4] + 2 * w2)
    try:
        p, _ = curve_fit(_two_lorentz, x[m], y[m], p0=p0, maxfev=20000)
    except RuntimeError as exc:
        raise SingleLine(f"doublet fit failed: {exc}") from exc
    h1, c1, w1, h2, c2, w2 = p
    if c2 < c1:
        h1, c1, w1, h2, c2, w2 = h2, c2, w2, h1, c1, w1
    resid = float(np.sqrt(np.mean((y[m] - _two_lorentz(x[m], *p)) ** 2)))
    return AtsFit(float(c2 - c1), (abs(float(w1)), abs(float(w2))), (float(h1), float(h2)),
                  (float(c1), float(c2)), resid)


@dataclass(frozen=True)
class CalibrationCurve:
    alpha: float
    samples: tuple[tuple[float, float], ...]
    residual_rms: float

    def predict(self, power):
        return self.alpha * np.sqrt(power)


def fit_alpha(samples: Sequence[tuple[float, float]]) -> CalibrationCurve:
    """Least-squares slope of delta_A against sqrt(P) through the origin."""
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len(arr) < 1:
        raise ValueError("need samples")
    if np.any(arr[:, 0] < 0):
        raise ValueError("powers must be >= 0")
    r = np.sqrt(arr[:, 0])
    if not np.any(r > 0):
        raise ValueError("degenerate calibration: no nonzero power")
    if len(arr) >= 2 and np.ptp(arr[:, 0]) == 0:
        raise ValueError("degenerate calibration: all powers equal")
    alpha = float(np.dot(r, arr[:, 1]) / np.dot(r, r))
    if not alpha > 0:
        raise ValueError("fitted alpha is not positive")
    resid = float(np.sqrt(np.mean((arr[:, 1] - alpha * r) ** 2)))
    return CalibrationCurve(alpha, tuple(map(tuple, arr.tolist())), resid)
