"""Figures of merit from time traces: energies, widths, visibility, decay."""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .core import LN2

EFFICIENCY_SLACK = 1e-6
# relative disagreement above which both FWHM estimates are reported
FWHM_DISAGREEMENT = 0.05


class AnalysisError(ValueError):
    pass


@dataclass
class TraceMetrics:
    window_energies: dict[str, float]
    fwhm: dict[str, float | None]
    peak_times: dict[str, float | None]
    efficiency: dict[str, float]
    # gaussian-fit widths, present only where they disagree with the crossing estimate
    fwhm_gauss: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        windows = {}
        for name in self.window_energies:
            entry = {"energy": self.window_energies[name], "fwhm": self.fwhm.get(name),
                     "peak_time": self.peak_times.get(name)}
            if name in self.fwhm_gauss:
                entry["fwhm_gauss"] = self.fwhm_gauss[name]
            windows[name] = entry
        return {"windows": windows, "efficiencies": dict(self.efficiency)}

    def to_json(self, **extra) -> str:
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True, allow_nan=False, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _half_max_width(t: np.ndarray, y: np.ndarray) -> float | None:
    """Full width at half maximum from linearly interpolated crossings."""
    if len(y) < 3:
        return None
    j = int(np.argmax(y))
    half = 0.5 * y[j]
    if half <= 0:
        return None
    left = np.flatnonzero(y[:j] < half)
    right = np.flatnonzero(y[j:] < half)
    if len(left) == 0 or len(right) == 0:
        return None
    i0 = left[-1]
    i1 = j + right[0]
    tl = t[i0] + (half - y[i0]) * (t[i0 + 1] - t[i0]) / (y[i0 + 1] - y[i0])
    tr = t[i1 - 1] + (half - y[i1 - 1]) * (t[i1] - t[i1 - 1]) / (y[i1] - y[i1 - 1])
    return float(tr - tl)


def _gauss_intensity(t, a, t0, w):
    return a * np.exp(-4.0 * LN2 * (t - t0) ** 2 / w ** 2)


def gaussian_fit_width(t: np.ndarray, y: np.ndarray) -> float | None:
    j = int(np.argmax(y))
    if y[j] <= 0:
        return None
    guess = _half_max_width(t, y) or (t[-1] - t[0]) / 4
    try:
        with warnings.catch_warnings():
            # flat-topped windows leave the covariance undefined; only popt is used
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_gauss_intensity, t, y, p0=(y[j], t[j], guess), maxfev=5000)
    except (RuntimeError, ValueError):
        return None
    w = abs(float(popt[2]))
    return w if math.isfinite(w) and w > 0 else None


def metrics(t: np.ndarray, e_in: np.ndarray, e_out: np.ndarray,
            windows: Mapping[str, tuple[float, float]]) -> TraceMetrics:
    """Energies, widths and peak times per window; efficiencies per recall window.

    The ``input`` window is evaluated on ``e_in`` and every other window on
    ``e_out``.  Efficiencies divide recall energies by the input-window energy.
    """
    t = np.asarray(t, dtype=float)
    span = (t[0], t[-1])
    energies, widths, peaks, gauss = {}, {}, {}, {}
    for name, (a, b) in windows.items():
        if b <= a:
            raise AnalysisError(f"window {name} is empty")
        if a < span[0] - 1e-9 or b > span[1] + 1e-9:
            raise AnalysisError(f"window {name} ({a}, {b}) outside trace span {span}")
        trace = e_in if name == "input" else e_out
        m = (t >= a) & (t <= b)
        tt = t[m]
        y = np.abs(np.asarray(trace)[m]) ** 2
        energies[name] = float(np.trapezoid(y, tt)) if len(tt) > 1 else 0.0
        if len(y) == 0 or not np.any(y > 0):
            widths[name] = None
            peaks[name] = None
            continue
        peaks[name] = float(tt[int(np.argmax(y))])
        w_cross = _half_max_width(tt, y)
        w_fit = gaussian_fit_width(tt, y)
        widths[name] = w_cross if w_cross is not None else w_fit
        if w_cross is not None and w_fit is not None and \
                abs(w_fit - w_cross) > FWHM_DISAGREEMENT * w_cross:
            gauss[name] = w_fit
    eff = {}
    e_ref = energies.get("input", 0.0)
    if e_ref > 0:
        for name, e in energies.items():
            if name.startswith("recall_"):
                eta = e / e_ref
                if eta > 1 + EFFICIENCY_SLACK:
                    raise AnalysisError(f"{name}: efficiency {eta:.6g} exceeds 1")
                eff[name] = eta
    return TraceMetrics(energies, widths, peaks, eff, gauss)


def result_metrics(res, windows) -> TraceMetrics:
    return metrics(res.t, res.E_in, res.E_out, windows)


# ----------------------------------------------------------------- visibility

@dataclass(frozen=True)
class VisibilityResult:
    visibility: float
    phase_offset: float
    fit_residual: float
    mean_intensity: float
    constant: bool = False


def visibility(samples: Sequence[tuple[float, float]]) -> VisibilityResult:
    """Fit I(theta) = I0 (1 + V cos(theta - phi)) by linear least squares.

    ``fit_residual`` is the RMS residual relative to the fitted modulation
    amplitude I0*V (relative to I0 if there is no modulation).
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 4 or arr.shape[1] != 2:
        raise AnalysisError("need at least 4 (theta, intensity) samples")
    th, y = arr[:, 0], arr[:, 1]
    if np.ptp(np.unwrap(np.sort(th))) < math.pi - 1e-12:
        raise AnalysisError("samples must span at least half a period")
    scale = float(np.max(np.abs(y)))
    if scale == 0 or np.ptp(y) <= 1e-12 * scale:
        return VisibilityResult(0.0, 0.0, 0.0, float(np.mean(y)), constant=True)
    A = np.column_stack([np.ones_like(th), np.cos(th), np.sin(th)])
    (c0, c1, c2), *_ = np.linalg.lstsq(A, y, rcond=None)
    amp = math.hypot(c1, c2)
    resid = y - A @ np.array([c0, c1, c2])
    rms = float(np.sqrt(np.mean(resid ** 2)))
    v = amp / c0 if c0 > 0 else float("nan")
    return VisibilityResult(float(min(v, 1.0) if v > 1 and v - 1 < 1e-9 else v),
                            float(math.atan2(c2, c1)), rms / (amp if amp > 0 else abs(c0)),
                            float(c0))


# ---------------------------------------------------------------------- decay

@dataclass(frozen=True)
class DecayFit:
    T_d: float
    amplitude: float
    residual: float
    no_decay: bool = False


def decay_fit(points: Sequence[tuple[float, float]], rel_flat: float = 1e-9) -> DecayFit:
    """Fit eta(T) = eta0 exp(-T/T_d).

    Log-linear least squares gives the start value, then a nonlinear fit on
    the efficiencies.  A flat sequence returns T_d = inf with ``no_decay``.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise AnalysisError("need at least 3 (T, efficiency) points")
    T, eta = arr[:, 0], arr[:, 1]
    if np.any(T < 0):
        raise AnalysisError("storage times must be >= 0")
    if np.any(eta <= 0) or not np.all(np.isfinite(eta)):
        raise AnalysisError("efficiencies must be positive")
    if np.ptp(T) == 0:
        raise AnalysisError("storage times are all equal")
    slope, intercept = np.polyfit(T, np.log(eta), 1)
    if abs(slope) * np.ptp(T) <= rel_flat or slope >= 0:
        return DecayFit(math.inf, float(np.exp(np.mean(np.log(eta)))), 0.0, no_decay=True)

    def model(x, a, k):
        return a * np.exp(-k * x)

    try:
        (a, k), _ = curve_fit(model, T, eta, p0=(math.exp(intercept), -slope), maxfev=10000)
    except RuntimeError:
        a, k = math.exp(intercept), -slope
    resid = float(np.sqrt(np.mean((eta - model(T, a, k)) ** 2)))
    return DecayFit(float(1.0 / k), float(a), resid)
