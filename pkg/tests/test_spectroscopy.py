import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ats_memory.core import MediumParams
from ats_memory.spectroscopy import (
    SingleLine, Spectrum, SpectrumMode, fit_alpha, fit_ats, susceptibility_od, swept_probe_spectrum,
)

import oracles


def test_bare_line_peak_and_width():
    x = np.array([-0.5, 0.0, 0.5])
    od = susceptibility_od(x, 13.0, 0.5, 0.0, 0.0)
    assert od[1] == pytest.approx(13.0)
    # Lorentzian of FWHM 2 gamma_e = 1
    assert od[0] == pytest.approx(6.5) and od[2] == pytest.approx(6.5)


def test_eit_null_exact():
    assert susceptibility_od(0.0, 13.0, 0.5, 0.0, 0.3) == 0.0
    assert susceptibility_od(0.0, 13.0, 0.5, 0.0, 7.0) == 0.0


@settings(max_examples=40)
@given(d=st.floats(0.1, 100), om=st.floats(0, 20), gs=st.floats(0, 1))
def test_od_symmetric(d, om, gs):
    x = np.linspace(0.01, 30, 50)
    np.testing.assert_allclose(susceptibility_od(x, d, 0.5, gs, om),
                               susceptibility_od(-x, d, 0.5, gs, om), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("om", [0.0, 2.0, 7.0, 12.0])
def test_sum_rule(om):
    x = np.linspace(-10 * max(1.0, om) * 20, 10 * max(1.0, om) * 20, 400001)
    area = np.trapezoid(susceptibility_od(x, 10.0, 0.5, 0.0, om), x)
    bare = np.trapezoid(susceptibility_od(x, 10.0, 0.5, 0.0, 0.0), x)
    assert area == pytest.approx(bare, rel=0.01)


@settings(max_examples=30, deadline=None)
@given(F=st.floats(2.0, 20.0), h=st.floats(0.5, 50.0))
def test_fit_recovers_synthetic_doublet(F, h):
    x = np.linspace(-2 * F, 2 * F, 801)
    w = 0.5
    y = h / (1 + (2 * (x - F / 2) / w) ** 2) + h / (1 + (2 * (x + F / 2) / w) ** 2)
    fit = fit_ats(Spectrum(x, y))
    assert fit.delta_A == pytest.approx(F, rel=0.02)
    assert fit.widths[0] == pytest.approx(w, rel=0.05)


@pytest.mark.parametrize("F", [5.0, 10.0, 20.0])
def test_fit_susceptibility_spacing(F):
    x = np.linspace(-2 * F, 2 * F, 801)
    sp = Spectrum(x, susceptibility_od(x, 10.0, 0.5, 0.0, F))
    assert fit_ats(sp).delta_A == pytest.approx(F, rel=0.02)


def test_single_line_raises():
    x = np.linspace(-10, 10, 201)
    with pytest.raises(SingleLine):
        fit_ats(Spectrum(x, susceptibility_od(x, 10.0, 0.5, 0.0, 0.0)))


def test_swept_matches_closed():
    med = MediumParams(6.0, 0.5, 0.0)
    x = np.linspace(-8, 8, 33)
    closed = swept_probe_spectrum(med, 5.0, x)
    swept = swept_probe_spectrum(med, 5.0, x, SpectrumMode.SWEPT, n_z=60)
    assert np.max(np.abs(swept.od - closed.od)) <= 0.02 * med.d


def test_fast_sweep_flagged():
    med = MediumParams(6.0)
    sp = swept_probe_spectrum(med, 5.0, np.linspace(-8, 8, 9), sweep_duration=1.0)
    assert "warning" in sp.metadata


def test_csv_roundtrip_and_floor():
    sp = Spectrum([-1.0, 0.0, 1.0], [0.1, 2.0, 0.1])
    back = Spectrum.from_csv(sp.to_csv())
    np.testing.assert_allclose(back.od, sp.od)
    with pytest.raises(ValueError):
        Spectrum.from_csv("detuning,od\n0,-0.2\n")
    Spectrum.from_csv("detuning,od\n0,-0.03\n")


def test_alpha_single_sample():
    cal = fit_alpha([(3.0, 10.7)])
    assert cal.alpha == pytest.approx(oracles.ALPHA_SINGLE_POINT, rel=1e-12)
    assert cal.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_alpha_recovers_synthetic():
    p = np.array([0.5, 1.0, 2.0, 4.0])
    cal = fit_alpha(list(zip(p, 6.2 * np.sqrt(p))))
    assert cal.alpha == pytest.approx(6.2)
    assert cal.predict(9.0) == pytest.approx(18.6)


def test_alpha_degenerate():
    with pytest.raises(ValueError):
        fit_alpha([(2.0, 1.0), (2.0, 1.1)])
    with pytest.raises(ValueError):
        fit_alpha([(0.0, 1.0)])
