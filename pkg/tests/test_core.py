import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ats_memory.core import (
    TWO_PI, ConstSegment, ControlSchedule, Direction, GaussianPulse, GaussSegment,
    MediumParams, SignalSpec, UnitSystem, bandwidth_to_time, effective_params,
    envelope_eval, peak_for_area, pulse_area, time_to_bandwidth, total_duration,
)

import oracles


def test_envelope_half_fwhm_is_half_intensity():
    p = GaussianPulse(t0=2.0, fwhm=0.5, peak=3.0)
    assert abs(envelope_eval(p, 2.25)) == pytest.approx(3.0 / math.sqrt(2), rel=1e-12)
    assert abs(envelope_eval(p, 2.0)) == pytest.approx(3.0)


def test_envelope_phase():
    p = GaussianPulse(0.0, 1.0, 1.0, phase=math.pi / 2)
    assert envelope_eval(p, 0.0) == pytest.approx(1j)


def test_gaussian_area_matches_reference():
    p = GaussianPulse(5.0, 0.3949, 10.5)
    assert p.area == pytest.approx(oracles.AREA_10P5_0P3949, rel=1e-12)
    sched = ControlSchedule([GaussSegment(p)])
    assert pulse_area(sched, 0.0, 10.0) == pytest.approx(oracles.AREA_10P5_0P3949, rel=1e-9)


def test_physical_pulse_area():
    u = UnitSystem.physical(6.0)
    p = GaussianPulse(0.0, u.time(40.0), u.rate(17.0))
    assert p.area / TWO_PI == pytest.approx(oracles.AREA_17MHZ_40NS_OVER_2PI, rel=1e-12)


def test_peak_for_area_roundtrip():
    seg = GaussSegment.from_area(TWO_PI, 1.0, 0.2)
    assert seg.pulse.area == pytest.approx(TWO_PI)
    assert peak_for_area(TWO_PI, 0.2) == seg.pulse.peak
    with pytest.raises(ValueError):
        peak_for_area(1.0, 0.0)


def test_const_area_and_reversed_window():
    sched = ControlSchedule([ConstSegment(7.0, 0.0, 2.0)])
    assert pulse_area(sched, 0.5, 1.5) == pytest.approx(7.0)
    assert pulse_area(sched, 1.0, 3.0) == pytest.approx(7.0)
    assert pulse_area(sched, 1.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        pulse_area(sched, 2.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0, 5), b=st.floats(0, 5), c=st.floats(0, 5))
def test_area_additive(a, b, c):
    t = sorted([a, b, c])
    sched = ControlSchedule([GaussSegment.from_area(TWO_PI, 2.0, 0.4),
                             ConstSegment(1.3, 3.0, 4.0)])
    whole = pulse_area(sched, t[0], t[2])
    parts = pulse_area(sched, t[0], t[1]) + pulse_area(sched, t[1], t[2])
    assert whole == pytest.approx(parts, rel=1e-8, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(peak=st.floats(0.01, 100), fwhm=st.floats(0.01, 10))
def test_closed_form_area(peak, fwhm):
    p = GaussianPulse(0.0, fwhm, peak)
    assert p.area == pytest.approx(peak * fwhm * math.sqrt(math.pi / (2 * math.log(2))))


def test_overlapping_segments_add_coherently():
    sched = ControlSchedule([ConstSegment(1.0, 0, 2), ConstSegment(1.0, 1, 3, phase=math.pi)])
    assert sched(0.5) == pytest.approx(1.0)
    assert abs(sched(1.5)) < 1e-15
    assert sched(2.5) == pytest.approx(-1.0)


def test_schedule_phase_offset():
    sched = ControlSchedule([ConstSegment(2.0, 0, 1), GaussSegment.from_area(TWO_PI, 2, 0.3)])
    t = np.linspace(0, 3, 50)
    shifted = sched.with_phase_offset(0.7)
    np.testing.assert_allclose(shifted(t), sched(t) * np.exp(0.7j), atol=1e-14)


def test_empty_signal_is_vacuum():
    assert np.all(SignalSpec()(np.linspace(0, 1, 5)) == 0)


def test_signal_superposition_and_scaling():
    a, b = GaussianPulse(1, 0.3, 1.0), GaussianPulse(2, 0.5, 0.5, 1.0)
    t = np.linspace(0, 3, 31)
    np.testing.assert_allclose(SignalSpec([a, b])(t), a(t) + b(t))
    np.testing.assert_allclose(SignalSpec([a, b]).scaled(2j)(t), 2j * (a(t) + b(t)), atol=1e-14)


def test_bandwidth_time():
    assert bandwidth_to_time(11e-3) == pytest.approx(40.0)
    assert time_to_bandwidth(40.0) == pytest.approx(0.011)
    assert total_duration(40.0) == pytest.approx(90.0)
    with pytest.raises(ValueError):
        bandwidth_to_time(0)


def test_units_roundtrip():
    u = UnitSystem.physical(6.0666)
    assert u.rate(6.0666) == pytest.approx(1.0)
    assert u.time_out(u.time(123.0)) == pytest.approx(123.0)
    assert u.rate_out(u.rate(0.25)) == pytest.approx(0.25)
    g = UnitSystem()
    assert g.rate(3.0) == 3.0 and g.time(3.0) == 3.0


def test_medium_validation():
    with pytest.raises(ValueError):
        MediumParams(-1)
    with pytest.raises(ValueError):
        MediumParams(1, gamma_s=-0.1)
    m = MediumParams(13, direction=Direction.BACKWARD)
    assert m.coupling() * m.propagation_coupling() == pytest.approx(13 * 0.5 / 2)


def test_effective_params_identity_without_broadening():
    eff = effective_params(0.5, 0.0, 3.5, omega_c=7.0)
    assert eff.gamma_e_eff == 0.5
    assert eff.d_eff == 3.5
    assert eff.F_eff == pytest.approx(7.0)


def test_effective_params_experimental_set():
    u = UnitSystem.physical(7.7)
    eff = effective_params(0.5, u.rate(1.9), 3.5)
    assert eff.d_eff == pytest.approx(2.3435, abs=1e-4)
    assert eff.gamma_e_eff == pytest.approx(0.74675, abs=1e-5)


@settings(max_examples=50)
@given(g=st.floats(0.01, 5), dg=st.floats(0, 5), d=st.floats(0, 100))
def test_effective_params_preserve_d_gamma(g, dg, d):
    eff = effective_params(g, dg, d)
    assert eff.d_eff * eff.gamma_e_eff == pytest.approx(d * g, rel=1e-12, abs=1e-300)
    assert eff.d_eff <= d
