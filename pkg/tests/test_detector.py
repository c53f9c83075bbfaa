import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phasecell.detector import (ALL_SWITCH_STATES, IN_PHASE, QUADRATURE, AdcParams,
                                DetectorParams, FrequencyProfile, Path, SwitchState,
                                adc_quantize, branch_voltage, code_to_volts, measure_pair,
                                wrap_deg)
from phasecell.errors import PreconditionError

IDEAL = DetectorParams()
ADC = AdcParams()


def test_wrap_range_and_idempotence():
    a = np.array([-540.0, -180.0, -179.5, 0.0, 180.0, 359.0, 720.25])
    w = wrap_deg(a)
    assert np.all((w > -180) & (w <= 180))
    assert np.array_equal(wrap_deg(w), w)
    assert wrap_deg(-180.0) == 180.0


@given(st.floats(-1e5, 1e5, allow_nan=False))
def test_wrap_is_multiple_of_360(a):
    w = wrap_deg(a)
    assert -180 < w <= 180
    k = (w - a) / 360.0
    assert abs(k - round(k)) < 1e-9
    assert wrap_deg(w) == w


def test_branch_voltage_examples():
    assert branch_voltage(0.0, IN_PHASE, IDEAL) == pytest.approx(1.0, abs=1e-15)
    assert branch_voltage(90.0, QUADRATURE, IDEAL) == pytest.approx(1.0, abs=1e-15)
    v = branch_voltage(110.0, QUADRATURE, DetectorParams(delta_q=30.0))
    assert v == pytest.approx(math.sin(math.radians(80.0)), abs=1e-12)
    assert v == pytest.approx(0.9848, abs=5e-5)


def test_unused_switch_states_raise():
    unused = [s for s in ALL_SWITCH_STATES if s not in (IN_PHASE, QUADRATURE)]
    assert len(ALL_SWITCH_STATES) == 4 and len(unused) == 2
    for sw in unused:
        with pytest.raises(PreconditionError):
            branch_voltage(0.0, sw, IDEAL)
    assert IN_PHASE == SwitchState(Path.P0, Path.P0)
    assert QUADRATURE == SwitchState(Path.P90, Path.P0)


@pytest.mark.parametrize("kw", [
    dict(gain_i=0.0), dict(gain_q=-1.0), dict(delta_q=90.0), dict(delta_q=-95.0),
    dict(harmonics=((3, 1.0, 0.0),)), dict(harmonics=((1, 0.1, 0.0),)),
    dict(noise_sigma=-0.1),
])
def test_detector_param_invariants(kw):
    with pytest.raises(PreconditionError):
        DetectorParams(**kw)


def test_extrema_without_distortion():
    p = DetectorParams(gain_i=0.7, gain_q=1.3, offset_i=0.2, offset_q=-0.1, delta_q=17.0)
    th = np.arange(0.0, 360.0, 0.01)
    vi = branch_voltage(th, IN_PHASE, p)
    vq = branch_voltage(th, QUADRATURE, p)
    assert vi.max() == pytest.approx(0.9, abs=1e-6) and vi.min() == pytest.approx(-0.5, abs=1e-6)
    assert vq.max() == pytest.approx(1.2, abs=1e-6) and vq.min() == pytest.approx(-1.4, abs=1e-6)


@pytest.mark.parametrize("delta", [-60.0, -5.75, 0.0, 12.3, 38.0])
def test_q_rising_zero_at_deviation(delta):
    p = DetectorParams(delta_q=delta)
    assert branch_voltage(delta, QUADRATURE, p) == pytest.approx(0.0, abs=1e-12)
    th = np.arange(-180.0, 180.0, 1.0)
    v = branch_voltage(th, QUADRATURE, p)
    k = np.nonzero((v[:-1] < 0) & (v[1:] >= 0))[0]
    assert len(k) == 1
    k = k[0]
    z = th[k] + (-v[k]) / (v[k + 1] - v[k])
    assert abs(z - delta) <= 0.05


def test_harmonic_model_shape():
    p = DetectorParams(harmonics=((3, 0.05, 0.0),))
    assert branch_voltage(0.0, IN_PHASE, p) == pytest.approx(1.05)
    # Q evaluates g at da - 90: g(0) = 1.05 and g(-60) = cos(60) + 0.05 cos(180).
    assert branch_voltage(90.0, QUADRATURE, p) == pytest.approx(1.05)
    assert branch_voltage(30.0, QUADRATURE, p) == pytest.approx(0.5 - 0.05 * 1.0)


def test_noise_is_seeded_and_call_local():
    p = DetectorParams(noise_sigma=0.01)
    a = branch_voltage(45.0, IN_PHASE, p, rng_seed=7)
    b = branch_voltage(45.0, IN_PHASE, p, rng_seed=7)
    c = branch_voltage(45.0, IN_PHASE, p, rng_seed=8)
    assert a == b and a != c
    assert branch_voltage(45.0, IN_PHASE, IDEAL, rng_seed=7) == branch_voltage(45.0, IN_PHASE, IDEAL)


def test_adc_rails_and_midpoint():
    assert adc_quantize(-1.5, ADC) == 0
    assert adc_quantize(1.5, ADC) == 1023
    # Midpoint scales to exactly 511.5; half away from zero gives 512.
    assert adc_quantize(0.0, ADC) == 512
    assert adc_quantize(-7.0, ADC) == 0 and adc_quantize(9.0, ADC) == 1023


def test_adc_conditioner():
    adc = AdcParams(bits=12, v_min=0.0, v_max=3.3, conditioner_gain=1.5, conditioner_offset=1.65)
    code = adc_quantize(0.4, adc)
    assert code == math.floor((1.5 * 0.4 + 1.65) / 3.3 * 4095 + 0.5)
    assert code_to_volts(code, adc) == pytest.approx(0.4, abs=adc.lsb / 2 + 1e-12)


@pytest.mark.parametrize("kw", [dict(v_min=1.0, v_max=1.0), dict(bits=1), dict(bits=17)])
def test_adc_param_invariants(kw):
    with pytest.raises(PreconditionError):
        AdcParams(**kw)


@settings(max_examples=200)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(2, 16))
def test_adc_monotone_and_saturating(a, b, bits):
    adc = AdcParams(bits=bits)
    lo, hi = min(a, b), max(a, b)
    assert adc_quantize(lo, adc) <= adc_quantize(hi, adc)
    assert 0 <= adc_quantize(a, adc) <= adc.max_code
    railed = max(min(a, adc.v_max), adc.v_min)
    assert adc_quantize(railed, adc) == adc_quantize(a, adc)


def test_measure_pair_examples():
    ci, cq = measure_pair(0.0, IDEAL, ADC)
    assert ci == adc_quantize(1.0, ADC) == 853
    assert cq == 512
    ci, cq = measure_pair(180.0, IDEAL, ADC)
    assert ci == adc_quantize(-1.0, ADC) == 171
    assert abs(cq - 511.5) <= 1
    noisy_free = DetectorParams(noise_sigma=0.0)
    assert measure_pair(45.0, noisy_free, ADC) == measure_pair(45.0, noisy_free, ADC)


def test_measure_pair_independent_draws():
    p = DetectorParams(noise_sigma=0.05, delta_q=0.0)
    th = np.zeros(2000)
    ci, cq = measure_pair(th + 45.0, p, AdcParams(bits=16), rng_seed=3)
    # Identical analog levels at 45 deg; independent noise decorrelates the codes.
    r = np.corrcoef(ci.astype(float), cq.astype(float))[0, 1]
    assert abs(r) < 0.1
    again = measure_pair(th + 45.0, p, AdcParams(bits=16), rng_seed=3)
    assert np.array_equal(ci, again[0]) and np.array_equal(cq, again[1])


def test_frequency_profile():
    prof = FrequencyProfile(((2.7, 0.63), (4.1, 3.38), (6.0, 3.97)))
    assert prof.deviation_at(2.7) == pytest.approx(0.63)
    assert prof.deviation_at(3.4) == pytest.approx((0.63 + 3.38) / 2)
    with pytest.raises(PreconditionError):
        prof.deviation_at(6.1)
    with pytest.raises(PreconditionError):
        FrequencyProfile(((3.0, 1.0), (3.0, 2.0)))
