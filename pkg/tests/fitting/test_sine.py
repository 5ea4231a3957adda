import math

import numpy as np
import pytest

from src.custom_types.datasets import Trace
from src.errors import InsufficientDataError
from src.fitting.sine import fit_sine_segment

F = 100e6
RATE = 5e9


def sinusoid(
    phi_e: float, amplitude=1.0, offset=0.0, noise=0.0, seed=0, duration=400e-9
) -> Trace:
    t = np.arange(0, duration, 1 / RATE)
    rng = np.random.default_rng(seed)
    v = amplitude * np.sin(2 * math.pi * F * t + math.pi * phi_e) + offset
    return Trace(t, v + rng.normal(0, noise, t.size), F)


def test_pure_sinusoid():
    fit = fit_sine_segment(sinusoid(0.0), (0.0, 200e-9))
    assert fit.amplitude == pytest.approx(1.0, abs=1e-9)
    assert fit.frequency_hz == pytest.approx(F, abs=1e-3)
    assert fit.phi_e == pytest.approx(0.0, abs=1e-9)
    assert fit.offset == pytest.approx(0.0, abs=1e-9)


def test_default_frequency_tolerance():
    fit = fit_sine_segment(sinusoid(0.2), (0.0, 200e-9))
    assert abs(fit.frequency_hz - F) <= 2e3 + 1e-6


def test_noisy_phase_recovered():
    trace = sinusoid(0.37, noise=0.05, seed=11, duration=2e-6)
    # origin at the window centre, a whole number of periods from t = 0
    fit = fit_sine_segment(trace, (0.0, 2e-6), t_origin=1e-6)
    assert fit.phi_e == pytest.approx(0.37, abs=1e-3)


def test_negative_amplitude_folds_into_phase():
    fit = fit_sine_segment(sinusoid(0.9, amplitude=-2.0), (0.0, 200e-9))
    assert fit.amplitude == pytest.approx(2.0, abs=1e-9)
    assert abs(math.remainder(fit.phi_e - (0.9 + 1.0), 2.0)) < 1e-9


@pytest.mark.parametrize("periods", [1, 4, 9])
def test_phase_invariant_under_whole_period_shift(periods: int):
    trace = sinusoid(-0.41)
    reference = fit_sine_segment(trace, (10e-9, 150e-9))
    shift = periods / F
    shifted = fit_sine_segment(trace, (10e-9 + shift, 150e-9 + shift))
    assert abs(math.remainder(shifted.phi_e - reference.phi_e, 2.0)) < 1e-6


def test_window_too_short():
    with pytest.raises(InsufficientDataError):
        fit_sine_segment(sinusoid(0.0), (0.0, 25e-9))
