import math

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from src.errors import DomainError
from src.photometry.absorption import (
    OdSample,
    beer_lambert_saturated,
    column_density,
    invert_od,
    od_corrected,
    od_noise,
    od_of_sample,
    optimal_probe_counts,
    snr_curve,
    snr_model,
)

Z = np.linspace(0.0, 1.0, 101)


@pytest.mark.parametrize("i_in", [0.05, 0.5, 5.0])
def test_uniform_slab_obeys_the_implicit_solution(i_in: float):
    i_out = beer_lambert_saturated(Z, np.full(Z.size, 2.0), i_in)
    residual = math.log(i_out / i_in) + (i_out - i_in) + 2.0
    assert residual == pytest.approx(0.0, abs=1e-8)


def test_corrected_od_recovers_column_density():
    sigma_rho = 3.0 * np.exp(-(((Z - 0.5) / 0.15) ** 2))
    n_sat_exposure = 400.0
    n_minus = 1.5 * n_sat_exposure
    i_out = beer_lambert_saturated(Z, sigma_rho, 1.5)
    od = od_corrected(i_out * n_sat_exposure, n_minus, n_sat_exposure)
    assert float(od) == pytest.approx(column_density(Z, sigma_rho), rel=1e-6)


def test_empty_cloud_passes_the_probe():
    assert beer_lambert_saturated(Z, np.zeros(Z.size), 0.7) == pytest.approx(0.7)


def test_beer_lambert_input_checks():
    with pytest.raises(DomainError):
        beer_lambert_saturated(Z, np.ones(Z.size), 0.0)
    with pytest.raises(DomainError):
        beer_lambert_saturated(Z, -np.ones(Z.size), 1.0)
    with pytest.raises(DomainError):
        beer_lambert_saturated(Z[::-1], np.ones(Z.size), 1.0)


def test_non_positive_counts():
    with pytest.raises(DomainError):
        od_corrected([0.0, 10.0], 100.0, 100.0)
    flagged = od_corrected([0.0, 100.0], 100.0, 100.0, on_invalid="flag")
    assert math.isnan(flagged[0])
    assert flagged[1] == 0.0


def test_od_sample():
    assert od_of_sample(OdSample(100.0, 100.0, 50.0)) == 0.0
    with pytest.raises(DomainError):
        OdSample(10.0, 0.0, 50.0)


def test_od_noise_hand_value():
    assert float(od_noise(100.0, 100.0)) == pytest.approx(0.2)
    assert float(od_noise(100.0, 100.0, 2.0)) == pytest.approx(0.2 * math.sqrt(2))


@hypothesis.settings(max_examples=60, deadline=None)
@hypothesis.given(
    st.floats(min_value=0.0, max_value=4.0),
    st.floats(min_value=1.0, max_value=1e5),
    st.floats(min_value=10.0, max_value=1e4),
)
def test_invert_od_round_trip(od: float, n_minus: float, n_sat_exposure: float):
    n_plus = invert_od(od, n_minus, n_sat_exposure)
    assert 0 < n_plus <= n_minus
    assert float(od_corrected(n_plus, n_minus, n_sat_exposure)) == pytest.approx(
        od, abs=1e-9
    )


def test_invert_negative_od():
    with pytest.raises(DomainError):
        invert_od(-0.1, 100.0, 100.0)


def test_snr_limits():
    n_sat_exposure = 500.0
    dim = snr_model(1.0, 1e-3 * n_sat_exposure, n_sat_exposure)
    assert dim.snr == pytest.approx(dim.low_intensity_limit, rel=0.01)
    bright = snr_model(1.0, 1e3 * n_sat_exposure, n_sat_exposure)
    assert bright.snr == pytest.approx(bright.high_intensity_limit, rel=0.01)


def test_optimum_without_atoms_is_the_saturation_count():
    assert optimal_probe_counts(0.0, 500.0) == pytest.approx(500.0, rel=1e-4)


@pytest.mark.parametrize("od", [0.5, 2.0])
def test_snr_curve_peaks_at_the_optimum(od: float):
    n_sat_exposure = 500.0
    ratios = np.geomspace(1e-2, 1e2, 401)
    curve = snr_curve(od, n_sat_exposure, ratios)
    best = ratios[int(np.argmax([point.snr for point in curve]))]
    optimum = optimal_probe_counts(od, n_sat_exposure) / n_sat_exposure
    assert best == pytest.approx(optimum, rel=0.03)
