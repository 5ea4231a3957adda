import math

import numpy as np
import pytest

from src.errors import DomainError
from src.pixelmap.f2map import (
    F2Map,
    StopBand,
    compute_f2_map,
    power_spectrum,
    stop_band_window,
    stripe_filter,
)

SHAPE = (24, 64)
BAND = StopBand(center=(0.0, 0.125), semi_axes=(0.03, 0.03))
COLS = np.indices(SHAPE, dtype=float)[1]


def field(*components: tuple[float, float]) -> F2Map:
    values = np.full(SHAPE, 0.5)
    for kx, amplitude in components:
        values = values + amplitude * np.cos(2 * math.pi * kx * COLS)
    return F2Map(values, np.ones(SHAPE, dtype=bool))


def test_fraction_and_mask():
    n1 = np.array([[3.0, 0.0, 1.0, 5.0]])
    n2 = np.array([[1.0, 0.0, -0.05, -1.0]])
    f2 = compute_f2_map(n1, n2)
    np.testing.assert_allclose(f2.values, [[0.25, 0.5, 0.0, 0.5]])
    np.testing.assert_array_equal(f2.mask, [[True, False, True, False]])


def test_kept_values_are_clipped():
    f2 = compute_f2_map(np.array([[-0.05]]), np.array([[1.0]]))
    assert f2.mask[0, 0]
    assert f2.values[0, 0] == 1.0


def test_invalid_map():
    f2 = F2Map.invalid((3, 4))
    assert not f2.mask.any()
    assert np.all(f2.values == 0.5)


def test_stripes_on_the_band_are_removed():
    filtered = stripe_filter(field((0.125, 0.1)), [BAND])
    np.testing.assert_allclose(filtered.values, 0.5, atol=1e-12)


def test_components_outside_the_band_survive():
    original = field((0.0625, 0.05))
    filtered = stripe_filter(field((0.0625, 0.05), (0.125, 0.1)), [BAND])
    np.testing.assert_allclose(filtered.values, original.values, atol=1e-12)


def test_hard_notch_is_idempotent():
    once = stripe_filter(field((0.125, 0.1), (0.109375, 0.05)), [BAND], taper=0.0)
    twice = stripe_filter(once, [BAND], taper=0.0)
    np.testing.assert_allclose(twice.values, once.values, atol=1e-12)


def test_mask_and_scale_are_kept():
    mask = np.ones(SHAPE, dtype=bool)
    mask[0, 0] = False
    f2 = F2Map(np.full(SHAPE, 0.5), mask, (0.5, 1.0))
    filtered = stripe_filter(f2, [BAND])
    np.testing.assert_array_equal(filtered.mask, mask)
    assert filtered.pixel_scale == (0.5, 1.0)


def test_no_bands_returns_a_copy():
    f2 = field((0.125, 0.1))
    filtered = stripe_filter(f2, [])
    np.testing.assert_array_equal(filtered.values, f2.values)
    assert filtered.values is not f2.values


def test_window_is_mirrored_through_dc():
    window = stop_band_window(SHAPE, [BAND], taper=0.0)
    assert window[0, 8] == 0.0
    assert window[0, 56] == 0.0
    assert window[0, 0] == 1.0
    assert window[0, 4] == 1.0


def test_annulus_passes_its_centre():
    annulus = StopBand(center=(0.0, 0.125), semi_axes=(0.1, 0.1), inner_fraction=0.5)
    window = stop_band_window(SHAPE, [annulus], taper=0.0)
    assert window[0, 8] == 1.0
    # 0.0625 cycles/px from the centre sits inside the ring
    assert window[0, 4] == 0.0


def test_empty_band_is_ignored():
    empty = StopBand(center=(0.0, 0.125), semi_axes=(0.0, 0.03))
    assert np.all(stop_band_window(SHAPE, [empty]) == 1.0)


def test_band_over_dc_is_rejected():
    with pytest.raises(DomainError):
        stop_band_window(SHAPE, [StopBand(center=(0.0, 0.01), semi_axes=(0.03, 0.03))])


def test_taper_out_of_range():
    with pytest.raises(DomainError):
        stop_band_window(SHAPE, [BAND], taper=1.5)


def test_power_spectrum_peaks_at_the_stripes():
    spectrum = power_spectrum(field((0.125, 0.1)).values)
    row, col = np.unravel_index(np.argmax(spectrum.power), spectrum.power.shape)
    assert spectrum.ky[row] == 0.0
    assert abs(spectrum.kx[col]) == pytest.approx(0.125)
