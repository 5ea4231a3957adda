import numpy as np
import pytest

from src.custom_types.sensor import SensorModel
from src.synth.noise import frame_generators, sample_adu, sample_photoelectrons

SAMPLES = 200_000


def test_generators_are_reproducible():
    first = [rng.standard_normal(4) for rng in frame_generators(11, 3)]
    second = [rng.standard_normal(4) for rng in frame_generators(11, 3)]
    np.testing.assert_array_equal(first, second)
    assert not np.allclose(first[0], first[1])


def test_gaussian_branch_moments():
    sensor = SensorModel()
    rng = np.random.default_rng(3)
    adu = sample_adu(np.full(SAMPLES, 1000.0), sensor, rng)
    c = sensor.c_adu_per_pe
    expected_var = c**2 * 2 * 1000.0 + sensor.read_noise_adu**2
    assert adu.mean() == pytest.approx(c * 1000.0, rel=1e-3)
    assert adu.var() == pytest.approx(expected_var, rel=0.02)


@pytest.mark.parametrize("excess", [1.0, 2.0])
def test_poisson_branch_moments(excess: float):
    rng = np.random.default_rng(5)
    pe = sample_photoelectrons(np.full(SAMPLES, 5.0), excess, rng)
    assert pe.mean() == pytest.approx(5.0, rel=0.02)
    assert pe.var() == pytest.approx(excess * 5.0, rel=0.03)
    assert np.all(np.mod(pe, excess) == 0)


def test_negative_expectation_is_clipped():
    pe = sample_photoelectrons(np.array([-3.0, 0.0]), 2.0, np.random.default_rng(1))
    np.testing.assert_array_equal(pe, [0.0, 0.0])


def test_noiseless_adu():
    sensor = SensorModel(dark_level_adu=100.0)
    adu = sample_adu(np.array([0.0, 10.0]), sensor, np.random.default_rng(0), True)
    np.testing.assert_allclose(adu, [100.0, 176.5])
