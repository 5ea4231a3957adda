from typing import Optional

import numpy as np

from src.custom_types.images import FloatArray
from src.custom_types.sensor import SensorModel

POISSON_LIMIT_PE = 20.0


def frame_generators(seed: Optional[int], n: int) -> list[np.random.Generator]:
    """Independent, reproducible generators, one per frame."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(child) for child in children]


def sample_photoelectrons(
    expected_pe: FloatArray, excess_noise_factor: float, rng: np.random.Generator
) -> FloatArray:
    """Draw photoelectrons with mean N and variance F^2 N.

    Exact (F^2-scaled) Poisson at or below 20 pe, Gaussian above.
    """
    expected = np.clip(np.asarray(expected_pe, dtype=float), 0.0, None)
    small = expected <= POISSON_LIMIT_PE
    pe = np.empty_like(expected)
    pe[small] = excess_noise_factor * rng.poisson(expected[small] / excess_noise_factor)
    large = ~small
    pe[large] = expected[large] + np.sqrt(
        excess_noise_factor * expected[large]
    ) * rng.standard_normal(int(large.sum()))
    return pe


def sample_adu(
    expected_pe: FloatArray,
    sensor: SensorModel,
    rng: np.random.Generator,
    noiseless: bool = False,
) -> FloatArray:
    if noiseless:
        return sensor.c_adu_per_pe * expected_pe + sensor.dark_level_adu
    pe = sample_photoelectrons(expected_pe, sensor.excess_noise_factor, rng)
    read = sensor.read_noise_adu * rng.standard_normal(pe.shape)
    return sensor.c_adu_per_pe * pe + read + sensor.dark_level_adu
