import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.custom_types.images import FloatArray, ImageStack
from src.custom_types.sensor import SensorModel
from src.errors import DomainError, SaturationError
from src.photometry.geometry import photons_in_pulse
from src.synth.noise import frame_generators, sample_adu

logger = logging.getLogger(__name__)


class ProbeStackConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape_px: tuple[int, int] = (128, 128)
    roi_px: tuple[int, int, int, int] = (16, 112, 16, 112)
    levels_adu: list[float] = [
        500.0, 1000.0, 2000.0, 3000.0, 4000.0, 5500.0, 6500.0, 8000.0
    ]
    n_frames: int = Field(35, ge=8)
    n_dark_frames: int = Field(20, ge=1)
    drift_modes: int = Field(3, ge=0)
    drift_amplitude: float = Field(0.05, ge=0)
    drift_timescale_frames: float = Field(12.0, gt=0)


@dataclass(frozen=True)
class DriftMode:
    """Spatial pattern whose weight oscillates with period `timescale` frames."""

    pattern: FloatArray
    amplitude: float
    timescale: float
    phase: float = 0.0

    def weight(self, frame: int) -> float:
        angle = 2.0 * math.pi * frame / self.timescale + self.phase
        return self.amplitude * math.sin(angle)


def default_drift_modes(
    shape: tuple[int, int],
    count: int = 3,
    amplitude: float = 0.05,
    timescale: float = 12.0,
    seed: Optional[int] = None,
) -> list[DriftMode]:
    """Smooth tilted fringe patterns like those from interference in the probe path."""
    rng = np.random.default_rng(seed)
    rows, cols = np.indices(shape, dtype=float)
    modes = []
    for index in range(count):
        angle = rng.uniform(0.0, math.pi)
        period = rng.uniform(12.0, 40.0)
        k = 2.0 * math.pi / period
        along = cols * math.cos(angle) + rows * math.sin(angle)
        pattern = np.cos(k * along + rng.uniform(0.0, 2.0 * math.pi))
        modes.append(
            DriftMode(
                pattern=pattern,
                amplitude=amplitude,
                timescale=timescale * (1.0 + 0.37 * index),
                phase=rng.uniform(0.0, 2.0 * math.pi),
            )
        )
    return modes


def synth_probe_stack(
    mean_adu: float,
    shape: tuple[int, int],
    drift_modes: list[DriftMode],
    sensor: SensorModel,
    n_frames: int,
    seed: Optional[int] = None,
    *,
    label: str = "",
    dark: Optional[FloatArray] = None,
) -> ImageStack:
    """Probe images whose mean (above the dark level) is `mean_adu`."""
    if mean_adu <= 0:
        raise DomainError(f"mean_adu must be positive, got {mean_adu}")
    generators = frame_generators(seed, n_frames)
    frames = np.empty((n_frames, *shape))
    for index, rng in enumerate(generators):
        structure = np.ones(shape)
        for mode in drift_modes:
            structure = structure + mode.weight(index) * mode.pattern
        expected_pe = mean_adu * np.clip(structure, 0.0, None) / sensor.c_adu_per_pe
        frames[index] = sample_adu(expected_pe, sensor, rng)
    return ImageStack(frames=frames, label=label, dark=dark)


def synth_dark_frame(
    shape: tuple[int, int], sensor: SensorModel, n_frames: int, seed: Optional[int]
) -> FloatArray:
    """Average of `n_frames` exposures with the probe off."""
    generators = frame_generators(seed, n_frames)
    zero = np.zeros(shape)
    return np.mean([sample_adu(zero, sensor, rng) for rng in generators], axis=0)


class BeamConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    powers_w: list[float] = [1e-6, 2e-6, 3e-6, 4e-6, 5e-6]
    t_m_s: float = Field(18.5e-6, gt=0)
    widths_px: tuple[float, float] = (130.0, 110.0)
    shape_px: tuple[int, int] = (460, 540)
    wavelength_m: float = Field(780.241e-9, gt=0)


def synth_gaussian_beam(
    power: float,
    t_m: float,
    widths: tuple[float, float],
    sensor: SensorModel,
    shape: tuple[int, int],
    seed: Optional[int] = None,
    *,
    wavelength_m: float = 780.241e-9,
    noiseless: bool = False,
) -> FloatArray:
    """Exposure of a centred Gaussian beam; `widths` = (sigma_x, sigma_y) 1/e^2 radii.

    The expected photoelectrons sum to QE * P * t_m * lambda / (h c).
    """
    sigma_x, sigma_y = widths
    height, width = shape
    # 1/e^2 radius = 2 standard deviations, so 4-std margins are 2 radii
    if width < 4.0 * sigma_x or height < 4.0 * sigma_y:
        raise DomainError(f"beam widths {widths} leave less than 4 std to the edges")
    rows, cols = np.indices(shape, dtype=float)
    u = (cols - (width - 1) / 2.0) / sigma_x
    v = (rows - (height - 1) / 2.0) / sigma_y
    profile = np.exp(-2.0 * (u**2 + v**2))
    total_pe = sensor.qe * photons_in_pulse(power, t_m, wavelength_m)
    expected_pe = total_pe * profile / profile.sum()
    image = sample_adu(expected_pe, sensor, np.random.default_rng(seed), noiseless)
    if image.max() > sensor.saturation_adu:
        raise SaturationError(
            f"peak {image.max():.0f} ADU exceeds saturation {sensor.saturation_adu:.0f}"
        )
    return image


def synth_beam_campaign(
    config: BeamConfig, sensor: SensorModel, seed: Optional[int] = None
) -> ImageStack:
    generators = frame_generators(seed, len(config.powers_w))
    frames = [
        synth_gaussian_beam(
            power,
            config.t_m_s,
            config.widths_px,
            sensor,
            config.shape_px,
            wavelength_m=config.wavelength_m,
            seed=int(rng.integers(2**63)),
        )
        for power, rng in zip(config.powers_w, generators)
    ]
    logger.info("simulated %d beam exposures", len(frames))
    return ImageStack(frames=np.array(frames), exposure_s=config.t_m_s, label="beam")
