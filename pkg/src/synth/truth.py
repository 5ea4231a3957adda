import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from src.custom_types.images import Ellipse, FloatArray
from src.custom_types.sensor import SensorModel
from src.errors import DomainError
from src.physics.atom import RB87_D2, AtomSpec

REFERENCE_N_SAT = 27.2
REFERENCE_PHI0 = 2.0 * math.pi * 0.06
REFERENCE_DT0_S = 1.6e-6


@dataclass(frozen=True)
class GroundTruth:
    """Values injected into a synthetic dataset, kept for round-trip grading.

    `n_sat` is in counts/pixel/us; `intensity_map` is relative intensity at the
    atoms, normalised to mean 1.
    """

    n_sat: float = REFERENCE_N_SAT
    phi0: float = REFERENCE_PHI0
    dt0_s: float = REFERENCE_DT0_S
    atom: AtomSpec = RB87_D2
    sensor: SensorModel = SensorModel()
    intensity_map: Optional[FloatArray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n_sat <= 0:
            raise DomainError(f"n_sat must be positive, got {self.n_sat}")
        if self.intensity_map is not None and np.any(self.intensity_map <= 0):
            raise DomainError("intensity map must be strictly positive")

    def saturation_parameter(self, n_adu: float, t_exposure_s: float) -> float:
        """I/I_sat for a probe that gives `n_adu` counts over `t_exposure_s`."""
        return n_adu / (self.n_sat * t_exposure_s * 1e6)

    def n_adu(self, s: float, t_exposure_s: float) -> float:
        return self.n_sat * s * t_exposure_s * 1e6

    def summary(self) -> dict[str, object]:
        return {
            "n_sat_counts_per_px_us": self.n_sat,
            "phi0_rad": self.phi0,
            "dt0_s": self.dt0_s,
            "atom": self.atom.model_dump(),
            "sensor": self.sensor.model_dump(),
            "has_intensity_map": self.intensity_map is not None,
        }


def linear_gradient_map(
    shape: tuple[int, int], roi: Ellipse, amplitude: float = 0.1, axis: int = 1
) -> FloatArray:
    """Intensity falling linearly by +/- `amplitude` across the ROI, mean 1 inside.

    The gradient is largest at negative coordinates along `axis`.
    """
    rows, cols = np.indices(shape, dtype=float)
    if axis == 1:
        coordinate = (cols - roi.center_x) / roi.semi_x
    else:
        coordinate = (rows - roi.center_y) / roi.semi_y
    ramp = 1.0 - amplitude * coordinate
    inside = roi.mask(shape)
    ramp = ramp / ramp[inside].mean()
    if np.any(ramp <= 0):
        raise DomainError("gradient amplitude drives the intensity non-positive")
    return ramp
