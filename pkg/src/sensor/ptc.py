import logging
from typing import NamedTuple, Sequence

import numpy as np

from src.custom_types.images import Rect
from src.errors import DomainError, InsufficientDataError
from src.fitting.polynomial import QuadraticFit, fit_quadratic
from src.sensor.pca import NoiseDecomposition

logger = logging.getLogger(__name__)

MIN_LEVELS = 3


class PtcPoint(NamedTuple):
    mean_adu: float
    var_adu: float
    n_frames: int
    roi: Rect


class Conversion(NamedTuple):
    """Sensor gain from the photon-transfer curve.

    `quadratic_fraction` is c2 m^2 / (c0 + c1 m + c2 m^2) at the brightest level.
    """

    c_adu_per_pe: float
    c_sigma: float
    read_noise_adu: float
    read_noise_sigma: float
    quadratic_fraction: float
    fit: QuadraticFit


class PeSlope(NamedTuple):
    slope: float
    sigma: float
    expected: float
    fit: QuadraticFit

    @property
    def deviation(self) -> float:
        return self.slope - self.expected


def ptc_curve(decompositions: Sequence[NoiseDecomposition]) -> list[PtcPoint]:
    if len(decompositions) < MIN_LEVELS:
        raise InsufficientDataError(
            f"{len(decompositions)} intensity levels, need {MIN_LEVELS}"
        )
    points = [
        PtcPoint(d.mean_adu, d.corrected_variance, d.n_frames, d.roi)
        for d in decompositions
    ]
    return sorted(points, key=lambda p: p.mean_adu)


def _arrays(points: Sequence[PtcPoint]) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < MIN_LEVELS:
        raise InsufficientDataError(f"{len(points)} PTC points, need {MIN_LEVELS}")
    mean = np.array([p.mean_adu for p in points], dtype=float)
    var = np.array([p.var_adu for p in points], dtype=float)
    return mean, var


def extract_conversion(
    points: Sequence[PtcPoint], excess_noise_factor: float = 2.0
) -> Conversion:
    """Fit var = c0 + c1 mean + c2 mean^2; C = c1 / F^2, read noise = sqrt(c0)."""
    mean, var = _arrays(points)
    fit = fit_quadratic(mean, var)
    if fit.c1 <= 0:
        raise DomainError(f"non-positive PTC slope {fit.c1:.4g}")
    read = float(np.sqrt(max(fit.c0, 0.0)))
    c0_sigma = fit.fit.error("c0")
    brightest = float(mean.max())
    model = fit.c0 + fit.c1 * brightest + fit.c2 * brightest**2
    conversion = Conversion(
        c_adu_per_pe=fit.c1 / excess_noise_factor,
        c_sigma=fit.fit.error("c1") / excess_noise_factor,
        read_noise_adu=read,
        read_noise_sigma=c0_sigma / (2.0 * read) if read > 0 else float(np.inf),
        quadratic_fraction=fit.c2 * brightest**2 / model,
        fit=fit,
    )
    logger.info(
        "C = %.4f +/- %.4f ADU/pe, read noise %.1f ADU",
        conversion.c_adu_per_pe,
        conversion.c_sigma,
        conversion.read_noise_adu,
    )
    return conversion


def pe_rescale_check(
    points: Sequence[PtcPoint], c_adu_per_pe: float, excess_noise_factor: float = 2.0
) -> PeSlope:
    """Linear PTC coefficient in photoelectron units; equals F^2 for a good C."""
    if c_adu_per_pe <= 0:
        raise DomainError(f"conversion factor must be positive, got {c_adu_per_pe}")
    mean, var = _arrays(points)
    fit = fit_quadratic(mean / c_adu_per_pe, var / c_adu_per_pe**2)
    return PeSlope(
        slope=fit.c1, sigma=fit.fit.error("c1"), expected=excess_noise_factor, fit=fit
    )
