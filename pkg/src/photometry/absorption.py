"""Saturated absorption imaging: optical depth, its noise and the imaging SNR.

Intensities are in units of I_sat and counts of a probe exposure in units of
`n_sat_exposure`, the counts N_sat * t_m a probe at I_sat would produce.
"""

import logging
import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
import numpy.typing as npt
import scipy.integrate
import scipy.optimize

from src.custom_types.images import FloatArray
from src.errors import DomainError, IntegrationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OdSample:
    n_plus: float
    n_minus: float
    n_sat_exposure: float

    def __post_init__(self) -> None:
        if self.n_minus <= 0 or self.n_sat_exposure <= 0:
            raise DomainError("n_minus and n_sat_exposure must be positive")


def beer_lambert_saturated(
    z: FloatArray, sigma_rho: FloatArray, i_in: float, rtol: float = 1e-12
) -> float:
    """Integrate dI/dz = -sigma0 rho(z) I / (1 + I) through a sampled profile."""
    z = np.asarray(z, dtype=float)
    sigma_rho = np.asarray(sigma_rho, dtype=float)
    if i_in <= 0:
        raise DomainError("input intensity must be positive")
    if np.any(sigma_rho < 0):
        raise DomainError("density must be non-negative")
    if z.size < 2 or np.any(np.diff(z) <= 0):
        raise DomainError("z must be strictly increasing with at least two samples")

    def slope(position: float, intensity: FloatArray) -> FloatArray:
        density = np.interp(position, z, sigma_rho)
        return -density * intensity / (1.0 + intensity)

    solution = scipy.integrate.solve_ivp(
        slope,
        (z[0], z[-1]),
        [i_in],
        method="DOP853",
        rtol=rtol,
        atol=rtol * i_in * 1e-3,
        max_step=float(np.min(np.diff(z))),
    )
    if not solution.success:
        raise IntegrationError(
            f"absorption integration failed after {solution.nfev} evaluations: "
            f"{solution.message}"
        )
    return float(solution.y[0, -1])


def column_density(z: FloatArray, sigma_rho: FloatArray) -> float:
    return float(scipy.integrate.trapezoid(sigma_rho, z))


def od_corrected(
    n_plus: npt.ArrayLike,
    n_minus: npt.ArrayLike,
    n_sat_exposure: npt.ArrayLike,
    on_invalid: Literal["raise", "flag"] = "raise",
) -> FloatArray:
    """-ln(N+/N-) - (N+ - N-)/N_sat; non-positive N+ raises or yields NaN."""
    n_plus = np.asarray(n_plus, dtype=float)
    invalid = n_plus <= 0
    if np.any(invalid) and on_invalid == "raise":
        raise DomainError(f"{int(np.sum(invalid))} pixels have non-positive N+")
    safe = np.where(invalid, 1.0, n_plus)
    od = -np.log(safe / n_minus) - (safe - n_minus) / n_sat_exposure
    return np.where(invalid, np.nan, od)


def od_of_sample(sample: OdSample) -> float:
    return float(od_corrected(sample.n_plus, sample.n_minus, sample.n_sat_exposure))


def od_noise(
    n_plus: npt.ArrayLike,
    n_sat_exposure: npt.ArrayLike,
    excess_noise_factor: float = 1.0,
) -> FloatArray:
    n_plus = np.asarray(n_plus, dtype=float)
    if np.any(n_plus <= 0):
        raise DomainError("n_plus must be positive")
    return np.sqrt(excess_noise_factor / n_plus) * (1.0 + n_plus / n_sat_exposure)


def invert_od(od: float, n_minus: float, n_sat_exposure: float) -> float:
    """N+ giving `od` for the probe counts `n_minus`; bracketed root in log N+."""
    if od < 0:
        raise DomainError("optical depth must be non-negative")
    if od == 0:
        return n_minus
    log_minus = math.log(n_minus)

    def residual(log_plus: float) -> float:
        plus = math.exp(log_plus)
        return log_minus - log_plus - (plus - n_minus) / n_sat_exposure - od

    lower = log_minus - od - n_minus / n_sat_exposure - 1.0
    try:
        log_plus = scipy.optimize.brentq(
            residual, lower, log_minus, xtol=1e-14, rtol=1e-15
        )
    except (ValueError, RuntimeError) as error:
        message = f"cannot invert OD {od} for N- = {n_minus}: {error}"
        raise DomainError(message) from error
    return math.exp(log_plus)


class Snr(NamedTuple):
    snr: float
    n_plus: float
    low_intensity_limit: float
    high_intensity_limit: float


def snr_model(
    od: float, n_minus: float, n_sat_exposure: float, excess_noise_factor: float = 1.0
) -> Snr:
    if n_minus <= 0 or n_sat_exposure <= 0:
        raise DomainError("n_minus and n_sat_exposure must be positive")
    n_plus = invert_od(od, n_minus, n_sat_exposure)
    noise = float(od_noise(n_plus, n_sat_exposure, excess_noise_factor))
    return Snr(
        snr=od / noise,
        n_plus=n_plus,
        low_intensity_limit=math.sqrt(n_minus) * math.exp(-od / 2.0) * od,
        high_intensity_limit=n_sat_exposure / math.sqrt(n_minus) * od,
    )


def optimal_probe_counts(od: float, n_sat_exposure: float) -> float:
    """Probe counts N- minimising the OD noise at fixed optical depth."""

    def noise(log_minus: float) -> float:
        n_plus = invert_od(od, math.exp(log_minus), n_sat_exposure)
        return float(od_noise(n_plus, n_sat_exposure))

    centre = math.log(n_sat_exposure)
    result = scipy.optimize.minimize_scalar(
        noise,
        bounds=(centre - 5.0, centre + od + 5.0),
        method="bounded",
        options={"xatol": 1e-8},
    )
    return float(math.exp(result.x))


def snr_curve(
    od: float,
    n_sat_exposure: float,
    ratios: FloatArray,
    excess_noise_factor: float = 1.0,
) -> list[Snr]:
    """SNR against N-/N_sat."""
    return [
        snr_model(od, ratio * n_sat_exposure, n_sat_exposure, excess_noise_factor)
        for ratio in np.asarray(ratios, dtype=float)
    ]
