import logging
import math
from typing import NamedTuple, Sequence

import numpy as np

from src.custom_types.images import FloatArray, ImageStack
from src.errors import DomainError
from src.fitting.profiles import GaussianFit, fit_gaussian2d
from src.photometry.geometry import photons_in_pulse, quantum_efficiency

logger = logging.getLogger(__name__)


class BeamQe(NamedTuple):
    power_w: float
    n_ph: float
    n_adu_integrated: float
    qe: float
    qe_sigma: float
    fit: GaussianFit


def _integrated_sigma(beam: GaussianFit) -> float:
    """1 sigma of pi A sx sy / 2 from the fit covariance."""
    gradient = np.zeros(len(beam.fit.params))
    gradient[0] = beam.sigma_x * beam.sigma_y
    gradient[3] = beam.amplitude * beam.sigma_y
    gradient[4] = beam.amplitude * beam.sigma_x
    gradient *= math.pi / 2.0
    return float(np.sqrt(max(gradient @ beam.fit.covariance @ gradient, 0.0)))


def measure_beam_qe(
    image: FloatArray,
    power_w: float,
    t_m_s: float,
    c_adu_per_pe: float,
    wavelength_m: float,
) -> BeamQe:
    """QE from the Gaussian-integrated counts of one dark-subtracted exposure."""
    beam = fit_gaussian2d(image)
    if not beam.fit.converged:
        raise DomainError(f"beam fit at {power_w:.3g} W failed: {beam.fit.message}")
    n_ph = photons_in_pulse(power_w, t_m_s, wavelength_m)
    counts = beam.integrated_counts
    qe = quantum_efficiency(counts, c_adu_per_pe, n_ph)
    return BeamQe(
        power_w=power_w,
        n_ph=n_ph,
        n_adu_integrated=counts,
        qe=qe,
        qe_sigma=qe * _integrated_sigma(beam) / counts,
        fit=beam,
    )


def beam_campaign_qe(
    stack: ImageStack,
    powers_w: Sequence[float],
    c_adu_per_pe: float,
    wavelength_m: float,
) -> list[BeamQe]:
    """One QE estimate per exposure; the pulse time is the stack exposure."""
    if stack.n_frames != len(powers_w):
        raise DomainError(f"{stack.n_frames} exposures for {len(powers_w)} powers")
    frames = stack.dark_subtracted()
    results = [
        measure_beam_qe(frame, power, stack.exposure_s, c_adu_per_pe, wavelength_m)
        for frame, power in zip(frames, powers_w)
    ]
    for result in results:
        logger.info(
            "P = %.2f uW: QE = %.4f +/- %.4f",
            result.power_w * 1e6,
            result.qe,
            result.qe_sigma,
        )
    return results
