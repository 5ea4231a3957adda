import logging
import math

import numpy as np
import scipy.integrate

from src.custom_types.images import FloatArray
from src.errors import DomainError, IntegrationError

logger = logging.getLogger(__name__)


def castin_dum_scales(
    trap_freqs: tuple[float, float, float], t_tof: float, rtol: float = 1e-10
) -> tuple[float, float, float]:
    """Scale factors of a released condensate after `t_tof` seconds.

    Integrates lambda_i'' = omega_i^2 / (lambda_i lambda_x lambda_y lambda_z)
    from lambda_i(0) = 1, lambda_i'(0) = 0; `trap_freqs` are angular (rad/s).
    """
    omega = np.asarray(trap_freqs, dtype=float)
    if omega.shape != (3,) or np.any(omega <= 0):
        raise DomainError("three positive trap frequencies are required")
    if t_tof < 0:
        raise DomainError("time of flight must be non-negative")
    if t_tof == 0:
        return 1.0, 1.0, 1.0

    def rhs(_: float, state: FloatArray) -> FloatArray:
        scales = state[:3]
        return np.concatenate([state[3:], omega**2 / (scales * np.prod(scales))])

    solution = scipy.integrate.solve_ivp(
        rhs,
        (0.0, t_tof),
        np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0]),
        method="DOP853",
        rtol=rtol,
        atol=rtol * 1e-2,
    )
    if not solution.success:
        raise IntegrationError(
            f"scaling equations failed at t = {solution.t[-1]:.3e} s after "
            f"{solution.nfev} evaluations: {solution.message}"
        )
    lx, ly, lz = solution.y[:3, -1]
    logger.info("scales after %.2f ms: %.4f %.4f %.4f", t_tof * 1e3, lx, ly, lz)
    return float(lx), float(ly), float(lz)


def tof_rows(insitu_rows: int, stretch: float) -> int:
    """Height in time-of-flight pixels of a region `insitu_rows` tall in situ."""
    return int(round(insitu_rows * stretch))


def insitu_row(
    offset_from_center: FloatArray, tof_height: int, stretch: float
) -> FloatArray:
    """In-situ row index of a TOF position given relative to the cloud centre."""
    return (offset_from_center + tof_height / 2.0) / stretch - 0.5


def rescale_to_insitu(image: FloatArray, scales: tuple[float, ...]) -> FloatArray:
    """Compress rows by 1/lambda_y preserving summed counts; columns are untouched.

    Output row j collects input rows [j lambda_y, (j + 1) lambda_y).
    """
    stretch = float(scales[1])
    if any(s < 1.0 for s in scales[:2]):
        raise DomainError(f"expansion scales {scales} must be at least 1")
    image = np.asarray(image, dtype=float)
    if stretch == 1.0:
        return image.copy()
    height = image.shape[0]
    edges = np.arange(height + 1, dtype=float)
    cumulative = np.vstack([np.zeros(image.shape[1]), np.cumsum(image, axis=0)])
    rows = math.ceil(height / stretch)
    new_edges = np.minimum(np.arange(rows + 1) * stretch, height)
    resampled = np.column_stack(
        [np.interp(new_edges, edges, column) for column in cumulative.T]
    )
    return np.diff(resampled, axis=0)
