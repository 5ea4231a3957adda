from typing import NamedTuple, Optional

import numpy as np

from src.custom_types.images import FloatArray
from src.errors import FitError, InsufficientDataError
from src.fitting.result import FitResult, sigma_from_covariance

QUADRATIC_NAMES = ("c0", "c1", "c2")


class QuadraticFit(NamedTuple):
    c0: float
    c1: float
    c2: float
    fit: FitResult


def fit_quadratic(
    x: FloatArray, y: FloatArray, weights: Optional[FloatArray] = None
) -> QuadraticFit:
    """Closed-form weighted least squares for y = c0 + c1 x + c2 x^2."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.unique(x).size < 3:
        raise InsufficientDataError("quadratic fit needs at least 3 distinct x values")
    root_w = np.ones_like(x) if weights is None else np.sqrt(np.asarray(weights, float))

    design = np.column_stack([np.ones_like(x), x, x**2]) * root_w[:, np.newaxis]
    scale = np.linalg.norm(design, axis=0)
    scaled = design / scale
    solution, _, rank, _ = np.linalg.lstsq(scaled, y * root_w, rcond=None)
    if rank < 3:
        raise FitError(f"quadratic design matrix is rank deficient (rank {rank})")
    coefficients = solution / scale

    residual = y - (coefficients[0] + coefficients[1] * x + coefficients[2] * x**2)
    dof = x.size - 3
    variance = float(np.sum((root_w * residual) ** 2) / dof) if dof > 0 else 0.0
    covariance = np.linalg.inv(scaled.T @ scaled) / np.outer(scale, scale) * variance

    fit = FitResult(
        names=QUADRATIC_NAMES,
        params=coefficients,
        sigma=sigma_from_covariance(covariance),
        covariance=covariance,
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        converged=True,
        iterations=0,
        message="closed form",
        n_points=int(x.size),
    )
    return QuadraticFit(*(float(c) for c in coefficients), fit)
