import dataclasses
import math
from typing import NamedTuple, Optional

import numpy as np

from src.custom_types.datasets import FringeDataset
from src.custom_types.images import FloatArray
from src.errors import FitError, InsufficientDataError
from src.fitting.least_squares import least_squares
from src.fitting.result import FitOptions, FitResult
from src.physics.atom import RamseyParams
from src.physics.ramsey import fringe_values, wrap_phase

FRINGE_NAMES = ("contrast", "phi", "center_shift")


class FringeFit(NamedTuple):
    params: RamseyParams
    fit: FitResult


def harmonic_guess(dphi_p: FloatArray, f2: FloatArray) -> FloatArray:
    """(A, phi, b) from a linear fit of f2 onto [1, cos, sin] at unit frequency.

    On an evenly spaced full-period grid this is the single-bin DFT estimate.
    """
    design = np.column_stack([np.ones_like(dphi_p), np.cos(dphi_p), np.sin(dphi_p)])
    (c0, a, b), *_ = np.linalg.lstsq(design, f2, rcond=None)
    return np.array([2.0 * math.hypot(a, b), math.atan2(b, a), c0 - 0.5])


def _model(x: FloatArray, p: FloatArray) -> FloatArray:
    return fringe_values(x, p[0], p[1], p[2])


def _jacobian(x: FloatArray, p: FloatArray) -> FloatArray:
    delta = x - p[1]
    return np.column_stack(
        [np.cos(delta) / 2.0, p[0] * np.sin(delta) / 2.0, np.ones_like(x)]
    )


def fit_fringe(
    data: FringeDataset,
    weights: Optional[FloatArray] = None,
    options: FitOptions = FitOptions(),
) -> FringeFit:
    x = np.asarray(data.dphi_p, dtype=float)
    y = np.asarray(data.f2, dtype=float)
    if x.size < 4:
        raise InsufficientDataError(f"fringe has {x.size} points, need at least 4")
    if np.ptp(x) < math.pi:
        raise InsufficientDataError("fringe samples span less than half a period")

    fit = least_squares(
        _model,
        harmonic_guess(x, y),
        x,
        y,
        names=FRINGE_NAMES,
        weights=weights,
        jacobian=_jacobian,
        options=options,
    )
    params = fit.params.copy()
    covariance = fit.covariance.copy()
    if params[0] < 0:
        params[0], params[1] = -params[0], params[1] + math.pi
        covariance[0, :] *= -1.0
        covariance[:, 0] *= -1.0
    params[1] = float(wrap_phase(params[1]))
    fit = dataclasses.replace(fit, params=params, covariance=covariance)
    if not abs(params[2]) < 0.5:
        raise FitError(f"fringe fit gave center shift {params[2]:.3f} (|b| >= 0.5)")
    ramsey = RamseyParams(
        contrast=float(min(params[0], 1.0)),
        phi=float(params[1]),
        center_shift=float(params[2]),
    )
    return FringeFit(ramsey, fit)
