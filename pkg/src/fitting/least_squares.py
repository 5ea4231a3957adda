import logging
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from src.custom_types.images import FloatArray
from src.errors import DomainError, InsufficientDataError
from src.fitting.result import (
    FitOptions,
    FitResult,
    failed_result,
    sigma_from_covariance,
)
from src.physics.ramsey import wrap_phase

logger = logging.getLogger(__name__)

Model = Callable[[FloatArray, FloatArray], FloatArray]
Jacobian = Callable[[FloatArray, FloatArray], FloatArray]
Bounds = tuple[Sequence[float], Sequence[float]]


def least_squares(
    model: Model,
    p0: Sequence[float],
    x: FloatArray,
    y: FloatArray,
    *,
    names: Optional[Sequence[str]] = None,
    bounds: Optional[Bounds] = None,
    weights: Optional[FloatArray] = None,
    jacobian: Optional[Jacobian] = None,
    circular: bool = False,
    options: FitOptions = FitOptions(),
) -> FitResult:
    """Damped Gauss-Newton fit of `model(x, p)` to `y`.

    Residuals are `sqrt(w) * (model - y)`, wrapped onto (-pi, pi] when `circular`.
    The covariance is pinv(J^T J) scaled by the residual variance RSS / (m - n).
    Singular Jacobians and optimizer failures come back with `converged=False`.
    """
    p0 = np.asarray(p0, dtype=float)
    y = np.asarray(y, dtype=float)
    if names is None:
        names = [f"p{i}" for i in range(p0.size)]
    names = tuple(names)
    m, n = y.size, p0.size
    if m < n:
        raise InsufficientDataError(f"{m} points cannot constrain {n} parameters")

    lower, upper = (
        (np.full(n, -np.inf), np.full(n, np.inf))
        if bounds is None
        else (np.asarray(bounds[0], float), np.asarray(bounds[1], float))
    )
    if np.any(p0 < lower) or np.any(p0 > upper):
        raise DomainError(f"initial parameters {p0} outside bounds")

    root_w = np.ones(m) if weights is None else np.sqrt(np.asarray(weights, float))

    def residual(p: FloatArray) -> FloatArray:
        r = model(x, p) - y
        if circular:
            r = wrap_phase(r)
        return root_w * r

    def residual_jacobian(p: FloatArray) -> FloatArray:
        assert jacobian is not None
        return root_w[:, np.newaxis] * jacobian(x, p)

    try:
        solution = scipy.optimize.least_squares(
            residual,
            p0,
            jac=residual_jacobian if jacobian is not None else "3-point",
            bounds=(lower, upper),
            method="trf",
            x_scale="jac",
            xtol=options.xtol,
            gtol=options.gtol,
            ftol=options.ftol,
            max_nfev=options.max_iterations,
        )
    except (ValueError, np.linalg.LinAlgError) as error:
        logger.warning("least squares failed: %s", error)
        return failed_result(names, p0, str(error))

    jac = np.atleast_2d(solution.jac)
    rss = float(np.sum(solution.fun**2))
    dof = m - n
    rank = np.linalg.matrix_rank(jac)
    converged = bool(solution.success) and rank == n
    message = solution.message if rank == n else f"rank-deficient Jacobian ({rank}<{n})"
    if dof > 0:
        covariance = np.linalg.pinv(jac.T @ jac) * (rss / dof)
    else:
        covariance = np.zeros((n, n)) if rss == 0 else np.full((n, n), np.inf)
    covariance = (covariance + covariance.T) / 2.0
    raw = solution.fun / root_w

    return FitResult(
        names=names,
        params=solution.x,
        sigma=sigma_from_covariance(covariance),
        covariance=covariance,
        residual_rms=float(np.sqrt(np.mean(raw**2))),
        converged=converged,
        iterations=int(solution.nfev),
        message=message,
        n_points=m,
    )
