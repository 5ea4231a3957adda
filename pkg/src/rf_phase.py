import logging
import math
from typing import NamedTuple, Optional

from src.custom_types.datasets import Trace
from src.errors import FitError, InsufficientDataError
from src.fitting.sine import DEFAULT_F_TOL_HZ, SineFit, fit_sine_segment
from src.physics.ramsey import wrap_phase

logger = logging.getLogger(__name__)

DEFAULT_GUARD_PERIODS = 2.0


class PhaseJump(NamedTuple):
    """Probe phase step across an RF update, radians in (-pi, pi].

    `discrepancy` is realized minus commanded, wrapped; both are None when no
    command was given.
    """

    phi_minus: float
    phi_plus: float
    dphi_p: float
    commanded: Optional[float]
    discrepancy: Optional[float]
    before: SineFit
    after: SineFit


def extract_phase_jump(
    trace: Trace,
    update_time: float,
    guard: Optional[float] = None,
    f_nominal: Optional[float] = None,
    f_tol: float = DEFAULT_F_TOL_HZ,
    commanded: Optional[float] = None,
    jitter_bound: float = 0.0,
) -> PhaseJump:
    """Fit the trace on each side of `update_time` and difference the phases.

    `update_time` is the nominal trigger time. The true transition may sit up
    to `jitter_bound` away from it, so the default guard is that bound plus
    two carrier periods. Both segments share `update_time` as time origin;
    with a common carrier the step does not depend on where the origin sits.
    """
    f_nominal = trace.f_nominal_hz if f_nominal is None else f_nominal
    assert jitter_bound >= 0.0, "jitter bound must be non-negative"
    if guard is None:
        guard = jitter_bound + DEFAULT_GUARD_PERIODS / f_nominal
    windows = {
        "before": (float(trace.t[0]), update_time - guard),
        "after": (update_time + guard, float(trace.t[-1])),
    }
    fits: dict[str, SineFit] = {}
    for name, window in windows.items():
        try:
            fits[name] = fit_sine_segment(
                trace, window, f_nominal, f_tol, t_origin=update_time
            )
        except InsufficientDataError as exc:
            raise InsufficientDataError(f"{name} segment: {exc}") from exc
        if not fits[name].fit.converged:
            raise FitError(f"{name} segment fit failed: {fits[name].fit.message}")

    phi_minus, phi_plus = fits["before"].phi_e, fits["after"].phi_e
    dphi_p = float(wrap_phase(math.pi * (phi_plus - phi_minus)))
    discrepancy = None
    if commanded is not None:
        commanded = float(wrap_phase(commanded))
        discrepancy = float(wrap_phase(dphi_p - commanded))
    logger.debug("phase step %.5f rad (%.5f cycles)", dphi_p, dphi_p / (2 * math.pi))
    return PhaseJump(
        phi_minus=phi_minus,
        phi_plus=phi_plus,
        dphi_p=dphi_p,
        commanded=commanded,
        discrepancy=discrepancy,
        before=fits["before"],
        after=fits["after"],
    )
