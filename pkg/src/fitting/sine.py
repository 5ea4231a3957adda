import dataclasses
import math
from typing import NamedTuple, Optional

import numpy as np

from src.custom_types.datasets import Trace
from src.custom_types.images import FloatArray
from src.errors import InsufficientDataError
from src.fitting.least_squares import least_squares
from src.fitting.result import FitOptions, FitResult
from src.physics.ramsey import wrap_phase

SINE_NAMES = ("amplitude", "detune", "phi_e", "offset")
DEFAULT_F_TOL_HZ = 2e3
MIN_CYCLES = 3.0


class SineFit(NamedTuple):
    """g(t) = A sin(2 pi f (t - t_origin) + pi phi_e) + g0, phi_e in (-1, 1]."""

    amplitude: float
    frequency_hz: float
    phi_e: float
    offset: float
    t_origin: float
    fit: FitResult


def fit_sine_segment(
    trace: Trace,
    window: tuple[float, float],
    f_nominal: Optional[float] = None,
    f_tol: float = DEFAULT_F_TOL_HZ,
    t_origin: Optional[float] = None,
    options: FitOptions = FitOptions(),
) -> SineFit:
    f_nominal = trace.f_nominal_hz if f_nominal is None else f_nominal
    start, stop = window
    if (stop - start) * f_nominal < MIN_CYCLES:
        raise InsufficientDataError(
            f"window of {stop - start:.3e} s holds fewer than {MIN_CYCLES:g} cycles"
        )
    segment = trace.window(start, stop)
    origin = start if t_origin is None else t_origin
    t = segment.t - origin

    def model(x: FloatArray, p: FloatArray) -> FloatArray:
        frequency = f_nominal + p[1] * f_tol
        return p[0] * np.sin(2.0 * math.pi * frequency * x + math.pi * p[2]) + p[3]

    def jacobian(x: FloatArray, p: FloatArray) -> FloatArray:
        frequency = f_nominal + p[1] * f_tol
        argument = 2.0 * math.pi * frequency * x + math.pi * p[2]
        slope = p[0] * np.cos(argument)
        return np.column_stack(
            [
                np.sin(argument),
                slope * 2.0 * math.pi * f_tol * x,
                slope * math.pi,
                np.ones_like(x),
            ]
        )

    carrier = 2.0 * math.pi * f_nominal * t
    design = np.column_stack([np.sin(carrier), np.cos(carrier), np.ones_like(t)])
    (a, b, g0), *_ = np.linalg.lstsq(design, segment.v, rcond=None)
    p0 = [math.hypot(a, b), 0.0, math.atan2(b, a) / math.pi, g0]

    fit = least_squares(
        model,
        p0,
        t,
        segment.v,
        names=SINE_NAMES,
        bounds=([-np.inf, -1.0, -np.inf, -np.inf], [np.inf, 1.0, np.inf, np.inf]),
        jacobian=jacobian,
        options=options,
    )
    params = fit.params.copy()
    if params[0] < 0:
        params[0], params[2] = -params[0], params[2] + 1.0
    params[2] = float(wrap_phase(math.pi * params[2])) / math.pi
    fit = dataclasses.replace(fit, params=params)
    return SineFit(
        amplitude=float(params[0]),
        frequency_hz=f_nominal + float(params[1]) * f_tol,
        phi_e=float(params[2]),
        offset=float(params[3]),
        t_origin=origin,
        fit=fit,
    )
