"""Two-dimensional beam and cloud profile fits.

Images are indexed [row, column]; x runs along columns and y along rows.
"""

import math
from typing import NamedTuple

import numpy as np

from src.custom_types.images import FloatArray
from src.fitting.least_squares import least_squares
from src.fitting.result import FitOptions, FitResult

GAUSSIAN_NAMES = ("amplitude", "center_x", "center_y", "sigma_x", "sigma_y", "offset")
TF_NAMES = ("peak", "center_x", "center_y", "radius_x", "radius_y", "offset")
TF_EXPONENT = 1.5


class GaussianFit(NamedTuple):
    amplitude: float
    center_x: float
    center_y: float
    sigma_x: float
    sigma_y: float
    offset: float
    fit: FitResult

    @property
    def integrated_counts(self) -> float:
        return math.pi * self.sigma_x * self.sigma_y * self.amplitude / 2.0


class ThomasFermiFit(NamedTuple):
    peak: float
    center_x: float
    center_y: float
    radius_x: float
    radius_y: float
    offset: float
    fit: FitResult

    @property
    def atom_number(self) -> float:
        return self.peak * self.radius_x * self.radius_y * 2.0 * math.pi / 5.0


def pixel_grid(shape: tuple[int, ...]) -> tuple[FloatArray, FloatArray]:
    rows, cols = np.indices(shape[:2], dtype=float)
    return cols.ravel(), rows.ravel()


def moments(image: FloatArray) -> tuple[float, float, float, float, float, float]:
    """Offset, excess peak, centroid and variances of the positive excess."""
    offset = float(np.percentile(image, 10))
    excess = np.clip(image - offset, 0.0, None)
    total = excess.sum()
    if total <= 0:
        h, w = image.shape
        return offset, 0.0, w / 2.0, h / 2.0, w / 4.0, h / 4.0
    rows, cols = np.indices(image.shape, dtype=float)
    cx = float((excess * cols).sum() / total)
    cy = float((excess * rows).sum() / total)
    var_x = float((excess * (cols - cx) ** 2).sum() / total)
    var_y = float((excess * (rows - cy) ** 2).sum() / total)
    return offset, float(image.max() - offset), cx, cy, var_x, var_y


def _profile_values(p: FloatArray) -> tuple[float, ...]:
    return (
        float(p[0]),
        float(p[1]),
        float(p[2]),
        abs(float(p[3])),
        abs(float(p[4])),
        float(p[5]),
    )


def gaussian2d(x: FloatArray, y: FloatArray, p: FloatArray) -> FloatArray:
    u = (x - p[1]) / p[3]
    v = (y - p[2]) / p[4]
    return p[0] * np.exp(-2.0 * (u**2 + v**2)) + p[5]


def fit_gaussian2d(
    image: FloatArray, options: FitOptions = FitOptions()
) -> GaussianFit:
    """Fit A exp(-2((x-bx)/sx)^2 - 2((y-by)/sy)^2) + d; sx, sy are 1/e^2 radii."""
    image = np.asarray(image, dtype=float)
    x, y = pixel_grid(image.shape)
    offset, peak, cx, cy, var_x, var_y = moments(image)
    # exp(-2 u^2) has standard deviation sigma / 2
    sx, sy = 2.0 * math.sqrt(max(var_x, 0.25)), 2.0 * math.sqrt(max(var_y, 0.25))
    p0 = [peak, cx, cy, sx, sy, offset]

    def model(_: FloatArray, p: FloatArray) -> FloatArray:
        return gaussian2d(x, y, p)

    def jacobian(_: FloatArray, p: FloatArray) -> FloatArray:
        u = (x - p[1]) / p[3]
        v = (y - p[2]) / p[4]
        e = np.exp(-2.0 * (u**2 + v**2))
        ae = p[0] * e
        return np.column_stack(
            [
                e,
                ae * 4.0 * u / p[3],
                ae * 4.0 * v / p[4],
                ae * 4.0 * u**2 / p[3],
                ae * 4.0 * v**2 / p[4],
                np.ones_like(x),
            ]
        )

    fit = least_squares(
        model,
        p0,
        x,
        image.ravel(),
        names=GAUSSIAN_NAMES,
        jacobian=jacobian,
        options=options,
    )
    return GaussianFit(*_profile_values(fit.params), fit)


def thomas_fermi2d(x: FloatArray, y: FloatArray, p: FloatArray) -> FloatArray:
    u = (x - p[1]) / p[3]
    v = (y - p[2]) / p[4]
    return p[0] * np.clip(1.0 - u**2 - v**2, 0.0, None) ** TF_EXPONENT + p[5]


def fit_thomas_fermi2d(
    image: FloatArray, options: FitOptions = FitOptions()
) -> ThomasFermiFit:
    """Fit a column-integrated Thomas-Fermi profile with exponent 3/2."""
    image = np.asarray(image, dtype=float)
    x, y = pixel_grid(image.shape)
    offset, peak, cx, cy, var_x, var_y = moments(image)
    # the (1 - r^2)^(3/2) marginal has variance R^2 / 7
    rx, ry = math.sqrt(7.0 * max(var_x, 0.25)), math.sqrt(7.0 * max(var_y, 0.25))
    p0 = [peak, cx, cy, rx, ry, offset]

    def model(_: FloatArray, p: FloatArray) -> FloatArray:
        return thomas_fermi2d(x, y, p)

    def jacobian(_: FloatArray, p: FloatArray) -> FloatArray:
        u = (x - p[1]) / p[3]
        v = (y - p[2]) / p[4]
        q = np.clip(1.0 - u**2 - v**2, 0.0, None)
        root = TF_EXPONENT * np.sqrt(q) * p[0]
        return np.column_stack(
            [
                q**TF_EXPONENT,
                root * 2.0 * u / p[3],
                root * 2.0 * v / p[4],
                root * 2.0 * u**2 / p[3],
                root * 2.0 * v**2 / p[4],
                np.ones_like(x),
            ]
        )

    fit = least_squares(
        model, p0, x, image.ravel(), names=TF_NAMES, jacobian=jacobian, options=options
    )
    return ThomasFermiFit(*_profile_values(fit.params), fit)
