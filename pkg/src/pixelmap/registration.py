"""Locate the two Stern-Gerlach separated clouds and crop them onto a common grid."""

import logging
import math
from typing import NamedTuple, Optional

import numpy as np
import scipy.ndimage

from src.custom_types.images import FloatArray
from src.errors import ShotRejected
from src.fitting.least_squares import least_squares
from src.fitting.profiles import TF_EXPONENT, moments, pixel_grid
from src.fitting.result import FitOptions, FitResult

logger = logging.getLogger(__name__)

TILTED_TF_NAMES = (
    "peak",
    "center_x",
    "center_y",
    "radius_x",
    "radius_y",
    "offset",
    "tilt_x",
    "tilt_y",
)
BOX_MARGIN = 0.3


class CloudCenter(NamedTuple):
    row: float
    col: float
    fit: FitResult


class RegisteredPair(NamedTuple):
    """State-1 and state-2 crops of one shot, centred on their envelope fits."""

    n1: FloatArray
    n2: FloatArray
    centers: tuple[CloudCenter, CloudCenter]


def _tilted_thomas_fermi(
    image: FloatArray, options: FitOptions
) -> tuple[float, float, FitResult]:
    """Thomas-Fermi envelope times a linear occupation tilt; returns (row, col)."""
    x, y = pixel_grid(image.shape)
    offset, peak, cx, cy, var_x, var_y = moments(image)
    rx, ry = math.sqrt(7.0 * max(var_x, 0.25)), math.sqrt(7.0 * max(var_y, 0.25))

    def parts(p: FloatArray) -> tuple[FloatArray, ...]:
        u = (x - p[1]) / p[3]
        v = (y - p[2]) / p[4]
        q = np.clip(1.0 - u**2 - v**2, 0.0, None)
        return u, v, q, 1.0 + p[6] * u + p[7] * v

    def model(_: FloatArray, p: FloatArray) -> FloatArray:
        _, _, q, tilt = parts(p)
        return p[0] * q**TF_EXPONENT * tilt + p[5]

    def jacobian(_: FloatArray, p: FloatArray) -> FloatArray:
        u, v, q, tilt = parts(p)
        base = q**TF_EXPONENT
        root = TF_EXPONENT * np.sqrt(q) * tilt
        return np.column_stack(
            [
                base * tilt,
                p[0] * (root * 2.0 * u - base * p[6]) / p[3],
                p[0] * (root * 2.0 * v - base * p[7]) / p[4],
                p[0] * (root * 2.0 * u**2 - base * p[6] * u) / p[3],
                p[0] * (root * 2.0 * v**2 - base * p[7] * v) / p[4],
                np.ones_like(x),
                p[0] * base * u,
                p[0] * base * v,
            ]
        )

    fit = least_squares(
        model,
        [peak, cx, cy, rx, ry, offset, 0.0, 0.0],
        x,
        image.ravel(),
        names=TILTED_TF_NAMES,
        jacobian=jacobian,
        options=options,
    )
    return float(fit.params[2]), float(fit.params[1]), fit


def locate_clouds(
    image: FloatArray,
    sg_displacement: Optional[tuple[float, float]] = None,
    smoothing_px: float = 2.0,
    threshold: float = 0.05,
    options: FitOptions = FitOptions(),
) -> tuple[CloudCenter, CloudCenter]:
    """Centres of the two brightest connected clouds, state 1 first.

    Clouds are ordered along `sg_displacement` when given, otherwise by row.
    """
    image = np.asarray(image, dtype=float)
    smooth = scipy.ndimage.gaussian_filter(image, smoothing_px)
    labels, count = scipy.ndimage.label(smooth > threshold * smooth.max())
    if count < 2:
        raise ShotRejected(f"found {count} cloud(s), need two")
    sizes = scipy.ndimage.sum_labels(np.ones_like(image), labels, range(1, count + 1))
    largest = np.argsort(sizes)[::-1][:2] + 1
    boxes = scipy.ndimage.find_objects(labels)

    centers = []
    for label in largest:
        rows, cols = boxes[label - 1]
        pad_y = int(math.ceil(BOX_MARGIN * (rows.stop - rows.start)))
        pad_x = int(math.ceil(BOX_MARGIN * (cols.stop - cols.start)))
        y0, x0 = max(rows.start - pad_y, 0), max(cols.start - pad_x, 0)
        y1 = min(rows.stop + pad_y, image.shape[0])
        x1 = min(cols.stop + pad_x, image.shape[1])
        row, col, fit = _tilted_thomas_fermi(image[y0:y1, x0:x1], options)
        if not fit.converged:
            where = f"({row + y0:.1f}, {col + x0:.1f})"
            raise ShotRejected(f"cloud fit near {where} failed: {fit.message}")
        centers.append(CloudCenter(row + y0, col + x0, fit))

    direction = np.asarray(sg_displacement if sg_displacement else (1.0, 0.0))
    centers.sort(key=lambda c: float(np.dot(direction, (c.row, c.col))))
    return centers[0], centers[1]


def crop_centered(
    image: FloatArray, center: tuple[float, float], shape: tuple[int, int]
) -> FloatArray:
    """Bilinear crop of `shape` whose geometric centre lands on `center`."""
    height, width = shape
    rows = center[0] - (height - 1) / 2.0 + np.arange(height, dtype=float)
    cols = center[1] - (width - 1) / 2.0 + np.arange(width, dtype=float)
    grid_rows, grid_cols = np.meshgrid(rows, cols, indexing="ij")
    return scipy.ndimage.map_coordinates(
        image, [grid_rows, grid_cols], order=1, mode="constant", cval=0.0
    )


def center_clouds(
    image: FloatArray,
    roi_shape: tuple[int, int],
    sg_displacement: Optional[tuple[float, float]] = None,
    options: FitOptions = FitOptions(),
) -> RegisteredPair:
    first, second = locate_clouds(image, sg_displacement, options=options)
    for center in (first, second):
        inside = (
            center.row - (roi_shape[0] - 1) / 2.0 >= 0
            and center.row + (roi_shape[0] - 1) / 2.0 <= image.shape[0] - 1
            and center.col - (roi_shape[1] - 1) / 2.0 >= 0
            and center.col + (roi_shape[1] - 1) / 2.0 <= image.shape[1] - 1
        )
        if not inside:
            raise ShotRejected(
                f"ROI {roi_shape} around ({center.row:.1f}, {center.col:.1f}) "
                "leaves the image"
            )
    return RegisteredPair(
        n1=crop_centered(image, (first.row, first.col), roi_shape),
        n2=crop_centered(image, (second.row, second.col), roi_shape),
        centers=(first, second),
    )
