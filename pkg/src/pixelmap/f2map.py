import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.signal
from pydantic import BaseModel, ConfigDict, Field

from src.custom_types.images import FloatArray
from src.errors import DomainError

logger = logging.getLogger(__name__)

F2_VALID_RANGE = (-0.1, 1.1)
F2_FILL = 0.5
TUKEY_SAMPLES = 4097


@dataclass(frozen=True)
class F2Map:
    """Pixelwise g2 fraction; `mask` is True where the value is measured."""

    values: FloatArray
    mask: np.ndarray
    pixel_scale: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        assert self.values.shape == self.mask.shape, "values and mask must match"

    @classmethod
    def invalid(cls, shape: tuple[int, int]) -> "F2Map":
        return cls(np.full(shape, F2_FILL), np.zeros(shape, dtype=bool))


def compute_f2_map(
    n1_img: FloatArray,
    n2_img: FloatArray,
    pixel_scale: tuple[float, float] = (1.0, 1.0),
) -> F2Map:
    """N2 / (N1 + N2) with ratios outside [-0.1, 1.1] replaced by 0.5 and masked.

    Kept values are clipped into [0, 1].
    """
    n1 = np.asarray(n1_img, dtype=float)
    n2 = np.asarray(n2_img, dtype=float)
    total = n1 + n2
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(total != 0, n2 / total, np.nan)
    low, high = F2_VALID_RANGE
    mask = np.isfinite(ratio) & (ratio >= low) & (ratio <= high)
    values = np.where(mask, np.clip(np.nan_to_num(ratio), 0.0, 1.0), F2_FILL)
    return F2Map(values, mask, pixel_scale)


class StopBand(BaseModel):
    """Elliptical notch in cycles/pixel, (ky, kx) order; mirrored through DC.

    `inner_fraction` > 0 turns the notch into an annulus.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    center: tuple[float, float]
    semi_axes: tuple[float, float]
    inner_fraction: float = Field(0.0, ge=0, lt=1)

    @property
    def empty(self) -> bool:
        return min(self.semi_axes) <= 0


def _radius(band: StopBand, ky: FloatArray, kx: FloatArray, sign: float) -> FloatArray:
    v = (ky - sign * band.center[0]) / band.semi_axes[0]
    u = (kx - sign * band.center[1]) / band.semi_axes[1]
    return np.sqrt(u**2 + v**2)


def _inside(band: StopBand, radius: FloatArray) -> np.ndarray:
    return (radius >= band.inner_fraction) & (radius <= 1.0)


def _notch_weight(band: StopBand, radius: FloatArray, taper: float) -> FloatArray:
    profile = scipy.signal.windows.tukey(TUKEY_SAMPLES, alpha=taper)
    abscissa = np.linspace(0.0, 1.0, TUKEY_SAMPLES)
    inner = band.inner_fraction
    if inner > 0:
        position = (radius - inner) / (1.0 - inner)
    else:
        position = 0.5 + radius / 2.0
    inside = _inside(band, radius)
    return np.where(inside, np.interp(np.clip(position, 0, 1), abscissa, profile), 0.0)


def stop_band_window(
    shape: tuple[int, int], bands: Sequence[StopBand], taper: float = 0.5
) -> FloatArray:
    """Fourier-space transmission: 1 outside the notches, Tukey-tapered inside."""
    if not 0 <= taper <= 1:
        raise DomainError(f"taper fraction {taper} outside [0, 1]")
    ky, kx = np.meshgrid(
        np.fft.fftfreq(shape[0]), np.fft.fftfreq(shape[1]), indexing="ij"
    )
    window = np.ones(shape)
    for band in bands:
        if band.empty:
            continue
        for sign in (1.0, -1.0):
            if _inside(band, _radius(band, np.zeros(1), np.zeros(1), sign))[0]:
                raise DomainError(f"stop band {band.center} covers DC")
            window *= 1.0 - _notch_weight(band, _radius(band, ky, kx, sign), taper)
    return window


def stripe_filter(
    f2_map: F2Map, bands: Sequence[StopBand], taper: float = 0.5
) -> F2Map:
    """Remove periodic stripes by notching their Fourier components.

    Repeated application is a no-op only for a hard notch (taper 0).
    """
    window = stop_band_window(f2_map.values.shape, bands, taper)
    if np.all(window == 1.0):
        return replace(f2_map, values=f2_map.values.copy())
    spectrum = np.fft.fft2(f2_map.values)
    filtered = np.fft.ifft2(spectrum * window).real
    return replace(f2_map, values=filtered)


@dataclass(frozen=True)
class PowerSpectrum:
    ky: FloatArray
    kx: FloatArray
    power: FloatArray


def power_spectrum(values: FloatArray) -> PowerSpectrum:
    """Centred |FFT|^2 with frequency axes in cycles/pixel."""
    values = np.asarray(values, dtype=float)
    spectrum = np.fft.fftshift(np.abs(np.fft.fft2(values - values.mean())) ** 2)
    return PowerSpectrum(
        ky=np.fft.fftshift(np.fft.fftfreq(values.shape[0])),
        kx=np.fft.fftshift(np.fft.fftfreq(values.shape[1])),
        power=spectrum,
    )
