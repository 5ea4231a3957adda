from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle rows [y0, y1) by columns [x0, x1)."""

    y0: int
    y1: int
    x0: int
    x1: int

    def __post_init__(self) -> None:
        assert self.y1 > self.y0 and self.x1 > self.x0, f"empty rectangle {self}"

    @property
    def slices(self) -> tuple[slice, slice]:
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    @property
    def size(self) -> int:
        return (self.y1 - self.y0) * (self.x1 - self.x0)

    def fits(self, shape: tuple[int, ...]) -> bool:
        inside_y = self.y0 >= 0 and self.y1 <= shape[0]
        return inside_y and self.x0 >= 0 and self.x1 <= shape[1]


@dataclass(frozen=True)
class ImageStack:
    frames: FloatArray
    pixel_pitch_m: float = 13e-6
    exposure_s: float = 0.0
    label: str = ""
    dark: Optional[FloatArray] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        assert self.frames.ndim == 3, "frames must be shaped (n, height, width)"
        if self.dark is not None:
            assert self.dark.shape == self.frames.shape[1:], "dark frame shape mismatch"

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return int(self.frames.shape[1]), int(self.frames.shape[2])

    def dark_subtracted(self) -> FloatArray:
        if self.dark is None:
            return self.frames
        return self.frames - self.dark[np.newaxis, :, :]


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse in pixel coordinates, (row, column) order."""

    center_y: float
    center_x: float
    semi_y: float
    semi_x: float

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        rows, cols = np.indices(shape, dtype=float)
        u = (cols - self.center_x) / self.semi_x
        v = (rows - self.center_y) / self.semi_y
        return u**2 + v**2 <= 1.0

    def as_dict(self) -> dict[str, float]:
        return {
            "center_y": self.center_y,
            "center_x": self.center_x,
            "semi_y": self.semi_y,
            "semi_x": self.semi_x,
        }
