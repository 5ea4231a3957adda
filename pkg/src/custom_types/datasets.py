from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.custom_types.images import FloatArray
from src.errors import InsufficientDataError


@dataclass(frozen=True)
class FringeDataset:
    """One sampled Ramsey fringe plus the probe settings it was taken with.

    `n_adu` is the probe exposure in counts/pixel for the actual pulse, and
    `t_exposure_s` the duration those counts were integrated over (defaults to t_p).
    """

    dphi_p: FloatArray
    f2: FloatArray
    n_adu: float
    delta_bar: float
    t_p_s: float
    t_exposure_s: Optional[float] = None
    label: str = ""

    def __post_init__(self) -> None:
        assert self.dphi_p.shape == self.f2.shape, "dphi_p and f2 must match"
        assert self.n_adu >= 0, "n_adu must be non-negative"

    @property
    def exposure_s(self) -> float:
        return self.t_p_s if self.t_exposure_s is None else self.t_exposure_s


@dataclass(frozen=True)
class Trace:
    t: FloatArray
    v: FloatArray
    f_nominal_hz: float

    def __post_init__(self) -> None:
        if self.t.shape != self.v.shape or self.t.ndim != 1:
            raise InsufficientDataError("trace t and v must be 1-D and equally long")
        if len(self.t) < 8:
            raise InsufficientDataError(f"trace has {len(self.t)} samples, need 8")
        if np.any(np.diff(self.t) <= 0):
            raise InsufficientDataError("trace times must be strictly increasing")

    def window(self, start: float, stop: float) -> "Trace":
        keep = (self.t >= start) & (self.t <= stop)
        return Trace(self.t[keep], self.v[keep], self.f_nominal_hz)
