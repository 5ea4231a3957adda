from __future__ import annotations

import math
from dataclasses import dataclass
import sys

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import DomainError

TWO_PI = 2.0 * math.pi
POLARIZATION_LIMIT = 15.0 / 14.0


class AtomSpec(BaseModel):
    """Atomic constants of the probed transition, all in SI units.

    Defaults describe the Rb-87 D2 line (F=2 -> F'=3 cycling transition):
    Gamma = 2pi x 6.0666 MHz, lambda = 780.241 nm, ground splitting
    2pi x 6.834682611 GHz, excited F'=3/F'=2 splitting 2pi x 266.65 MHz and
    I_sat = 1.669 mW/cm^2 for sigma+ light.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma_rad_s: float = Field(TWO_PI * 6.0666e6, gt=0)
    wavelength_m: float = Field(780.241e-9, gt=0)
    delta_g_rad_s: float = Field(TWO_PI * 6.834682611e9, gt=0)
    delta_e_rad_s: float = Field(TWO_PI * 266.65e6, gt=0)
    i_sat_w_m2: float = Field(16.6933, gt=0)

    @model_validator(mode="after")
    def check_splittings(self) -> Self:
        if self.delta_g_rad_s <= self.delta_e_rad_s:
            raise ValueError("delta_g_rad_s must exceed delta_e_rad_s")
        return self

    @property
    def sigma0_m2(self) -> float:
        return 3.0 * self.wavelength_m**2 / TWO_PI

    def with_polarization_impurity(self, epsilon: float) -> AtomSpec:
        scale = polarization_isat_scale(epsilon)
        return self.model_copy(update={"i_sat_w_m2": self.i_sat_w_m2 * scale})


RB87_D2 = AtomSpec()


@dataclass(frozen=True)
class ProbePulse:
    s: float
    delta_bar: float
    t_p_s: float
    dt0_s: float = 0.0

    def __post_init__(self) -> None:
        if self.delta_bar == 0:
            raise DomainError("probe detuning delta_bar must be non-zero")
        if self.t_p_s < 0:
            raise DomainError(f"pulse time must be non-negative, got {self.t_p_s}")

    @property
    def t_m_s(self) -> float:
        return max(self.t_p_s - self.dt0_s, 0.0)


@dataclass(frozen=True)
class RamseyParams:
    contrast: float
    phi: float
    center_shift: float = 0.0
    phi0: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.contrast <= 1.0:
            raise DomainError(f"contrast {self.contrast} outside [0, 1]")
        if not -math.pi < self.phi <= math.pi:
            raise DomainError(f"phase {self.phi} not wrapped to (-pi, pi]")
        if abs(self.center_shift) >= 0.5:
            raise DomainError(f"center shift {self.center_shift} has |b| >= 0.5")


def polarization_isat_scale(epsilon: float) -> float:
    """Factor on the effective I_sat when a fraction epsilon of the probe is sigma-."""
    if not 0.0 <= epsilon < POLARIZATION_LIMIT:
        raise DomainError(f"polarization impurity {epsilon} outside [0, 15/14)")
    return 1.0 / (1.0 - 14.0 * epsilon / 15.0)
