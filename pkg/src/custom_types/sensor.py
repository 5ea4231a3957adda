from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class SensorModel(BaseModel):
    """Camera response: ADU = C * photoelectrons + read noise + dark level.

    `excess_noise_factor` is F^2: 2 for an electron-multiplying register, 1 for a
    conventional CCD.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    c_adu_per_pe: float = Field(7.65, gt=0)
    qe: float = Field(0.401, gt=0, le=1)
    read_noise_adu: float = Field(32.0, ge=0)
    excess_noise_factor: Literal[1, 2] = 2
    dark_level_adu: float = 0.0
    saturation_adu: float = Field(65535.0, gt=0)
