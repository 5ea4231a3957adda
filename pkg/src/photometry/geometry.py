from pydantic import BaseModel, ConfigDict, Field
from scipy.constants import c as SPEED_OF_LIGHT
from scipy.constants import h as PLANCK

from src.custom_types.sensor import SensorModel
from src.errors import DomainError

MICROSECOND = 1e-6


class ImagingGeometry(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    pixel_pitch_m: float = Field(13e-6, gt=0)
    magnification: float = Field(36.0, gt=0)

    @property
    def object_pixel_area_m2(self) -> float:
        return (self.pixel_pitch_m / self.magnification) ** 2


def photon_energy(wavelength_m: float) -> float:
    return PLANCK * SPEED_OF_LIGHT / wavelength_m


def _require_non_negative(**values: float) -> None:
    for name, value in values.items():
        if value < 0:
            raise DomainError(f"{name} must be non-negative, got {value}")


def photons_in_pulse(power_w: float, t_m_s: float, wavelength_m: float) -> float:
    _require_non_negative(power_w=power_w, t_m_s=t_m_s)
    if wavelength_m <= 0:
        raise DomainError("wavelength must be positive")
    return power_w * t_m_s / photon_energy(wavelength_m)


def quantum_efficiency(n_adu_integrated: float, c: float, n_ph: float) -> float:
    """QE = N_ADU / (C N_ph); values above 1 are unphysical."""
    if n_adu_integrated <= 0 or c <= 0 or n_ph <= 0:
        raise DomainError("quantum efficiency needs positive counts, C and photons")
    qe = n_adu_integrated / (c * n_ph)
    if qe > 1.0:
        raise DomainError(f"quantum efficiency {qe:.3f} exceeds 1")
    return qe


def intensity_from_counts(
    n_adu: float,
    sensor: SensorModel,
    transfer: float,
    geometry: ImagingGeometry,
    t_m_s: float,
    wavelength_m: float,
) -> float:
    """Intensity at the object plane (W/m^2) that produced `n_adu` counts/pixel."""
    if transfer <= 0 or t_m_s <= 0:
        raise DomainError("transfer efficiency and pulse time must be positive")
    detected = sensor.c_adu_per_pe * sensor.qe * transfer
    area_time = geometry.object_pixel_area_m2 * t_m_s
    return n_adu * photon_energy(wavelength_m) / (detected * area_time)


def system_efficiency(
    n_sat: float,
    sensor_c: float,
    geometry: ImagingGeometry,
    wavelength_m: float,
    i_sat_w_m2: float,
) -> float:
    """QE * T implied by N_sat counts/pixel/us at I_sat."""
    if n_sat <= 0 or sensor_c <= 0 or i_sat_w_m2 <= 0:
        raise DomainError("system efficiency needs positive N_sat, C and I_sat")
    area_time = geometry.object_pixel_area_m2 * MICROSECOND
    return photon_energy(wavelength_m) * n_sat / (sensor_c * area_time * i_sat_w_m2)


def implied_transfer(qe_times_t: float, qe: float) -> float:
    return qe_times_t / qe
