import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.calibration.nsat import NsatCalibration
from src.custom_types.images import Ellipse, FloatArray, ImageStack
from src.errors import DomainError, InsufficientDataError, ShotRejected
from src.parallel import bounded_map
from src.physics.atom import RB87_D2, AtomSpec
from src.physics.ramsey import wrap_phase
from src.physics.stark import phase_per_saturation
from src.pixelmap.castin_dum import rescale_to_insitu
from src.pixelmap.f2map import F2Map, StopBand, compute_f2_map, stripe_filter
from src.pixelmap.registration import center_clouds

logger = logging.getLogger(__name__)

MIN_PHASE_POINTS = 4
MIN_LEVELS = 3
NEWTON_STEPS = 25


@dataclass(frozen=True)
class PhaseMap:
    phi: FloatArray
    sigma: FloatArray
    contrast: FloatArray
    valid: np.ndarray


@dataclass(frozen=True)
class IntensityMap:
    """Fractional probe-intensity difference at the atoms, relative to the global fit.

    `frac` = I_local / I - 1 and `nsat_frac` = (N_sat,local - N_sat) / N_sat.
    """

    frac: FloatArray
    sigma: FloatArray
    nsat_local: FloatArray
    nsat_frac: FloatArray
    valid: np.ndarray
    roi_ellipse: Ellipse

    def roi_mean(self) -> float:
        inside = self.roi_ellipse.mask(self.frac.shape) & self.valid
        return float(np.mean(self.frac[inside])) if inside.any() else math.nan


def fit_phase_map(stacks: Sequence[F2Map], dphi_grid: FloatArray) -> PhaseMap:
    """Per-pixel linear fringe fit of f2 onto [1, cos, sin] of the probe phase.

    Pixels with fewer than four measured samples are invalid.
    """
    grid = np.asarray(dphi_grid, dtype=float)
    if len(stacks) != grid.size:
        raise DomainError(f"{len(stacks)} maps for {grid.size} probe phases")
    values = np.stack([m.values for m in stacks])
    weights = np.stack([m.mask for m in stacks]).astype(float)
    basis = np.stack([np.ones_like(grid), np.cos(grid), np.sin(grid)], axis=1)

    normal = np.einsum("kij,ka,kb->ijab", weights, basis, basis)
    rhs = np.einsum("kij,kij,ka->ija", weights, values, basis)
    count = weights.sum(axis=0)
    conditioned = np.abs(np.linalg.det(normal)) > 1e-9
    valid = (count >= MIN_PHASE_POINTS) & conditioned
    normal[~valid] = np.eye(3)
    coeffs = np.linalg.solve(normal, rhs[..., np.newaxis])[..., 0]

    fitted = np.einsum("ka,ija->kij", basis, coeffs)
    rss = np.sum(weights * (values - fitted) ** 2, axis=0)
    dof = np.maximum(count - 3, 1)
    covariance = np.linalg.inv(normal) * (rss / dof)[..., np.newaxis, np.newaxis]
    a, b = coeffs[..., 1], coeffs[..., 2]
    norm2 = np.maximum(a**2 + b**2, 1e-30)
    gradient = np.stack([np.zeros_like(a), -b / norm2, a / norm2], axis=-1)
    variance = np.einsum("ija,ijab,ijb->ij", gradient, covariance, gradient)

    return PhaseMap(
        phi=np.where(valid, wrap_phase(np.arctan2(b, a)), np.nan),
        sigma=np.where(valid, np.sqrt(np.clip(variance, 0, None)), np.nan),
        contrast=np.where(valid, 2.0 * np.sqrt(a**2 + b**2), np.nan),
        valid=valid,
    )


def fit_nsat_map(
    phi_fields: Sequence[PhaseMap],
    n_adu_levels: Sequence[float],
    calibration: NsatCalibration,
    roi_ellipse: Ellipse,
    *,
    delta_bar: float,
    t_p_s: float,
    t_exposure_s: Optional[float] = None,
    atom: AtomSpec = RB87_D2,
) -> IntensityMap:
    """Per-pixel 1/N_sat from phase against probe level, sharing the global phi0.

    Gauss-Newton on circular residuals, started from the global calibration.
    """
    if len(phi_fields) < MIN_LEVELS or len(phi_fields) != len(n_adu_levels):
        raise InsufficientDataError(
            f"need one phase map per level and at least {MIN_LEVELS} levels"
        )
    exposure_us = (t_p_s if t_exposure_s is None else t_exposure_s) * 1e6
    slope = float(
        phase_per_saturation(delta_bar, max(t_p_s - calibration.dt0_s, 0.0), atom)
    )
    levels = np.asarray(n_adu_levels, dtype=float)
    c = (levels / exposure_us * slope)[:, np.newaxis, np.newaxis]
    phi = np.stack([np.nan_to_num(f.phi) for f in phi_fields])
    mask = np.stack([f.valid for f in phi_fields]).astype(float)

    u_global = 1.0 / calibration.n_sat
    u = np.full(phi.shape[1:], u_global)
    curvature = np.sum(mask * c**2, axis=0)
    safe = np.where(curvature > 0, curvature, 1.0)
    for _ in range(NEWTON_STEPS):
        residual = wrap_phase(calibration.phi0 + u * c - phi)
        u = u - np.sum(mask * c * residual, axis=0) / safe

    residual = wrap_phase(calibration.phi0 + u * c - phi)
    count = mask.sum(axis=0)
    valid = (count >= MIN_LEVELS) & (u > 0)
    rss = np.sum(mask * residual**2, axis=0)
    sigma_u = np.sqrt(rss / np.maximum(count - 1, 1) / safe)
    nan = np.full(u.shape, np.nan)
    result = IntensityMap(
        frac=np.where(valid, u / u_global - 1.0, nan),
        sigma=np.where(valid, sigma_u / u_global, nan),
        nsat_local=np.where(valid, 1.0 / np.where(u > 0, u, 1.0), nan),
        nsat_frac=np.where(valid, u_global / np.where(u > 0, u, 1.0) - 1.0, nan),
        valid=valid,
        roi_ellipse=roi_ellipse,
    )
    logger.info(
        "intensity map: %d valid pixels, ROI mean %.4f",
        int(valid.sum()),
        result.roi_mean(),
    )
    return result


class PixelMapConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    stop_bands: list[StopBand] = [
        StopBand(center=(0.0, 0.125), semi_axes=(0.03, 0.03))
    ]
    taper: float = Field(0.5, ge=0, le=1)


def _shot_f2(
    image: FloatArray,
    roi_shape: tuple[int, int],
    stretch: float,
    sg_displacement: tuple[float, float],
    config: PixelMapConfig,
    insitu_shape: tuple[int, int],
) -> F2Map:
    try:
        pair = center_clouds(image, roi_shape, sg_displacement)
    except ShotRejected as exc:
        logger.warning("shot rejected: %s", exc)
        return F2Map.invalid(insitu_shape)
    scales = (1.0, stretch, 1.0)
    n1 = rescale_to_insitu(pair.n1, scales)[: insitu_shape[0]]
    n2 = rescale_to_insitu(pair.n2, scales)[: insitu_shape[0]]
    f2 = compute_f2_map(n1, n2, pixel_scale=(1.0 / stretch, 1.0))
    return stripe_filter(f2, config.stop_bands, config.taper)


def run_intensity_map(
    shots: ImageStack,
    dphi_grid: FloatArray,
    n_adu_levels: Sequence[float],
    calibration: NsatCalibration,
    roi_ellipse: Ellipse,
    *,
    insitu_shape: tuple[int, int],
    stretch: float,
    sg_displacement: tuple[float, float],
    delta_bar: float,
    t_p_s: float,
    t_exposure_s: Optional[float] = None,
    atom: AtomSpec = RB87_D2,
    config: PixelMapConfig = PixelMapConfig(),
    workers: int = 1,
) -> IntensityMap:
    """Registration, rescaling, f2 maps, stripe filter, phase maps and N_sat map.

    Shots are ordered level-major: all probe phases of the first level come first.
    """
    points = len(dphi_grid)
    if shots.n_frames != points * len(n_adu_levels):
        raise DomainError(
            f"{shots.n_frames} shots for {len(n_adu_levels)} levels x {points} phases"
        )
    roi_shape = (int(round(insitu_shape[0] * stretch)), insitu_shape[1])
    maps = bounded_map(
        lambda image: _shot_f2(
            image, roi_shape, stretch, sg_displacement, config, insitu_shape
        ),
        list(shots.dark_subtracted()),
        workers,
    )
    phase_maps = [
        fit_phase_map(maps[level * points : (level + 1) * points], dphi_grid)
        for level in range(len(n_adu_levels))
    ]
    return fit_nsat_map(
        phase_maps,
        n_adu_levels,
        calibration,
        roi_ellipse,
        delta_bar=delta_bar,
        t_p_s=t_p_s,
        t_exposure_s=t_exposure_s,
        atom=atom,
    )
