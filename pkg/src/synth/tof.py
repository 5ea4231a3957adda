import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import scipy.ndimage
from pydantic import BaseModel, ConfigDict, Field

from src.custom_types.images import Ellipse, FloatArray, ImageStack
from src.custom_types.sensor import SensorModel
from src.errors import DomainError
from src.pixelmap.castin_dum import castin_dum_scales, insitu_row, tof_rows
from src.physics.ramsey import fringe_values
from src.physics.stark import phase_per_saturation
from src.synth.noise import frame_generators
from src.synth.truth import GroundTruth, linear_gradient_map

logger = logging.getLogger(__name__)


class TofConfig(BaseModel):
    """Time-of-flight imaging campaign for the pixel-by-pixel map.

    Lengths are in pixels of the TOF imaging path unless suffixed `_m`. The
    in-situ shape and ROI ellipse describe the cloud before release;
    `stretch_y` overrides the Castin-Dum vertical scale. The default flight time
    is shorter than the 20 ms used in the lab so the stretched clouds fit
    `shot_shape_px`.
    """

    model_config = ConfigDict(extra="forbid")

    trap_freqs_hz: tuple[float, float, float] = (9.61, 113.9, 163.2)
    t_tof_s: float = Field(2.5e-3, ge=0)
    stretch_y: Optional[float] = Field(None, ge=1)
    insitu_shape_px: tuple[int, int] = (24, 64)
    cloud_radii_px: tuple[float, float] = (11.0, 30.0)
    roi_semi_axes_px: tuple[float, float] = (7.0, 20.0)
    shot_shape_px: tuple[int, int] = (180, 110)
    sg_displacement_px: tuple[float, float] = (80.0, 0.0)
    tof_pixel_m: float = Field(13e-6 / 3.06, gt=0)
    center_jitter_m: float = Field(10e-6, ge=0)
    atom_number: float = Field(2e6, gt=0)
    stripe_wavevector: tuple[float, float] = (0.0, 0.125)
    stripe_amplitude: float = Field(0.1, ge=0, lt=1)
    gradient_amplitude: float = Field(0.1, ge=0, lt=1)
    dphi_points: int = Field(5, ge=4)
    n_adu_levels: list[float] = [600.0, 900.0, 1200.0, 1500.0, 1800.0]
    delta_bar: float = 63.4
    t_p_s: float = Field(20e-6, gt=0)
    contrast: float = Field(1.0, ge=0, le=1)

    def stretch(self) -> float:
        if self.stretch_y is not None:
            return self.stretch_y
        omega = tuple(2.0 * math.pi * f for f in self.trap_freqs_hz)
        return castin_dum_scales(omega, self.t_tof_s)[1]  # type: ignore[arg-type]

    def center_jitter_px(self) -> float:
        """Shot-to-shot centre jitter in TOF pixels."""
        return self.center_jitter_m / self.tof_pixel_m

    def roi_ellipse(self) -> Ellipse:
        height, width = self.insitu_shape_px
        semi_y, semi_x = self.roi_semi_axes_px
        return Ellipse((height - 1) / 2.0, (width - 1) / 2.0, semi_y, semi_x)


@dataclass(frozen=True)
class CloudShape:
    """State-1 cloud centre and Thomas-Fermi radii, (row, column) order, TOF pixels."""

    center: tuple[float, float]
    radii: tuple[float, float]


@dataclass(frozen=True)
class Stripes:
    wavevector: tuple[float, float]
    amplitude: float


@dataclass(frozen=True)
class TofShot:
    image: FloatArray
    centers: tuple[tuple[float, float], tuple[float, float]]


@dataclass(frozen=True)
class TofCampaign:
    shots: ImageStack
    dphi_grid: FloatArray
    n_adu_levels: list[float]
    delta_bar: float
    t_p_s: float
    stretch: float
    roi_ellipse: Ellipse
    tof_roi_shape: tuple[int, int]
    insitu_shape: tuple[int, int]
    sg_displacement: tuple[float, float]
    truth: GroundTruth

    def shots_at_level(self, level: int) -> FloatArray:
        n = self.dphi_grid.size
        return self.shots.frames[level * n : (level + 1) * n]


def _thomas_fermi(
    rows: FloatArray,
    cols: FloatArray,
    center: tuple[float, float],
    radii: tuple[float, float],
) -> FloatArray:
    v = (rows - center[0]) / radii[0]
    u = (cols - center[1]) / radii[1]
    return np.clip(1.0 - u**2 - v**2, 0.0, None) ** 1.5


def _f2_at(
    f2_map: FloatArray,
    rows: FloatArray,
    cols: FloatArray,
    center: tuple[float, float],
    stretch: float,
) -> FloatArray:
    height, width = f2_map.shape
    tof_height = tof_rows(height, stretch)
    index_y = insitu_row(rows - center[0], tof_height, stretch)
    index_x = cols - center[1] + width / 2.0 - 0.5
    return scipy.ndimage.map_coordinates(
        f2_map, [index_y, index_x], order=1, mode="constant", cval=0.5
    )


def synth_tof_shot(
    cloud: CloudShape,
    f2_map: FloatArray,
    sg_displacement: tuple[float, float],
    stripes: Optional[Stripes],
    atom_number: float,
    sensor: SensorModel,
    seed: Optional[int] = None,
    *,
    shape: tuple[int, int] = (180, 110),
    stretch: float = 1.0,
    jitter_px: float = 0.0,
    noiseless: bool = False,
) -> TofShot:
    """Render both hyperfine clouds after time of flight, in atoms per pixel.

    `f2_map` is the in-situ g2 fraction; it is stretched by `stretch` along rows
    and sampled relative to each cloud centre. Each cloud gets its own stripe phase.
    """
    separation = (sg_displacement[0] / cloud.radii[0]) ** 2 + (
        sg_displacement[1] / cloud.radii[1]
    ) ** 2
    if separation < 4.0:
        raise DomainError("clouds overlap after the Stern-Gerlach displacement")
    rng = np.random.default_rng(seed)
    jitter = rng.normal(0.0, jitter_px, 2) if jitter_px > 0 else np.zeros(2)
    c1 = (cloud.center[0] + jitter[0], cloud.center[1] + jitter[1])
    c2 = (c1[0] + sg_displacement[0], c1[1] + sg_displacement[1])
    for center in (c1, c2):
        inside_y = cloud.radii[0] <= center[0] <= shape[0] - 1 - cloud.radii[0]
        inside_x = cloud.radii[1] <= center[1] <= shape[1] - 1 - cloud.radii[1]
        if not (inside_y and inside_x):
            raise DomainError(f"cloud at {center} does not fit inside {shape}")

    rows, cols = np.indices(shape, dtype=float)
    peak = 5.0 * atom_number / (2.0 * math.pi * cloud.radii[0] * cloud.radii[1])
    n1 = peak * _thomas_fermi(rows, cols, c1, cloud.radii)
    n1 *= 1.0 - _f2_at(f2_map, rows, cols, c1, stretch)
    n2 = peak * _thomas_fermi(rows, cols, c2, cloud.radii)
    n2 *= _f2_at(f2_map, rows, cols, c2, stretch)
    if stripes is not None and stripes.amplitude > 0:
        ky, kx = stripes.wavevector
        argument = 2.0 * math.pi * (ky * rows + kx * cols)
        n1 *= 1.0 + stripes.amplitude * np.cos(argument + rng.uniform(0, 2 * math.pi))
        n2 *= 1.0 + stripes.amplitude * np.cos(argument + rng.uniform(0, 2 * math.pi))
    image = n1 + n2
    if not noiseless:
        read = sensor.read_noise_adu / sensor.c_adu_per_pe
        sigma = np.sqrt(sensor.excess_noise_factor * image + read**2)
        image = image + sigma * rng.standard_normal(shape)
    return TofShot(image=image, centers=(c1, c2))


def local_f2_maps(
    truth: GroundTruth, config: TofConfig, level_n_adu: float, dphi_grid: FloatArray
) -> list[FloatArray]:
    """In-situ g2 fraction for each probe phase at one averaged intensity level."""
    assert truth.intensity_map is not None, "an intensity map is required"
    s = truth.saturation_parameter(level_n_adu, config.t_p_s)
    t_m = max(config.t_p_s - truth.dt0_s, 0.0)
    slope = phase_per_saturation(config.delta_bar, t_m, truth.atom)
    phi = truth.phi0 + s * truth.intensity_map * slope
    return [
        np.clip(fringe_values(dphi, config.contrast, phi, 0.0), 0.0, 1.0)
        for dphi in dphi_grid
    ]


def synth_tof_campaign(
    truth: GroundTruth, config: TofConfig, seed: Optional[int] = None
) -> TofCampaign:
    """One shot per (intensity level, probe phase), levels outermost."""
    if truth.intensity_map is None:
        roi = config.roi_ellipse()
        intensity = linear_gradient_map(
            config.insitu_shape_px, roi, config.gradient_amplitude
        )
        truth = replace(truth, intensity_map=intensity)
    stretch = config.stretch()
    radii = (config.cloud_radii_px[0] * stretch, config.cloud_radii_px[1])
    height, width = config.shot_shape_px
    cloud = CloudShape(
        center=(
            height / 2.0 - config.sg_displacement_px[0] / 2.0,
            width / 2.0 - config.sg_displacement_px[1] / 2.0,
        ),
        radii=radii,
    )
    stripes = Stripes(config.stripe_wavevector, config.stripe_amplitude)
    grid = np.linspace(0.0, 2.0 * math.pi, config.dphi_points, endpoint=False)

    maps = [
        f2_map
        for level in config.n_adu_levels
        for f2_map in local_f2_maps(truth, config, level, grid)
    ]
    generators = frame_generators(seed, len(maps))
    frames = [
        synth_tof_shot(
            cloud,
            f2_map,
            config.sg_displacement_px,
            stripes,
            config.atom_number,
            truth.sensor,
            seed=int(rng.integers(2**63)),
            shape=config.shot_shape_px,
            stretch=stretch,
            jitter_px=config.center_jitter_px(),
        ).image
        for f2_map, rng in zip(maps, generators)
    ]
    logger.info("simulated %d time-of-flight shots, stretch %.3f", len(frames), stretch)
    return TofCampaign(
        shots=ImageStack(frames=np.array(frames), label="tof"),
        dphi_grid=grid,
        n_adu_levels=list(config.n_adu_levels),
        delta_bar=config.delta_bar,
        t_p_s=config.t_p_s,
        stretch=stretch,
        roi_ellipse=config.roi_ellipse(),
        tof_roi_shape=(
            tof_rows(config.insitu_shape_px[0], stretch),
            config.insitu_shape_px[1],
        ),
        insitu_shape=config.insitu_shape_px,
        sg_displacement=config.sg_displacement_px,
        truth=truth,
    )
