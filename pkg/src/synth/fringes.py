import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.custom_types.datasets import FringeDataset
from src.custom_types.images import FloatArray
from src.errors import DomainError
from src.physics.atom import ProbePulse
from src.physics.ramsey import fringe_values
from src.physics.stark import ramsey_phase_full
from src.synth.noise import frame_generators
from src.synth.truth import GroundTruth

logger = logging.getLogger(__name__)


class FringeCampaignConfig(BaseModel):
    """Sampling of the N_sat calibration campaign.

    Defaults follow the published sweeps: intensity at two detunings with a 20 us
    pulse, detuning at N_ADU = 5250, pulse time at delta_bar = 63.4 with the probe
    set to N_ADU = 3190 for a 20 us exposure, plus eight zero-intensity fringes.
    """

    model_config = ConfigDict(extra="forbid")

    points_per_fringe: int = Field(12, ge=4)
    f2_noise: float = Field(0.03, ge=0)
    contrast: float = Field(1.0, ge=0, le=1)
    center_shift: float = 0.0
    atoms_per_shot: Optional[int] = Field(None, gt=0)
    t_p_s: float = Field(20e-6, gt=0)
    intensity_sweep_detunings: list[float] = [63.4, 116.2]
    intensity_sweep_n_adu: list[float] = [
        400.0, 1200.0, 2000.0, 2800.0, 3600.0, 4400.0, 5200.0, 6000.0, 6800.0, 7600.0
    ]
    detuning_sweep_n_adu: float = Field(5250.0, gt=0)
    detuning_sweep: list[float] = [
        30.0, 40.0, 50.0, 63.4, 75.0, 90.0, 116.2, 140.0, 170.0
    ]
    time_sweep_delta_bar: float = 63.4
    time_sweep_n_adu: float = Field(3190.0, gt=0)
    time_sweep_reference_s: float = Field(20e-6, gt=0)
    time_sweep_t_p_s: list[float] = [
        4e-6, 8e-6, 12e-6, 16e-6, 20e-6, 24e-6, 28e-6, 32e-6, 36e-6, 40e-6
    ]
    leakage_fringes: int = Field(8, ge=0)
    leakage_delta_bar: float = 63.4


@dataclass(frozen=True)
class FringeCampaign:
    datasets: list[FringeDataset]
    leakage: list[FringeDataset]

    @property
    def all_datasets(self) -> list[FringeDataset]:
        return [*self.datasets, *self.leakage]


def dphi_grid(points: int) -> FloatArray:
    return np.linspace(0.0, 2.0 * math.pi, points, endpoint=False)


def synth_fringe_set(
    truth: GroundTruth,
    pulse: ProbePulse,
    dphi_grid: FloatArray,
    atoms_per_shot: Optional[int] = None,
    noise: float = 0.03,
    seed: Optional[int] = None,
    *,
    contrast: float = 1.0,
    center_shift: float = 0.0,
    t_exposure_s: Optional[float] = None,
    rng: Optional[np.random.Generator] = None,
    label: str = "",
) -> FringeDataset:
    """Sample one fringe at the probe phase predicted for `pulse`.

    The dead time of `pulse` is replaced by the truth value. `n_adu` records the
    counts the probe would give over `t_exposure_s` (default: the pulse time).
    """
    grid = np.asarray(dphi_grid, dtype=float)
    if grid.size < 2 or np.ptp(grid) == 0:
        raise DomainError("fringe grid must hold at least two distinct phases")
    rng = rng if rng is not None else np.random.default_rng(seed)
    pulse = ProbePulse(pulse.s, pulse.delta_bar, pulse.t_p_s, truth.dt0_s)
    phi = ramsey_phase_full(pulse, truth.atom) + truth.phi0

    f2 = fringe_values(grid, contrast, phi, center_shift)
    if atoms_per_shot is not None:
        f2 = rng.binomial(atoms_per_shot, np.clip(f2, 0.0, 1.0)) / atoms_per_shot
    if noise > 0:
        f2 = f2 + rng.normal(0.0, noise, grid.size)

    exposure = pulse.t_p_s if t_exposure_s is None else t_exposure_s
    return FringeDataset(
        dphi_p=grid,
        f2=f2,
        n_adu=truth.n_adu(pulse.s, exposure),
        delta_bar=pulse.delta_bar,
        t_p_s=pulse.t_p_s,
        t_exposure_s=t_exposure_s,
        label=label,
    )


def reference_fringe_campaign(
    truth: GroundTruth, config: FringeCampaignConfig, seed: Optional[int] = None
) -> FringeCampaign:
    settings: list[tuple[str, float, float, float, Optional[float]]] = []
    for delta_bar in config.intensity_sweep_detunings:
        for n_adu in config.intensity_sweep_n_adu:
            settings.append(("intensity", n_adu, delta_bar, config.t_p_s, None))
    for delta_bar in config.detuning_sweep:
        n_adu = config.detuning_sweep_n_adu
        settings.append(("detuning", n_adu, delta_bar, config.t_p_s, None))
    reference = config.time_sweep_reference_s
    for t_p in config.time_sweep_t_p_s:
        n_adu = config.time_sweep_n_adu
        delta_bar = config.time_sweep_delta_bar
        settings.append(("time", n_adu, delta_bar, t_p, reference))
    for _ in range(config.leakage_fringes):
        settings.append(("leakage", 0.0, config.leakage_delta_bar, config.t_p_s, None))

    grid = dphi_grid(config.points_per_fringe)
    generators = frame_generators(seed, len(settings))
    datasets: list[FringeDataset] = []
    leakage: list[FringeDataset] = []
    for index, ((kind, n_adu, delta_bar, t_p, exposure), rng) in enumerate(
        zip(settings, generators)
    ):
        s = truth.saturation_parameter(n_adu, exposure or t_p)
        dataset = synth_fringe_set(
            truth,
            ProbePulse(s, delta_bar, t_p, truth.dt0_s),
            grid,
            config.atoms_per_shot,
            config.f2_noise,
            contrast=config.contrast,
            center_shift=config.center_shift,
            t_exposure_s=exposure,
            rng=rng,
            label=f"{kind}-{index:03d}",
        )
        (leakage if kind == "leakage" else datasets).append(dataset)
    logger.info(
        "simulated %d fringes, %d at zero intensity", len(datasets), len(leakage)
    )
    return FringeCampaign(datasets, leakage)
