import json
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.custom_types.sensor import SensorModel
from src.errors import ConfigError
from src.photometry.geometry import ImagingGeometry
from src.physics.atom import AtomSpec
from src.pixelmap.intensity import PixelMapConfig
from src.synth.fringes import FringeCampaignConfig
from src.synth.probe import BeamConfig, ProbeStackConfig
from src.synth.rf import RfConfig
from src.synth.tof import TofConfig
from src.synth.truth import REFERENCE_DT0_S, REFERENCE_N_SAT, REFERENCE_PHI0


class TruthConfig(BaseModel):
    """Values injected by the simulators."""

    model_config = ConfigDict(extra="forbid")

    n_sat_counts_per_px_us: float = Field(REFERENCE_N_SAT, gt=0)
    phi0_rad: float = REFERENCE_PHI0
    dt0_s: float = Field(REFERENCE_DT0_S, ge=0)


class FitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    fit_dt0: bool = False
    dt0_s: float = Field(REFERENCE_DT0_S, ge=0)
    weighted: bool = True
    sawtooth_exclude_labels: list[str] = []


class SnrConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    od: list[float] = [0.1, 0.5, 1.0, 2.0]
    n_sat_exposure_counts: float = Field(27.2 * 18.4, gt=0)
    ratio_min: float = Field(1e-3, gt=0)
    ratio_max: float = Field(1e3, gt=0)
    points: int = Field(121, ge=2)


class RfAnalysisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    guard_s: Optional[float] = Field(None, gt=0)
    jitter_bound_s: float = Field(30e-9, ge=0)
    f_tol_hz: float = Field(2e3, gt=0)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    atom: AtomSpec = AtomSpec()
    sensor: SensorModel = SensorModel()
    geometry: ImagingGeometry = ImagingGeometry()
    truth: TruthConfig = TruthConfig()
    fringe_campaign: FringeCampaignConfig = FringeCampaignConfig()
    probe_stacks: ProbeStackConfig = ProbeStackConfig()
    tof: TofConfig = TofConfig()
    beam: BeamConfig = BeamConfig()
    rf: RfConfig = RfConfig()
    rf_analysis: RfAnalysisConfig = RfAnalysisConfig()
    fit: FitConfig = FitConfig()
    stripe_filter: PixelMapConfig = PixelMapConfig()
    snr: SnrConfig = SnrConfig()
    seed: Optional[int] = 2024
    workers: int = Field(1, ge=1)

    @property
    def phi0_cycles(self) -> float:
        return self.truth.phi0_rad / (2.0 * math.pi)


def _violations(error: ValidationError) -> list[str]:
    return [
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    ]


def parse_config(document: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(document)
    except ValidationError as exc:
        violations = _violations(exc)
        raise ConfigError(
            f"configuration has {len(violations)} problem(s)", violations
        ) from exc


def load_config(path: Optional[str]) -> RunConfig:
    """Read a JSON run configuration; None gives the defaults."""
    if path is None:
        return RunConfig()
    with open(path, "r") as f:
        try:
            document = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path} is not valid JSON", [str(exc)]) from exc
    if not isinstance(document, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return parse_config(document)
