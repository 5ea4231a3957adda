import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.custom_types.datasets import Trace
from src.errors import DomainError
from src.physics.ramsey import wrap_phase

logger = logging.getLogger(__name__)


class RfConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    frequency_hz: float = Field(100e6, gt=0)
    sample_rate_hz: float = Field(5e9, gt=0)
    duration_s: float = Field(800e-9, gt=0)
    update_time_s: float = Field(400e-9, gt=0)
    noise: float = Field(0.01, ge=0)
    jitter_bound_s: float = Field(30e-9, ge=0)
    phase_command: float = 0.8
    phase_before: float = 0.0
    amplitude: float = Field(1.0, gt=0)


@dataclass(frozen=True)
class RfTruth:
    """Injected phase step, radians wrapped to (-pi, pi].

    `realized` includes the trigger jitter; `commanded` is what the synthesiser
    was asked for. `trigger_time_s` is the jittered update time, known only to
    the simulator.
    """

    realized: float
    commanded: float
    trigger_time_s: float
    jitter_s: float


def synth_rf_trace(
    config: RfConfig, seed: Optional[int] = None
) -> tuple[Trace, RfTruth]:
    """Digitised sinusoid with a phase-continuous-in-time step at the update.

    Before the update the waveform is A sin(2 pi f t + 2 pi p_b); afterwards it
    restarts as A sin(2 pi f (t - t0) + 2 pi p_cmd), where t0 is the update time
    snapped to a whole period and then shifted by a uniform jitter within
    +/- jitter_bound_s.
    """
    f = config.frequency_hz
    if config.sample_rate_hz <= 4.0 * f:
        raise DomainError(
            f"sample rate {config.sample_rate_hz:.3g} Hz must exceed four times "
            f"the carrier {f:.3g} Hz"
        )
    if not 0 < config.update_time_s < config.duration_s:
        raise DomainError("update time must fall inside the trace")
    rng = np.random.default_rng(seed)
    period = 1.0 / f
    t_update = round(config.update_time_s / period) * period
    jitter = float(rng.uniform(-config.jitter_bound_s, config.jitter_bound_s))
    t0 = t_update + jitter

    t = np.arange(int(round(config.duration_s * config.sample_rate_hz)))
    t = t / config.sample_rate_hz
    before = np.sin(2 * math.pi * (f * t + config.phase_before))
    after = np.sin(2 * math.pi * (f * (t - t0) + config.phase_command))
    v = config.amplitude * np.where(t < t0, before, after)
    if config.noise > 0:
        v = v + rng.normal(0.0, config.noise, t.size)

    truth = RfTruth(
        realized=float(
            wrap_phase(
                2 * math.pi * (config.phase_command - config.phase_before - f * jitter)
            )
        ),
        commanded=float(
            wrap_phase(2 * math.pi * (config.phase_command - config.phase_before))
        ),
        trigger_time_s=t0,
        jitter_s=jitter,
    )
    logger.debug("rf step realized %.4f rad, jitter %.2e s", truth.realized, jitter)
    return Trace(t=t, v=v, f_nominal_hz=f), truth
