import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from src.custom_types.datasets import FringeDataset
from src.errors import CalibrationError
from src.fitting.fringe import FringeFit, fit_fringe
from src.parallel import bounded_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhasePoint:
    """Fitted fringe phase together with the probe settings that produced it."""

    phi: float
    phi_sigma: float
    n_adu: float
    delta_bar: float
    t_p_s: float
    t_exposure_s: float
    contrast: float = 1.0
    center_shift: float = 0.0
    label: str = ""

    def __post_init__(self) -> None:
        assert self.n_adu >= 0, "n_adu must be non-negative"


def _fit_one(dataset: FringeDataset) -> Optional[FringeFit]:
    try:
        result = fit_fringe(dataset)
    except CalibrationError as exc:
        logger.warning("excluded %s: %s", dataset.label or "fringe", exc)
        return None
    if not result.fit.converged:
        logger.warning(
            "excluded %s: %s", dataset.label or "fringe", result.fit.message
        )
        return None
    return result


def extract_phases(
    campaign: Sequence[FringeDataset], workers: int = 1
) -> list[PhasePoint]:
    """One PhasePoint per fringe that fits; failures are logged and skipped."""
    fits = bounded_map(_fit_one, list(campaign), workers)
    points = [
        PhasePoint(
            phi=result.params.phi,
            phi_sigma=result.fit.error("phi"),
            n_adu=dataset.n_adu,
            delta_bar=dataset.delta_bar,
            t_p_s=dataset.t_p_s,
            t_exposure_s=dataset.exposure_s,
            contrast=result.params.contrast,
            center_shift=result.params.center_shift,
            label=dataset.label,
        )
        for dataset, result in zip(campaign, fits)
        if result is not None
    ]
    logger.info("extracted %d of %d fringe phases", len(points), len(campaign))
    return points
