import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.calibration.phases import PhasePoint
from src.custom_types.images import FloatArray
from src.errors import InsufficientDataError
from src.fitting.least_squares import least_squares
from src.fitting.result import FitOptions, FitResult
from src.physics.atom import RB87_D2, AtomSpec
from src.physics.ramsey import wrap_phase
from src.physics.stark import phase_per_saturation

logger = logging.getLogger(__name__)

SIGMA_FLOOR_RAD = 1e-6
MAX_WRAPS = 100
GRID_PHASE_STEP = 0.05
GRID_CHUNK = 2048
DT0_SCAN_FRACTION = 0.5
DT0_SCAN_STEPS = 21


@dataclass(frozen=True)
class NsatCalibration:
    """Joint fit of the saturation count rate, phase offset and dead time.

    `n_sat` is in counts/pixel/us, `phi0` in radians and `dt0_s` in seconds.
    `covariance` is over (n_sat, phi0[, dt0_s]). A leakage-only fit leaves
    `n_sat` as NaN with `nsat_identifiable=False`.
    """

    n_sat: float
    n_sat_sigma: float
    phi0: float
    phi0_sigma: float
    dt0_s: float
    dt0_sigma: float
    dt0_fixed: bool
    covariance: FloatArray
    reduced_chi2: float
    n_points: int
    fit: FitResult
    nsat_identifiable: bool = True

    def summary(self) -> dict[str, object]:
        return {
            "n_sat_counts_per_px_us": self.n_sat,
            "n_sat_sigma": self.n_sat_sigma,
            "phi0_rad": self.phi0,
            "phi0_sigma": self.phi0_sigma,
            "phi0_cycles": self.phi0 / (2.0 * math.pi),
            "dt0_s": self.dt0_s,
            "dt0_sigma": self.dt0_sigma,
            "dt0_fixed": self.dt0_fixed,
            "reduced_chi2": self.reduced_chi2,
            "n_points": self.n_points,
            "nsat_identifiable": self.nsat_identifiable,
            "converged": self.fit.converged,
        }


@dataclass(frozen=True)
class _Design:
    phi: FloatArray
    weights: FloatArray
    rate: FloatArray
    slope: FloatArray
    t_p: FloatArray

    @classmethod
    def build(
        cls, points: Sequence[PhasePoint], atom: AtomSpec, weighted: bool
    ) -> "_Design":
        phi = np.array([p.phi for p in points], dtype=float)
        sigma = np.array([p.phi_sigma for p in points], dtype=float)
        sigma = np.where(np.isfinite(sigma), np.maximum(sigma, SIGMA_FLOOR_RAD), 1.0)
        delta_bar = np.array([p.delta_bar for p in points], dtype=float)
        return cls(
            phi=phi,
            weights=1.0 / sigma**2 if weighted else np.ones_like(phi),
            rate=np.array([p.n_adu / (p.t_exposure_s * 1e6) for p in points]),
            slope=phase_per_saturation(delta_bar, 1.0, atom),
            t_p=np.array([p.t_p_s for p in points], dtype=float),
        )

    def coefficients(self, dt0_s: float) -> FloatArray:
        """Phase per unit 1/N_sat for each point."""
        return self.rate * self.slope * np.maximum(self.t_p - dt0_s, 0.0)


def _axis_count(points: Sequence[PhasePoint]) -> dict[str, int]:
    return {
        "intensity": len({p.n_adu for p in points}),
        "detuning": len({p.delta_bar for p in points}),
        "pulse_time": len({p.t_p_s for p in points}),
    }


def _circular_mean(phases: FloatArray, weights: FloatArray) -> FloatArray:
    return np.angle(np.sum(weights * np.exp(1j * phases), axis=-1))


def _grid_search(design: _Design, c: FloatArray) -> tuple[float, float, float]:
    """Coarse scan over u = 1/N_sat with phi0 at the circular mean.

    The scan runs in units of the largest point's phase, u * max|c|, from one
    step up to MAX_WRAPS turns, so it scales with the data.
    """
    scale = max(float(np.max(np.abs(c))), 1e-300)
    grid = np.arange(1, round(2.0 * math.pi * MAX_WRAPS / GRID_PHASE_STEP) + 1)
    grid = grid * GRID_PHASE_STEP / scale
    best = (math.inf, float(grid[0]), 0.0)
    for start in range(0, grid.size, GRID_CHUNK):
        u = grid[start : start + GRID_CHUNK, np.newaxis]
        shifted = design.phi - u * c
        phi0 = _circular_mean(shifted, design.weights)
        cost = np.sum(
            design.weights * wrap_phase(shifted - phi0[:, np.newaxis]) ** 2, axis=1
        )
        index = int(np.argmin(cost))
        if cost[index] < best[0]:
            best = (float(cost[index]), float(u[index, 0]), float(phi0[index]))
    if best[1] >= grid[-1]:
        logger.warning("N_sat scan ended at its edge (%d turns)", MAX_WRAPS)
    return best[1], best[2], best[0]


def _leakage_only(
    design: _Design, dt0_s: float, options: FitOptions
) -> NsatCalibration:
    logger.warning("only zero-intensity fringes given; N_sat is not identifiable")
    fit = least_squares(
        lambda x, p: np.full(x.size, p[0]),
        [float(_circular_mean(design.phi, design.weights))],
        np.arange(design.phi.size, dtype=float),
        design.phi,
        names=("phi0",),
        weights=design.weights,
        circular=True,
        options=options,
    )
    dof = max(design.phi.size - 1, 1)
    rss = float(np.sum(design.weights * wrap_phase(fit.params[0] - design.phi) ** 2))
    return NsatCalibration(
        n_sat=math.nan,
        n_sat_sigma=math.nan,
        phi0=float(wrap_phase(fit.params[0])),
        phi0_sigma=fit.error("phi0"),
        dt0_s=dt0_s,
        dt0_sigma=0.0,
        dt0_fixed=True,
        covariance=np.array([[math.nan, math.nan], [math.nan, fit.covariance[0, 0]]]),
        reduced_chi2=rss / dof,
        n_points=design.phi.size,
        fit=fit,
        nsat_identifiable=False,
    )


def joint_fit_nsat(
    points: Sequence[PhasePoint],
    leakage_set: Sequence[PhasePoint] = (),
    atom: AtomSpec = RB87_D2,
    fit_dt0: bool = False,
    *,
    dt0_s: float = 0.0,
    weighted: bool = True,
    options: FitOptions = FitOptions(),
) -> NsatCalibration:
    """Fit phi = phi0 + n_adu / (N_sat t_exp[us]) * dphi/ds(delta_bar, t_p - dt0).

    Residuals are compared modulo 2 pi. `dt0_s` is the fixed dead time, or the
    starting value when `fit_dt0` is set.
    """
    swept = [p for p in points if p.n_adu > 0]
    every = [*points, *leakage_set]
    if not every:
        raise InsufficientDataError("no phase points to fit")
    design = _Design.build(every, atom, weighted)
    if not swept:
        return _leakage_only(design, dt0_s, options)

    axes = _axis_count(swept)
    if sum(count >= 2 for count in axes.values()) < 2:
        raise InsufficientDataError(
            f"points must vary along at least two axes, got distinct counts {axes}"
        )
    if fit_dt0 and axes["pulse_time"] < 2:
        raise InsufficientDataError("floating dt0 needs a pulse-time sweep")

    t_min = float(np.min(design.t_p))
    candidates: list[float] = [dt0_s]
    if fit_dt0:
        candidates += list(np.linspace(0.0, DT0_SCAN_FRACTION * t_min, DT0_SCAN_STEPS))
    scans = [(*_grid_search(design, design.coefficients(t)), t) for t in candidates]
    u0, phi0, _, dt0_start = min(scans, key=lambda scan: scan[2])
    # fitted in units of the largest point's phase at the starting dead time
    scale = float(np.max(np.abs(design.coefficients(dt0_start))))
    if scale == 0.0:
        raise InsufficientDataError("every swept pulse is shorter than the dead time")
    m = design.phi.size
    x = np.arange(m, dtype=float)

    def model(_: FloatArray, p: FloatArray) -> FloatArray:
        dt0 = p[2] if fit_dt0 else dt0_s
        return p[1] + p[0] / scale * design.coefficients(dt0)

    def jacobian(_: FloatArray, p: FloatArray) -> FloatArray:
        dt0 = p[2] if fit_dt0 else dt0_s
        columns = [design.coefficients(dt0) / scale, np.ones(m)]
        if fit_dt0:
            running = design.t_p > dt0
            columns.append(-p[0] / scale * design.rate * design.slope * running)
        return np.column_stack(columns)

    names = ("phase_scale", "phi0", "dt0_s") if fit_dt0 else ("phase_scale", "phi0")
    p0 = [u0 * scale, phi0, dt0_start] if fit_dt0 else [u0 * scale, phi0]
    lower = [1e-12, -np.inf, -t_min] if fit_dt0 else [1e-12, -np.inf]
    upper = [np.inf, np.inf, 0.999 * t_min] if fit_dt0 else [np.inf, np.inf]
    fit = least_squares(
        model,
        p0,
        x,
        design.phi,
        names=names,
        bounds=(lower, upper),
        weights=design.weights,
        jacobian=jacobian,
        circular=True,
        options=options,
    )
    if not fit.converged:
        logger.warning("joint N_sat fit did not converge: %s", fit.message)

    u = float(fit.params[0]) / scale
    transform = np.eye(len(names))
    transform[0, 0] = -scale / float(fit.params[0]) ** 2
    covariance = transform @ fit.covariance @ transform.T
    sigma = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    residuals = wrap_phase(model(x, fit.params) - design.phi)
    dof = max(m - len(names), 1)
    calibration = NsatCalibration(
        n_sat=1.0 / u,
        n_sat_sigma=float(sigma[0]),
        phi0=float(wrap_phase(fit.params[1])),
        phi0_sigma=float(sigma[1]),
        dt0_s=float(fit.params[2]) if fit_dt0 else dt0_s,
        dt0_sigma=float(sigma[2]) if fit_dt0 else 0.0,
        dt0_fixed=not fit_dt0,
        covariance=covariance,
        reduced_chi2=float(np.sum(design.weights * residuals**2)) / dof,
        n_points=m,
        fit=fit,
    )
    logger.info(
        "N_sat = %.4g +/- %.2g counts/px/us, phi0/2pi = %.4f",
        calibration.n_sat,
        calibration.n_sat_sigma,
        calibration.phi0 / (2.0 * math.pi),
    )
    return calibration


def wrapped_residuals(
    points: Sequence[PhasePoint], calibration: NsatCalibration, atom: AtomSpec
) -> FloatArray:
    """Model minus measured phase on (-pi, pi] for each point."""
    design = _Design.build(points, atom, weighted=False)
    shift = design.coefficients(calibration.dt0_s) / calibration.n_sat
    model = calibration.phi0 + shift
    return wrap_phase(model - design.phi)


@dataclass(frozen=True)
class SawtoothCollapse:
    """-phi against V_ac t_m / hbar; on a good calibration points sit on x mod 2 pi."""

    abscissa: FloatArray
    ordinate: FloatArray
    deviation: FloatArray
    excluded: FloatArray
    rms: float
    reference_x: FloatArray
    reference_y: FloatArray


def sawtooth_collapse(
    points: Sequence[PhasePoint],
    calibration: NsatCalibration,
    atom: AtomSpec,
    exclude: Optional[FloatArray] = None,
) -> SawtoothCollapse:
    assert calibration.nsat_identifiable, "sawtooth needs an identified N_sat"
    design = _Design.build(points, atom, weighted=False)
    abscissa = -design.coefficients(calibration.dt0_s) / calibration.n_sat
    ordinate = wrap_phase(-(design.phi - calibration.phi0))
    deviation = wrap_phase(ordinate - abscissa)
    excluded = (
        np.zeros(len(points), dtype=bool)
        if exclude is None
        else np.asarray(exclude, dtype=bool)
    )
    kept = deviation[~excluded]
    rms = float(np.sqrt(np.mean(kept**2))) if kept.size else math.nan
    top = float(np.max(abscissa)) if abscissa.size else 2.0 * math.pi
    reference_x = np.linspace(min(0.0, float(np.min(abscissa, initial=0.0))), top, 512)
    return SawtoothCollapse(
        abscissa=abscissa,
        ordinate=ordinate,
        deviation=deviation,
        excluded=excluded,
        rms=rms,
        reference_x=reference_x,
        reference_y=wrap_phase(reference_x),
    )
