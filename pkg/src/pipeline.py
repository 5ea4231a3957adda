"""Command stages: each simulates or loads its inputs, runs one analysis and
writes a JSON report plus plot files into the output directory."""

import logging
import math
import os
from dataclasses import astuple, dataclass
from typing import Any, Callable, Iterable, Literal, NamedTuple, Optional

import numpy as np
import rich.progress

from src.calibration.nsat import NsatCalibration, joint_fit_nsat, sawtooth_collapse
from src.calibration.phases import PhasePoint, extract_phases
from src.custom_types.datasets import FringeDataset, Trace
from src.custom_types.images import Ellipse, ImageStack, Rect
from src.errors import DomainError, StackFormatError
from src.fitting.polynomial import fit_quadratic
from src.io.config import RunConfig
from src.io.container import Manifest, load_manifest, load_payload, save_dataset
from src.io.report import (
    jsonable,
    plot_map,
    plot_sawtooth,
    plot_series,
    write_report,
)
from src.photometry.absorption import optimal_probe_counts, snr_curve
from src.photometry.geometry import (
    implied_transfer,
    quantum_efficiency,
    system_efficiency,
)
from src.photometry.qe import beam_campaign_qe
from src.pixelmap.intensity import IntensityMap, run_intensity_map
from src.rf_phase import extract_phase_jump
from src.sensor.pca import highpass_noise, loo_pca_decompose
from src.sensor.ptc import extract_conversion, pe_rescale_check, ptc_curve
from src.synth.fringes import reference_fringe_campaign
from src.synth.noise import frame_generators
from src.synth.probe import (
    default_drift_modes,
    synth_beam_campaign,
    synth_dark_frame,
    synth_probe_stack,
)
from src.synth.rf import synth_rf_trace
from src.synth.tof import synth_tof_campaign
from src.synth.truth import GroundTruth

logger = logging.getLogger(__name__)

Command = Literal[
    "simulate",
    "calibrate-nsat",
    "map-intensity",
    "calibrate-sensor",
    "qe",
    "snr",
    "rf-phase",
    "report",
]
SimulationKind = Literal["fringes", "probe-stacks", "tof", "beam", "rf"]

REFERENCE_QE_TRIPLET = (2.9e9, 7.65, 9.5e8)


@dataclass(frozen=True)
class RunContext:
    config: RunConfig
    out_dir: str
    reproducible: bool = False

    @property
    def seed(self) -> Optional[int]:
        return self.config.seed

    @property
    def workers(self) -> int:
        return self.config.workers

    def path(self, *parts: str) -> str:
        os.makedirs(self.out_dir, exist_ok=True)
        return os.path.join(self.out_dir, *parts)


class StageResult(NamedTuple):
    results: dict[str, Any]
    outputs: list[str]
    inputs: list[str]


def ground_truth(config: RunConfig) -> GroundTruth:
    return GroundTruth(
        n_sat=config.truth.n_sat_counts_per_px_us,
        phi0=config.truth.phi0_rad,
        dt0_s=config.truth.dt0_s,
        atom=config.atom,
        sensor=config.sensor,
    )


def _child_seeds(seed: Optional[int], n: int) -> list[int]:
    return [int(rng.integers(2**63)) for rng in frame_generators(seed, n)]


def _payload_files(directory: str, manifest: Manifest) -> list[str]:
    return [os.path.join(directory, e.file) for e in manifest.payloads.values()]


def _require_kind(manifest: Manifest, kind: str, directory: str) -> None:
    if manifest.kind != kind:
        raise StackFormatError(
            f"{directory} holds a {manifest.kind} dataset, not {kind}"
        )


# simulate


def simulate(ctx: RunContext, kind: SimulationKind) -> StageResult:
    config, truth = ctx.config, ground_truth(ctx.config)
    directory = ctx.path(kind)
    metadata: dict[str, Any] = {}
    truth_summary: dict[str, Any] = truth.summary()
    payloads: dict[str, Any]
    section: Any
    if kind == "fringes":
        section = config.fringe_campaign
        campaign = reference_fringe_campaign(truth, section, ctx.seed)
        payloads = {"fringes": campaign.datasets, "leakage": campaign.leakage}
    elif kind == "probe-stacks":
        section = config.probe_stacks
        payloads = {
            f"level-{i:02d}": stack
            for i, stack in enumerate(_probe_stacks(config, ctx.seed))
        }
        metadata = {"levels_adu": section.levels_adu, "roi_px": section.roi_px}
    elif kind == "tof":
        section = config.tof
        tof = synth_tof_campaign(truth, section, ctx.seed)
        assert tof.truth.intensity_map is not None
        payloads = {
            "shots": tof.shots,
            "intensity-truth": ImageStack(frames=tof.truth.intensity_map[np.newaxis]),
        }
        metadata = {
            "dphi_grid": tof.dphi_grid,
            "n_adu_levels": tof.n_adu_levels,
            "delta_bar": tof.delta_bar,
            "t_p_s": tof.t_p_s,
            "stretch": tof.stretch,
            "roi_ellipse": tof.roi_ellipse.as_dict(),
            "insitu_shape": tof.insitu_shape,
            "sg_displacement": tof.sg_displacement,
        }
    elif kind == "beam":
        section = config.beam
        payloads = {"beam": synth_beam_campaign(section, config.sensor, ctx.seed)}
        metadata = {"powers_w": section.powers_w}
    else:
        section = config.rf
        trace, rf_truth = synth_rf_trace(section, ctx.seed)
        payloads = {"trace": trace}
        metadata = {
            "frequency_hz": section.frequency_hz,
            "update_time_s": section.update_time_s,
            "commanded_rad": rf_truth.commanded,
        }
        truth_summary["rf"] = {
            "realized_rad": rf_truth.realized,
            "trigger_time_s": rf_truth.trigger_time_s,
            "jitter_s": rf_truth.jitter_s,
        }
    manifest = save_dataset(
        directory,
        kind,
        payloads,
        config=section.model_dump(mode="json"),
        seed=ctx.seed,
        ground_truth=jsonable(truth_summary),
        metadata=jsonable(metadata),
    )
    files = [
        os.path.join(directory, "manifest.json"),
        *_payload_files(directory, manifest),
    ]
    return StageResult({"kind": kind, "directory": directory}, files, [])


def _probe_stacks(config: RunConfig, seed: Optional[int]) -> list[ImageStack]:
    section = config.probe_stacks
    seeds = _child_seeds(seed, len(section.levels_adu) + 2)
    dark = synth_dark_frame(
        section.shape_px, config.sensor, section.n_dark_frames, seeds[0]
    )
    modes = default_drift_modes(
        section.shape_px,
        section.drift_modes,
        section.drift_amplitude,
        section.drift_timescale_frames,
        seeds[1],
    )
    return [
        synth_probe_stack(
            level,
            section.shape_px,
            modes,
            config.sensor,
            section.n_frames,
            level_seed,
            label=f"level-{i:02d}",
            dark=dark,
        )
        for i, (level, level_seed) in enumerate(zip(section.levels_adu, seeds[2:]))
    ]


# fringe calibration


def _fringe_inputs(
    ctx: RunContext, input_dir: Optional[str]
) -> tuple[list[FringeDataset], list[FringeDataset], list[str]]:
    if input_dir is None:
        campaign = reference_fringe_campaign(
            ground_truth(ctx.config), ctx.config.fringe_campaign, ctx.seed
        )
        return campaign.datasets, campaign.leakage, []
    manifest = load_manifest(input_dir)
    _require_kind(manifest, "fringes", input_dir)
    datasets = load_payload(input_dir, manifest, "fringes")
    leakage = (
        load_payload(input_dir, manifest, "leakage")
        if "leakage" in manifest.payloads
        else []
    )
    assert isinstance(datasets, list) and isinstance(leakage, list)
    return datasets, leakage, _payload_files(input_dir, manifest)


def _sweep_series(points: list[PhasePoint]) -> dict[str, dict[str, Any]]:
    """Phase against each swept quantity, grouped the way the campaign was taken."""
    sweeps: dict[str, dict[str, Any]] = {}
    for kind, axis in (
        ("intensity", "n_adu"),
        ("detuning", "delta_bar"),
        ("time", "t_p_s"),
    ):
        chosen = [p for p in points if p.label.startswith(kind)]
        if chosen:
            sweeps[kind] = {
                "x": np.array([getattr(p, axis) for p in chosen]),
                "phi": np.array([p.phi for p in chosen]),
                "group": np.array([p.delta_bar for p in chosen]),
            }
    return sweeps


def calibrate(
    ctx: RunContext, input_dir: Optional[str] = None
) -> tuple[NsatCalibration, StageResult]:
    config = ctx.config
    datasets, leakage, inputs = _fringe_inputs(ctx, input_dir)
    points = extract_phases(datasets, ctx.workers)
    leakage_points = extract_phases(leakage, ctx.workers)
    calibration = joint_fit_nsat(
        points,
        leakage_points,
        config.atom,
        config.fit.fit_dt0,
        dt0_s=config.fit.dt0_s,
        weighted=config.fit.weighted,
    )
    results: dict[str, Any] = {"calibration": calibration.summary()}
    outputs: list[str] = []
    if calibration.nsat_identifiable:
        exclude = np.array(
            [p.label in config.fit.sawtooth_exclude_labels for p in points]
        )
        collapse = sawtooth_collapse(points, calibration, config.atom, exclude)
        results["sawtooth_rms_rad"] = collapse.rms
        results["sawtooth_rms_cycles"] = collapse.rms / (2.0 * math.pi)
        outputs += plot_sawtooth(
            collapse.abscissa,
            collapse.ordinate,
            collapse.reference_x,
            collapse.reference_y,
            collapse.excluded,
            ctx.path("sawtooth"),
        )
    for kind, sweep in _sweep_series(points).items():
        series = {
            f"delta_bar={value:g}": (
                sweep["x"][sweep["group"] == value],
                sweep["phi"][sweep["group"] == value],
            )
            for value in np.unique(sweep["group"])
        }
        outputs += plot_series(
            ctx.path(f"phase_vs_{kind}"), series, kind, "phi (rad)", style="o"
        )
    results["n_fringes"] = len(datasets) + len(leakage)
    results["n_fitted"] = len(points) + len(leakage_points)
    truth = ground_truth(config)
    if input_dir is None:
        results["truth"] = {
            "n_sat": truth.n_sat,
            "phi0_rad": truth.phi0,
            "n_sat_relative_error": calibration.n_sat / truth.n_sat - 1.0,
        }
    return calibration, StageResult(results, outputs, inputs)


def calibrate_nsat(ctx: RunContext, input_dir: Optional[str] = None) -> StageResult:
    return calibrate(ctx, input_dir)[1]


# intensity map


def map_intensity(
    ctx: RunContext,
    input_dir: Optional[str] = None,
    fringes_dir: Optional[str] = None,
) -> StageResult:
    config = ctx.config
    calibration, stage = calibrate(ctx, fringes_dir)
    truth_map: Optional[np.ndarray] = None
    inputs = list(stage.inputs)
    if input_dir is None:
        tof = synth_tof_campaign(ground_truth(config), config.tof, ctx.seed)
        shots, metadata = tof.shots, {
            "dphi_grid": tof.dphi_grid,
            "n_adu_levels": tof.n_adu_levels,
            "delta_bar": tof.delta_bar,
            "t_p_s": tof.t_p_s,
            "stretch": tof.stretch,
            "roi_ellipse": tof.roi_ellipse.as_dict(),
            "insitu_shape": tof.insitu_shape,
            "sg_displacement": tof.sg_displacement,
        }
        truth_map = tof.truth.intensity_map
    else:
        manifest = load_manifest(input_dir)
        _require_kind(manifest, "tof", input_dir)
        loaded = load_payload(input_dir, manifest, "shots")
        assert isinstance(loaded, ImageStack)
        shots, metadata = loaded, manifest.metadata
        if "intensity-truth" in manifest.payloads:
            reference = load_payload(input_dir, manifest, "intensity-truth")
            assert isinstance(reference, ImageStack)
            truth_map = reference.frames[0]
        inputs += _payload_files(input_dir, manifest)

    ellipse = Ellipse(**metadata["roi_ellipse"])
    insitu_shape = (int(metadata["insitu_shape"][0]), int(metadata["insitu_shape"][1]))
    intensity = run_intensity_map(
        shots,
        np.asarray(metadata["dphi_grid"], dtype=float),
        list(metadata["n_adu_levels"]),
        calibration,
        ellipse,
        insitu_shape=insitu_shape,
        stretch=float(metadata["stretch"]),
        sg_displacement=tuple(metadata["sg_displacement"]),  # type: ignore[arg-type]
        delta_bar=float(metadata["delta_bar"]),
        t_p_s=float(metadata["t_p_s"]),
        atom=config.atom,
        config=config.stripe_filter,
        workers=ctx.workers,
    )
    results = {
        "calibration": calibration.summary(),
        "map": _map_summary(intensity, truth_map),
    }
    roi = ellipse.mask(intensity.frac.shape)
    outputs = [
        *stage.outputs,
        *plot_map(
            ctx.path("intensity_map"), intensity.frac, "fractional intensity", roi
        ),
        *plot_map(ctx.path("intensity_sigma"), intensity.sigma, "1 sigma", roi),
    ]
    return StageResult(results, outputs, inputs)


def _map_summary(
    intensity: IntensityMap, truth_map: Optional[np.ndarray]
) -> dict[str, Any]:
    inside = intensity.roi_ellipse.mask(intensity.frac.shape) & intensity.valid
    cols = np.indices(intensity.frac.shape)[1]
    summary: dict[str, Any] = {
        "valid_pixels": int(intensity.valid.sum()),
        "roi_pixels": int(inside.sum()),
        "roi_mean_frac": intensity.roi_mean(),
        "roi_std_frac": float(np.std(intensity.frac[inside])) if inside.any() else None,
    }
    if inside.sum() >= 3:
        gradient = fit_quadratic(cols[inside], intensity.frac[inside])
        summary["frac_slope_per_px"] = gradient.c1
        summary["largest_at_negative_x"] = bool(gradient.c1 < 0)
    if truth_map is not None:
        rows = min(truth_map.shape[0], intensity.frac.shape[0])
        error = intensity.frac[:rows] - (truth_map[:rows] - 1.0)
        summary["max_abs_error_in_roi"] = float(np.max(np.abs(error[inside[:rows]])))
    return summary


# sensor calibration


def _probe_inputs(
    ctx: RunContext, input_dir: Optional[str]
) -> tuple[list[ImageStack], Rect, list[str]]:
    section = ctx.config.probe_stacks
    if input_dir is None:
        return _probe_stacks(ctx.config, ctx.seed), Rect(*section.roi_px), []
    manifest = load_manifest(input_dir)
    _require_kind(manifest, "probe-stacks", input_dir)
    stacks: list[ImageStack] = []
    for name in sorted(manifest.payloads):
        payload = load_payload(input_dir, manifest, name)
        assert isinstance(payload, ImageStack), f"{name} is not an image stack"
        stacks.append(payload)
    roi = Rect(*manifest.metadata.get("roi_px", section.roi_px))
    return stacks, roi, _payload_files(input_dir, manifest)


def calibrate_sensor(
    ctx: RunContext, input_dir: Optional[str] = None, compare_highpass: bool = False
) -> StageResult:
    sensor = ctx.config.sensor
    stacks, roi, inputs = _probe_inputs(ctx, input_dir)
    decompositions = [loo_pca_decompose(s, roi, ctx.workers) for s in stacks]
    points = ptc_curve(decompositions)
    conversion = extract_conversion(points, sensor.excess_noise_factor)
    pe = pe_rescale_check(points, conversion.c_adu_per_pe, sensor.excess_noise_factor)
    results: dict[str, Any] = {
        "c_adu_per_pe": conversion.c_adu_per_pe,
        "c_sigma": conversion.c_sigma,
        "read_noise_adu": conversion.read_noise_adu,
        "read_noise_sigma": conversion.read_noise_sigma,
        "quadratic_fraction": conversion.quadratic_fraction,
        "pe_slope": pe.slope,
        "pe_slope_sigma": pe.sigma,
        "ptc": [{**p._asdict(), "roi": astuple(p.roi)} for p in points],
        "truth": {"c_adu_per_pe": sensor.c_adu_per_pe} if input_dir is None else None,
    }
    mean = np.array([p.mean_adu for p in points])
    var = np.array([p.var_adu for p in points])
    series = {"PCA": (mean, var)}
    if compare_highpass:
        highpass = np.array([highpass_noise(s, roi) for s in stacks])
        fit = fit_quadratic(np.array([d.mean_adu for d in decompositions]), highpass)
        top = float(mean.max())
        results["highpass"] = {
            "variance_adu2": highpass,
            "quadratic_fraction": fit.c2 * top**2
            / (fit.c0 + fit.c1 * top + fit.c2 * top**2),
        }
        series["high-pass"] = (np.array([d.mean_adu for d in decompositions]), highpass)
    c = conversion.c_adu_per_pe
    outputs = [
        *plot_series(ctx.path("ptc_adu"), series, "mean (ADU)", "variance (ADU^2)"),
        *plot_series(
            ctx.path("ptc_pe"),
            {"PCA": (mean / c, var / c**2)},
            "mean (pe)",
            "variance (pe^2)",
        ),
    ]
    return StageResult(results, outputs, inputs)


# photometry


def qe(
    ctx: RunContext,
    triplet: Optional[tuple[float, float, float]] = None,
    input_dir: Optional[str] = None,
) -> StageResult:
    config = ctx.config
    results: dict[str, Any] = {}
    outputs: list[str] = []
    inputs: list[str] = []
    n_adu, c, n_ph = triplet or REFERENCE_QE_TRIPLET
    results["triplet"] = {
        "n_adu": n_adu,
        "c_adu_per_pe": c,
        "n_ph": n_ph,
        "qe": quantum_efficiency(n_adu, c, n_ph),
    }
    qe_t = system_efficiency(
        config.truth.n_sat_counts_per_px_us,
        config.sensor.c_adu_per_pe,
        config.geometry,
        config.atom.wavelength_m,
        config.atom.i_sat_w_m2,
    )
    results["system_efficiency"] = qe_t
    results["implied_transfer"] = implied_transfer(qe_t, results["triplet"]["qe"])

    if triplet is None:
        if input_dir is None:
            stack = synth_beam_campaign(config.beam, config.sensor, ctx.seed)
            powers = list(config.beam.powers_w)
        else:
            manifest = load_manifest(input_dir)
            _require_kind(manifest, "beam", input_dir)
            loaded = load_payload(input_dir, manifest, "beam")
            assert isinstance(loaded, ImageStack)
            stack, powers = loaded, list(manifest.metadata["powers_w"])
            inputs += _payload_files(input_dir, manifest)
        beams = beam_campaign_qe(
            stack, powers, config.sensor.c_adu_per_pe, config.beam.wavelength_m
        )
        values = np.array([b.qe for b in beams])
        sigmas = np.array([b.qe_sigma for b in beams])
        weights = 1.0 / np.maximum(sigmas, 1e-12) ** 2
        mean = float(np.sum(weights * values) / np.sum(weights))
        results["beam"] = {
            "power_w": powers,
            "qe": values,
            "qe_sigma": sigmas,
            "weighted_mean": mean,
            "max_pull": float(np.max(np.abs(values - mean) / sigmas)),
            "truth_qe": config.sensor.qe if input_dir is None else None,
        }
        outputs += plot_series(
            ctx.path("qe_vs_power"),
            {"beam": (np.array(powers) * 1e6, values)},
            "power (uW)",
            "QE",
        )
    return StageResult(results, outputs, inputs)


def snr(ctx: RunContext) -> StageResult:
    section = ctx.config.snr
    ratios = np.geomspace(section.ratio_min, section.ratio_max, section.points)
    nse = section.n_sat_exposure_counts
    series = {}
    optimum = {}
    for od in section.od:
        curve = snr_curve(od, nse, ratios)
        series[f"OD={od:g}"] = (ratios, np.array([point.snr for point in curve]))
        optimum[f"{od:g}"] = optimal_probe_counts(od, nse) / nse
    outputs = plot_series(
        ctx.path("snr"),
        series,
        "N- / N_sat",
        "SNR",
        style="-",
        log_x=True,
        log_y=True,
    )
    results = {"n_sat_exposure": nse, "optimal_n_minus_over_n_sat": optimum}
    return StageResult(results, outputs, [])


# rf phase


def rf_phase(
    ctx: RunContext, input_dir: Optional[str] = None, traces: int = 1
) -> StageResult:
    config = ctx.config
    analysis = config.rf_analysis
    inputs: list[str] = []
    jobs: list[tuple[Trace, float, Optional[float], Optional[float]]] = []
    if input_dir is None:
        for seed in _child_seeds(ctx.seed, traces):
            trace, truth = synth_rf_trace(config.rf, seed)
            nominal = config.rf.update_time_s
            jobs.append((trace, nominal, truth.commanded, truth.realized))
    else:
        manifest = load_manifest(input_dir)
        _require_kind(manifest, "rf", input_dir)
        meta = manifest.metadata
        trace = load_payload(input_dir, manifest, "trace", float(meta["frequency_hz"]))
        assert isinstance(trace, Trace)
        jobs.append(
            (
                trace,
                float(meta["update_time_s"]),
                meta.get("commanded_rad"),
                (manifest.ground_truth or {}).get("rf", {}).get("realized_rad"),
            )
        )
        inputs += _payload_files(input_dir, manifest)
    if not jobs:
        raise DomainError("no RF traces to analyse")

    records = []
    for trace, update_time, commanded, realized in jobs:
        jump = extract_phase_jump(
            trace,
            update_time,
            analysis.guard_s,
            f_tol=analysis.f_tol_hz,
            commanded=commanded,
            jitter_bound=analysis.jitter_bound_s,
        )
        record: dict[str, Any] = {
            "dphi_p_rad": jump.dphi_p,
            "dphi_p_cycles": jump.dphi_p / (2.0 * math.pi),
            "commanded_rad": jump.commanded,
            "discrepancy_rad": jump.discrepancy,
        }
        if realized is not None:
            error = math.remainder(jump.dphi_p - realized, 2.0 * math.pi)
            record["error_cycles"] = error / (2.0 * math.pi)
        records.append(record)
    errors = [abs(r["error_cycles"]) for r in records if "error_cycles" in r]
    results = {
        "traces": records,
        "max_abs_error_cycles": max(errors) if errors else None,
    }
    first = jobs[0][0]
    outputs = plot_series(
        ctx.path("rf_trace"),
        {"trace": (first.t * 1e9, first.v)},
        "t (ns)",
        "V",
        style="-",
    )
    return StageResult(results, outputs, inputs)


# report


def report(
    ctx: RunContext, progress: Optional[rich.progress.Progress] = None
) -> StageResult:
    """Full simulated replication: every calibration stage on fresh synthetic data."""
    runners: dict[str, Callable[[], StageResult]] = {
        "nsat": lambda: calibrate_nsat(ctx),
        "intensity_map": lambda: map_intensity(ctx),
        "sensor": lambda: calibrate_sensor(ctx, compare_highpass=True),
        "qe": lambda: qe(ctx),
        "qe_triplet": lambda: qe(ctx, REFERENCE_QE_TRIPLET),
        "snr": lambda: snr(ctx),
        "rf_phase": lambda: rf_phase(ctx),
    }
    names: Iterable[str] = list(runners)
    if progress is not None:
        names = progress.track(names, description="Running stages...")
    stages = {name: runners[name]() for name in names}
    results = {name: stage.results for name, stage in stages.items()}
    outputs = sorted({path for stage in stages.values() for path in stage.outputs})
    return StageResult(results, outputs, [])


HANDLERS: dict[Command, Callable[..., StageResult]] = {
    "simulate": simulate,
    "calibrate-nsat": calibrate_nsat,
    "map-intensity": map_intensity,
    "calibrate-sensor": calibrate_sensor,
    "qe": qe,
    "snr": snr,
    "rf-phase": rf_phase,
    "report": report,
}


def run_pipeline(command: Command, ctx: RunContext, **inputs: Any) -> StageResult:
    """Run one command and write `<command>.json` (or `report.json`) to the out dir."""
    stage = HANDLERS[command](ctx, **inputs)
    name = "report.json" if command == "report" else f"{command}.json"
    write_report(
        ctx.path(name),
        stage.results,
        ctx.config.model_dump(mode="json"),
        outputs=stage.outputs,
        inputs=stage.inputs,
        reproducible=ctx.reproducible,
    )
    logger.info("wrote %s", ctx.path(name))
    return stage
