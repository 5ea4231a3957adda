import dataclasses
import functools
import math

import hypothesis
import hypothesis.strategies as st
import numpy as np
import pytest

from src.calibration.nsat import (
    joint_fit_nsat,
    sawtooth_collapse,
    wrapped_residuals,
)
from src.calibration.phases import PhasePoint, extract_phases
from src.errors import InsufficientDataError
from src.physics.atom import RB87_D2
from src.synth.fringes import FringeCampaignConfig, reference_fringe_campaign
from src.synth.truth import (
    REFERENCE_DT0_S,
    REFERENCE_N_SAT,
    REFERENCE_PHI0,
    GroundTruth,
)

TRUTH = GroundTruth()


def campaign_points(noise: float, seed: int = 1, **overrides):
    config = FringeCampaignConfig(f2_noise=noise, **overrides)
    campaign = reference_fringe_campaign(TRUTH, config, seed=seed)
    return extract_phases(campaign.datasets), extract_phases(campaign.leakage)


def phase_error(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2 * math.pi))


@functools.lru_cache(maxsize=None)
def noisy_campaign():
    return campaign_points(0.03, seed=7)


def assert_same_fit(a, b):
    assert a.n_sat == pytest.approx(b.n_sat, rel=1e-6)
    assert phase_error(a.phi0, b.phi0) < 1e-6


def test_noiseless_campaign_is_recovered_exactly():
    points, leakage = campaign_points(0.0)
    result = joint_fit_nsat(points, leakage, dt0_s=REFERENCE_DT0_S)
    assert result.nsat_identifiable
    assert result.dt0_fixed
    assert result.n_sat == pytest.approx(REFERENCE_N_SAT, rel=1e-6)
    assert phase_error(result.phi0, REFERENCE_PHI0) < 1e-6
    assert result.n_points == len(points) + len(leakage)
    np.testing.assert_allclose(wrapped_residuals(points, result, RB87_D2), 0, atol=1e-6)


@pytest.mark.parametrize("k", [0.01, 0.3, 100.0])
def test_scaling_every_exposure_scales_n_sat(k: float):
    points, leakage = campaign_points(0.0)
    scaled = [dataclasses.replace(p, n_adu=k * p.n_adu) for p in points]
    result = joint_fit_nsat(scaled, leakage, dt0_s=REFERENCE_DT0_S)
    assert result.n_sat == pytest.approx(k * REFERENCE_N_SAT, rel=1e-6)
    assert phase_error(result.phi0, REFERENCE_PHI0) < 1e-6


@pytest.mark.parametrize("k", [0.01, 100.0])
def test_noisy_fit_is_homogeneous_in_the_exposure(k: float):
    points, leakage = noisy_campaign()
    base = joint_fit_nsat(points, leakage, dt0_s=REFERENCE_DT0_S)
    scaled = [dataclasses.replace(p, n_adu=k * p.n_adu) for p in points]
    result = joint_fit_nsat(scaled, leakage, dt0_s=REFERENCE_DT0_S)
    assert result.n_sat == pytest.approx(k * base.n_sat, rel=1e-6)
    assert result.n_sat_sigma == pytest.approx(k * base.n_sat_sigma, rel=1e-4)
    assert phase_error(result.phi0, base.phi0) < 1e-6


@hypothesis.settings(max_examples=10, deadline=None)
@hypothesis.given(st.data())
def test_whole_turns_on_any_phase_leave_the_fit_unchanged(data):
    points, leakage = noisy_campaign()
    index = data.draw(st.integers(0, len(points) - 1))
    turns = data.draw(st.sampled_from([-2, -1, 1, 3]))
    shifted = list(points)
    shifted[index] = dataclasses.replace(
        points[index], phi=points[index].phi + 2 * math.pi * turns
    )
    assert_same_fit(
        joint_fit_nsat(shifted, leakage, dt0_s=REFERENCE_DT0_S),
        joint_fit_nsat(points, leakage, dt0_s=REFERENCE_DT0_S),
    )


@hypothesis.settings(max_examples=10, deadline=None)
@hypothesis.given(st.randoms(use_true_random=False))
def test_point_order_does_not_matter(rng):
    points, leakage = noisy_campaign()
    reordered, reordered_leakage = list(points), list(leakage)
    rng.shuffle(reordered)
    rng.shuffle(reordered_leakage)
    assert_same_fit(
        joint_fit_nsat(reordered, reordered_leakage, dt0_s=REFERENCE_DT0_S),
        joint_fit_nsat(points, leakage, dt0_s=REFERENCE_DT0_S),
    )


def test_floating_dead_time_is_recovered():
    points, _ = campaign_points(0.0)
    result = joint_fit_nsat(points, fit_dt0=True, dt0_s=0.0)
    assert not result.dt0_fixed
    assert result.dt0_s == pytest.approx(REFERENCE_DT0_S, rel=1e-4)
    assert result.n_sat == pytest.approx(REFERENCE_N_SAT, rel=1e-5)
    assert result.covariance.shape == (3, 3)


def test_noisy_campaign():
    points, leakage = campaign_points(0.03, seed=7)
    result = joint_fit_nsat(points, leakage, dt0_s=REFERENCE_DT0_S)
    assert result.fit.converged
    assert result.n_sat == pytest.approx(REFERENCE_N_SAT, rel=0.01)
    assert phase_error(result.phi0, REFERENCE_PHI0) < 0.02
    assert 0 < result.n_sat_sigma < 0.5
    assert result.reduced_chi2 == pytest.approx(1.0, abs=0.6)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_reference_campaign_over_seeds(seed: int):
    points, leakage = campaign_points(0.03, seed=seed)
    result = joint_fit_nsat(points, leakage, dt0_s=REFERENCE_DT0_S)
    assert result.n_sat == pytest.approx(REFERENCE_N_SAT, rel=0.02)
    assert phase_error(result.phi0, REFERENCE_PHI0) < 0.02 * 2 * math.pi


def test_unweighted_fit():
    points, _ = campaign_points(0.03, seed=8)
    result = joint_fit_nsat(points, dt0_s=REFERENCE_DT0_S, weighted=False)
    assert result.n_sat == pytest.approx(REFERENCE_N_SAT, rel=0.01)


def test_leakage_only_leaves_n_sat_unidentified():
    _, leakage = campaign_points(0.0)
    result = joint_fit_nsat([], leakage)
    assert not result.nsat_identifiable
    assert math.isnan(result.n_sat)
    assert phase_error(result.phi0, REFERENCE_PHI0) < 1e-6


def test_single_axis_is_rejected():
    points, _ = campaign_points(
        0.0,
        intensity_sweep_detunings=[63.4],
        detuning_sweep=[],
        time_sweep_t_p_s=[],
        leakage_fringes=0,
    )
    with pytest.raises(InsufficientDataError):
        joint_fit_nsat(points)


def test_floating_dead_time_needs_a_time_sweep():
    points, _ = campaign_points(0.0, time_sweep_t_p_s=[], leakage_fringes=0)
    with pytest.raises(InsufficientDataError):
        joint_fit_nsat(points, fit_dt0=True)


def test_no_points():
    with pytest.raises(InsufficientDataError):
        joint_fit_nsat([])


def test_summary_fields():
    points, _ = campaign_points(0.0)
    summary = joint_fit_nsat(points, dt0_s=REFERENCE_DT0_S).summary()
    assert summary["n_sat_counts_per_px_us"] == pytest.approx(REFERENCE_N_SAT, rel=1e-6)
    assert summary["phi0_cycles"] == pytest.approx(0.06, abs=1e-6)
    assert summary["converged"]


def test_sawtooth_collapses_onto_the_diagonal():
    points, _ = campaign_points(0.0)
    result = joint_fit_nsat(points, dt0_s=REFERENCE_DT0_S)
    exclude = np.zeros(len(points), dtype=bool)
    exclude[0] = True
    collapse = sawtooth_collapse(points, result, RB87_D2, exclude)
    np.testing.assert_allclose(collapse.deviation, 0.0, atol=1e-6)
    assert collapse.rms < 1e-6
    assert collapse.excluded.sum() == 1
    assert np.max(collapse.abscissa) > 2 * math.pi
    assert np.all(np.abs(collapse.reference_y) <= math.pi)
    assert np.all(np.diff(collapse.reference_x) > 0)


def test_point_rejects_negative_counts():
    with pytest.raises(AssertionError):
        PhasePoint(0.0, 0.1, -1.0, 63.4, 20e-6, 20e-6)
