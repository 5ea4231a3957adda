import numpy as np
import pytest

from src.custom_types.sensor import SensorModel
from src.errors import DomainError
from src.synth.tof import (
    CloudShape,
    TofConfig,
    local_f2_maps,
    synth_tof_campaign,
    synth_tof_shot,
)
from src.synth.truth import GroundTruth

SENSOR = SensorModel()
CLOUD = CloudShape(center=(50.0, 55.0), radii=(12.0, 30.0))


def test_noiseless_shot_conserves_atoms():
    shot = synth_tof_shot(
        CLOUD, np.full((24, 64), 0.25), (80.0, 0.0), None, 1e6, SENSOR, noiseless=True
    )
    assert shot.image.sum() == pytest.approx(1e6, rel=0.02)
    (r1, c1), (r2, c2) = shot.centers
    assert (r2 - r1, c2 - c1) == (80.0, 0.0)
    upper = shot.image[:90].sum()
    assert upper / shot.image.sum() == pytest.approx(0.75, rel=0.02)


def test_overlapping_clouds_are_rejected():
    with pytest.raises(DomainError):
        synth_tof_shot(CLOUD, np.full((24, 64), 0.5), (20.0, 0.0), None, 1e6, SENSOR)


def test_cloud_outside_the_frame_is_rejected():
    cloud = CloudShape(center=(120.0, 55.0), radii=(12.0, 30.0))
    with pytest.raises(DomainError):
        synth_tof_shot(cloud, np.full((24, 64), 0.5), (80.0, 0.0), None, 1e6, SENSOR)


def test_local_maps_follow_the_fringe():
    config = TofConfig(dphi_points=4, contrast=1.0)
    truth = GroundTruth(intensity_map=np.ones(config.insitu_shape_px))
    grid = np.linspace(0.0, 2 * np.pi, 4, endpoint=False)
    maps = local_f2_maps(truth, config, 1200.0, grid)
    assert len(maps) == 4
    for f2_map in maps:
        assert f2_map.shape == config.insitu_shape_px
        assert np.ptp(f2_map) == pytest.approx(0.0, abs=1e-12)
    # opposite probe phases give complementary populations
    np.testing.assert_allclose(maps[0] + maps[2], 1.0, atol=1e-12)


def test_small_campaign_layout():
    config = TofConfig(dphi_points=4, n_adu_levels=[600.0, 1200.0, 1800.0])
    campaign = synth_tof_campaign(GroundTruth(), config, seed=8)
    assert campaign.shots.n_frames == 12
    assert campaign.shots.shape == config.shot_shape_px
    assert campaign.shots_at_level(2).shape == (4, *config.shot_shape_px)
    assert campaign.stretch > 1.0
    assert campaign.tof_roi_shape[1] == config.insitu_shape_px[1]
    assert campaign.tof_roi_shape[0] >= config.insitu_shape_px[0]
    assert campaign.truth.intensity_map is not None
    assert campaign.truth.intensity_map.shape == config.insitu_shape_px


def test_stretch_override():
    assert TofConfig(stretch_y=2.0).stretch() == 2.0
    assert TofConfig(t_tof_s=0.0).stretch() == pytest.approx(1.0)


def test_default_centre_jitter_is_ten_microns_at_the_atoms():
    config = TofConfig()
    assert config.center_jitter_px() == pytest.approx(10e-6 * 3.06 / 13e-6)
    assert TofConfig(center_jitter_m=0.0).center_jitter_px() == 0.0


def test_default_flight_keeps_both_clouds_in_the_shot():
    config = TofConfig()
    extent = 2.0 * config.cloud_radii_px[0] * config.stretch()
    assert extent + config.sg_displacement_px[0] < config.shot_shape_px[0]
