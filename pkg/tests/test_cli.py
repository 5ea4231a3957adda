import json
import os
import shutil

import pytest
from click.testing import CliRunner

from src.__main__ import ERROR_EXIT_CODE, cli

QUICK = os.path.join(os.path.dirname(__file__), "..", "configs", "quick.json")


@pytest.fixture
def quick(tmp_path):
    path = tmp_path / "quick.json"
    shutil.copy(QUICK, path)
    return str(path)


def _invoke(*args: str):
    return CliRunner().invoke(cli, list(args), catch_exceptions=False)


def _error(output: str) -> dict:
    return json.loads(output.strip().splitlines()[-1])


def _read(path) -> dict:
    with open(path) as f:
        return json.load(f)


def test_qe_triplet(tmp_path, quick):
    out = str(tmp_path / "out")
    triplet = ("2.9e9", "7.65", "9.5e8")
    result = _invoke(
        "--config", quick, "--out", out, "--reproducible", "qe", "--triplet", *triplet
    )
    assert result.exit_code == 0, result.output
    report = _read(os.path.join(out, "qe.json"))
    assert report["results"]["triplet"]["qe"] == pytest.approx(0.39903680771)
    assert "beam" not in report["results"]
    assert "created" not in report
    assert report["config"]["seed"] == 7


def test_snr_writes_curves(tmp_path, quick):
    out = str(tmp_path / "out")
    result = _invoke("--config", quick, "--out", out, "snr")
    assert result.exit_code == 0, result.output
    report = _read(os.path.join(out, "snr.json"))
    assert set(report["results"]["optimal_n_minus_over_n_sat"]) == {
        "0.1",
        "0.5",
        "1",
        "2",
    }
    assert set(report["outputs"]) == {"snr.svg", "snr.csv"}


def test_bad_config_is_one_json_record(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"sensor": {"qe": 2.0}, "colour": "blue"}))
    result = _invoke("--config", str(path), "--out", str(tmp_path), "snr")
    assert result.exit_code == ERROR_EXIT_CODE
    record = _error(result.output)
    assert record["error"] == "config_error"
    assert len(record["violations"]) == 2


def test_seed_override_and_rf_round_trip(tmp_path, quick):
    out = str(tmp_path / "out")
    result = _invoke("--config", quick, "--out", out, "--seed", "1", "simulate", "rf")
    assert result.exit_code == 0, result.output
    manifest = _read(os.path.join(out, "rf", "manifest.json"))
    assert manifest["kind"] == "rf"
    assert manifest["seed"] == 1
    assert manifest["metadata"]["update_time_s"] == pytest.approx(400e-9)
    assert "realized_rad" not in manifest["metadata"]
    assert "realized_rad" in manifest["ground_truth"]["rf"]

    result = _invoke(
        "--config", quick, "--out", out, "rf-phase", "--input", os.path.join(out, "rf")
    )
    assert result.exit_code == 0, result.output
    report = _read(os.path.join(out, "rf-phase.json"))
    assert report["results"]["max_abs_error_cycles"] < 1e-3
    assert set(report["inputs"]) == {"trace.csv"}


def test_wrong_dataset_kind_is_reported(tmp_path, quick):
    out = str(tmp_path / "out")
    assert _invoke("--config", quick, "--out", out, "simulate", "rf").exit_code == 0
    result = _invoke(
        "--config",
        quick,
        "--out",
        out,
        "calibrate-nsat",
        "--input",
        os.path.join(out, "rf"),
    )
    assert result.exit_code == ERROR_EXIT_CODE
    record = _error(result.output)
    assert record["error"] == "stack_format"
    assert record["violations"] == []


def test_calibrate_nsat_on_quick_campaign(tmp_path, quick):
    out = str(tmp_path / "out")
    simulated = _invoke("--config", quick, "--out", out, "simulate", "fringes")
    assert simulated.exit_code == 0
    result = _invoke(
        "--config",
        quick,
        "--out",
        out,
        "calibrate-nsat",
        "--input",
        os.path.join(out, "fringes"),
    )
    assert result.exit_code == 0, result.output
    report = _read(os.path.join(out, "calibrate-nsat.json"))
    n_sat = report["results"]["calibration"]["n_sat_counts_per_px_us"]
    assert n_sat == pytest.approx(27.2, rel=0.15)
    assert "truth" not in report["results"]
    assert "sawtooth.svg" in report["outputs"]


@pytest.mark.slow
def test_report_runs_every_stage(tmp_path, quick):
    out = str(tmp_path / "out")
    result = _invoke("--config", quick, "--out", out, "--reproducible", "report")
    assert result.exit_code == 0, result.output
    report = _read(os.path.join(out, "report.json"))
    assert set(report["results"]) == {
        "nsat",
        "intensity_map",
        "sensor",
        "qe",
        "qe_triplet",
        "snr",
        "rf_phase",
    }
    assert all(os.path.exists(os.path.join(out, name)) for name in report["outputs"])
