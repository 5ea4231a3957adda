import json
import os

import numpy as np
import pytest

from src.custom_types.datasets import FringeDataset, Trace
from src.custom_types.images import ImageStack
from src.errors import ChecksumError, StackFormatError
from src.io.container import (
    MANIFEST_NAME,
    load_manifest,
    load_payload,
    read_fringes_csv,
    save_dataset,
    write_fringes_csv,
)


def _fringes() -> list[FringeDataset]:
    dphi = np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False)
    return [
        FringeDataset(dphi, 0.5 + 0.5 * np.cos(dphi), 120.0, 0.0, 1.6e-6, None, "a"),
        FringeDataset(dphi, 0.5 - 0.4 * np.sin(dphi), 240.0, 2e6, 3.2e-6, 1e-6, "b"),
    ]


def _trace() -> Trace:
    t = np.arange(16) * 1e-9
    return Trace(t, np.sin(2e8 * t), 31.8e6)


def test_fringe_csv_keeps_every_field(tmp_path):
    path = str(tmp_path / "fringes.csv")
    write_fringes_csv(path, _fringes())
    datasets = read_fringes_csv(path)
    assert [d.label for d in datasets] == ["a", "b"]
    for read, written in zip(datasets, _fringes()):
        assert np.array_equal(read.f2, written.f2)
        assert np.array_equal(read.dphi_p, written.dphi_p)
        assert read.n_adu == written.n_adu
        assert read.delta_bar == written.delta_bar
        assert read.t_exposure_s == written.t_exposure_s


def test_unlabelled_fringes_get_distinct_labels(tmp_path):
    path = str(tmp_path / "fringes.csv")
    unlabelled = [
        FringeDataset(d.dphi_p, d.f2, d.n_adu, d.delta_bar, d.t_p_s) for d in _fringes()
    ]
    write_fringes_csv(path, unlabelled)
    assert [d.label for d in read_fringes_csv(path)] == ["fringe-000", "fringe-001"]


def test_wrong_columns_are_rejected(tmp_path):
    path = tmp_path / "fringes.csv"
    path.write_text("label,f2\na,0.5\n")
    with pytest.raises(StackFormatError):
        read_fringes_csv(str(path))


def test_dataset_directory(tmp_path):
    directory = str(tmp_path / "run")
    stack = ImageStack(frames=np.ones((2, 3, 4)), label="probe")
    manifest = save_dataset(
        directory,
        "probe-stacks",
        {"probe": stack, "fringes": _fringes(), "trace": _trace()},
        config={"seed": 5},
        seed=5,
        ground_truth={"c_adu_per_pe": 7.65},
    )
    assert {e.format for e in manifest.payloads.values()} == {
        "stkc",
        "fringe-csv",
        "trace-csv",
    }
    with open(os.path.join(directory, MANIFEST_NAME)) as f:
        assert json.load(f)["kind"] == "probe-stacks"

    loaded = load_manifest(directory)
    assert loaded == manifest
    probe = load_payload(directory, loaded, "probe")
    assert isinstance(probe, ImageStack) and probe.label == "probe"
    trace = load_payload(directory, loaded, "trace", f_nominal_hz=31.8e6)
    assert isinstance(trace, Trace)
    assert np.array_equal(trace.v, _trace().v)
    assert trace.f_nominal_hz == 31.8e6
    fringes = load_payload(directory, loaded, "fringes")
    assert isinstance(fringes, list) and len(fringes) == 2


def test_missing_payload_is_named(tmp_path):
    directory = str(tmp_path)
    manifest = save_dataset(directory, "rf", {"trace": _trace()})
    with pytest.raises(StackFormatError, match="no payload 'scope'"):
        load_payload(directory, manifest, "scope")


def test_modified_payload_fails_verification(tmp_path):
    directory = str(tmp_path)
    manifest = save_dataset(directory, "fringes", {"fringes": _fringes()})
    with open(os.path.join(directory, manifest.payloads["fringes"].file), "a") as f:
        f.write("c,1.0,0.0,1e-06,,0.0,0.5\n")
    with pytest.raises(ChecksumError):
        load_manifest(directory)
    assert load_manifest(directory, verify=False).kind == "fringes"


def test_manifest_schema_is_checked(tmp_path):
    directory = str(tmp_path)
    save_dataset(directory, "rf", {"trace": _trace()})
    path = os.path.join(directory, MANIFEST_NAME)
    with open(path) as f:
        document = json.load(f)
    document["schema_version"] = 99
    with open(path, "w") as f:
        json.dump(document, f)
    with pytest.raises(StackFormatError, match="schema version 99"):
        load_manifest(directory)

    document["kind"] = "nonsense"
    with open(path, "w") as f:
        json.dump(document, f)
    with pytest.raises(StackFormatError, match="invalid manifest"):
        load_manifest(directory)
