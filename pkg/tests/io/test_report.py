import csv
import json
import math

import numpy as np
from matplotlib.figure import Figure

from src.custom_types.sensor import SensorModel
from src.io.report import jsonable, plot_series, save_svg, write_columns, write_report


def test_jsonable_flattens_numpy_and_models():
    document = jsonable(
        {
            "c": np.float64(7.65),
            "n": np.int64(3),
            "ok": np.bool_(True),
            "curve": np.array([1.0, math.nan]),
            "bad": math.inf,
            "sensor": SensorModel(),
            1: ("a", None),
        }
    )
    assert document["c"] == 7.65 and type(document["c"]) is float
    assert document["n"] == 3 and type(document["n"]) is int
    assert document["ok"] is True
    assert document["curve"] == [1.0, None]
    assert document["bad"] is None
    assert document["sensor"]["c_adu_per_pe"] == 7.65
    assert document["1"] == ["a", None]
    json.dumps(document, allow_nan=False)


def test_report_hashes_files_and_omits_timestamp_when_reproducible(tmp_path):
    output = tmp_path / "curve.csv"
    output.write_text("x\n1.0\n")
    path = tmp_path / "report.json"
    write_report(
        str(path),
        {"n_sat": 27.2},
        {"seed": 1},
        outputs=[str(output)],
        reproducible=True,
    )
    first = path.read_bytes()
    document = json.loads(first)
    assert "created" not in document
    assert document["results"] == {"n_sat": 27.2}
    assert len(document["outputs"]["curve.csv"]) == 64

    write_report(
        str(path),
        {"n_sat": 27.2},
        {"seed": 1},
        outputs=[str(output)],
        reproducible=True,
    )
    assert path.read_bytes() == first

    write_report(str(path), {}, {})
    assert "created" in json.loads(path.read_text())


def test_columns_pad_short_series(tmp_path):
    path = write_columns(str(tmp_path / "c.csv"), {"a": [1.0, 2.0], "b": [0.5]})
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows == [["a", "b"], ["1.0", "0.5"], ["2.0", ""]]


def test_svg_output_is_deterministic(tmp_path):
    paths = []
    for name in ("one.svg", "two.svg"):
        figure = Figure(figsize=(3, 2))
        figure.subplots().plot([0.0, 1.0, 2.0], [1.0, 0.0, 1.0])
        paths.append(save_svg(figure, str(tmp_path / name)))
    contents = [open(p, "rb").read() for p in paths]
    assert contents[0] == contents[1]
    assert b"<svg" in contents[0]


def test_series_plot_writes_svg_and_data(tmp_path):
    x = np.array([1.0, 10.0, 100.0])
    files = plot_series(
        str(tmp_path / "snr"), {"od1": (x, x / 2)}, "ratio", "snr", log_x=True
    )
    assert [f.rsplit(".", 1)[1] for f in files] == ["svg", "csv"]
    with open(files[1], newline="") as f:
        assert next(csv.reader(f)) == ["x_od1", "y_od1"]
