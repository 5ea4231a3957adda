"""Report JSON and plot emission (SVG plus the CSV behind every plot)."""

import csv
import json
import math
import os
from datetime import datetime, timezone
from typing import Any, Mapping, Optional, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from src.io.stack_format import file_sha256

SVG_SALT = "ramseycal"


def jsonable(value: Any) -> Any:
    """Plain-JSON copy of nested results; non-finite floats become None."""
    if isinstance(value, Mapping):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value) if math.isfinite(value) else None
    if hasattr(value, "model_dump"):
        return jsonable(value.model_dump())
    return value


def write_json(path: str, document: Mapping[str, Any]) -> None:
    with open(path, "w") as f:
        json.dump(jsonable(document), f, indent=2, sort_keys=True)
        f.write("\n")


def write_report(
    path: str,
    results: Mapping[str, Any],
    config: Mapping[str, Any],
    outputs: Sequence[str] = (),
    inputs: Sequence[str] = (),
    reproducible: bool = False,
) -> None:
    """Results with the resolved config and SHA-256 of every input and output file."""
    document: dict[str, Any] = {
        "config": config,
        "results": results,
        "inputs": {os.path.basename(p): file_sha256(p) for p in sorted(inputs)},
        "outputs": {os.path.basename(p): file_sha256(p) for p in sorted(outputs)},
    }
    if not reproducible:
        document["created"] = datetime.now(timezone.utc).isoformat()
    write_json(path, document)


def write_columns(path: str, columns: Mapping[str, Sequence[float]]) -> str:
    names = list(columns)
    length = max((len(columns[n]) for n in names), default=0)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(names)
        for i in range(length):
            writer.writerow(
                [
                    repr(float(columns[n][i])) if i < len(columns[n]) else ""
                    for n in names
                ]
            )
    return path


def save_svg(figure: Figure, path: str) -> str:
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    return path


def _breaks(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Insert NaN where a wrapped curve jumps so the line is not drawn across."""
    jumps = np.where(np.abs(np.diff(y)) > math.pi)[0] + 1
    return np.insert(x, jumps, np.nan), np.insert(y, jumps, np.nan)


def plot_sawtooth(
    abscissa: np.ndarray,
    ordinate: np.ndarray,
    reference_x: np.ndarray,
    reference_y: np.ndarray,
    excluded: np.ndarray,
    stem: str,
) -> list[str]:
    figure = Figure(figsize=(6, 4))
    axes = figure.subplots()
    axes.plot(*_breaks(reference_x, reference_y), color="0.5", label="slope 1 mod 2pi")
    kept = ~np.asarray(excluded, dtype=bool)
    axes.plot(abscissa[kept], ordinate[kept], "o", ms=3, label="fringes")
    if (~kept).any():
        axes.plot(abscissa[~kept], ordinate[~kept], "x", label="excluded")
    axes.set_xlabel("V_ac t_m / hbar (rad)")
    axes.set_ylabel("-phi (rad, wrapped)")
    axes.legend()
    return [
        save_svg(figure, f"{stem}.svg"),
        write_columns(
            f"{stem}.csv",
            {
                "stark_phase_rad": abscissa,
                "minus_phi_rad": ordinate,
                "excluded": (~kept).astype(float),
            },
        ),
        write_columns(
            f"{stem}_reference.csv",
            {"stark_phase_rad": reference_x, "reference_rad": reference_y},
        ),
    ]


def plot_series(
    stem: str,
    series: Mapping[str, tuple[np.ndarray, np.ndarray]],
    xlabel: str,
    ylabel: str,
    *,
    style: str = "o-",
    log_x: bool = False,
    log_y: bool = False,
) -> list[str]:
    """One line per named (x, y) series; the CSV holds x_<name>, y_<name> columns."""
    figure = Figure(figsize=(6, 4))
    axes = figure.subplots()
    columns: dict[str, Sequence[float]] = {}
    for name, (x, y) in series.items():
        axes.plot(x, y, style, ms=3, label=name)
        columns[f"x_{name}"] = np.asarray(x, dtype=float)
        columns[f"y_{name}"] = np.asarray(y, dtype=float)
    if log_x:
        axes.set_xscale("log")
    if log_y:
        axes.set_yscale("log")
    axes.set_xlabel(xlabel)
    axes.set_ylabel(ylabel)
    if len(series) > 1:
        axes.legend()
    return [save_svg(figure, f"{stem}.svg"), write_columns(f"{stem}.csv", columns)]


def plot_map(
    stem: str,
    values: np.ndarray,
    label: str,
    outline: Optional[np.ndarray] = None,
) -> list[str]:
    figure = Figure(figsize=(6, 3))
    axes = figure.subplots()
    image = axes.imshow(values, origin="lower", cmap="RdBu_r")
    if outline is not None:
        axes.contour(outline.astype(float), levels=[0.5], colors="k", linewidths=0.8)
    figure.colorbar(image, ax=axes, label=label)
    rows, cols = np.indices(values.shape)
    columns = {
        "row": rows.ravel(),
        "col": cols.ravel(),
        "value": np.asarray(values, dtype=float).ravel(),
    }
    return [save_svg(figure, f"{stem}.svg"), write_columns(f"{stem}.csv", columns)]
