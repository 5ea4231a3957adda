"""Dataset directories: a JSON manifest plus STKC and CSV payload files."""

import csv
import logging
import os
from collections import defaultdict
from typing import Any, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from src.custom_types.datasets import FringeDataset, Trace
from src.custom_types.images import ImageStack
from src.errors import ChecksumError, StackFormatError
from src.io.stack_format import file_sha256, read_stack, write_stack

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.json"

DatasetKind = Literal["fringes", "probe-stacks", "tof", "beam", "rf", "intensity-map"]
PayloadFormat = Literal["stkc", "fringe-csv", "trace-csv"]
Payload = Union[ImageStack, list[FringeDataset], Trace]

FRINGE_COLUMNS = [
    "label",
    "n_adu",
    "delta_bar",
    "t_p_s",
    "t_exposure_s",
    "dphi_p",
    "f2",
]


class PayloadEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    file: str
    format: PayloadFormat
    sha256: str


class Manifest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: DatasetKind
    schema_version: int = SCHEMA_VERSION
    seed: Optional[int] = None
    config: dict[str, Any] = {}
    ground_truth: Optional[dict[str, Any]] = None
    metadata: dict[str, Any] = {}
    payloads: dict[str, PayloadEntry] = {}


def write_fringes_csv(path: str, datasets: list[FringeDataset]) -> None:
    """One row per fringe sample; fringes are grouped by label."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(FRINGE_COLUMNS)
        for index, data in enumerate(datasets):
            label = data.label or f"fringe-{index:03d}"
            exposure = (
                "" if data.t_exposure_s is None else repr(float(data.t_exposure_s))
            )
            for dphi, f2 in zip(data.dphi_p, data.f2):
                writer.writerow(
                    [
                        label,
                        repr(float(data.n_adu)),
                        repr(float(data.delta_bar)),
                        repr(float(data.t_p_s)),
                        exposure,
                        repr(float(dphi)),
                        repr(float(f2)),
                    ]
                )


def read_fringes_csv(path: str) -> list[FringeDataset]:
    rows: dict[str, list[dict[str, str]]] = defaultdict(list)
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != FRINGE_COLUMNS:
            raise StackFormatError(f"{path}: expected columns {FRINGE_COLUMNS}")
        for row in reader:
            rows[row["label"]].append(row)
    datasets = []
    for label, samples in rows.items():
        first = samples[0]
        datasets.append(
            FringeDataset(
                dphi_p=np.array([float(s["dphi_p"]) for s in samples]),
                f2=np.array([float(s["f2"]) for s in samples]),
                n_adu=float(first["n_adu"]),
                delta_bar=float(first["delta_bar"]),
                t_p_s=float(first["t_p_s"]),
                t_exposure_s=(
                    float(first["t_exposure_s"]) if first["t_exposure_s"] else None
                ),
                label=label,
            )
        )
    return datasets


def write_trace_csv(path: str, trace: Trace) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["t_s", "v"])
        for t, v in zip(trace.t, trace.v):
            writer.writerow([repr(float(t)), repr(float(v))])


def read_trace_csv(path: str, f_nominal_hz: float) -> Trace:
    with open(path, "r", newline="") as f:
        reader = csv.DictReader(f)
        samples = [(float(row["t_s"]), float(row["v"])) for row in reader]
    t, v = (np.array(column) for column in zip(*samples)) if samples else ([], [])
    return Trace(np.asarray(t, dtype=float), np.asarray(v, dtype=float), f_nominal_hz)


def _write_payload(directory: str, name: str, payload: Payload) -> PayloadEntry:
    if isinstance(payload, ImageStack):
        file, fmt = f"{name}.stkc", "stkc"
        write_stack(os.path.join(directory, file), payload)
    elif isinstance(payload, Trace):
        file, fmt = f"{name}.csv", "trace-csv"
        write_trace_csv(os.path.join(directory, file), payload)
    else:
        file, fmt = f"{name}.csv", "fringe-csv"
        write_fringes_csv(os.path.join(directory, file), payload)
    return PayloadEntry(
        file=file, format=fmt, sha256=file_sha256(os.path.join(directory, file))
    )


def save_dataset(
    directory: str,
    kind: DatasetKind,
    payloads: dict[str, Payload],
    *,
    config: Optional[dict[str, Any]] = None,
    seed: Optional[int] = None,
    ground_truth: Optional[dict[str, Any]] = None,
    metadata: Optional[dict[str, Any]] = None,
) -> Manifest:
    os.makedirs(directory, exist_ok=True)
    manifest = Manifest(
        kind=kind,
        seed=seed,
        config=config or {},
        ground_truth=ground_truth,
        metadata=metadata or {},
        payloads={
            name: _write_payload(directory, name, payload)
            for name, payload in payloads.items()
        },
    )
    with open(os.path.join(directory, MANIFEST_NAME), "w") as f:
        f.write(manifest.model_dump_json(indent=2))
    logger.info("wrote %s dataset (%d payloads) to %s", kind, len(payloads), directory)
    return manifest


def load_manifest(directory: str, verify: bool = True) -> Manifest:
    path = os.path.join(directory, MANIFEST_NAME)
    with open(path, "r") as f:
        text = f.read()
    try:
        manifest = Manifest.model_validate_json(text)
    except ValidationError as exc:
        raise StackFormatError(
            f"{path}: invalid manifest ({exc.error_count()} errors)"
        ) from exc
    if manifest.schema_version != SCHEMA_VERSION:
        raise StackFormatError(
            f"{path}: schema version {manifest.schema_version}, "
            f"expected {SCHEMA_VERSION}"
        )
    if verify:
        for name, entry in manifest.payloads.items():
            if file_sha256(os.path.join(directory, entry.file)) != entry.sha256:
                raise ChecksumError(f"payload {name} ({entry.file}) checksum mismatch")
    return manifest


def load_payload(
    directory: str, manifest: Manifest, name: str, f_nominal_hz: float = 0.0
) -> Payload:
    if name not in manifest.payloads:
        raise StackFormatError(
            f"{manifest.kind} dataset has no payload {name!r}; "
            f"found {sorted(manifest.payloads)}"
        )
    entry = manifest.payloads[name]
    path = os.path.join(directory, entry.file)
    if entry.format == "stkc":
        return read_stack(path)
    if entry.format == "trace-csv":
        return read_trace_csv(path, f_nominal_hz)
    return read_fringes_csv(path)
