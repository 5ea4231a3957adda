"""STKC image-stack files: a 64-byte header followed by float64 frames.

Header layout (little-endian): magic b"STKC", uint32 version, uint64 frame
count, uint64 height, uint64 width, uint32 element type (1 = float64), zero
padding to 64 bytes. A sidecar `<name>.json` carries metadata and the SHA-256
of the whole file.
"""

import hashlib
import os
import struct
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.custom_types.images import ImageStack
from src.errors import ChecksumError, StackFormatError

MAGIC = b"STKC"
VERSION = 1
FLOAT64 = 1
HEADER_SIZE = 64
HEADER = struct.Struct("<4sIQQQI")
ELEMENT = np.dtype("<f8")


class StackSidecar(BaseModel):
    model_config = ConfigDict(extra="forbid")

    label: str = ""
    pixel_pitch_m: float = 13e-6
    exposure_s: float = 0.0
    n_frames: int
    height: int
    width: int
    sha256: str
    dark_file: Optional[str] = None


def sidecar_path(path: str) -> str:
    return f"{path}.json"


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_frames(path: str, frames: np.ndarray) -> None:
    n, height, width = frames.shape
    header = HEADER.pack(MAGIC, VERSION, n, height, width, FLOAT64)
    with open(path, "wb") as f:
        f.write(header.ljust(HEADER_SIZE, b"\0"))
        f.write(np.ascontiguousarray(frames, dtype=ELEMENT).tobytes())


def _read_frames(path: str) -> np.ndarray:
    actual = os.path.getsize(path)
    with open(path, "rb") as f:
        header = f.read(HEADER_SIZE)
        if len(header) < HEADER_SIZE:
            raise StackFormatError(
                f"{path}: truncated header, expected {HEADER_SIZE} bytes, got {actual}"
            )
        magic, version, n, height, width, element = HEADER.unpack_from(header)
        if magic != MAGIC:
            raise StackFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise StackFormatError(f"{path}: unsupported version {version}")
        if element != FLOAT64:
            raise StackFormatError(f"{path}: unsupported element type {element}")
        expected = HEADER_SIZE + n * height * width * ELEMENT.itemsize
        if actual != expected:
            raise StackFormatError(
                f"{path}: expected {expected} bytes, file holds {actual} bytes"
            )
        payload = f.read()
    return np.frombuffer(payload, dtype=ELEMENT).reshape(n, height, width).copy()


def write_stack(path: str, stack: ImageStack) -> StackSidecar:
    """Write frames, an optional `<path>.dark` frame and the JSON sidecar."""
    _write_frames(path, stack.frames)
    dark_file = None
    if stack.dark is not None:
        dark_file = f"{path}.dark"
        _write_frames(dark_file, stack.dark[np.newaxis])
    sidecar = StackSidecar(
        label=stack.label,
        pixel_pitch_m=stack.pixel_pitch_m,
        exposure_s=stack.exposure_s,
        n_frames=stack.n_frames,
        height=stack.shape[0],
        width=stack.shape[1],
        sha256=file_sha256(path),
        dark_file=os.path.basename(dark_file) if dark_file else None,
    )
    with open(sidecar_path(path), "w") as f:
        f.write(sidecar.model_dump_json(indent=2))
    return sidecar


def read_stack(path: str, verify: bool = True) -> ImageStack:
    frames = _read_frames(path)
    if not os.path.exists(sidecar_path(path)):
        return ImageStack(frames=frames)
    with open(sidecar_path(path), "r") as f:
        sidecar = StackSidecar.model_validate_json(f.read())
    if verify and file_sha256(path) != sidecar.sha256:
        raise ChecksumError(f"{path}: SHA-256 does not match {sidecar_path(path)}")
    dark = None
    if sidecar.dark_file is not None:
        dark = _read_frames(os.path.join(os.path.dirname(path), sidecar.dark_file))[0]
    return ImageStack(
        frames=frames,
        pixel_pitch_m=sidecar.pixel_pitch_m,
        exposure_s=sidecar.exposure_s,
        label=sidecar.label,
        dark=dark,
    )
