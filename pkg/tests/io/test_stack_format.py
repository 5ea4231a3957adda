import os

import numpy as np
import pytest

from src.custom_types.images import ImageStack
from src.errors import ChecksumError, StackFormatError
from src.io.stack_format import (
    HEADER_SIZE,
    read_stack,
    sidecar_path,
    write_stack,
)


def _stack() -> ImageStack:
    frames = np.arange(3 * 4 * 5, dtype=float).reshape(3, 4, 5)
    return ImageStack(
        frames=frames,
        pixel_pitch_m=16e-6,
        exposure_s=1.6e-6,
        label="flat-1200",
        dark=np.full((4, 5), 100.0),
    )


def test_stack_survives_a_write(tmp_path):
    path = str(tmp_path / "flat.stkc")
    sidecar = write_stack(path, _stack())
    assert sidecar.n_frames == 3
    assert (sidecar.height, sidecar.width) == (4, 5)
    assert sidecar.dark_file == "flat.stkc.dark"
    assert os.path.getsize(path) == HEADER_SIZE + 3 * 4 * 5 * 8

    stack = read_stack(path)
    assert np.array_equal(stack.frames, _stack().frames)
    assert stack.dark is not None and np.all(stack.dark == 100.0)
    assert stack.label == "flat-1200"
    assert stack.pixel_pitch_m == 16e-6
    assert stack.exposure_s == 1.6e-6


def test_missing_sidecar_gives_bare_frames(tmp_path):
    path = str(tmp_path / "bare.stkc")
    write_stack(path, ImageStack(frames=np.ones((2, 3, 3))))
    os.remove(sidecar_path(path))
    stack = read_stack(path)
    assert stack.n_frames == 2
    assert stack.dark is None
    assert stack.label == ""


def test_tampered_payload_fails_checksum(tmp_path):
    path = str(tmp_path / "flat.stkc")
    write_stack(path, _stack())
    with open(path, "r+b") as f:
        f.seek(HEADER_SIZE)
        f.write(np.array([-1.0]).tobytes())
    with pytest.raises(ChecksumError):
        read_stack(path)
    assert read_stack(path, verify=False).frames[0, 0, 0] == -1.0


def test_bad_magic(tmp_path):
    path = str(tmp_path / "flat.stkc")
    write_stack(path, _stack())
    with open(path, "r+b") as f:
        f.write(b"XXXX")
    with pytest.raises(StackFormatError, match="bad magic"):
        read_stack(path, verify=False)


def test_truncated_header(tmp_path):
    path = tmp_path / "short.stkc"
    path.write_bytes(b"STKC\x01\x00")
    with pytest.raises(StackFormatError, match="truncated header"):
        read_stack(str(path))


def test_size_mismatch_names_both_sizes(tmp_path):
    path = str(tmp_path / "flat.stkc")
    write_stack(path, _stack())
    with open(path, "ab") as f:
        f.write(b"\0" * 8)
    expected = HEADER_SIZE + 60 * 8
    with pytest.raises(StackFormatError) as info:
        read_stack(path, verify=False)
    assert f"expected {expected} bytes, file holds {expected + 8} bytes" in str(
        info.value
    )
