"""Binary and CSV persistence of sample buffers."""

from __future__ import annotations

import csv
from pathlib import Path
import struct

import numpy as np

from ..data_models.signal import SampleBuffer
from ..errors import ModelFormatError

MAGIC = b"ANCB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sId")


def write_sample_buffer(path: str | Path, buffer: SampleBuffer) -> Path:
    """Write ``buffer`` as a 16-byte header followed by little-endian float64 samples."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as handle:
        handle.write(_HEADER.pack(MAGIC, FORMAT_VERSION, buffer.sample_rate_hz))
        handle.write(buffer.samples.astype("<f8").tobytes())
    return path


def read_sample_buffer(path: str | Path) -> SampleBuffer:
    """Read a buffer written by :func:`write_sample_buffer`."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ModelFormatError(f"{path}: file shorter than the stream header")
    magic, version, sample_rate_hz = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"{path}: unsupported stream version {version}")
    payload = raw[_HEADER.size :]
    if len(payload) % 8:
        raise ModelFormatError(f"{path}: truncated sample payload")
    return SampleBuffer(np.frombuffer(payload, dtype="<f8"), sample_rate_hz)


def write_sample_buffer_csv(
    path: str | Path, buffer: SampleBuffer, header_comment: str | None = None
) -> Path:
    """Export ``buffer`` as ``time_s,value`` rows with 9 significant digits."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time_s", "value"])
        for time_s, value in zip(buffer.times_s, buffer.samples, strict=True):
            writer.writerow([f"{time_s:.9g}", f"{value:.9g}"])
    return path
