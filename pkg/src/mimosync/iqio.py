"""Binary IQ sample file format.

Layout: 16-byte header = magic "IQS1", version u32, antenna count u32,
sample count u32 (all little-endian), followed by the samples in
antenna-major order as interleaved float32 little-endian (I, Q) pairs.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"IQS1"
VERSION = 1
_HEADER = struct.Struct("<4sIII")


class IqFormatError(ValueError):
    pass


def write_iq(path: str | Path, samples: np.ndarray) -> None:
    """Write a (antennas, n) complex array."""
    samples = np.atleast_2d(np.asarray(samples, dtype=complex))
    n_ant, n_samp = samples.shape
    interleaved = np.empty((n_ant, 2 * n_samp), dtype="<f4")
    interleaved[:, 0::2] = samples.real
    interleaved[:, 1::2] = samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n_ant, n_samp))
        fh.write(interleaved.tobytes())


def read_iq(path: str | Path) -> np.ndarray:
    """Read back a (antennas, n) complex64-precision array."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise IqFormatError("file shorter than the 16-byte header")
    magic, version, n_ant, n_samp = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise IqFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise IqFormatError(f"unsupported version {version}")
    expected = _HEADER.size + 8 * n_ant * n_samp
    if len(data) != expected:
        raise IqFormatError(f"size mismatch: {len(data)} bytes, expected {expected}")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    flat = flat.reshape(n_ant, 2 * n_samp)
    return (flat[:, 0::2] + 1j * flat[:, 1::2]).astype(complex)
