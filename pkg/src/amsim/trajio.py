"""Trajectory serialization: a compact binary format plus CSV export.

The binary layout is a fixed 32-byte header followed by the states in
row-major (step-major) order as little-endian 64-bit floats:

    bytes 0..7    magic  b"AMSTRAJ\\0"
    bytes 8..11   format version (u32, currently 1)
    bytes 12..15  number of state components N (u32)
    bytes 16..23  number of steps T (u64); the payload holds T+1 rows
    bytes 24..31  reserved (zero)

The CSV export carries one row per step with columns
``step,time,x_0,...,x_{N-1}``, floats rendered with ``repr`` so a
write/parse round trip is lossless.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import InvalidArgumentError

MAGIC = b"AMSTRAJ\0"
VERSION = 1
_HEADER = struct.Struct("<8sIIQ8x")


def write_trajectory_bin(path, states: np.ndarray) -> None:
    """Write a (T+1, N) state array to ``path`` in the binary format."""
    states = np.ascontiguousarray(states, dtype="<f8")
    if states.ndim != 2 or states.shape[0] < 1:
        raise InvalidArgumentError("states must be a non-empty (steps+1, N) array")
    n_steps = states.shape[0] - 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, states.shape[1], n_steps))
        fh.write(states.tobytes())


def read_trajectory_bin(path) -> np.ndarray:
    """Read a binary trajectory file back into a (T+1, N) float array."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise InvalidArgumentError(f"{path}: truncated header")
        magic, version, n, n_steps = _HEADER.unpack(header)
        if magic != MAGIC:
            raise InvalidArgumentError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise InvalidArgumentError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = (n_steps + 1) * n * 8
    if len(payload) != expected:
        raise InvalidArgumentError(
            f"{path}: payload holds {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype="<f8").reshape(n_steps + 1, n).copy()


def write_trajectory_csv(path, states: np.ndarray, dt: float, header_comment=None) -> None:
    """Write a (T+1, N) state array as step,time,x_0..x_{N-1} rows."""
    states = np.asarray(states, dtype=float)
    if states.ndim != 2 or states.shape[0] < 1:
        raise InvalidArgumentError("states must be a non-empty (steps+1, N) array")
    n = states.shape[1]
    with open(path, "w") as fh:
        if header_comment:
            fh.write(f"# {header_comment}\n")
        fh.write("step,time," + ",".join(f"x_{i}" for i in range(n)) + "\n")
        for t, row in enumerate(states):
            fh.write(f"{t},{repr(t * dt)}," + ",".join(repr(float(v)) for v in row) + "\n")
