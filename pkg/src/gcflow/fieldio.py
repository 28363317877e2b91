"""Field serialization: CSV and raw binary round trips."""

from __future__ import annotations

import struct

import numpy as np

from .errors import ConfigError
from .spectral import Grid, RealField

_MAGIC = b"GCF1"
_HEADER_SIZE = 32


def save_csv(path: str, f: RealField, name: str = "field") -> None:
    """4-line header (d, L, M, field name), then one sample per line in
    row-major order."""
    g = f.grid
    with open(path, "w") as fh:
        fh.write(f"{g.d}\n{g.L!r}\n{g.M}\n{name}\n")
        for v in f.values.ravel(order="C"):
            fh.write(f"{float(v)!r}\n")


def load_csv(path: str) -> tuple[RealField, str]:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if len(lines) < 4:
        raise ConfigError(path, "truncated CSV field file")
    d, L, M, name = int(lines[0]), float(lines[1]), int(lines[2]), lines[3]
    grid = Grid.make(d, L, M)
    vals = np.array([float(s) for s in lines[4:] if s], dtype=np.float64)
    if vals.size != M**d:
        raise ConfigError(path, f"expected {M**d} samples, found {vals.size}")
    return RealField(grid, vals.reshape(grid.shape)), name


def save_binary(path: str, f: RealField) -> None:
    """32-byte header (magic "GCF1", u32 d, u32 M, f64 L, zero padding), then
    M^d little-endian f64 values in row-major order."""
    g = f.grid
    header = _MAGIC + struct.pack("<IId", g.d, g.M, g.L)
    header += b"\x00" * (_HEADER_SIZE - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(f.values.astype("<f8").tobytes(order="C"))


def load_binary(path: str) -> RealField:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER_SIZE)
        if len(header) < _HEADER_SIZE or header[:4] != _MAGIC:
            raise ConfigError(path, "bad magic or truncated header")
        d, M, L = struct.unpack("<IId", header[4:20])
        grid = Grid.make(int(d), float(L), int(M))
        data = fh.read(8 * M**d)
    vals = np.frombuffer(data, dtype="<f8")
    if vals.size != M**d:
        raise ConfigError(path, f"expected {M**d} samples, found {vals.size}")
    return RealField(grid, vals.reshape(grid.shape).astype(np.float64))
