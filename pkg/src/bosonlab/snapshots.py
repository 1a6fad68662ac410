"""Binary state snapshots.

Layout: magic ``BLAB1``, one representation tag byte (0 = tensor grid,
1 = occupation basis), then little-endian u32 fields d, L, N, little-endian
f64 lattice spacing h, followed by the raw amplitudes as little-endian
complex64 (re, im) pairs.  Tensor amplitudes are row-major over the
(M,)*N grid; occupation amplitudes follow the deterministic basis order.
"""

from __future__ import annotations

import struct

import numpy as np

from . import fockstate as fs
from . import tensorstate as ts
from .errors import ConfigError

__all__ = ["save_state", "load_state", "MAGIC"]

MAGIC = b"BLAB1"
_HEADER = struct.Struct("<5sBIIId")

TAG_TENSOR = 0
TAG_OCCUPATION = 1


def save_state(path, state, dimension: int, sites_per_dim: int) -> None:
    spacing = state.cell ** (1.0 / dimension)
    if isinstance(state, ts.TensorState):
        tag = TAG_TENSOR
        payload = np.ascontiguousarray(state.amps, dtype="<c8").tobytes()
    elif isinstance(state, fs.FockState):
        tag = TAG_OCCUPATION
        payload = np.ascontiguousarray(state.amps, dtype="<c8").tobytes()
    else:
        raise ConfigError(f"cannot snapshot object of type {type(state).__name__}")
    header = _HEADER.pack(MAGIC, tag, dimension, sites_per_dim, state.particles, spacing)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_state(path):
    """Read a snapshot, returning (state, dimension, sites_per_dim)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise ConfigError(f"{path}: truncated snapshot header")
        magic, tag, dim, sites_per_dim, particles, spacing = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ConfigError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        payload = np.frombuffer(fh.read(), dtype="<c8").astype(np.complex128)

    m = sites_per_dim**dim
    cell = spacing**dim
    if tag == TAG_TENSOR:
        expected = m**particles
        if payload.size != expected:
            raise ConfigError(f"{path}: expected {expected} amplitudes, found {payload.size}")
        state = ts.TensorState(payload.reshape((m,) * particles), cell)
    elif tag == TAG_OCCUPATION:
        space = fs.FockSpace(fs.enumerate_basis(m, particles), cell)
        if payload.size != space.basis.dim:
            raise ConfigError(
                f"{path}: expected {space.basis.dim} amplitudes, found {payload.size}"
            )
        state = fs.FockState(payload, space)
    else:
        raise ConfigError(f"{path}: unknown representation tag {tag}")
    return state, dim, sites_per_dim
