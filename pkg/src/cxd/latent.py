"""Latent grids: (H, W, C) float64 arrays, their binary dump and JSON forms.

Dump layout (little-endian)::

    b"CXDL" | u32 H | u32 W | u32 C | H*W*C float64, row-major, channels last
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np

from .errors import ShapeMismatch

MAGIC = b"CXDL"
_HEADER = struct.Struct("<4sIII")
DEFAULT_SHAPE = (64, 64, 4)


def check_grid(z, name: str = "latent") -> np.ndarray:
    z = np.asarray(z)
    if z.ndim != 3 or min(z.shape) < 1:
        raise ShapeMismatch(f"{name} must be a non-empty H x W x C grid, got shape {z.shape}")
    if z.dtype != np.float64:
        z = z.astype(np.float64)
    if not np.isfinite(z).all():
        raise ValueError(f"{name} contains non-finite values")
    return z


def check_same_shape(*grids: np.ndarray) -> None:
    shapes = {g.shape for g in grids}
    if len(shapes) > 1:
        raise ShapeMismatch(f"grid shapes differ: {sorted(shapes)}")


def initial_noise(shape: tuple[int, int, int], seed: int) -> np.ndarray:
    """Unit-normal start latent from a counter-based (Philox) generator."""
    rng = np.random.Generator(np.random.Philox(int(seed)))
    return rng.standard_normal(tuple(shape))


def to_bytes(z: np.ndarray) -> bytes:
    z = check_grid(z)
    h, w, c = z.shape
    return _HEADER.pack(MAGIC, h, w, c) + np.ascontiguousarray(z, dtype="<f8").tobytes()


def from_bytes(blob: bytes) -> np.ndarray:
    if len(blob) < _HEADER.size:
        raise ValueError("latent dump is truncated")
    magic, h, w, c = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise ValueError(f"not a latent dump (magic {magic!r})")
    expected = _HEADER.size + 8 * h * w * c
    if len(blob) != expected:
        raise ValueError(f"latent dump has {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    return data.reshape(h, w, c).astype(np.float64)


def write_latent(path: str | Path, z: np.ndarray) -> str:
    """Write the dump and return its checksum."""
    blob = to_bytes(z)
    Path(path).write_bytes(blob)
    return hashlib.sha256(blob).hexdigest()


def read_latent(path: str | Path) -> np.ndarray:
    return from_bytes(Path(path).read_bytes())


def checksum(z: np.ndarray) -> str:
    """SHA-256 of the binary dump; identical grids give identical digests."""
    return hashlib.sha256(to_bytes(z)).hexdigest()


def to_json(z: np.ndarray) -> dict:
    z = check_grid(z)
    h, w, c = z.shape
    return {"h": h, "w": w, "c": c, "data": z.reshape(-1).tolist()}


def from_json(d: dict) -> np.ndarray:
    try:
        h, w, c = int(d["h"]), int(d["w"]), int(d["c"])
        data = np.asarray(d["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad latent document: {exc}") from None
    if data.size != h * w * c:
        raise ShapeMismatch(f"latent document holds {data.size} values, header says {h}x{w}x{c}")
    return check_grid(data.reshape(h, w, c))
