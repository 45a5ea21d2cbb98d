"""Denoiser backends: a deterministic mock and an HTTP client for a live service."""

from __future__ import annotations

import functools
import hashlib

import numpy as np

from .. import latent as L
from ..composer import AttentionWeights, cross_attention
from ..errors import BackendFailure, ShapeMismatch
from .http import HttpClient

DECAY = 0.9
PATTERN_WEIGHT = 0.1

# attention outputs are snapped to this grid so BLAS and libm differences
# between machines cannot leak into golden checksums
_QUANTUM = 2.0 ** -20

_TOKENS = 4
_EMBED = 8
_PROJ = 8


def prompt_seed(prompt: str) -> int:
    """64-bit seed from the prompt text (BLAKE2b, 8-byte digest)."""
    return int.from_bytes(hashlib.blake2b(prompt.encode("utf-8"), digest_size=8).digest(), "little")


def _positions(h: int, w: int) -> np.ndarray:
    r, c = np.meshgrid(np.arange(h) / max(h - 1, 1), np.arange(w) / max(w - 1, 1), indexing="ij")
    r, c = r.reshape(-1), c.reshape(-1)
    return np.stack([np.ones_like(r), r, c, r * c], axis=1)


@functools.lru_cache(maxsize=256)
def prompt_pattern(prompt: str, shape: tuple[int, int, int]) -> np.ndarray:
    """The mock's prompt-specific grid: cross-attention of cell positions over a
    prompt embedding, both drawn from a generator seeded by the prompt hash."""
    h, w, c = shape
    rng = np.random.Generator(np.random.Philox(prompt_seed(prompt)))
    embed = rng.standard_normal((_TOKENS, _EMBED))
    weights = AttentionWeights(
        wq=rng.standard_normal((4, _PROJ)),
        wk=rng.standard_normal((_EMBED, _PROJ)),
        wv=rng.standard_normal((_EMBED, c)),
    )
    out = cross_attention(_positions(h, w), embed, weights).reshape(h, w, c)
    out = np.round(out / _QUANTUM) * _QUANTUM
    out.flags.writeable = False
    return out


class MockDenoiser:
    """``z' = 0.9 z + 0.1 P(prompt)``; pure and bit-deterministic."""

    deterministic = True

    def __init__(self):
        self.calls = 0

    def denoise(self, z: np.ndarray, prompt: str, step: int = 0, total_steps: int = 0) -> np.ndarray:
        self.calls += 1
        return mock_denoise(z, prompt, step, total_steps)


def mock_denoise(z: np.ndarray, prompt: str, step: int = 0, total_steps: int = 0) -> np.ndarray:
    z = L.check_grid(z)
    return DECAY * z + PATTERN_WEIGHT * prompt_pattern(prompt, z.shape)


class RemoteDenoiser:
    """Client for ``POST /denoise`` and ``POST /decode`` on a diffusion service."""

    deterministic = False

    def __init__(self, url: str | None = None, *, client: HttpClient | None = None, **kwargs):
        if client is None:
            if not url:
                raise ValueError("RemoteDenoiser needs a url or a client")
            client = HttpClient(url, **kwargs)
        self.client = client

    def denoise(self, z: np.ndarray, prompt: str, step: int, total_steps: int) -> np.ndarray:
        payload = {"latent": L.to_json(z), "prompt": prompt, "step": int(step),
                   "total_steps": int(total_steps)}
        reply = self.client.post("/denoise", payload)
        doc = reply.get("latent", reply) if isinstance(reply, dict) else reply
        try:
            out = L.from_json(doc)
        except (ValueError, ShapeMismatch, AttributeError) as exc:
            raise BackendFailure(f"denoise reply is not a latent: {exc}", kind="invalid_reply",
                                 body=str(reply)[:2000]) from None
        if out.shape != np.shape(z):
            raise BackendFailure(f"denoise reply has shape {out.shape}, sent {np.shape(z)}",
                                 kind="invalid_reply")
        return out

    def decode(self, z: np.ndarray) -> str:
        reply = self.client.post("/decode", {"latent": L.to_json(z)})
        if not isinstance(reply, dict) or not isinstance(reply.get("image_ref"), str):
            raise BackendFailure("decode reply lacks image_ref", kind="invalid_reply",
                                 body=str(reply)[:2000])
        return reply["image_ref"]
