"""Painting stage: batched denoising, regional modulation, compositing, blending."""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from . import kernels
from .errors import EmptyPlan, ShapeMismatch
from .latent import DEFAULT_SHAPE, check_grid, check_same_shape, initial_noise
from .plan import BoundingBox, CompositionPlan

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_POS = 0.5
DEFAULT_LAMBDA_NEG = 0.5
DEFAULT_OMEGA = 0.7
DEFAULT_STEPS = 8

# boxes edges this close to a cell boundary snap to it
_EDGE_TOL = 1e-9


@dataclass(frozen=True)
class ModulationParams:
    lambda_pos: float = DEFAULT_LAMBDA_POS
    lambda_neg: float = DEFAULT_LAMBDA_NEG
    omega: float = DEFAULT_OMEGA
    steps: int = DEFAULT_STEPS
    seed: int = 0

    def __post_init__(self):
        for name in ("lambda_pos", "lambda_neg"):
            val = float(getattr(self, name))
            if not math.isfinite(val) or val < 0:
                raise ValueError(f"{name} must be a finite number >= 0, got {val}")
            if val > 1:
                warnings.warn(f"{name}={val} clamped to 1", stacklevel=3)
                val = 1.0
            object.__setattr__(self, name, val)
        if not 0.0 <= float(self.omega) <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        object.__setattr__(self, "omega", float(self.omega))
        if int(self.steps) < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if int(self.seed) < 0:
            raise ValueError("seed must be unsigned")


@dataclass(frozen=True)
class AttentionWeights:
    """Row-vector projections: ``q = latent @ wq``, ``k = text @ wk``, ``v = text @ wv``."""

    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray

    @property
    def dim(self) -> int:
        return self.wq.shape[1]


class DenoiserBackend(Protocol):
    def denoise(self, z: np.ndarray, prompt: str, step: int, total_steps: int) -> np.ndarray: ...


def cross_attention(latent_embed: np.ndarray, prompt_embed: np.ndarray,
                    weights: AttentionWeights) -> np.ndarray:
    """softmax(q k^T / sqrt(d)) v with the softmax over prompt tokens."""
    return cross_attention_probs(latent_embed, prompt_embed, weights)[0]


def cross_attention_probs(latent_embed, prompt_embed, weights: AttentionWeights):
    phi = np.asarray(latent_embed, dtype=np.float64)
    psi = np.asarray(prompt_embed, dtype=np.float64)
    wq, wk, wv = (np.asarray(w, dtype=np.float64) for w in (weights.wq, weights.wk, weights.wv))
    if phi.ndim != 2 or psi.ndim != 2 or psi.shape[0] < 1:
        raise ShapeMismatch("embeddings must be 2-D with at least one prompt token")
    if wq.ndim != 2 or wk.ndim != 2 or wv.ndim != 2:
        raise ShapeMismatch("projection weights must be matrices")
    if phi.shape[1] != wq.shape[0]:
        raise ShapeMismatch(f"latent embedding width {phi.shape[1]} != W_Q rows {wq.shape[0]}")
    if psi.shape[1] != wk.shape[0] or psi.shape[1] != wv.shape[0]:
        raise ShapeMismatch(f"prompt embedding width {psi.shape[1]} does not match W_K/W_V")
    if wq.shape[1] != wk.shape[1]:
        raise ShapeMismatch(f"query dim {wq.shape[1]} != key dim {wk.shape[1]}")
    if not (np.isfinite(phi).all() and np.isfinite(psi).all()):
        raise ValueError("embeddings contain non-finite values")
    q = np.ascontiguousarray(phi @ wq)
    k = np.ascontiguousarray(psi @ wk)
    v = np.ascontiguousarray(psi @ wv)
    return kernels.attention(q, k, v, 1.0 / math.sqrt(wq.shape[1]))


def resize_box(box: BoundingBox, height: int, width: int) -> np.ndarray:
    """Boolean H x W mask covering ``box``; edges round outward, never empty."""
    if height < 1 or width < 1:
        raise ValueError("grid dimensions must be positive")

    def span(lo: float, size: float, n: int) -> tuple[int, int]:
        a = math.floor(lo * n + _EDGE_TOL)
        b = math.ceil((lo + size) * n - _EDGE_TOL)
        a = min(max(a, 0), n - 1)
        b = min(max(b, a + 1), n)
        return a, b

    r0, r1 = span(box.y, box.h, height)
    c0, c1 = span(box.x, box.w, width)
    mask = np.zeros((height, width), dtype=bool)
    mask[r0:r1, c0:c1] = True
    return mask


def _check_mask(z: np.ndarray, mask) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != z.shape[:2]:
        raise ShapeMismatch(f"mask shape {mask.shape} does not match grid {z.shape[:2]}")
    return mask


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"modulation strength must lie in [0, 1], got {lam}")
    return lam


def enhance(z: np.ndarray, mask, lambda_pos: float) -> np.ndarray:
    """Pull masked cells toward their channel's maximum by ``lambda_pos``."""
    z = check_grid(z)
    return kernels.enhance(z, _check_mask(z, mask), _check_lambda(lambda_pos))


def suppress(z: np.ndarray, mask, lambda_neg: float) -> np.ndarray:
    """Pull cells outside the mask toward their channel's minimum by ``lambda_neg``."""
    z = check_grid(z)
    return kernels.suppress(z, _check_mask(z, mask), _check_lambda(lambda_neg))


def composite_regions(latents: Sequence[tuple[np.ndarray, np.ndarray]],
                      background: np.ndarray | None) -> np.ndarray:
    """Paint each latent's masked cells over the background, in list order.

    Later entries overwrite earlier ones, so pass regions largest first.
    """
    if not latents and background is None:
        raise EmptyPlan("nothing to composite")
    grids = [check_grid(z) for z, _ in latents]
    if background is None:
        base = np.zeros_like(grids[0])
    else:
        base = check_grid(background, "background")
    check_same_shape(base, *grids)
    if not grids:
        return base.copy()
    masks = np.stack([_check_mask(base, m) for _, m in latents])
    return kernels.composite(np.stack(grids), masks, base)


def blend(z_cat: np.ndarray, z_c: np.ndarray, omega: float) -> np.ndarray:
    """``omega * z_cat + (1 - omega) * z_c``."""
    z_cat, z_c = check_grid(z_cat), check_grid(z_c)
    check_same_shape(z_cat, z_c)
    omega = float(omega)
    if not 0.0 <= omega <= 1.0:
        raise ValueError(f"omega must lie in [0, 1], got {omega}")
    return kernels.blend(z_cat, z_c, omega)


@dataclass(frozen=True)
class SamplingState:
    t: int
    z: np.ndarray
    total_steps: int


def prompt_batch(plan: CompositionPlan) -> list[str]:
    """[complex prompt, simple prompts in plan order..., background prompt]."""
    return [plan.complex_prompt.text, *(p.text for p in plan.prompts), plan.background.text]


def sample_step(state: SamplingState, plan: CompositionPlan, params: ModulationParams,
                denoiser: DenoiserBackend, *, workers: int = 1) -> SamplingState:
    """One timestep: batch denoise, modulate, composite, blend; returns t - 1."""
    if state.t < 1:
        raise ValueError("sampling already reached t = 0")
    z_t = check_grid(state.z).copy()
    z_t.flags.writeable = False
    h, w, _ = z_t.shape
    batch = prompt_batch(plan)

    def run(prompt: str) -> np.ndarray:
        out = check_grid(denoiser.denoise(z_t, prompt, state.t, state.total_steps), "denoiser output")
        if out.shape != z_t.shape:
            raise ShapeMismatch(f"denoiser returned {out.shape} for a {z_t.shape} latent")
        return out

    if workers > 1 and len(batch) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            latents = list(pool.map(run, batch))
    else:
        latents = [run(p) for p in batch]
    z_c, simple, z_b = latents[0], latents[1:-1], latents[-1]

    regions = []
    for z_i, box in zip(simple, plan.boxes):
        mask = resize_box(box, h, w)
        z_i = kernels.enhance(z_i, mask, params.lambda_pos)
        z_i = kernels.suppress(z_i, mask, params.lambda_neg)
        regions.append((z_i, mask))
    z_cat = composite_regions(regions, z_b)
    z_next = kernels.blend(z_cat, z_c, params.omega)
    return SamplingState(state.t - 1, z_next, state.total_steps)


def run_sampling(plan: CompositionPlan, params: ModulationParams, denoiser: DenoiserBackend, *,
                 shape: tuple[int, int, int] = DEFAULT_SHAPE, workers: int = 1,
                 callback: Callable[[SamplingState], None] | None = None) -> np.ndarray:
    """Start from seeded noise and run ``params.steps`` sampling steps."""
    state = SamplingState(params.steps, initial_noise(shape, params.seed), params.steps)
    while state.t > 0:
        state = sample_step(state, plan, params, denoiser, workers=workers)
        if callback is not None:
            callback(state)
        log.debug("step done, t=%d", state.t)
    return state.z
