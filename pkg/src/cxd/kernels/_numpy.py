"""Pure-numpy kernels.  Must agree bit-for-bit with the numba versions."""

import numpy as np


def enhance(z, mask, lam):
    mx = z.max(axis=(0, 1))
    if lam >= 1.0:
        pulled = np.broadcast_to(mx, z.shape)
    else:
        pulled = np.minimum(z + lam * (mx - z), mx)
    out = z.copy()
    out[mask] = pulled[mask]
    return out


def suppress(z, mask, lam):
    mn = z.min(axis=(0, 1))
    if lam >= 1.0:
        pulled = np.broadcast_to(mn, z.shape)
    else:
        pulled = np.maximum(z - lam * (z - mn), mn)
    out = z.copy()
    outside = ~mask
    out[outside] = pulled[outside]
    return out


def composite(latents, masks, background):
    out = background.copy()
    for k in range(latents.shape[0]):
        m = masks[k]
        out[m] = latents[k][m]
    return out


def blend(z_cat, z_c, omega):
    return omega * z_cat + (1.0 - omega) * z_c


def attention(q, k, v, scale):
    scores = (q @ k.T) * scale
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs @ v, probs
