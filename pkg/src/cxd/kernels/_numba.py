"""numba kernels.  Loop bodies mirror the numpy expressions exactly."""

import numpy as np
from numba import njit


@njit(cache=True)
def enhance(z, mask, lam):
    h, w, c = z.shape
    mx = np.empty(c)
    for ch in range(c):
        m = z[0, 0, ch]
        for i in range(h):
            for j in range(w):
                if z[i, j, ch] > m:
                    m = z[i, j, ch]
        mx[ch] = m
    out = z.copy()
    for i in range(h):
        for j in range(w):
            if mask[i, j]:
                for ch in range(c):
                    if lam >= 1.0:
                        out[i, j, ch] = mx[ch]
                    else:
                        val = z[i, j, ch] + lam * (mx[ch] - z[i, j, ch])
                        out[i, j, ch] = val if val < mx[ch] else mx[ch]
    return out


@njit(cache=True)
def suppress(z, mask, lam):
    h, w, c = z.shape
    mn = np.empty(c)
    for ch in range(c):
        m = z[0, 0, ch]
        for i in range(h):
            for j in range(w):
                if z[i, j, ch] < m:
                    m = z[i, j, ch]
        mn[ch] = m
    out = z.copy()
    for i in range(h):
        for j in range(w):
            if not mask[i, j]:
                for ch in range(c):
                    if lam >= 1.0:
                        out[i, j, ch] = mn[ch]
                    else:
                        val = z[i, j, ch] - lam * (z[i, j, ch] - mn[ch])
                        out[i, j, ch] = val if val > mn[ch] else mn[ch]
    return out


@njit(cache=True)
def composite(latents, masks, background):
    out = background.copy()
    n, h, w, c = latents.shape
    for k in range(n):
        for i in range(h):
            for j in range(w):
                if masks[k, i, j]:
                    for ch in range(c):
                        out[i, j, ch] = latents[k, i, j, ch]
    return out


@njit(cache=True)
def blend(z_cat, z_c, omega):
    out = np.empty_like(z_cat)
    h, w, c = z_cat.shape
    rest = 1.0 - omega
    for i in range(h):
        for j in range(w):
            for ch in range(c):
                out[i, j, ch] = omega * z_cat[i, j, ch] + rest * z_c[i, j, ch]
    return out


@njit(cache=True)
def attention(q, k, v, scale):
    n = q.shape[0]
    t = k.shape[0]
    scores = (q @ k.T) * scale
    probs = np.empty((n, t))
    for i in range(n):
        m = scores[i, 0]
        for j in range(1, t):
            if scores[i, j] > m:
                m = scores[i, j]
        s = 0.0
        for j in range(t):
            e = np.exp(scores[i, j] - m)
            probs[i, j] = e
            s += e
        for j in range(t):
            probs[i, j] = probs[i, j] / s
    return probs @ v, probs
