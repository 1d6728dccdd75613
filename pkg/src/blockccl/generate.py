"""Seeded random and structured test images.

Random images use SplitMix64 (Steele, Lea & Flood 2014): the state starts at
``seed`` and each pixel, in raster order, draws one 64-bit output. The top 53
bits scaled by 2**-53 give a uniform double ``u``; the pixel is foreground iff
``u < density``. Any language with 64-bit unsigned arithmetic can reproduce
the images bit for bit.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .types import BinaryImage

PATTERNS = ("stripes", "spiral", "blobs", "checkerboard")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix_uniform(state, n):
    out = np.empty(n, dtype=np.float64)
    s = np.uint64(state)
    for i in range(n):
        s = s + _GOLDEN
        z = s
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
        out[i] = np.float64(z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
    return out


def splitmix_uniform(seed: int, n: int) -> np.ndarray:
    return _splitmix_uniform(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), n)


def random_image(w: int, h: int, density: float, seed: int = 0) -> BinaryImage:
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must be in [0, 1], got {density}")
    u = splitmix_uniform(seed, w * h)
    return BinaryImage(w, h, (u < density).astype(np.uint8))


def _stripes(w, h, period=2, vertical=False):
    if period < 1:
        raise ValueError("period must be >= 1")
    on = max(1, period // 2)
    if vertical:
        line = (np.arange(w) % period) < on
        return np.broadcast_to(line[None, :], (h, w))
    line = (np.arange(h) % period) < on
    return np.broadcast_to(line[:, None], (h, w))


@njit(cache=True)
def _spiral(w, h):
    # Turtle walk hugging the outside, turning clockwise and keeping a one
    # pixel gap to earlier turns: a single path, hence one component.
    grid = np.zeros((h, w), dtype=np.bool_)
    dxs = (1, 0, -1, 0)
    dys = (0, 1, 0, -1)
    x = y = d = 0
    grid[0, 0] = True
    turned = False
    while True:
        nx, ny = x + dxs[d], y + dys[d]
        ax, ay = nx + dxs[d], ny + dys[d]
        ok = 0 <= nx < w and 0 <= ny < h and not grid[ny, nx]
        if ok and 0 <= ax < w and 0 <= ay < h and grid[ay, ax]:
            ok = False
        if ok:
            x, y = nx, ny
            grid[y, x] = True
            turned = False
        elif not turned:
            d = (d + 1) % 4
            turned = True
        else:
            break
    return grid


def _blobs(w, h, count=None, radius=None, seed=0):
    count = count if count is not None else max(1, (w * h) // 256)
    radius = radius if radius is not None else max(1, min(w, h) // 16)
    u = splitmix_uniform(seed, 2 * count)
    cx = (u[0::2] * w).astype(int)
    cy = (u[1::2] * h).astype(int)
    grid = np.zeros((h, w), dtype=bool)
    r = radius
    for x0, y0 in zip(cx, cy):
        ya, yb = max(0, y0 - r), min(h, y0 + r + 1)
        xa, xb = max(0, x0 - r), min(w, x0 + r + 1)
        yy, xx = np.mgrid[ya:yb, xa:xb]
        grid[ya:yb, xa:xb] |= (xx - x0) ** 2 + (yy - y0) ** 2 <= r * r
    return grid


def _checkerboard(w, h):
    yy, xx = np.mgrid[0:h, 0:w]
    return (xx + yy) % 2 == 0


def pattern_image(kind: str, w: int, h: int, **params) -> BinaryImage:
    """Deterministic structured image.

    ``stripes`` takes ``period`` (default 2) and ``vertical``; horizontal
    stripes give ``ceil(h / period)`` components. ``spiral`` is one long
    component. ``blobs`` takes ``count``, ``radius`` and ``seed``.
    ``checkerboard`` has foreground where ``x + y`` is even.
    """
    if w < 1 or h < 1:
        raise ValueError("dimensions must be >= 1")
    if kind == "stripes":
        grid = _stripes(w, h, **params)
    elif kind == "spiral":
        grid = _spiral(w, h)
    elif kind == "blobs":
        grid = _blobs(w, h, **params)
    elif kind == "checkerboard":
        grid = _checkerboard(w, h)
    else:
        raise ValueError(f"unknown pattern {kind!r}; expected one of {', '.join(PATTERNS)}")
    return BinaryImage.from_array(grid)
