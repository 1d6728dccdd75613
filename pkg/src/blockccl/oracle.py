"""Single-threaded two-pass labeling used as the correctness reference."""

from __future__ import annotations

import numpy as np
from numba import njit

from .types import BinaryImage, LabelMap


@njit(cache=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True)
def _two_pass(img, width, height):
    n = width * height
    parent = np.arange(n, dtype=np.int64)
    # First pass: union each foreground pixel with its left and upper neighbours.
    for y in range(height):
        for x in range(width):
            p = x + y * width
            if not img[p]:
                continue
            if x > 0 and img[p - 1]:
                a = _find(parent, p)
                b = _find(parent, p - 1)
                if a != b:
                    parent[max(a, b)] = min(a, b)
            if y > 0 and img[p - width]:
                a = _find(parent, p)
                b = _find(parent, p - width)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    # Second pass: replace every foreground pixel by its root.
    labels = np.empty(n, dtype=np.uint32)
    for p in range(n):
        if img[p]:
            labels[p] = _find(parent, p)
        else:
            labels[p] = 0xFFFFFFFF
    return labels


def sequential_ccl(img: BinaryImage) -> LabelMap:
    """4-connected labels in raw-root form (root = smallest raster index)."""
    labels = _two_pass(img.data, img.width, img.height)
    return LabelMap(img.width, img.height, labels)


@njit(cache=True)
def _first_disagreement(la, fa, lb, fb):
    # Forward and backward label maps; a clash in either breaks the bijection.
    fwd = dict()
    bwd = dict()
    for p in range(la.shape[0]):
        if fa[p] != fb[p]:
            return p
        if not fa[p]:
            continue
        x = la[p]
        y = lb[p]
        if x in fwd:
            if fwd[x] != y:
                return p
        else:
            fwd[x] = y
        if y in bwd:
            if bwd[y] != x:
                return p
        else:
            bwd[y] = x
    return -1


def same_partition(a: LabelMap, b: LabelMap) -> int | None:
    """Return the first raster index where the two partitions disagree, or None.

    Label values may differ; only the grouping of pixels is compared.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError("label maps differ in size")
    la = np.ascontiguousarray(a.labels, dtype=np.uint32)
    lb = np.ascontiguousarray(b.labels, dtype=np.uint32)
    bad = _first_disagreement(la, a.foreground, lb, b.foreground)
    return None if bad < 0 else int(bad)
