"""Reference implementations that share no code with the package."""

from collections import deque

import numpy as np
from numba import njit


def flood_fill_labels(grid):
    """BFS flood fill; label = smallest raster index in the component, -1 for background."""
    grid = np.asarray(grid, dtype=bool)
    h, w = grid.shape
    labels = np.full(h * w, -1, dtype=np.int64)
    for start in range(h * w):
        sy, sx = divmod(start, w)
        if not grid[sy, sx] or labels[start] >= 0:
            continue
        # raster order: the first pixel reached from the outer loop is the minimum
        labels[start] = start
        todo = deque([(sx, sy)])
        while todo:
            x, y = todo.popleft()
            for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
                if 0 <= nx < w and 0 <= ny < h and grid[ny, nx] and labels[nx + ny * w] < 0:
                    labels[nx + ny * w] = start
                    todo.append((nx, ny))
    return labels


@njit(cache=True)
def _stack_fill(img, w, h):
    n = w * h
    labels = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for start in range(n):
        if img[start] == 0 or labels[start] >= 0:
            continue
        labels[start] = start
        top = 0
        stack[0] = start
        top = 1
        while top > 0:
            top -= 1
            p = stack[top]
            y = p // w
            x = p - y * w
            if x > 0 and img[p - 1] and labels[p - 1] < 0:
                labels[p - 1] = start
                stack[top] = p - 1
                top += 1
            if x < w - 1 and img[p + 1] and labels[p + 1] < 0:
                labels[p + 1] = start
                stack[top] = p + 1
                top += 1
            if y > 0 and img[p - w] and labels[p - w] < 0:
                labels[p - w] = start
                stack[top] = p - w
                top += 1
            if y < h - 1 and img[p + w] and labels[p + w] < 0:
                labels[p + w] = start
                stack[top] = p + w
                top += 1
    return labels


def fast_flood_fill_labels(img):
    """Same contract as :func:`flood_fill_labels` for a BinaryImage; compiled for big inputs."""
    return _stack_fill(np.asarray(img.data, dtype=np.uint8), img.width, img.height)


def as_raw(labels):
    """Flood-fill labels (-1 background) in the package's uint32 sentinel form."""
    out = np.asarray(labels, dtype=np.int64).copy()
    out[out < 0] = 0xFFFFFFFF
    return out.astype(np.uint32)


class SequentialUnionFind:
    """Plain-Python min-union reference for merge sequences."""

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, i):
        while self.parent[i] != i:
            i = self.parent[i]
        return i

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def roots(self):
        return [self.find(i) for i in range(len(self.parent))]
