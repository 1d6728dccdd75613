"""Cross-block merging over border pixels and the final global resolve."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .forest import BlockMetrics, LabelForest, find_root_kernel, merge_kernel
from .types import LABEL_DTYPE, SENTINEL, BinaryImage, BlockConfig, LabelMap

_BACKGROUND = int(SENTINEL)


@dataclass(frozen=True)
class BorderPlan:
    """Adjacent pixel pairs straddling interior block boundaries.

    ``vertical_pairs`` rows are ``(p, p - 1)`` with ``x % b_x == 0``;
    ``horizontal_pairs`` rows are ``(p, p - W)`` with ``y % b_y == 0``.
    ``p_x``/``p_y`` count the pixels in block-leading columns/rows, which is
    ``floor(W / b_x) * H`` and ``floor(H / b_y) * W`` for divisible sizes.

    ``src``/``dst``/``offsets`` hold the same pairs grouped by the block that
    owns ``p`` (CSR layout), so each block's pairs can go to one worker.
    """

    vertical_pairs: np.ndarray
    horizontal_pairs: np.ndarray
    p_x: int
    p_y: int
    src: np.ndarray
    dst: np.ndarray
    offsets: np.ndarray

    @property
    def n_pairs(self) -> int:
        return int(self.src.size)


def plan_borders(img: BinaryImage, cfg: BlockConfig) -> BorderPlan:
    w, h = img.width, img.height
    ncols, nrows = cfg.grid(img)

    vx = np.arange(cfg.b_x, w, cfg.b_x, dtype=np.int64)
    ys = np.arange(h, dtype=np.int64)
    vp = (vx[None, :] + ys[:, None] * w).reshape(-1)
    v_owner = ((ys // cfg.b_y)[:, None] * ncols + (vx // cfg.b_x)[None, :]).reshape(-1)

    hy = np.arange(cfg.b_y, h, cfg.b_y, dtype=np.int64)
    xs = np.arange(w, dtype=np.int64)
    hp = (xs[None, :] + hy[:, None] * w).reshape(-1)
    h_owner = ((hy // cfg.b_y)[:, None] * ncols + (xs // cfg.b_x)[None, :]).reshape(-1)

    src = np.concatenate([vp, hp])
    dst = np.concatenate([vp - 1, hp - w])
    owner = np.concatenate([v_owner, h_owner])
    order = np.argsort(owner, kind="stable")
    offsets = np.zeros(ncols * nrows + 1, dtype=np.int64)
    np.cumsum(np.bincount(owner, minlength=ncols * nrows), out=offsets[1:])

    return BorderPlan(
        vertical_pairs=np.stack([vp, vp - 1], axis=1),
        horizontal_pairs=np.stack([hp, hp - w], axis=1),
        p_x=ncols * h,
        p_y=nrows * w,
        src=src[order],
        dst=dst[order],
        offsets=offsets,
    )


@njit(nogil=True, cache=True)
def merge_borders_kernel(img, parent, src, dst, offsets, stats, stat_rows, blocks):
    for k in range(blocks.shape[0]):
        b = blocks[k]
        row = stats[stat_rows[b]]
        for j in range(offsets[b], offsets[b + 1]):
            p = src[j]
            q = dst[j]
            if img[p] and img[q]:
                merge_kernel(parent, p, q, row)


@njit(nogil=True, cache=True)
def resolve_kernel(img, width, height, bx, by, parent, labels, stats, blocks):
    # Read-only over the forest; roots are written to labels only.
    ncols = (width + bx - 1) // bx
    for k in range(blocks.shape[0]):
        b = blocks[k]
        br = b // ncols
        x0 = (b - br * ncols) * bx
        y0 = br * by
        row = stats[b]
        for y in range(y0, min(y0 + by, height)):
            for x in range(x0, min(x0 + bx, width)):
                p = x + y * width
                if img[p]:
                    labels[p] = find_root_kernel(parent, p, row)
                else:
                    labels[p] = _BACKGROUND


@njit(nogil=True, cache=True)
def apply_roots_kernel(img, width, height, bx, by, parent, labels, blocks):
    ncols = (width + bx - 1) // bx
    for k in range(blocks.shape[0]):
        b = blocks[k]
        br = b // ncols
        x0 = (b - br * ncols) * bx
        y0 = br * by
        for y in range(y0, min(y0 + by, height)):
            for x in range(x0, min(x0 + bx, width)):
                p = x + y * width
                if img[p]:
                    parent[p] = labels[p]


def _all_blocks(n):
    return np.arange(n, dtype=np.int64)


def merge_borders(
    plan: BorderPlan,
    img: BinaryImage,
    global_forest: LabelForest,
    m: BlockMetrics | None = None,
    *,
    stats: np.ndarray | None = None,
    blocks: np.ndarray | None = None,
):
    """Union every planned pair whose pixels are both foreground.

    Counters go to ``m``, or per owning block into the ``stats`` table
    (shape ``(n_blocks, 3)``) when given. ``blocks`` restricts the work to a
    subset of owning blocks, which lets callers split the pass across threads.
    """
    n_blocks = plan.offsets.size - 1
    if stats is None:
        m = m or BlockMetrics()
        stats = m.counters.reshape(1, -1)
        stat_rows = np.zeros(n_blocks, dtype=np.int64)
    else:
        stat_rows = _all_blocks(n_blocks)
    if blocks is None:
        blocks = _all_blocks(n_blocks)
    merge_borders_kernel(
        img.data, global_forest.parent, plan.src, plan.dst, plan.offsets, stats, stat_rows, blocks
    )


def resolve_global(
    img: BinaryImage,
    global_forest: LabelForest,
    m: BlockMetrics | None = None,
) -> LabelMap:
    """Label each foreground pixel with its root and flatten the forest."""
    m = m or BlockMetrics()
    labels = np.empty(img.size, dtype=LABEL_DTYPE)
    blocks = _all_blocks(1)
    args = (img.data, img.width, img.height, img.width, img.height, global_forest.parent, labels)
    resolve_kernel(*args, m.counters.reshape(1, -1), blocks)
    apply_roots_kernel(*args, blocks)
    return LabelMap(img.width, img.height, labels)

