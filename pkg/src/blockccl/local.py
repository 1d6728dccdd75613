"""Per-block local labeling with coarse scans followed by union refinement.

Each block owns a scratch forest of ``w_b * h_b`` slots (slot ``tid`` is
``local_x + local_y * w_b``). Phases run in a fixed order, each one reading
only the state left by the previous phase:

    init -> row scan -> column scan -> flatten -> refine -> flatten

Coarse scans link a pixel to its left (row) or upper (column) neighbour's
current label whenever the two have equal intensity. That links background
runs too; they are never refined or traced and are dropped at conversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .forest import BlockMetrics, LabelForest, find_root_kernel, lockstep_merge_kernel
from .types import LABEL_DTYPE, BinaryImage, BlockConfig, Variant

ROWS = "rows"
COLUMNS = "columns"


@njit(nogil=True, cache=True)
def row_scan_kernel(sub, parent, wb):
    # Right-to-left so parent[tid - 1] still holds its pre-scan value.
    for tid in range(sub.shape[0] - 1, -1, -1):
        if tid % wb != 0 and sub[tid] == sub[tid - 1]:
            parent[tid] = parent[tid - 1]


@njit(nogil=True, cache=True)
def column_scan_kernel(sub, parent, wb):
    for tid in range(sub.shape[0] - 1, wb - 1, -1):
        if sub[tid] == sub[tid - wb]:
            parent[tid] = parent[tid - wb]


@njit(nogil=True, cache=True)
def flatten_foreground_kernel(sub, parent, stats):
    for tid in range(sub.shape[0] - 1, -1, -1):
        if sub[tid]:
            parent[tid] = find_root_kernel(parent, tid, stats)


@njit(nogil=True, cache=True)
def refine_kernel(sub, parent, wb, along_rows, stats):
    """One refinement phase against the left (rows) or upper (columns) neighbour.

    Every foreground pixel whose neighbour is foreground and carries a
    different label is one merging thread.
    """
    n = sub.shape[0]
    step = 1 if along_rows else wb
    a_idx = np.empty(n, dtype=np.int64)
    b_idx = np.empty(n, dtype=np.int64)
    count = 0
    for tid in range(step, n):
        if along_rows and tid % wb == 0:
            continue
        q = tid - step
        if sub[tid] and sub[q] and parent[tid] != parent[q]:
            a_idx[count] = tid
            b_idx[count] = q
            count += 1
    lockstep_merge_kernel(parent, a_idx, b_idx, count, stats)


@njit(nogil=True, cache=True)
def label_block_kernel(sub, parent, wb, variant, stats):
    # variant codes follow types.Variant
    if variant == 0 or variant == 1:
        row_scan_kernel(sub, parent, wb)
    if variant == 0 or variant == 2:
        column_scan_kernel(sub, parent, wb)
    flatten_foreground_kernel(sub, parent, stats)
    if variant != 1:
        refine_kernel(sub, parent, wb, True, stats)
    if variant == 1 or variant == 3:
        refine_kernel(sub, parent, wb, False, stats)
    flatten_foreground_kernel(sub, parent, stats)


@njit(nogil=True, cache=True)
def convert_ids_kernel(sub, parent, wb, x0, y0, width, gparent):
    for tid in range(sub.shape[0]):
        ly = tid // wb
        lx = tid - ly * wb
        p = (x0 + lx) + (y0 + ly) * width
        if sub[tid]:
            r = np.int64(parent[tid])
            ry = r // wb
            rx = r - ry * wb
            gparent[p] = (x0 + rx) + (y0 + ry) * width
        else:
            gparent[p] = p


@njit(nogil=True, cache=True)
def local_phase_kernel(img, width, height, bx, by, variant, gparent, stats, blocks):
    """Label and convert every block listed in ``blocks`` into ``gparent``."""
    ncols = (width + bx - 1) // bx
    sub_buf = np.empty(bx * by, dtype=np.uint8)
    par_buf = np.empty(bx * by, dtype=gparent.dtype)
    for k in range(blocks.shape[0]):
        b = blocks[k]
        br = b // ncols
        bc = b - br * ncols
        x0 = bc * bx
        y0 = br * by
        wb = min(bx, width - x0)
        hb = min(by, height - y0)
        n = wb * hb
        sub = sub_buf[:n]
        parent = par_buf[:n]
        for ly in range(hb):
            row = (y0 + ly) * width + x0
            for lx in range(wb):
                sub[ly * wb + lx] = img[row + lx]
        for tid in range(n):
            parent[tid] = tid
        label_block_kernel(sub, parent, wb, variant, stats[b])
        convert_ids_kernel(sub, parent, wb, x0, y0, width, gparent)


@dataclass
class BlockView:
    """One block's read-only intensity snapshot plus its scratch forest."""

    x0: int
    y0: int
    w_b: int
    h_b: int
    image_width: int
    snapshot: np.ndarray
    forest: LabelForest

    @property
    def parent(self) -> np.ndarray:
        return self.forest.parent

    def local_xy(self, tid: int) -> tuple[int, int]:
        ly, lx = divmod(tid, self.w_b)
        return lx, ly


def init_block(img: BinaryImage, origin: tuple[int, int], cfg: BlockConfig) -> BlockView:
    x0, y0 = origin
    if not (0 <= x0 < img.width and 0 <= y0 < img.height):
        raise ValueError(f"block origin {origin} outside {img.width}x{img.height} image")
    if x0 % cfg.b_x or y0 % cfg.b_y:
        raise ValueError(f"block origin {origin} not aligned to {cfg} grid")
    w_b = min(cfg.b_x, img.width - x0)
    h_b = min(cfg.b_y, img.height - y0)
    snap = img.as_2d()[y0 : y0 + h_b, x0 : x0 + w_b].reshape(-1).copy()
    snap.flags.writeable = False
    forest = LabelForest(parent=np.arange(w_b * h_b, dtype=LABEL_DTYPE))
    return BlockView(x0, y0, w_b, h_b, img.width, snap, forest)


def coarse_row_scan(bv: BlockView):
    row_scan_kernel(bv.snapshot, bv.parent, bv.w_b)


def coarse_column_scan(bv: BlockView):
    column_scan_kernel(bv.snapshot, bv.parent, bv.w_b)


def flatten_block(bv: BlockView, m: BlockMetrics | None = None):
    """Point every foreground slot at its root."""
    m = m or BlockMetrics()
    flatten_foreground_kernel(bv.snapshot, bv.parent, m.counters)


def refine(bv: BlockView, direction: str, m: BlockMetrics | None = None):
    """Merge every adjacent foreground pair along ``direction`` (``"rows"`` or ``"columns"``)."""
    m = m or BlockMetrics()
    if direction == ROWS:
        refine_kernel(bv.snapshot, bv.parent, bv.w_b, True, m.counters)
    elif direction == COLUMNS:
        refine_kernel(bv.snapshot, bv.parent, bv.w_b, False, m.counters)
    else:
        raise ValueError(f"direction must be {ROWS!r} or {COLUMNS!r}, got {direction!r}")


def label_block(bv: BlockView, variant: Variant | str, m: BlockMetrics | None = None):
    variant = Variant.parse(variant)
    m = m or BlockMetrics()
    label_block_kernel(bv.snapshot, bv.parent, bv.w_b, int(variant), m.counters)


def convert_ids(bv: BlockView, global_forest: LabelForest):
    """Write each slot's local root into the global forest as a raster index.

    Background slots become their own global roots.
    """
    convert_ids_kernel(
        bv.snapshot, bv.parent, bv.w_b, bv.x0, bv.y0, bv.image_width, global_forest.parent
    )
