"""Three-step labeling over all blocks with a thread pool.

Step 1 labels every block independently, step 2 merges across block borders,
step 3 resolves roots. Each step is a full barrier: all of its tasks finish
before the next step starts. Compiled kernels release the GIL, so threads
run the block tasks truly in parallel.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .border import apply_roots_kernel, merge_borders, plan_borders, resolve_kernel
from .forest import ATOMICS, ITERATIONS, MAX_CHAIN, N_COUNTERS, BlockMetrics, LabelForest
from .local import local_phase_kernel
from .types import LABEL_DTYPE, BinaryImage, BlockConfig, ConfigError, LabelMap, Variant


def default_workers() -> int:
    env = os.environ.get("CCL_WORKERS")
    if env:
        return int(env)
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


@dataclass(frozen=True)
class RunReport:
    label_map: LabelMap
    block_stats: np.ndarray  # (block_rows, block_cols, 3) int64
    wall_time: float  # seconds, steps 1-3 only
    variant: Variant
    cfg: BlockConfig
    worker_count: int

    @property
    def n_blocks(self) -> int:
        return self.block_stats.shape[0] * self.block_stats.shape[1]

    @property
    def per_block(self) -> list[BlockMetrics]:
        flat = self.block_stats.reshape(-1, N_COUNTERS)
        return [BlockMetrics(i, flat[i]) for i in range(flat.shape[0])]

    @property
    def component_count(self) -> int:
        lm = self.label_map
        return int(np.unique(lm.labels[lm.foreground]).size)


@dataclass(frozen=True)
class MetricsSummary:
    mean_iterations: float
    mean_atomics: float
    iterations: np.ndarray  # per-block grid
    atomics: np.ndarray
    max_chain: np.ndarray


def _chunks(n_blocks: int, workers: int) -> list[np.ndarray]:
    # A few chunks per worker evens out blocks of uneven cost.
    n_chunks = 1 if workers == 1 else min(n_blocks, workers * 4)
    return np.array_split(np.arange(n_blocks, dtype=np.int64), n_chunks)


def label_image(
    img: BinaryImage,
    cfg: BlockConfig | None = None,
    variant: Variant | str = Variant.C2FL,
    workers: int | None = None,
    clock=time.perf_counter,
) -> RunReport:
    """Label the 4-connected foreground components of ``img``.

    The result is in raw-root form: each component is labeled with the
    smallest raster index among its pixels.
    """
    cfg = cfg or BlockConfig()
    variant = Variant.parse(variant)
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ConfigError(f"workers must be >= 1, got {workers}")

    ncols, nrows = cfg.grid(img)
    n_blocks = ncols * nrows
    stats = np.zeros((n_blocks, N_COUNTERS), dtype=np.int64)
    chunks = _chunks(n_blocks, workers)
    w, h = img.width, img.height

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def run(fn, *args):
        if pool is None:
            for c in chunks:
                fn(*args, c)
        else:
            # list() waits for every task: the barrier between steps.
            list(pool.map(lambda c: fn(*args, c), chunks))

    try:
        t0 = clock()
        # every slot is written by the local phase
        forest = LabelForest(parent=np.empty(img.size, dtype=LABEL_DTYPE), check=False)
        run(local_phase_kernel, img.data, w, h, cfg.b_x, cfg.b_y, int(variant), forest.parent, stats)

        # A single border pass is complete: merge() performs full transitive union.
        plan = plan_borders(img, cfg)
        run(lambda c: merge_borders(plan, img, forest, stats=stats, blocks=c))

        labels = np.empty(img.size, dtype=LABEL_DTYPE)
        run(resolve_kernel, img.data, w, h, cfg.b_x, cfg.b_y, forest.parent, labels, stats)
        run(apply_roots_kernel, img.data, w, h, cfg.b_x, cfg.b_y, forest.parent, labels)
        wall = clock() - t0
    finally:
        if pool is not None:
            pool.shutdown()

    return RunReport(
        label_map=LabelMap(w, h, labels),
        block_stats=stats.reshape(nrows, ncols, N_COUNTERS),
        wall_time=wall,
        variant=variant,
        cfg=cfg,
        worker_count=workers,
    )


def compact_labels(lm: LabelMap) -> LabelMap:
    """Renumber components 1..K by first appearance in raster order; background -> 0."""
    fg = lm.foreground
    out = np.zeros(lm.labels.size, dtype=LABEL_DTYPE)
    if fg.any():
        values = lm.labels[fg]
        uniq, first, inverse = np.unique(values, return_index=True, return_inverse=True)
        rank = np.empty(uniq.size, dtype=LABEL_DTYPE)
        rank[np.argsort(first, kind="stable")] = np.arange(1, uniq.size + 1, dtype=LABEL_DTYPE)
        out[fg] = rank[inverse]
    return LabelMap(lm.width, lm.height, out, background=0)


def aggregate_metrics(report: RunReport) -> MetricsSummary:
    s = report.block_stats
    return MetricsSummary(
        mean_iterations=float(s[..., ITERATIONS].mean()),
        mean_atomics=float(s[..., ATOMICS].mean()),
        iterations=s[..., ITERATIONS].copy(),
        atomics=s[..., ATOMICS].copy(),
        max_chain=s[..., MAX_CHAIN].copy(),
    )
