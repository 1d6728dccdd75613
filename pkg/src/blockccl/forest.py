"""Label-equivalence forest with lock-free min-union.

The forest is a flat ``uint32`` parent array where every link points to an
equal or smaller slot. Roots satisfy ``parent[i] == i``. Unions always hang the
larger root under the smaller one with a compare-and-swap, so a class root is
always the minimum slot of that class.

Kernels here are compiled with ``nogil=True`` and can be called concurrently
from Python threads on a shared parent array.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.core import cgutils
from numba.extending import intrinsic

from .types import LABEL_DTYPE

# Layout of a per-block counter row.
ITERATIONS = 0
ATOMICS = 1
MAX_CHAIN = 2
N_COUNTERS = 3


def _element_pointer(context, builder, aryty, ary, idx):
    a = context.make_array(aryty)(context, builder, ary)
    return cgutils.get_item_pointer(context, builder, aryty, a, [idx], wraparound=False)


@intrinsic
def atomic_cas(typingctx, arr, idx, expected, desired):
    """``arr[idx]`` compare-and-swap; returns the value seen before the attempt."""
    if not isinstance(arr, types.Array) or not isinstance(arr.dtype, types.Integer):
        return None
    dt = arr.dtype

    def codegen(context, builder, signature, args):
        ary, i, exp, new = args
        ptr = _element_pointer(context, builder, signature.args[0], ary, i)
        res = builder.cmpxchg(ptr, exp, new, "acq_rel", "monotonic")
        return builder.extract_value(res, 0)

    return dt(arr, idx, dt, dt), codegen


@intrinsic
def atomic_load(typingctx, arr, idx):
    if not isinstance(arr, types.Array) or not isinstance(arr.dtype, types.Integer):
        return None
    dt = arr.dtype

    def codegen(context, builder, signature, args):
        ary, i = args
        ptr = _element_pointer(context, builder, signature.args[0], ary, i)
        align = context.get_abi_alignment(context.get_data_type(dt))
        return builder.load_atomic(ptr, "acquire", align)

    return dt(arr, idx), codegen


@njit(nogil=True, cache=True)
def find_root_kernel(parent, i, stats):
    n = parent.shape[0]
    steps = 0
    while True:
        p = np.int64(atomic_load(parent, i))
        if p == i:
            break
        i = p
        steps += 1
        if steps > n:
            raise RuntimeError("cycle in label forest")
    stats[ITERATIONS] += steps
    if steps > stats[MAX_CHAIN]:
        stats[MAX_CHAIN] = steps
    return i


@njit(nogil=True, cache=True)
def merge_kernel(parent, a, b, stats):
    while True:
        ra = find_root_kernel(parent, a, stats)
        rb = find_root_kernel(parent, b, stats)
        if ra == rb:
            return
        lo = min(ra, rb)
        hi = max(ra, rb)
        stats[ATOMICS] += 1
        seen = np.int64(atomic_cas(parent, hi, parent.dtype.type(hi), parent.dtype.type(lo)))
        if seen == hi:
            return
        # hi was linked elsewhere meanwhile; continue from where it now points
        a = seen
        b = lo


@njit(nogil=True, cache=True)
def flatten_kernel(parent, i, stats):
    parent[i] = find_root_kernel(parent, i, stats)


@njit(nogil=True, cache=True)
def flatten_all_kernel(parent, stats):
    # Descending order: every slot traces the forest as it was before the
    # phase, the same result a fully parallel flatten would see.
    for i in range(parent.shape[0] - 1, -1, -1):
        parent[i] = find_root_kernel(parent, i, stats)


@njit(nogil=True, cache=True)
def lockstep_merge_kernel(parent, a_idx, b_idx, count, stats):
    """Merge ``count`` pairs as threads running in lock-step.

    Each round every pending thread traces both roots against the forest as
    it stood at the start of the round, then the compare-and-swaps land in
    thread order. Losers retry next round from where ``hi`` now points. This
    is one legal interleaving of :func:`merge_kernel` across threads, fixed
    so that counters are reproducible. ``a_idx``/``b_idx`` are clobbered.
    """
    ra_buf = np.empty(count, dtype=np.int64)
    rb_buf = np.empty(count, dtype=np.int64)
    pending = count
    while pending > 0:
        for k in range(pending):
            ra_buf[k] = find_root_kernel(parent, a_idx[k], stats)
            rb_buf[k] = find_root_kernel(parent, b_idx[k], stats)
        retry = 0
        for k in range(pending):
            ra = ra_buf[k]
            rb = rb_buf[k]
            if ra == rb:
                continue
            lo = min(ra, rb)
            hi = max(ra, rb)
            stats[ATOMICS] += 1
            seen = np.int64(atomic_cas(parent, hi, parent.dtype.type(hi), parent.dtype.type(lo)))
            if seen != hi:
                a_idx[retry] = seen
                b_idx[retry] = lo
                retry += 1
        pending = retry


@njit(nogil=True, cache=True)
def merge_pairs_kernel(parent, a_idx, b_idx, stats):
    for k in range(a_idx.shape[0]):
        merge_kernel(parent, np.int64(a_idx[k]), np.int64(b_idx[k]), stats)


class BlockMetrics:
    """Find-root iteration and atomic-union counters for one block.

    ``counters`` may be a view into a larger per-block table owned by a run;
    the standalone constructor allocates its own row.
    """

    __slots__ = ("block_id", "counters")

    def __init__(self, block_id: int = 0, counters: np.ndarray | None = None):
        self.block_id = block_id
        self.counters = np.zeros(N_COUNTERS, dtype=np.int64) if counters is None else counters

    @property
    def findroot_iterations(self) -> int:
        return int(self.counters[ITERATIONS])

    @property
    def atomic_ops(self) -> int:
        return int(self.counters[ATOMICS])

    @property
    def max_chain(self) -> int:
        """Longest single root trace charged to this block."""
        return int(self.counters[MAX_CHAIN])

    def reset(self):
        self.counters[:] = 0

    def __repr__(self):
        return (
            f"BlockMetrics(block_id={self.block_id}, findroot_iterations={self.findroot_iterations}, "
            f"atomic_ops={self.atomic_ops}, max_chain={self.max_chain})"
        )


class LabelForest:
    """Parent-link forest over ``n`` slots, initialised to all roots."""

    def __init__(self, n: int | None = None, parent=None, check: bool = True):
        if parent is None:
            if n is None:
                raise ValueError("need a slot count or a parent array")
            parent = np.arange(n, dtype=LABEL_DTYPE)
        else:
            parent = np.ascontiguousarray(parent, dtype=LABEL_DTYPE)
            if check and np.any(parent > np.arange(parent.size)):
                raise ValueError("parent links must point to equal or smaller slots")
        self.parent = parent

    def __len__(self):
        return self.parent.size

    def _check(self, i):
        if not 0 <= i < self.parent.size:
            raise IndexError(f"slot {i} out of range")

    def find_root(self, i: int, m: BlockMetrics | None = None) -> int:
        self._check(i)
        m = m or BlockMetrics()
        return int(find_root_kernel(self.parent, i, m.counters))

    def flatten(self, i: int | None = None, m: BlockMetrics | None = None):
        """Point ``i`` (or every slot, if ``None``) straight at its root."""
        m = m or BlockMetrics()
        if i is None:
            flatten_all_kernel(self.parent, m.counters)
        else:
            self._check(i)
            flatten_kernel(self.parent, i, m.counters)

    def merge(self, a: int, b: int, m: BlockMetrics | None = None):
        self._check(a)
        self._check(b)
        m = m or BlockMetrics()
        merge_kernel(self.parent, a, b, m.counters)

    def merge_pairs(self, pairs, m: BlockMetrics | None = None):
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= self.parent.size):
            raise IndexError("pair slot out of range")
        m = m or BlockMetrics()
        merge_pairs_kernel(self.parent, pairs[:, 0].copy(), pairs[:, 1].copy(), m.counters)

    def merge_lockstep(self, pairs, m: BlockMetrics | None = None):
        """Merge all ``pairs`` as simultaneous threads (see :func:`lockstep_merge_kernel`)."""
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if pairs.size and (pairs.min() < 0 or pairs.max() >= self.parent.size):
            raise IndexError("pair slot out of range")
        m = m or BlockMetrics()
        lockstep_merge_kernel(self.parent, pairs[:, 0].copy(), pairs[:, 1].copy(), len(pairs), m.counters)

    def roots(self) -> np.ndarray:
        """Root of every slot, without modifying the forest."""
        out = self.parent.copy()
        flatten_all_kernel(out, np.zeros(N_COUNTERS, dtype=np.int64))
        return out
