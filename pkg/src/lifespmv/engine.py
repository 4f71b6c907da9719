"""Sequential and parallel SpMV over the decomposed tensor.

Two operations are provided: DSC (diffusion signal computation, y = M w)
and WC (weight computation, w = M^T y).  Both walk the coefficient list;
DSC scales a dictionary row into the signal block of the coefficient's
voxel (an axpy over n_dirs entries), WC dots the signal block with the
dictionary row and accumulates into the coefficient's fiber weight.

Parallel execution partitions the coefficient range into per-thread chunks
described by an ExecutionPlan.  Three write-conflict regimes exist:

* ownership: chunk boundaries coincide with run boundaries of the output
  indirection key (voxel runs for DSC, fiber runs for WC), so each output
  block has a single writer and results are bitwise equal to sequential;
* edge privatization: on a voxel-sorted tensor, an arbitrary coefficient
  split can only conflict on the voxel blocks straddling chunk boundaries,
  so only those blocks are accumulated privately and merged afterwards;
* full privatization: with no exploitable ordering, each thread accumulates
  into a private output merged in ascending thread order.

No atomics or locks anywhere; determinism comes from fixed merge order.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    ConfigInvalid,
    DimensionMismatch,
    PlanTensorMismatch,
    StrategyRequiresSorted,
)
from .tensor import OffsetPhiTensor

PARTITION_KINDS = ("coefficient", "atom", "voxel", "fiber")

_KIND_ORDERING = {"atom": "by_atom", "voxel": "by_voxel", "fiber": "by_fiber"}


@dataclass(frozen=True)
class PartitionStrategy:
    """How the coefficient loop is split across threads.

    kind 'coefficient' splits into near-equal contiguous ranges; 'atom',
    'voxel' and 'fiber' assign whole runs of the correspondingly sorted
    tensor to threads.  sync_free (DSC only) snaps a coefficient split to
    voxel-run boundaries so the signal needs no conflict handling; it
    requires a voxel-sorted tensor.
    """

    kind: str = "coefficient"
    sync_free: bool = False

    def __post_init__(self):
        if self.kind not in PARTITION_KINDS:
            raise ConfigInvalid(f"unknown partition kind {self.kind!r}")


@dataclass(frozen=True)
class ExecutionPlan:
    """A partition strategy bound to concrete chunk boundaries.

    chunks are half-open [start, end) coefficient ranges, one per thread,
    disjoint, ordered, covering [0, n_coeffs).  Empty chunks are allowed
    (more threads than work).
    """

    strategy: PartitionStrategy
    threads: int
    chunks: tuple


@dataclass
class KernelStats:
    """Per-call bookkeeping: zero-weight skips and wall time."""

    skipped_coefficients: int = 0
    elapsed: float = 0.0


# Thread pools are cached per size; workers are cheap and plans are reused
# across many kernel calls.
_POOLS = {}


def _pool(n):
    ex = _POOLS.get(n)
    if ex is None:
        ex = ThreadPoolExecutor(max_workers=n, thread_name_prefix="lifespmv")
        _POOLS[n] = ex
    return ex


def _run_tasks(tasks, threads):
    if len(tasks) <= 1:
        for t in tasks:
            t()
        return
    futures = [_pool(threads).submit(t) for t in tasks]
    for f in futures:
        f.result()


def _phi(tensor):
    return tensor.tensor if isinstance(tensor, OffsetPhiTensor) else tensor


def snap_to_run_boundaries(key_array, boundaries):
    """Snap interior split points to run boundaries of a sorted key array.

    A boundary landing inside a run moves to whichever end of the run gives
    the gaining thread fewer extra coefficients (the earlier thread would
    gain run_end - b, the later thread b - run_start); ties go to the later
    thread.  Monotonicity is restored afterwards so boundaries never cross
    when one run swallows several naive split points.
    """
    n = len(key_array)
    out = list(boundaries)
    for i in range(1, len(out) - 1):
        b = out[i]
        if 0 < b < n and key_array[b - 1] == key_array[b]:
            run_start = int(np.searchsorted(key_array, key_array[b], side="left"))
            run_end = int(np.searchsorted(key_array, key_array[b], side="right"))
            if b - run_start <= run_end - b:
                out[i] = run_start
            else:
                out[i] = run_end
    for i in range(1, len(out)):
        if out[i] < out[i - 1]:
            out[i] = out[i - 1]
    return out


def _equal_split(n_coeffs, threads):
    size = math.ceil(n_coeffs / threads) if n_coeffs else 0
    return [min(i * size, n_coeffs) for i in range(threads + 1)]


def _run_aligned_bounds(key_array, n_coeffs, threads):
    """Distribute whole runs contiguously, near-equal run counts per thread."""
    if n_coeffs == 0:
        return [0] * (threads + 1)
    change = np.flatnonzero(np.diff(key_array)) + 1
    run_starts = np.concatenate(([0], change, [n_coeffs]))
    n_runs = len(run_starts) - 1
    per = math.ceil(n_runs / threads)
    return [int(run_starts[min(i * per, n_runs)]) for i in range(threads + 1)]


def build_plan(tensor, strategy: PartitionStrategy, threads: int) -> ExecutionPlan:
    """Bind a strategy to chunk boundaries for this tensor.

    Raises StrategyRequiresSorted when the strategy needs an ordering the
    tensor does not carry (run-based kinds and sync_free).
    """
    if threads < 1:
        raise ConfigInvalid("threads must be >= 1")
    phi = _phi(tensor)
    nc = phi.dims.n_coeffs

    if strategy.kind == "coefficient":
        bounds = _equal_split(nc, threads)
        if strategy.sync_free:
            if phi.ordering != "by_voxel":
                raise StrategyRequiresSorted(
                    "sync_free requires a voxel-sorted tensor")
            bounds = snap_to_run_boundaries(phi.voxels, bounds)
    else:
        needed = _KIND_ORDERING[strategy.kind]
        if phi.ordering != needed:
            raise StrategyRequiresSorted(
                f"{strategy.kind} partitioning requires ordering {needed!r}, "
                f"tensor is {phi.ordering!r}")
        if strategy.sync_free and strategy.kind != "voxel":
            raise StrategyRequiresSorted("sync_free applies to voxel-run splits")
        bounds = _run_aligned_bounds(phi.key_array(strategy.kind), nc, threads)

    chunks = tuple((bounds[i], bounds[i + 1]) for i in range(threads))
    return ExecutionPlan(strategy=strategy, threads=threads, chunks=chunks)


def _check_plan_coverage(plan, nc):
    pos = 0
    for start, end in plan.chunks:
        if start != pos or end < start:
            raise PlanTensorMismatch("chunks do not tile the coefficient range")
        pos = end
    if pos != nc:
        raise PlanTensorMismatch(
            f"plan covers [0, {pos}), tensor has {nc} coefficients")


def _boundaries_on_runs(key_array, plan):
    n = len(key_array)
    for start, _ in plan.chunks[1:]:
        if 0 < start < n and key_array[start - 1] == key_array[start]:
            return False
    return True


def _check_kernel_args(tensor, dictionary, weights, signal):
    dims = tensor.dims
    if len(tensor.values) != dims.n_coeffs:
        raise DimensionMismatch("tensor arrays disagree with dims.n_coeffs")
    if len(dictionary.data) != dims.dict_len:
        raise DimensionMismatch("dictionary length != n_atoms * n_dirs")
    if len(weights) != dims.n_fibers:
        raise DimensionMismatch("w length != n_fibers")
    if len(signal) != dims.signal_len:
        raise DimensionMismatch("y length != n_voxels * n_dirs")


def dsc_sequential(tensor: OffsetPhiTensor, dictionary, w, y_out, *,
                   skip_zero=True) -> KernelStats:
    """y_out += M w, one thread, coefficients in storage order.

    y_out is a caller-initialized accumulator (normally zero-filled).
    Coefficients whose weight*value product is exactly zero are skipped and
    counted when skip_zero is set; the weight vector gets sparser as the
    solver iterates, so late iterations skip a growing share of the work.
    """
    _check_kernel_args(tensor, dictionary, w, y_out)
    t0 = time.perf_counter()
    skipped = _kernels.dsc_range(
        tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
        tensor.values, dictionary.data, w, y_out,
        0, tensor.dims.n_coeffs, tensor.dims.n_dirs, skip_zero)
    return KernelStats(int(skipped), time.perf_counter() - t0)


def wc_sequential(tensor: OffsetPhiTensor, dictionary, y, w_out) -> KernelStats:
    """w_out += M^T y, one thread, coefficients in storage order."""
    _check_kernel_args(tensor, dictionary, w_out, y)
    t0 = time.perf_counter()
    _kernels.wc_range(
        tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
        tensor.values, dictionary.data, y, w_out,
        0, tensor.dims.n_coeffs, tensor.dims.n_dirs)
    return KernelStats(0, time.perf_counter() - t0)


def dsc_parallel(tensor: OffsetPhiTensor, dictionary, w, y_out, plan,
                 *, skip_zero=True) -> KernelStats:
    """y_out += M w following an execution plan.

    With run-aligned chunks (sync_free or voxel partitioning) each voxel
    block has a single writer and the result is bitwise equal to
    dsc_sequential regardless of thread count.  Otherwise conflicting voxel
    blocks are privatized (just the boundary blocks on a voxel-sorted
    tensor, the whole signal elsewhere) and merged in ascending thread
    order, matching sequential within reassociation error.
    """
    phi = _phi(tensor)
    _check_kernel_args(tensor, dictionary, w, y_out)
    _check_plan_coverage(plan, phi.dims.n_coeffs)

    t0 = time.perf_counter()
    aligned = plan.strategy.sync_free or plan.strategy.kind == "voxel"
    if aligned:
        if phi.ordering != "by_voxel":
            raise PlanTensorMismatch("run-aligned DSC plan needs a voxel-sorted tensor")
        if not _boundaries_on_runs(phi.voxels, plan):
            raise PlanTensorMismatch("plan chunk straddles a voxel run")
        skipped = _dsc_owned(tensor, dictionary, w, y_out, plan, skip_zero)
    elif phi.ordering == "by_voxel":
        skipped = _dsc_edge_private(tensor, dictionary, w, y_out, plan, skip_zero)
    else:
        skipped = _dsc_full_private(tensor, dictionary, w, y_out, plan, skip_zero)
    return KernelStats(skipped, time.perf_counter() - t0)


def _dsc_owned(tensor, dictionary, w, y_out, plan, skip_zero):
    nd = tensor.dims.n_dirs
    work = [(i, s, e) for i, (s, e) in enumerate(plan.chunks) if e > s]
    skips = [0] * len(plan.chunks)

    def task(i, s, e):
        skips[i] = _kernels.dsc_range(
            tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
            tensor.values, dictionary.data, w, y_out, s, e, nd, skip_zero)

    _run_tasks([lambda i=i, s=s, e=e: task(i, s, e) for i, s, e in work],
               plan.threads)
    return int(sum(skips))


def _dsc_edge_private(tensor, dictionary, w, y_out, plan, skip_zero):
    """Coefficient split on a voxel-sorted tensor, no run alignment.

    Only the voxel runs cut by chunk boundaries can be written by two
    threads; each thread accumulates its share of those runs into private
    n_dirs buffers, everything else goes straight to y_out.
    """
    phi = _phi(tensor)
    voxels = phi.voxels
    nc = phi.dims.n_coeffs
    nd = phi.dims.n_dirs
    work = []
    for i, (s, e) in enumerate(plan.chunks):
        if e <= s:
            continue
        mid_start = s
        if s > 0 and voxels[s - 1] == voxels[s]:
            mid_start = min(e, int(np.searchsorted(voxels, voxels[s], side="right")))
        mid_end = e
        if e < nc and voxels[e - 1] == voxels[e]:
            mid_end = max(mid_start,
                          int(np.searchsorted(voxels, voxels[e - 1], side="left")))
        left = np.zeros(nd) if mid_start > s else None
        right = np.zeros(nd) if mid_end < e else None
        work.append((i, s, e, mid_start, mid_end, left, right))

    skips = [0] * len(plan.chunks)

    def task(i, s, e, ms, me, left, right):
        total = 0
        if left is not None:
            total += _kernels.dsc_block(
                tensor.atom_offsets, tensor.fibers, tensor.values,
                dictionary.data, w, left, s, ms, nd, skip_zero)
        if me > ms:
            total += _kernels.dsc_range(
                tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
                tensor.values, dictionary.data, w, y_out, ms, me, nd, skip_zero)
        if right is not None:
            total += _kernels.dsc_block(
                tensor.atom_offsets, tensor.fibers, tensor.values,
                dictionary.data, w, right, me, e, nd, skip_zero)
        skips[i] = total

    _run_tasks([lambda args=args: task(*args) for args in work], plan.threads)

    # Merge private edge buffers in ascending thread order.
    for i, s, e, ms, me, left, right in work:
        if left is not None:
            off = tensor.voxel_offsets[s]
            y_out[off:off + nd] += left
        if right is not None:
            off = tensor.voxel_offsets[e - 1]
            y_out[off:off + nd] += right
    return int(sum(skips))


def _dsc_full_private(tensor, dictionary, w, y_out, plan, skip_zero):
    nd = tensor.dims.n_dirs
    work = [(i, s, e) for i, (s, e) in enumerate(plan.chunks) if e > s]
    if len(work) == 1:
        _, s, e = work[0]
        return int(_kernels.dsc_range(
            tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
            tensor.values, dictionary.data, w, y_out, s, e, nd, skip_zero))
    privates = [np.zeros_like(y_out) for _ in work]
    skips = [0] * len(work)

    def task(j, s, e):
        skips[j] = _kernels.dsc_range(
            tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
            tensor.values, dictionary.data, w, privates[j], s, e, nd, skip_zero)

    _run_tasks([lambda j=j, s=s, e=e: task(j, s, e)
                for j, (_, s, e) in enumerate(work)], plan.threads)
    for buf in privates:
        y_out += buf
    return int(sum(skips))


def wc_parallel(tensor: OffsetPhiTensor, dictionary, y, w_out, plan) -> KernelStats:
    """w_out += M^T y following an execution plan.

    When chunk boundaries fall on fiber-run boundaries of a fiber-sorted
    tensor, every fiber weight has a single writer and the result is
    bitwise equal to sequential.  Otherwise each thread reduces into a
    private weight accumulator and the accumulators are merged in ascending
    thread order (within reassociation error of sequential).
    """
    phi = _phi(tensor)
    _check_kernel_args(tensor, dictionary, w_out, y)
    _check_plan_coverage(plan, phi.dims.n_coeffs)
    nd = phi.dims.n_dirs

    t0 = time.perf_counter()
    owned = plan.strategy.kind == "fiber" or (
        phi.ordering == "by_fiber" and _boundaries_on_runs(phi.fibers, plan))
    if plan.strategy.kind == "fiber" and not (
            phi.ordering == "by_fiber" and _boundaries_on_runs(phi.fibers, plan)):
        raise PlanTensorMismatch("fiber plan needs fiber-run-aligned chunks")

    work = [(i, s, e) for i, (s, e) in enumerate(plan.chunks) if e > s]
    if owned or len(work) <= 1:
        def task(s, e, out):
            _kernels.wc_range(
                tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
                tensor.values, dictionary.data, y, out, s, e, nd)
        _run_tasks([lambda s=s, e=e: task(s, e, w_out) for _, s, e in work],
                   plan.threads)
    else:
        privates = [np.zeros_like(w_out) for _ in work]

        def task(j, s, e):
            _kernels.wc_range(
                tensor.atom_offsets, tensor.voxel_offsets, tensor.fibers,
                tensor.values, dictionary.data, y, privates[j], s, e, nd)

        _run_tasks([lambda j=j, s=s, e=e: task(j, s, e)
                    for j, (_, s, e) in enumerate(work)], plan.threads)
        for buf in privates:
            w_out += buf
    return KernelStats(0, time.perf_counter() - t0)


def inner_axpy(scale, src, dst):
    """dst += scale * src over a direction span.

    Delegates to numpy's elementwise kernels; per element this performs the
    same multiply-then-add as the scalar loop.  scale == 0 leaves dst
    untouched, mirroring the zero-weight skip.
    """
    if scale == 0.0:
        return
    dst += scale * src


def inner_dot(a, b):
    """Dot product over a direction span.

    Delegates to numpy (BLAS); reassociation keeps it within tight relative
    error of the scalar loop, which remains the ground truth in tests.
    """
    return float(np.dot(a, b))
