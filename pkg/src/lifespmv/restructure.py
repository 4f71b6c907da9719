"""Inspector-style data restructuring for the coefficient list.

Sorting the coefficients by one indirection key (atom, voxel, or fiber)
turns that key's accesses into long runs of identical indices, which is
what both the cache story and the synchronization-free parallel mapping
feed on.  Which key wins depends on the dataset, so the choice can be
autotuned at runtime by timing short trial executions of each candidate.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import engine
from .errors import NotSorted
from .tensor import PhiTensor, precompute_offsets, zeros_signal, zeros_weights

SORT_KEYS = ("atom", "voxel", "fiber")

# Only atom and voxel restructuring are worth timing: the dictionary and
# signal vectors have far more reuse to expose than the weight vector, so
# fiber sorting is supported but never auto-selected.
AUTOTUNE_CANDIDATES = ("atom", "voxel")


@dataclass(frozen=True)
class RunTable:
    """Run structure of a sorted key array.

    boundaries[i] .. boundaries[i+1] is the i-th run; boundaries starts at
    0 and ends at n_coeffs, key_values holds each run's constant key.
    """

    boundaries: np.ndarray
    key_values: np.ndarray

    @property
    def n_runs(self):
        return len(self.key_values)

    def lengths(self):
        return np.diff(self.boundaries)


@dataclass(frozen=True)
class RestructureChoice:
    """Autotune outcome: the selected key and the measured mean seconds."""

    key: str
    measured_times: dict = None


def sort_by(tensor: PhiTensor, key: str):
    """Jointly reorder all coefficient arrays so `key` is non-decreasing.

    The sort is stable (equal keys keep their original relative order), so
    results are reproducible.  Returns the sorted tensor and the
    permutation: perm[i] is the original position of the i-th reordered
    coefficient.
    """
    if key not in SORT_KEYS:
        raise ValueError(f"key must be one of {SORT_KEYS}, got {key!r}")
    perm = np.argsort(tensor.key_array(key), kind="stable")
    reordered = PhiTensor(
        atoms=tensor.atoms[perm],
        voxels=tensor.voxels[perm],
        fibers=tensor.fibers[perm],
        values=tensor.values[perm],
        dims=tensor.dims,
        ordering="by_" + key,
    )
    return reordered, perm


def detect_runs(tensor: PhiTensor, key: str = None) -> RunTable:
    """Find the maximal constant runs of the sorted key array."""
    if key is None:
        if tensor.ordering == "unsorted":
            raise NotSorted("tensor carries no ordering tag")
        key = tensor.ordering.removeprefix("by_")
    elif tensor.ordering != "by_" + key:
        raise NotSorted(
            f"tensor ordering is {tensor.ordering!r}, need by_{key}")
    keys = tensor.key_array(key)
    nc = len(keys)
    if nc == 0:
        return RunTable(boundaries=np.zeros(1, dtype=np.int64),
                        key_values=np.empty(0, dtype=keys.dtype))
    starts = np.concatenate(([0], np.flatnonzero(np.diff(keys)) + 1))
    boundaries = np.concatenate((starts, [nc])).astype(np.int64)
    return RunTable(boundaries=boundaries, key_values=keys[starts])


def best_partition(op: str, key: str) -> engine.PartitionStrategy:
    """Best-performing partition strategy for an op/restructuring pair.

    Coefficient splitting balances load best on CPUs for both operations;
    pairing it with voxel restructuring additionally permits the
    synchronization-free mapping for DSC.
    """
    if op == "dsc" and key == "voxel":
        return engine.PartitionStrategy("coefficient", sync_free=True)
    return engine.PartitionStrategy("coefficient")


def _time_candidate(problem, op, key, threads, trials):
    """Mean wall seconds of `trials` kernel runs under one restructuring."""
    sorted_tensor, _ = sort_by(problem.tensor, key)
    offsets = precompute_offsets(sorted_tensor)
    plan = engine.build_plan(offsets, best_partition(op, key), threads)
    dims = problem.dims
    if op == "dsc":
        w = problem.w_true if problem.w_true is not None else np.ones(dims.n_fibers)
        out = zeros_signal(dims)
        run = lambda: engine.dsc_parallel(offsets, problem.dictionary, w, out, plan)
    else:
        y = problem.y if problem.y is not None else np.ones(dims.signal_len)
        out = zeros_weights(dims)
        run = lambda: engine.wc_parallel(offsets, problem.dictionary, y, out, plan)
    run()  # warm the compiled kernels and caches before timing
    total = 0.0
    for _ in range(trials):
        out[:] = 0.0
        t0 = time.perf_counter()
        run()
        total += time.perf_counter() - t0
    return total / trials


def autotune(problem, op: str, threads: int, trials: int = 3) -> RestructureChoice:
    """Pick the restructuring key by timing trial runs of the operation.

    Each candidate is executed `trials` times with its best-paired
    partition strategy and the lower mean wall time wins; an exact tie
    goes to voxel, which keeps the synchronization-free DSC mapping
    available.
    """
    if op not in ("dsc", "wc"):
        raise ValueError(f"op must be 'dsc' or 'wc', got {op!r}")
    means = {key: _time_candidate(problem, op, key, threads, trials)
             for key in AUTOTUNE_CANDIDATES}
    best = min(means, key=lambda k: (means[k], k != "voxel"))
    return RestructureChoice(key=best, measured_times=means)
