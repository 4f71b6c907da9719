"""Decomposed-tensor SpMV kernels and a Barzilai-Borwein NNLS solver.

The connectome matrix is stored as a coordinate-format sparse 3-tensor
contracted with a dense dictionary of diffusion atoms.  This package
provides the two matrix-vector products that dominate connectome pruning
(y = M w and w = M^T y), inspector-style data restructuring with runtime
autotuning, partitioned parallel execution with a synchronization-free
mapping, the nonnegative least-squares solver driving them, a synthetic
problem generator, and a binary container format for fixtures.
"""

from .datagen import GenConfig, Problem, generate
from .engine import (
    ExecutionPlan,
    KernelStats,
    PartitionStrategy,
    build_plan,
    dsc_parallel,
    dsc_sequential,
    inner_axpy,
    inner_dot,
    wc_parallel,
    wc_sequential,
)
from .errors import LifeError
from .io import load, save
from .oracle import materialize_dense
from .restructure import (
    RestructureChoice,
    RunTable,
    autotune,
    best_partition,
    detect_runs,
    sort_by,
)
from .sbbnnls import (
    SolverConfig,
    SolverTrace,
    gradient,
    objective,
    project_gradient,
    project_nonneg,
    solve,
    step_size,
)
from .tensor import (
    Dictionary,
    Dims,
    OffsetPhiTensor,
    PhiTensor,
    precompute_offsets,
    require_valid,
    validate,
    zeros_signal,
    zeros_weights,
)

__version__ = "0.1.0"

__all__ = [
    "Dictionary", "Dims", "ExecutionPlan", "GenConfig", "KernelStats",
    "LifeError", "OffsetPhiTensor", "PartitionStrategy", "PhiTensor",
    "Problem", "RestructureChoice", "RunTable", "SolverConfig",
    "SolverTrace", "autotune", "best_partition", "build_plan",
    "detect_runs", "dsc_parallel", "dsc_sequential", "generate", "gradient",
    "inner_axpy", "inner_dot", "load", "materialize_dense", "objective",
    "precompute_offsets", "project_gradient", "project_nonneg",
    "require_valid", "save", "solve", "sort_by", "step_size", "validate",
    "wc_parallel", "wc_sequential", "zeros_signal", "zeros_weights",
]
