"""Subspace Barzilai-Borwein non-negative least squares.

Minimizes 0.5 * ||M w - y||^2 subject to w >= 0, where every product with
M or M^T goes through the sparse-tensor kernels.  The update is

    w  <-  [ w - alpha * g~ ]+

with g = M^T (M w - y) and g~ the gradient projected onto the feasible
subspace (components pointing out of the nonnegativity constraint at
active coordinates are zeroed).  The step size alternates between two
Barzilai-Borwein formulas:

    odd iterations (1-indexed):   alpha = <g~, g~>   / <M g~, M g~>
    even iterations:              alpha = <M g~, M g~> / <M^T M g~, M^T M g~>

so an odd iteration costs 2 DSC + 1 WC kernel calls and an even iteration
2 DSC + 2 WC, i.e. 2.0 and 1.5 calls per iteration on average.  The
objective is non-monotone per iteration, as usual for BB steps; only
long-run decrease is expected.
"""

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .errors import ConfigInvalid, DegenerateStep
from .restructure import best_partition, sort_by
from .tensor import precompute_offsets, zeros_signal, zeros_weights

DEFAULT_MAX_ITERS = 500


@dataclass
class SolverConfig:
    """Solver controls.

    Restructure keys name the per-operation tensor ordering built before
    iterating ('voxel' for DSC and 'atom' for WC reflect the best CPU
    pairings; 'none' runs on the tensor as stored).  Strategy overrides
    replace the default partition for the matching operation.
    """

    max_iters: int = DEFAULT_MAX_ITERS
    grad_tol: float = 1e-12
    threads: int = 1
    dsc_restructure: str = "voxel"
    wc_restructure: str = "atom"
    dsc_strategy: engine.PartitionStrategy = None
    wc_strategy: engine.PartitionStrategy = None
    skip_zero: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ConfigInvalid("max_iters must be >= 1")
        if self.grad_tol < 0:
            raise ConfigInvalid("grad_tol must be >= 0")
        if self.threads < 1:
            raise ConfigInvalid("threads must be >= 1")
        for key in (self.dsc_restructure, self.wc_restructure):
            if key not in ("none", "atom", "voxel", "fiber"):
                raise ConfigInvalid(f"unknown restructure key {key!r}")


@dataclass
class TraceRecord:
    """One completed iteration.

    objective is 0.5*||M w - y||^2 at the iteration's *starting* point (it
    falls out of the gradient computation for free); zeros and w_min
    describe the weight vector *after* the update.  dsc_skipped counts the
    zero-weight skips of the gradient's M w call.
    """

    iteration: int
    objective: float
    alpha: float
    grad_norm: float
    zeros: int
    dsc_seconds: float
    wc_seconds: float
    dsc_calls: int
    wc_calls: int
    dsc_skipped: int
    w_min: float


@dataclass
class SolverTrace:
    records: list = field(default_factory=list)
    termination: str = ""
    initial_objective: float = float("nan")
    final_objective: float = float("nan")
    total_dsc_calls: int = 0
    total_wc_calls: int = 0

    @property
    def iterations(self):
        return len(self.records)


def project_nonneg(v):
    """Clamp to the nonnegative orthant; negatives become exact zeros."""
    return np.maximum(v, 0.0)


def project_gradient(g, w):
    """Project the gradient onto the feasible subspace.

    At active coordinates (w == 0) a positive gradient component would push
    the iterate out of the orthant only to be clipped back, so those
    components are zeroed; everything else passes through.
    """
    out = g.copy()
    out[(w == 0.0) & (g > 0.0)] = 0.0
    return out


class _OpRunner:
    """One operation's tensor copy, plan, and call bookkeeping."""

    def __init__(self, problem, op, restructure_key, strategy, threads,
                 skip_zero, sorted_cache):
        self.dictionary = problem.dictionary
        self.skip_zero = skip_zero
        if restructure_key == "none":
            tensor = problem.tensor
        else:
            if restructure_key not in sorted_cache:
                sorted_cache[restructure_key], _ = sort_by(problem.tensor,
                                                           restructure_key)
            tensor = sorted_cache[restructure_key]
        self.offsets = precompute_offsets(tensor)
        if strategy is None:
            strategy = best_partition(op, restructure_key)
        self.plan = engine.build_plan(self.offsets, strategy, threads)
        self.calls = 0
        self.seconds = 0.0
        self.last_skipped = 0

    def dsc(self, w):
        y = zeros_signal(self.offsets.dims)
        stats = engine.dsc_parallel(self.offsets, self.dictionary, w, y,
                                    self.plan, skip_zero=self.skip_zero)
        self.calls += 1
        self.seconds += stats.elapsed
        self.last_skipped = stats.skipped_coefficients
        return y

    def wc(self, y):
        w = zeros_weights(self.offsets.dims)
        stats = engine.wc_parallel(self.offsets, self.dictionary, y, w,
                                   self.plan)
        self.calls += 1
        self.seconds += stats.elapsed
        return w


def _runners(problem, config):
    cache = {}
    dsc = _OpRunner(problem, "dsc", config.dsc_restructure,
                    config.dsc_strategy, config.threads, config.skip_zero,
                    cache)
    wc = _OpRunner(problem, "wc", config.wc_restructure,
                   config.wc_strategy, config.threads, config.skip_zero,
                   cache)
    return dsc, wc


def _sequential_ops(problem):
    offsets = precompute_offsets(problem.tensor)

    def mv(w):
        y = zeros_signal(problem.dims)
        engine.dsc_sequential(offsets, problem.dictionary, w, y)
        return y

    def mtv(y):
        w = zeros_weights(problem.dims)
        engine.wc_sequential(offsets, problem.dictionary, y, w)
        return w

    return mv, mtv


def gradient(problem, w):
    """M^T (M w - y): one DSC and one WC on the problem's tensor."""
    mv, mtv = _sequential_ops(problem)
    return mtv(mv(w) - problem.y)


def objective(problem, w):
    """0.5 * ||M w - y||^2 via one DSC."""
    mv, _ = _sequential_ops(problem)
    r = mv(w) - problem.y
    return 0.5 * engine.inner_dot(r, r)


def _bb_alpha(iter_index, g_tilde, mv, mtv):
    mg = mv(g_tilde)
    if iter_index % 2 == 1:
        num = engine.inner_dot(g_tilde, g_tilde)
        den = engine.inner_dot(mg, mg)
    else:
        mtmg = mtv(mg)
        num = engine.inner_dot(mg, mg)
        den = engine.inner_dot(mtmg, mtmg)
    if den == 0.0:
        raise DegenerateStep(f"zero step denominator at iteration {iter_index}")
    return num / den


def step_size(iter_index, g_tilde, problem):
    """Barzilai-Borwein step for the given (1-indexed) iteration parity.

    Requires a nonzero projected gradient; raises DegenerateStep when the
    denominator vanishes, which the solver treats as termination.
    """
    mv, mtv = _sequential_ops(problem)
    return _bb_alpha(iter_index, g_tilde, mv, mtv)


def solve(problem, w0=None, config: SolverConfig = None):
    """Run the solver; returns (weights, trace).

    Terminates at max_iters, when the projected gradient norm drops below
    grad_tol, or when a step denominator degenerates to zero.  Every
    returned or intermediate weight vector is exactly nonnegative.
    """
    if config is None:
        config = SolverConfig()
    if problem.y is None:
        raise ConfigInvalid("problem has no signal vector to fit")
    dsc_run, wc_run = _runners(problem, config)
    b = problem.y

    if w0 is None:
        ones = np.ones(problem.dims.n_fibers)
        scale = np.linalg.norm(b) / max(np.linalg.norm(dsc_run.dsc(ones)), 1e-300)
        w = ones * scale
    else:
        w = project_nonneg(np.asarray(w0, dtype=np.float64))

    trace = SolverTrace()
    obj = float("nan")
    for i in range(1, config.max_iters + 1):
        calls0 = (dsc_run.calls, wc_run.calls)
        secs0 = (dsc_run.seconds, wc_run.seconds)

        residual = dsc_run.dsc(w) - b
        grad_skipped = dsc_run.last_skipped
        obj = 0.5 * engine.inner_dot(residual, residual)
        if i == 1:
            trace.initial_objective = obj
        g = wc_run.wc(residual)
        g_tilde = project_gradient(g, w)
        grad_norm = float(np.linalg.norm(g_tilde))
        if grad_norm < config.grad_tol:
            trace.termination = "grad_tol"
            trace.final_objective = obj
            break

        try:
            alpha = _bb_alpha(i, g_tilde, dsc_run.dsc, wc_run.wc)
        except DegenerateStep:
            trace.termination = "degenerate_step"
            trace.final_objective = obj
            break

        w = project_nonneg(w - alpha * g_tilde)
        trace.records.append(TraceRecord(
            iteration=i,
            objective=obj,
            alpha=alpha,
            grad_norm=grad_norm,
            zeros=int(np.count_nonzero(w == 0.0)),
            dsc_seconds=dsc_run.seconds - secs0[0],
            wc_seconds=wc_run.seconds - secs0[1],
            dsc_calls=dsc_run.calls - calls0[0],
            wc_calls=wc_run.calls - calls0[1],
            dsc_skipped=grad_skipped,
            w_min=float(w.min()) if len(w) else 0.0,
        ))
    else:
        trace.termination = "max_iters"
        r = dsc_run.dsc(w) - b
        trace.final_objective = 0.5 * engine.inner_dot(r, r)

    trace.total_dsc_calls = dsc_run.calls
    trace.total_wc_calls = wc_run.calls
    return w, trace
