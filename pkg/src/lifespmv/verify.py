"""Self-contained correctness suite over randomized desk-scale instances.

Each property family draws fresh instances per seed, exercises the engine,
and checks it against an independent route (the dense materialization, an
adjoint identity, an exhaustive scan, or a hand-rolled dense formula).
The CLI 'verify' subcommand runs every family and reports a pass/fail
matrix; any failure is a build-breaking event, not a tolerance tweak.
"""

from dataclasses import dataclass

import numpy as np

from . import engine, sbbnnls
from .oracle import materialize_dense
from .restructure import detect_runs, sort_by
from .tensor import precompute_offsets, zeros_signal, zeros_weights
from .datagen import Dims, GenConfig, Problem, generate


def small_instance(seed) -> Problem:
    """Random desk-scale problem; dims vary with the seed."""
    rng = np.random.default_rng(seed)
    dims = Dims(
        n_atoms=int(rng.integers(1, 31)),
        n_voxels=int(rng.integers(1, 51)),
        n_fibers=int(rng.integers(1, 41)),
        n_dirs=int(rng.choice([1, 8, 16])),
        n_coeffs=int(rng.integers(1, 501)),
    )
    nc_max = dims.n_atoms * dims.n_voxels * dims.n_fibers
    if dims.n_coeffs > nc_max:
        dims = Dims(dims.n_atoms, dims.n_voxels, dims.n_fibers, dims.n_dirs,
                    nc_max)
    mean_run = float(rng.uniform(1.0, min(8.0, dims.n_coeffs)))
    return generate(GenConfig(dims=dims, mean_run_length=mean_run,
                              weight_density=0.5, noise_sigma=0.1,
                              seed=int(seed)))


def _rel_close(a, b, tol):
    return np.allclose(a, b, rtol=tol, atol=tol * 1e-3)


def _random_vectors(problem, seed):
    rng = np.random.default_rng(seed + 10_000)
    w = rng.standard_normal(problem.dims.n_fibers)
    y = rng.standard_normal(problem.dims.signal_len)
    return w, y


def dense_equivalence(problem, seed):
    """DSC equals dense M @ w; WC equals dense M.T @ y."""
    dense = materialize_dense(problem.tensor, problem.dictionary)
    w, y = _random_vectors(problem, seed)
    offsets = precompute_offsets(problem.tensor)
    got_y = zeros_signal(problem.dims)
    engine.dsc_sequential(offsets, problem.dictionary, w, got_y)
    got_w = zeros_weights(problem.dims)
    engine.wc_sequential(offsets, problem.dictionary, y, got_w)
    return (_rel_close(got_y, dense @ w, 1e-10)
            and _rel_close(got_w, dense.T @ y, 1e-10))


def adjointness(problem, seed):
    """<M w, y> == <w, M^T y> for random w, y."""
    w, y = _random_vectors(problem, seed)
    offsets = precompute_offsets(problem.tensor)
    mw = zeros_signal(problem.dims)
    engine.dsc_sequential(offsets, problem.dictionary, w, mw)
    mty = zeros_weights(problem.dims)
    engine.wc_sequential(offsets, problem.dictionary, y, mty)
    lhs = float(np.dot(mw, y))
    rhs = float(np.dot(w, mty))
    scale = max(abs(lhs), abs(rhs), 1e-30)
    return abs(lhs - rhs) / scale < 1e-10


def restructure_invariance(problem, seed):
    """Sorting by any key changes results by at most reassociation error."""
    w, y = _random_vectors(problem, seed)
    offsets = precompute_offsets(problem.tensor)
    base_y = zeros_signal(problem.dims)
    engine.dsc_sequential(offsets, problem.dictionary, w, base_y)
    base_w = zeros_weights(problem.dims)
    engine.wc_sequential(offsets, problem.dictionary, y, base_w)

    for key in ("atom", "voxel", "fiber"):
        sorted_t, perm = sort_by(problem.tensor, key)
        # permutation is a bijection witness
        if sorted(perm.tolist()) != list(range(problem.dims.n_coeffs)):
            return False
        if not np.array_equal(sorted_t.values, problem.tensor.values[perm]):
            return False
        runs = detect_runs(sorted_t, key)
        keys = sorted_t.key_array(key)
        b = runs.boundaries
        if b[0] != 0 or b[-1] != problem.dims.n_coeffs:
            return False
        if np.any(np.diff(b) <= 0):
            return False
        if np.any(np.diff(runs.key_values.astype(np.int64)) <= 0):
            return False
        for i in range(runs.n_runs):
            seg = keys[b[i]:b[i + 1]]
            if not np.all(seg == runs.key_values[i]):
                return False

        so = precompute_offsets(sorted_t)
        got_y = zeros_signal(problem.dims)
        engine.dsc_sequential(so, problem.dictionary, w, got_y)
        got_w = zeros_weights(problem.dims)
        engine.wc_sequential(so, problem.dictionary, y, got_w)
        if not (_rel_close(got_y, base_y, 1e-12)
                and _rel_close(got_w, base_w, 1e-12)):
            return False
    return True


def plan_legality(problem, seed):
    """Plans tile the range, respect runs, and sync-free DSC is bitwise."""
    w, _ = _random_vectors(problem, seed)
    sorted_t, _ = sort_by(problem.tensor, "voxel")
    offsets = precompute_offsets(sorted_t)
    seq = zeros_signal(problem.dims)
    engine.dsc_sequential(offsets, problem.dictionary, w, seq)

    for threads in (2, 3, 4, 8):
        plan = engine.build_plan(
            offsets, engine.PartitionStrategy("coefficient", sync_free=True),
            threads)
        pos = 0
        for start, end in plan.chunks:
            if start != pos or end < start:
                return False
            pos = end
            if 0 < start < problem.dims.n_coeffs:
                if sorted_t.voxels[start - 1] == sorted_t.voxels[start]:
                    return False
        if pos != problem.dims.n_coeffs:
            return False
        par = zeros_signal(problem.dims)
        engine.dsc_parallel(offsets, problem.dictionary, w, par, plan)
        if not np.array_equal(par, seq):
            return False
    return True


def step_sizes(problem, seed):
    """BB steps match the dense-matrix formulas for both parities."""
    dense = materialize_dense(problem.tensor, problem.dictionary)
    rng = np.random.default_rng(seed + 20_000)
    w = np.abs(rng.standard_normal(problem.dims.n_fibers))
    g = sbbnnls.gradient(problem, w)
    gt = sbbnnls.project_gradient(g, w)
    if np.linalg.norm(gt) == 0.0:
        return True
    mg = dense @ gt
    mtmg = dense.T @ mg
    want_odd = np.dot(gt, gt) / np.dot(mg, mg)
    want_even = np.dot(mg, mg) / np.dot(mtmg, mtmg)
    got_odd = sbbnnls.step_size(1, gt, problem)
    got_even = sbbnnls.step_size(2, gt, problem)
    return (abs(got_odd - want_odd) <= 1e-10 * abs(want_odd)
            and abs(got_even - want_even) <= 1e-10 * abs(want_even))


def zero_skip(problem, seed):
    """Skipping zero products changes nothing and counts exactly."""
    rng = np.random.default_rng(seed + 30_000)
    w = np.abs(rng.standard_normal(problem.dims.n_fibers))
    w[rng.random(problem.dims.n_fibers) < 0.5] = 0.0
    offsets = precompute_offsets(problem.tensor)
    on = zeros_signal(problem.dims)
    stats = engine.dsc_sequential(offsets, problem.dictionary, w, on,
                                  skip_zero=True)
    off = zeros_signal(problem.dims)
    engine.dsc_sequential(offsets, problem.dictionary, w, off,
                          skip_zero=False)
    want = int(np.count_nonzero(
        w[problem.tensor.fibers] * problem.tensor.values == 0.0))
    return np.array_equal(on, off) and stats.skipped_coefficients == want


FAMILIES = (
    ("dense-equivalence", dense_equivalence),
    ("adjointness", adjointness),
    ("restructure-invariance", restructure_invariance),
    ("plan-legality", plan_legality),
    ("step-sizes", step_sizes),
    ("zero-skip", zero_skip),
)


@dataclass
class FamilyResult:
    name: str
    passed: int
    total: int

    @property
    def ok(self):
        return self.passed == self.total


def run_suite(seeds=20, scale="small"):
    """Run every property family over `seeds` random instances."""
    if scale != "small":
        raise ValueError(f"unknown scale {scale!r}")
    results = []
    for name, check in FAMILIES:
        passed = 0
        for seed in range(seeds):
            problem = small_instance(seed)
            if check(problem, seed):
                passed += 1
        results.append(FamilyResult(name=name, passed=passed, total=seeds))
    return results
