"""Corner cases: empty tensors, plan/tensor mismatches, invalid saves."""

import numpy as np
import pytest

import lifespmv as L
from lifespmv.errors import (
    ConfigInvalid,
    IndexOutOfRange,
    PlanTensorMismatch,
)

from conftest import small_problem


def empty_tensor():
    dims = L.Dims(n_atoms=2, n_voxels=2, n_fibers=2, n_dirs=3, n_coeffs=0)
    t = L.PhiTensor(atoms=np.empty(0, np.uint32), voxels=np.empty(0, np.uint32),
                    fibers=np.empty(0, np.uint32), values=np.empty(0),
                    dims=dims, ordering="by_voxel")
    d = L.Dictionary(data=np.ones(dims.dict_len), dims=dims)
    return t, d, dims


def test_empty_tensor_kernels_are_noops():
    t, d, dims = empty_tensor()
    off = L.precompute_offsets(t)
    y = np.full(dims.signal_len, 3.0)
    stats = L.dsc_sequential(off, d, np.ones(dims.n_fibers), y)
    assert np.all(y == 3.0)
    assert stats.skipped_coefficients == 0
    w = L.zeros_weights(dims)
    L.wc_sequential(off, d, np.ones(dims.signal_len), w)
    assert not w.any()


def test_empty_tensor_runs_and_plans():
    t, d, dims = empty_tensor()
    runs = L.detect_runs(t)
    assert runs.n_runs == 0
    assert runs.boundaries.tolist() == [0]
    plan = L.build_plan(t, L.PartitionStrategy("coefficient", sync_free=True), 4)
    assert all(start == end == 0 for start, end in plan.chunks)
    y = L.zeros_signal(dims)
    L.dsc_parallel(L.precompute_offsets(t), d, np.ones(dims.n_fibers), y, plan)
    assert not y.any()


def test_plan_from_other_tensor_rejected():
    # a sync-free plan built for one voxel-sorted tensor, replayed against a
    # differently ordered tensor of the same size
    p = small_problem(40)
    s, _ = L.sort_by(p.tensor, "voxel")
    plan = L.build_plan(s, L.PartitionStrategy("coefficient", sync_free=True), 4)
    off_unsorted = L.precompute_offsets(p.tensor)
    w = np.ones(p.dims.n_fibers)
    with pytest.raises(PlanTensorMismatch):
        L.dsc_parallel(off_unsorted, p.dictionary, w,
                       L.zeros_signal(p.dims), plan)


def test_fiber_plan_misaligned_chunks_rejected():
    p = small_problem(41)
    s, _ = L.sort_by(p.tensor, "fiber")
    off = L.precompute_offsets(s)
    runs = L.detect_runs(s)
    if runs.lengths().max() < 2:
        pytest.skip("no run long enough to straddle")
    long_run = int(np.argmax(runs.lengths()))
    inside = int(runs.boundaries[long_run]) + 1
    bad = L.ExecutionPlan(strategy=L.PartitionStrategy("fiber"), threads=2,
                          chunks=((0, inside), (inside, p.dims.n_coeffs)))
    with pytest.raises(PlanTensorMismatch):
        L.wc_parallel(off, p.dictionary,
                      np.ones(p.dims.signal_len), L.zeros_weights(p.dims), bad)


def test_save_rejects_invalid_problem(tmp_path):
    dims = L.Dims(n_atoms=2, n_voxels=2, n_fibers=2, n_dirs=2, n_coeffs=1)
    t = L.PhiTensor(atoms=[7], voxels=[0], fibers=[0], values=[1.0], dims=dims)
    d = L.Dictionary(data=np.ones(dims.dict_len), dims=dims)
    with pytest.raises(IndexOutOfRange):
        L.save(L.Problem(tensor=t, dictionary=d), tmp_path / "bad.life")


def test_solve_requires_signal():
    p = small_problem(42)
    bare = L.Problem(tensor=p.tensor, dictionary=p.dictionary)
    with pytest.raises(ConfigInvalid):
        L.solve(bare)


def test_build_plan_rejects_nonpositive_threads():
    p = small_problem(43)
    with pytest.raises(ConfigInvalid):
        L.build_plan(p.tensor, L.PartitionStrategy("coefficient"), 0)


def test_partition_strategy_rejects_unknown_kind():
    with pytest.raises(ConfigInvalid):
        L.PartitionStrategy("warp")


def test_more_threads_than_coefficients():
    dims = L.Dims(n_atoms=1, n_voxels=3, n_fibers=1, n_dirs=2, n_coeffs=3)
    t = L.PhiTensor(atoms=[0, 0, 0], voxels=[0, 1, 2], fibers=[0, 0, 0],
                    values=[1.0, 2.0, 3.0], dims=dims, ordering="by_voxel")
    d = L.Dictionary(data=np.ones(dims.dict_len), dims=dims)
    off = L.precompute_offsets(t)
    seq = L.zeros_signal(dims)
    L.dsc_sequential(off, d, np.ones(1), seq)
    plan = L.build_plan(t, L.PartitionStrategy("coefficient", sync_free=True), 8)
    assert len(plan.chunks) == 8
    par = L.zeros_signal(dims)
    L.dsc_parallel(off, d, np.ones(1), par, plan)
    assert np.array_equal(par, seq)


def test_single_giant_run_swallows_all_boundaries():
    # every coefficient shares one voxel: all interior boundaries collapse
    dims = L.Dims(n_atoms=2, n_voxels=2, n_fibers=3, n_dirs=2, n_coeffs=12)
    rng = np.random.default_rng(0)
    t = L.PhiTensor(atoms=rng.integers(0, 2, 12), voxels=np.zeros(12, int),
                    fibers=rng.integers(0, 3, 12), values=rng.random(12),
                    dims=dims, ordering="by_voxel")
    d = L.Dictionary(data=rng.random(dims.dict_len), dims=dims)
    plan = L.build_plan(t, L.PartitionStrategy("coefficient", sync_free=True), 4)
    nonempty = [(s, e) for s, e in plan.chunks if e > s]
    assert nonempty == [(0, 12)]
    off = L.precompute_offsets(t)
    seq = L.zeros_signal(dims)
    L.dsc_sequential(off, d, np.ones(3), seq)
    par = L.zeros_signal(dims)
    L.dsc_parallel(off, d, np.ones(3), par, plan)
    assert np.array_equal(par, seq)


def test_edge_privatization_chunk_inside_one_run():
    # non-sync-free coefficient split where middle chunks sit entirely
    # inside a single voxel run
    dims = L.Dims(n_atoms=3, n_voxels=2, n_fibers=4, n_dirs=4, n_coeffs=20)
    rng = np.random.default_rng(1)
    voxels = np.zeros(20, int)
    voxels[16:] = 1
    t = L.PhiTensor(atoms=rng.integers(0, 3, 20), voxels=voxels,
                    fibers=rng.integers(0, 4, 20), values=rng.random(20),
                    dims=dims, ordering="by_voxel")
    d = L.Dictionary(data=rng.random(dims.dict_len), dims=dims)
    off = L.precompute_offsets(t)
    w = rng.random(4)
    seq = L.zeros_signal(dims)
    L.dsc_sequential(off, d, w, seq)
    # chunks of 4: chunks 1..3 live inside voxel 0's 16-long run
    plan = L.build_plan(off, L.PartitionStrategy("coefficient"), 5)
    par = L.zeros_signal(dims)
    L.dsc_parallel(off, d, w, par, plan)
    np.testing.assert_allclose(par, seq, rtol=1e-12, atol=1e-14)


def test_edge_privatization_random_chunkings():
    # hand-built coefficient plans with arbitrary boundaries stress every
    # left/middle/right segment combination of the privatized path
    p = small_problem(45, n_coeffs=400)
    s, _ = L.sort_by(p.tensor, "voxel")
    off = L.precompute_offsets(s)
    rng = np.random.default_rng(45)
    w = rng.standard_normal(p.dims.n_fibers)
    seq = L.zeros_signal(p.dims)
    L.dsc_sequential(off, p.dictionary, w, seq)
    nc = p.dims.n_coeffs
    for trial in range(25):
        threads = int(rng.integers(2, 9))
        cuts = np.sort(rng.integers(0, nc + 1, size=threads - 1))
        bounds = [0, *cuts.tolist(), nc]
        plan = L.ExecutionPlan(
            strategy=L.PartitionStrategy("coefficient"), threads=threads,
            chunks=tuple((bounds[i], bounds[i + 1]) for i in range(threads)))
        par = L.zeros_signal(p.dims)
        L.dsc_parallel(off, p.dictionary, w, par, plan)
        np.testing.assert_allclose(par, seq, rtol=1e-12,
                                   atol=1e-12 * np.abs(seq).max())


def test_full_privatization_on_atom_sorted():
    p = small_problem(46)
    s, _ = L.sort_by(p.tensor, "atom")
    off = L.precompute_offsets(s)
    rng = np.random.default_rng(46)
    w = rng.standard_normal(p.dims.n_fibers)
    seq = L.zeros_signal(p.dims)
    L.dsc_sequential(off, p.dictionary, w, seq)
    plan = L.build_plan(off, L.PartitionStrategy("atom"), 4)
    par = L.zeros_signal(p.dims)
    L.dsc_parallel(off, p.dictionary, w, par, plan)
    np.testing.assert_allclose(par, seq, rtol=1e-12,
                               atol=1e-12 * np.abs(seq).max())


def test_solver_on_noisy_instance():
    # no exact solution exists; the solver still runs to completion and
    # reports finite state
    dims = L.Dims(n_atoms=8, n_voxels=25, n_fibers=15, n_dirs=4, n_coeffs=200)
    p = L.generate(L.GenConfig(dims=dims, mean_run_length=3.0,
                               weight_density=0.5, noise_sigma=0.5, seed=3))
    w, trace = L.solve(p, config=L.SolverConfig(max_iters=100))
    assert w.min() >= 0.0
    assert np.isfinite(trace.final_objective)
    assert trace.termination in ("max_iters", "grad_tol", "degenerate_step")


def test_loaded_voxel_sorted_problem_supports_sync_free(tmp_path):
    p = small_problem(44)
    s, _ = L.sort_by(p.tensor, "voxel")
    path = tmp_path / "sorted.life"
    L.save(L.Problem(tensor=s, dictionary=p.dictionary, y=p.y,
                     w_true=p.w_true), path)
    q = L.load(path)
    plan = L.build_plan(q.tensor,
                        L.PartitionStrategy("coefficient", sync_free=True), 4)
    off = L.precompute_offsets(q.tensor)
    y = L.zeros_signal(q.dims)
    L.dsc_parallel(off, q.dictionary, q.w_true, y, plan)
    seq = L.zeros_signal(q.dims)
    L.dsc_sequential(off, q.dictionary, q.w_true, seq)
    assert np.array_equal(y, seq)
