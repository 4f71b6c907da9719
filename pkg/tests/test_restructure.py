import numpy as np
import pytest

import lifespmv as L
from lifespmv import restructure
from lifespmv.errors import NotSorted

from conftest import assert_rel, small_problem


def three_coeff_tensor():
    dims = L.Dims(n_atoms=3, n_voxels=3, n_fibers=3, n_dirs=2, n_coeffs=3)
    return L.PhiTensor(atoms=[0, 1, 2], voxels=[2, 0, 1], fibers=[1, 2, 0],
                       values=[1.0, 2.0, 3.0], dims=dims)


def test_sort_by_three_elements():
    t = three_coeff_tensor()
    s, perm = L.sort_by(t, "voxel")
    assert s.voxels.tolist() == [0, 1, 2]
    assert s.values.tolist() == [2.0, 3.0, 1.0]
    assert perm.tolist() == [1, 2, 0]
    assert s.ordering == "by_voxel"


def test_sort_by_identity_when_sorted():
    t = three_coeff_tensor()
    s, _ = L.sort_by(t, "voxel")
    s2, perm = L.sort_by(s, "voxel")
    assert perm.tolist() == [0, 1, 2]
    assert np.array_equal(s2.values, s.values)


def test_sort_by_is_stable():
    dims = L.Dims(n_atoms=1, n_voxels=2, n_fibers=4, n_dirs=1, n_coeffs=4)
    t = L.PhiTensor(atoms=[0, 0, 0, 0], voxels=[1, 0, 1, 0],
                    fibers=[0, 1, 2, 3], values=[10.0, 11.0, 12.0, 13.0],
                    dims=dims)
    s, _ = L.sort_by(t, "voxel")
    # ties keep original relative order
    assert s.values.tolist() == [11.0, 13.0, 10.0, 12.0]


def test_sort_by_bijection_witness():
    p = small_problem(5)
    s, perm = L.sort_by(p.tensor, "fiber")
    assert np.array_equal(np.sort(perm), np.arange(p.dims.n_coeffs))
    for name in ("atoms", "voxels", "fibers", "values"):
        assert np.array_equal(getattr(s, name),
                              getattr(p.tensor, name)[perm])
    # multiset of quadruples preserved
    orig = sorted(zip(p.tensor.atoms, p.tensor.voxels, p.tensor.fibers,
                      p.tensor.values))
    got = sorted(zip(s.atoms, s.voxels, s.fibers, s.values))
    assert orig == got


def test_sort_by_rejects_unknown_key():
    with pytest.raises(ValueError):
        L.sort_by(three_coeff_tensor(), "value")


def test_detect_runs_single_run():
    dims = L.Dims(n_atoms=1, n_voxels=5, n_fibers=3, n_dirs=1, n_coeffs=3)
    t = L.PhiTensor(atoms=[0, 0, 0], voxels=[4, 4, 4], fibers=[0, 1, 2],
                    values=[1.0, 1.0, 1.0], dims=dims, ordering="by_voxel")
    runs = L.detect_runs(t)
    assert runs.boundaries.tolist() == [0, 3]
    assert runs.key_values.tolist() == [4]


def test_detect_runs_hand_enumeration():
    dims = L.Dims(n_atoms=1, n_voxels=3, n_fibers=6, n_dirs=1, n_coeffs=6)
    t = L.PhiTensor(atoms=[0] * 6, voxels=[0, 0, 1, 1, 1, 2],
                    fibers=range(6), values=np.ones(6), dims=dims,
                    ordering="by_voxel")
    runs = L.detect_runs(t)
    assert runs.boundaries.tolist() == [0, 2, 5, 6]
    assert runs.key_values.tolist() == [0, 1, 2]
    assert runs.lengths().tolist() == [2, 3, 1]


def test_detect_runs_requires_sorted():
    t = three_coeff_tensor()
    with pytest.raises(NotSorted):
        L.detect_runs(t)
    s, _ = L.sort_by(t, "voxel")
    with pytest.raises(NotSorted):
        L.detect_runs(s, "atom")


def test_detect_runs_boundaries_are_key_changes():
    for seed in range(5):
        p = small_problem(seed)
        s, _ = L.sort_by(p.tensor, "voxel")
        runs = L.detect_runs(s)
        keys = s.voxels
        # scan oracle: every boundary is a strict change, runs cover [0, Nc)
        changes = [0] + [i for i in range(1, len(keys))
                         if keys[i] != keys[i - 1]] + [len(keys)]
        assert runs.boundaries.tolist() == changes
        assert np.all(np.diff(runs.key_values.astype(np.int64)) > 0)


def test_sorted_kernels_match_unsorted():
    p = small_problem(21)
    rng = np.random.default_rng(1)
    w = rng.standard_normal(p.dims.n_fibers)
    y = rng.standard_normal(p.dims.signal_len)
    off = L.precompute_offsets(p.tensor)
    base_y = L.zeros_signal(p.dims)
    L.dsc_sequential(off, p.dictionary, w, base_y)
    base_w = L.zeros_weights(p.dims)
    L.wc_sequential(off, p.dictionary, y, base_w)
    for key in ("atom", "voxel", "fiber"):
        s, _ = L.sort_by(p.tensor, key)
        soff = L.precompute_offsets(s)
        got_y = L.zeros_signal(p.dims)
        L.dsc_sequential(soff, p.dictionary, w, got_y)
        got_w = L.zeros_weights(p.dims)
        L.wc_sequential(soff, p.dictionary, y, got_w)
        assert_rel(got_y, base_y, 1e-12)
        assert_rel(got_w, base_w, 1e-12)


def test_autotune_selects_faster_candidate(monkeypatch):
    fake = {"atom": 8.4, "voxel": 8.2}
    monkeypatch.setattr(restructure, "_time_candidate",
                        lambda problem, op, key, threads, trials: fake[key])
    choice = L.autotune(small_problem(1), "dsc", threads=2)
    assert choice.key == "voxel"
    assert choice.measured_times == fake

    fake = {"atom": 5.0, "voxel": 9.0}
    choice = L.autotune(small_problem(1), "wc", threads=2)
    assert choice.key == "atom"


def test_autotune_tie_breaks_toward_voxel(monkeypatch):
    monkeypatch.setattr(restructure, "_time_candidate",
                        lambda problem, op, key, threads, trials: 1.0)
    choice = L.autotune(small_problem(1), "dsc", threads=2)
    assert choice.key == "voxel"


def test_autotune_single_trial_runs(warm_kernels):
    choice = L.autotune(small_problem(2), "dsc", threads=2, trials=1)
    assert choice.key in ("atom", "voxel")
    assert set(choice.measured_times) == {"atom", "voxel"}
    assert all(t >= 0.0 for t in choice.measured_times.values())
    # the reported choice is the argmin of the reported means
    best = min(choice.measured_times,
               key=lambda k: (choice.measured_times[k], k != "voxel"))
    assert choice.key == best


def test_best_partition_pairings():
    assert L.best_partition("dsc", "voxel").sync_free
    assert L.best_partition("dsc", "voxel").kind == "coefficient"
    assert not L.best_partition("dsc", "atom").sync_free
    assert L.best_partition("wc", "atom").kind == "coefficient"
