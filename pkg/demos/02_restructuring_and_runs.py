"""Data restructuring: sort the coefficient list, expose runs, autotune.

Sorting by one indirection key makes that key's accesses sequential runs of
identical indices.  The kernels give the same answer (up to reassociation)
on any ordering; what changes is the memory access pattern and which
parallel mappings become legal.
"""

import numpy as np

import lifespmv as L

dims = L.Dims(n_atoms=16, n_voxels=20_000, n_fibers=300, n_dirs=16,
              n_coeffs=40_000)
problem = L.generate(L.GenConfig(dims=dims, mean_run_length=8.0, seed=3))

print("stored ordering:", problem.tensor.ordering)
for key in ("atom", "voxel", "fiber"):
    sorted_tensor, perm = L.sort_by(problem.tensor, key)
    runs = L.detect_runs(sorted_tensor)
    lengths = runs.lengths()
    print(f"sorted by {key:5}: {runs.n_runs:6d} runs, "
          f"mean length {lengths.mean():8.2f}, max {lengths.max()}")

# Voxel runs follow the generator's geometric run-length model.
sorted_voxel, _ = L.sort_by(problem.tensor, "voxel")
runs = L.detect_runs(sorted_voxel)
print(f"\nvoxel run count {runs.n_runs} vs n_coeffs/mean_run_length "
      f"{dims.n_coeffs / 8.0:.0f}")

# Same math on any ordering: compare DSC before and after sorting.
rng = np.random.default_rng(0)
w = rng.random(dims.n_fibers)
base = L.zeros_signal(dims)
L.dsc_sequential(L.precompute_offsets(problem.tensor), problem.dictionary,
                 w, base)
after = L.zeros_signal(dims)
L.dsc_sequential(L.precompute_offsets(sorted_voxel), problem.dictionary,
                 w, after)
print("max relative difference after voxel sort:",
      float(np.max(np.abs(after - base)) / np.max(np.abs(base))))

# Runtime selection between atom- and voxel-based restructuring.
choice = L.autotune(problem, "dsc", threads=2, trials=3)
print("\nautotune (DSC):", choice.key, " means:",
      {k: f"{v * 1e3:.2f}ms" for k, v in sorted(choice.measured_times.items())})
choice = L.autotune(problem, "wc", threads=2, trials=3)
print("autotune (WC): ", choice.key, " means:",
      {k: f"{v * 1e3:.2f}ms" for k, v in sorted(choice.measured_times.items())})
