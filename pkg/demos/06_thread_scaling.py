"""Thread-scaling table for the full solver (the CLI 'bench' in library form).

Times a fixed number of solver iterations at several thread counts and
reports speedup against one thread.  Absolute numbers are host-dependent;
the point is the shape of the table.
"""

import time

import lifespmv as L

dims = L.Dims(n_atoms=48, n_voxels=8000, n_fibers=800, n_dirs=48,
              n_coeffs=400_000)
problem = L.generate(L.GenConfig(dims=dims, mean_run_length=32.0,
                                 weight_density=0.3, seed=1))
iters = 5

# Warm the compiled kernels before timing anything.
L.solve(problem, config=L.SolverConfig(max_iters=1))


def measure(threads):
    t0 = time.perf_counter()
    L.solve(problem, config=L.SolverConfig(max_iters=iters, grad_tol=0.0,
                                           threads=threads))
    return time.perf_counter() - t0


baseline = measure(1)
print(f"{'threads':>7}  {'elapsed_s':>9}  {'speedup':>7}")
print(f"{1:7d}  {baseline:9.3f}  {1.0:7.2f}")
for threads in (2, 4, 8):
    elapsed = measure(threads)
    print(f"{threads:7d}  {elapsed:9.3f}  {baseline / elapsed:7.2f}")
