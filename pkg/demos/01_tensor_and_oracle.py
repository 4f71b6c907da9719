"""Build a tiny decomposed tensor by hand and check it against dense M.

Walks through the core data model: dimensions, the coordinate-format
sparse tensor, the atom-major dictionary, offset precomputation, and the
dense materialization that every kernel is tested against.
"""

import numpy as np

import lifespmv as L

# Three diffusion directions, two atoms, two voxels, two fibers, and four
# nonzero coefficients linking them.
dims = L.Dims(n_atoms=2, n_voxels=2, n_fibers=2, n_dirs=3, n_coeffs=4)

tensor = L.PhiTensor(
    atoms=[0, 1, 0, 1],
    voxels=[0, 0, 1, 1],
    fibers=[0, 1, 1, 0],
    values=[1.0, 0.5, 2.0, 0.25],
    dims=dims,
)
dictionary = L.Dictionary(
    data=np.array([[1.0, 0.5, 0.0],     # atom 0
                   [0.0, 1.0, -1.0]]).ravel(),  # atom 1
    dims=dims,
)

report = L.validate(tensor, dictionary)
print("validation:", report)

offsets = L.precompute_offsets(tensor)
print("atom offsets:", offsets.atom_offsets, " voxel offsets:",
      offsets.voxel_offsets)

# Dense materialization: rows are (voxel, direction) pairs, columns fibers.
M = L.materialize_dense(tensor, dictionary)
print("dense M:\n", M)

w = np.array([1.0, 2.0])
y = L.zeros_signal(dims)
stats = L.dsc_sequential(offsets, dictionary, w, y)
print("kernel y = M w:      ", y)
print("dense  y = M @ w:    ", M @ w)
print("max abs difference:  ", np.max(np.abs(y - M @ w)))

w_back = L.zeros_weights(dims)
L.wc_sequential(offsets, dictionary, y, w_back)
print("kernel w = M^T y:    ", w_back)
print("dense  w = M.T @ y:  ", M.T @ y)

# The adjoint identity ties the two kernels together.
y_probe = np.arange(1.0, dims.signal_len + 1)
mw = L.zeros_signal(dims)
L.dsc_sequential(offsets, dictionary, w, mw)
mty = L.zeros_weights(dims)
L.wc_sequential(offsets, dictionary, y_probe, mty)
print("<M w, y> =", float(mw @ y_probe), " <w, M^T y> =", float(w @ mty))
