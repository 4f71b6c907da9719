"""Dense materialization of the decomposed matrix, for correctness oracles.

Every kernel in the engine is checked against an explicitly materialized
M (shape (n_voxels*n_dirs) x n_fibers) at desk scale.  The materialization
path shares no code with the kernels: it sorts coefficients into a
canonical order and scatter-adds dictionary rows with plain numpy, so it is
an independent route to the same matrix.
"""

import numpy as np

from .errors import OracleTooLarge
from .tensor import Dictionary, PhiTensor

# Allocation guard for the dense matrix; this is a test oracle, not a
# production path.
DENSE_MAX_ENTRIES = 10**8


def materialize_dense(tensor: PhiTensor, dictionary: Dictionary) -> np.ndarray:
    """Expand the sparse tensor into the dense matrix M.

    M[v*n_dirs + t, f] is the sum over coefficients with (voxel v, fiber f)
    of value * dictionary[atom row, t].  Contributions are accumulated in a
    canonical order (sorted by voxel, fiber, atom, value), so the result is
    bitwise identical for any joint permutation of the coefficient arrays.
    """
    dims = tensor.dims
    n_entries = dims.signal_len * dims.n_fibers
    if n_entries > DENSE_MAX_ENTRIES:
        raise OracleTooLarge(
            f"dense matrix would hold {n_entries} entries "
            f"(guard: {DENSE_MAX_ENTRIES})")

    out = np.zeros((dims.n_voxels, dims.n_fibers, dims.n_dirs))
    if dims.n_coeffs:
        order = np.lexsort((tensor.values, tensor.atoms, tensor.fibers, tensor.voxels))
        rows = dictionary.as_matrix()[tensor.atoms[order]]
        contrib = tensor.values[order, None] * rows
        # np.add.at applies updates sequentially, keeping the canonical order
        # even when (voxel, fiber) pairs repeat.
        np.add.at(out, (tensor.voxels[order], tensor.fibers[order]), contrib)
    return out.transpose(0, 2, 1).reshape(dims.signal_len, dims.n_fibers)
