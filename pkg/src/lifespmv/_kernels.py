"""Compiled coefficient-loop kernels.

These are the scalar reference loops, compiled with numba.  They release
the GIL so the engine can drive disjoint coefficient ranges from plain
Python threads; accumulation order within a range is exactly coefficient
order, which is what the synchronization-free execution mode relies on for
bitwise reproducibility.  fastmath stays off: no reassociation, no
contraction.
"""

from numba import njit


@njit(nogil=True, cache=True)
def dsc_range(atom_offsets, voxel_offsets, fibers, values, dict_data, w,
              y_out, start, end, n_dirs, skip_zero):
    """y_out += M w restricted to coefficients [start, end).

    Returns the number of coefficients skipped because w[fiber]*value == 0.
    The weight*value product is hoisted out of the direction loop.
    """
    skipped = 0
    for k in range(start, end):
        s = w[fibers[k]] * values[k]
        if s == 0.0:
            if skip_zero:
                skipped += 1
                continue
        ao = atom_offsets[k]
        vo = voxel_offsets[k]
        for t in range(n_dirs):
            y_out[vo + t] += dict_data[ao + t] * s
    return skipped


@njit(nogil=True, cache=True)
def dsc_block(atom_offsets, fibers, values, dict_data, w, buf, start, end,
              n_dirs, skip_zero):
    """Like dsc_range but for coefficients sharing one voxel.

    Accumulates into a private n_dirs buffer instead of the shared signal,
    so a voxel run split across threads can be merged later without races.
    """
    skipped = 0
    for k in range(start, end):
        s = w[fibers[k]] * values[k]
        if s == 0.0:
            if skip_zero:
                skipped += 1
                continue
        ao = atom_offsets[k]
        for t in range(n_dirs):
            buf[t] += dict_data[ao + t] * s
    return skipped


@njit(nogil=True, cache=True)
def wc_range(atom_offsets, voxel_offsets, fibers, values, dict_data, y,
             w_out, start, end, n_dirs):
    """w_out += M^T y restricted to coefficients [start, end)."""
    for k in range(start, end):
        ao = atom_offsets[k]
        vo = voxel_offsets[k]
        acc = 0.0
        for t in range(n_dirs):
            acc += y[vo + t] * dict_data[ao + t]
        w_out[fibers[k]] += acc * values[k]
    return 0
