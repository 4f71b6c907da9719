"""Core data model for the decomposed connectome matrix.

The matrix M (shape (n_voxels*n_dirs) x n_fibers) is never stored densely.
It is kept as a sparse coordinate-format 3-tensor: per nonzero coefficient k
an (atom, voxel, fiber) index triple and a real magnitude, contracted with a
dense dictionary of canonical diffusion atoms.  Dictionary rows are stored
atom-major so the innermost loops over diffusion directions touch contiguous
memory; the demeaned signal vector y is voxel-major with n_dirs entries per
voxel, and the weight vector w holds one entry per candidate fiber.

Signal and weight vectors are plain 1-D float64 ndarrays; only the tensor
and dictionary get wrapper types, because they carry index invariants worth
validating.  All wrapper types freeze their arrays after construction
(writeable=False) so instances can be shared across threads.  Construction
takes ownership of the arrays it is given: pass a copy if you still need to
write to them.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ArithmeticOverflow,
    ConfigInvalid,
    IndexOutOfRange,
    LengthMismatch,
    NonFiniteValue,
)

ORDERINGS = ("unsorted", "by_atom", "by_voxel", "by_fiber")

INDEX_DTYPE = np.uint32
VALUE_DTYPE = np.float64
OFFSET_DTYPE = np.int64


def _frozen(arr, dtype):
    out = np.ascontiguousarray(arr, dtype=dtype)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Dims:
    """Problem dimensions.

    n_coeffs counts the stored nonzeros of the sparse tensor; the empty
    tensor (n_coeffs == 0) is allowed, all other counts must be positive.
    """

    n_atoms: int
    n_voxels: int
    n_fibers: int
    n_dirs: int
    n_coeffs: int

    def __post_init__(self):
        for name in ("n_atoms", "n_voxels", "n_fibers", "n_dirs"):
            if getattr(self, name) <= 0:
                raise ConfigInvalid(f"{name} must be strictly positive")
        if self.n_coeffs < 0:
            raise ConfigInvalid("n_coeffs must be nonnegative")
        if self.n_coeffs > self.n_atoms * self.n_voxels * self.n_fibers:
            raise ConfigInvalid("n_coeffs exceeds n_atoms*n_voxels*n_fibers")

    @property
    def signal_len(self):
        return self.n_voxels * self.n_dirs

    @property
    def dict_len(self):
        return self.n_atoms * self.n_dirs


@dataclass(frozen=True)
class PhiTensor:
    """Coordinate-format sparse 3-tensor.

    Index arrays are unsigned 32-bit (indices are indices, never floats);
    values are float64.  `ordering` records which key array, if any, is
    known to be non-decreasing.  Construction only coerces dtypes and
    layout; cross-field invariants are checked by :func:`validate`.
    """

    atoms: np.ndarray
    voxels: np.ndarray
    fibers: np.ndarray
    values: np.ndarray
    dims: Dims
    ordering: str = "unsorted"

    def __post_init__(self):
        for name in ("atoms", "voxels", "fibers"):
            arr = np.asarray(getattr(self, name))
            if arr.dtype.kind not in "iu":
                raise TypeError(f"{name} must be integer-typed, got {arr.dtype}")
            object.__setattr__(self, name, _frozen(arr, INDEX_DTYPE))
        object.__setattr__(self, "values", _frozen(self.values, VALUE_DTYPE))
        if self.ordering not in ORDERINGS:
            raise ConfigInvalid(f"unknown ordering tag {self.ordering!r}")

    @property
    def n_coeffs(self):
        return self.dims.n_coeffs

    def key_array(self, key):
        """Index array for key in {'atom', 'voxel', 'fiber'}."""
        return getattr(self, key + "s")


@dataclass(frozen=True)
class OffsetPhiTensor:
    """PhiTensor plus precomputed row offsets into the dictionary and signal.

    atom_offsets[k] = atoms[k] * n_dirs and voxel_offsets[k] = voxels[k] *
    n_dirs, so the kernels index flat arrays directly instead of multiplying
    on every coefficient.  The wrapped tensor is unchanged and recoverable
    via `.tensor`.
    """

    tensor: PhiTensor
    atom_offsets: np.ndarray
    voxel_offsets: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "atom_offsets", _frozen(self.atom_offsets, OFFSET_DTYPE))
        object.__setattr__(self, "voxel_offsets", _frozen(self.voxel_offsets, OFFSET_DTYPE))

    @property
    def dims(self):
        return self.tensor.dims

    @property
    def ordering(self):
        return self.tensor.ordering

    @property
    def atoms(self):
        return self.tensor.atoms

    @property
    def voxels(self):
        return self.tensor.voxels

    @property
    def fibers(self):
        return self.tensor.fibers

    @property
    def values(self):
        return self.tensor.values


@dataclass(frozen=True)
class Dictionary:
    """Dense dictionary of canonical diffusion atoms, atom-major.

    Row for atom a occupies data[a*n_dirs : (a+1)*n_dirs].
    """

    data: np.ndarray
    dims: Dims

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data, VALUE_DTYPE))

    def as_matrix(self):
        """(n_atoms, n_dirs) read-only view."""
        return self.data.reshape(self.dims.n_atoms, self.dims.n_dirs)


def zeros_signal(dims):
    """Fresh zero accumulator for y (length n_voxels * n_dirs)."""
    return np.zeros(dims.signal_len, dtype=VALUE_DTYPE)


def zeros_weights(dims):
    """Fresh zero accumulator for w (length n_fibers)."""
    return np.zeros(dims.n_fibers, dtype=VALUE_DTYPE)


def precompute_offsets(tensor: PhiTensor) -> OffsetPhiTensor:
    """Precompute dictionary/signal row offsets for every coefficient.

    Done once per tensor so the kernels never multiply index * n_dirs in
    their hot loops.  Raises ArithmeticOverflow if n_atoms*n_dirs or
    n_voxels*n_dirs does not fit the offset integer type.
    """
    dims = tensor.dims
    bound = np.iinfo(OFFSET_DTYPE).max
    if dims.n_atoms * dims.n_dirs > bound or dims.n_voxels * dims.n_dirs > bound:
        raise ArithmeticOverflow("row offsets exceed the offset integer type")
    nd = OFFSET_DTYPE(dims.n_dirs)
    return OffsetPhiTensor(
        tensor=tensor,
        atom_offsets=tensor.atoms.astype(OFFSET_DTYPE) * nd,
        voxel_offsets=tensor.voxels.astype(OFFSET_DTYPE) * nd,
    )


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`: at most one issue per category."""

    issues: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.issues

    def raise_first(self):
        if self.issues:
            raise self.issues[0]

    def __str__(self):
        if self.ok:
            return "ok"
        return "; ".join(str(i) for i in self.issues)


def _first_out_of_range(arr, bound):
    bad = np.flatnonzero(arr >= bound)
    return int(bad[0]) if bad.size else None


def _first_non_finite(arr):
    bad = np.flatnonzero(~np.isfinite(arr))
    return int(bad[0]) if bad.size else None


def validate(tensor: PhiTensor, dictionary: Dictionary = None,
             y: np.ndarray = None, w: np.ndarray = None) -> ValidationReport:
    """Check length, index-range, and finiteness invariants.

    Records the first violating element per category rather than stopping
    at the first problem, so a report can show one length issue, one range
    issue, and one finiteness issue at once.  Returns a ValidationReport;
    use :func:`require_valid` to raise instead.
    """
    dims = tensor.dims
    report = ValidationReport()

    lengths = [
        ("atoms", tensor.atoms, dims.n_coeffs),
        ("voxels", tensor.voxels, dims.n_coeffs),
        ("fibers", tensor.fibers, dims.n_coeffs),
        ("values", tensor.values, dims.n_coeffs),
    ]
    if dictionary is not None:
        lengths.append(("dictionary", dictionary.data, dims.dict_len))
    if y is not None:
        lengths.append(("y", np.asarray(y), dims.signal_len))
    if w is not None:
        lengths.append(("w", np.asarray(w), dims.n_fibers))
    for name, arr, expected in lengths:
        if arr.ndim != 1 or arr.shape[0] != expected:
            report.issues.append(LengthMismatch(name, expected, arr.shape))
            break

    for dimension, arr, bound in [
        ("atom", tensor.atoms, dims.n_atoms),
        ("voxel", tensor.voxels, dims.n_voxels),
        ("fiber", tensor.fibers, dims.n_fibers),
    ]:
        pos = _first_out_of_range(arr, bound)
        if pos is not None:
            report.issues.append(
                IndexOutOfRange(dimension, pos, int(arr[pos]), bound))
            break

    finite_fields = [("values", tensor.values)]
    if dictionary is not None:
        finite_fields.append(("dictionary", dictionary.data))
    if y is not None:
        finite_fields.append(("y", np.asarray(y)))
    if w is not None:
        finite_fields.append(("w", np.asarray(w)))
    for name, arr in finite_fields:
        if arr.dtype.kind == "f":
            pos = _first_non_finite(arr)
            if pos is not None:
                report.issues.append(NonFiniteValue(name, pos))
                break

    return report


def require_valid(tensor, dictionary=None, y=None, w=None):
    """Validate and raise the first issue, if any."""
    validate(tensor, dictionary, y, w).raise_first()
