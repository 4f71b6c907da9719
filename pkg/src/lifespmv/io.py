"""Binary problem container and CSV benchmark reports.

Container layout (little-endian, no padding):

    bytes 0..4    magic "LIFE"
    bytes 4..8    uint32 version (currently 1)
    bytes 8..12   uint32 flags: bit0 y present, bit1 w_true present,
                  bit2 tensor is voxel-sorted; higher bits must be zero
    bytes 12..52  five uint64 dims: n_atoms, n_voxels, n_fibers, n_dirs,
                  n_coeffs
    then          atoms, voxels, fibers as uint32[n_coeffs] each
    then          values as float64[n_coeffs]
    then          dictionary as float64[n_atoms*n_dirs], atom-major
    then          y as float64[n_voxels*n_dirs] if flagged
    then          w_true as float64[n_fibers] if flagged

Indices are stored 32-bit (in-memory widening is the loader's business);
everything real is float64.  A file read back and rewritten is bit
identical.
"""

import csv
import struct
from dataclasses import dataclass

import numpy as np

from .datagen import Problem
from .errors import ConfigInvalid, CorruptContainer, IoFailure, UnsupportedVersion
from .tensor import Dictionary, Dims, PhiTensor, validate

MAGIC = b"LIFE"
VERSION = 1
FLAG_Y = 1
FLAG_W_TRUE = 2
FLAG_VOXEL_SORTED = 4
_KNOWN_FLAGS = FLAG_Y | FLAG_W_TRUE | FLAG_VOXEL_SORTED

_HEADER = struct.Struct("<4sII5Q")

REPORT_COLUMNS = ("iteration", "op", "restructure", "partition", "threads",
                  "elapsed_s", "skipped")


def save(problem: Problem, path) -> None:
    """Write a validated problem to the container format."""
    validate(problem.tensor, problem.dictionary, problem.y,
             problem.w_true).raise_first()
    t = problem.tensor
    dims = t.dims
    flags = 0
    if problem.y is not None:
        flags |= FLAG_Y
    if problem.w_true is not None:
        flags |= FLAG_W_TRUE
    if t.ordering == "by_voxel":
        flags |= FLAG_VOXEL_SORTED
    header = _HEADER.pack(MAGIC, VERSION, flags, dims.n_atoms, dims.n_voxels,
                          dims.n_fibers, dims.n_dirs, dims.n_coeffs)
    try:
        with open(path, "wb") as f:
            f.write(header)
            for arr in (t.atoms, t.voxels, t.fibers):
                f.write(np.asarray(arr, dtype="<u4").tobytes())
            f.write(np.asarray(t.values, dtype="<f8").tobytes())
            f.write(np.asarray(problem.dictionary.data, dtype="<f8").tobytes())
            if problem.y is not None:
                f.write(np.asarray(problem.y, dtype="<f8").tobytes())
            if problem.w_true is not None:
                f.write(np.asarray(problem.w_true, dtype="<f8").tobytes())
    except OSError as exc:
        raise IoFailure(f"writing {path}: {exc}") from exc


def _read_exact(f, n, what):
    data = f.read(n)
    if len(data) != n:
        raise CorruptContainer(f"truncated while reading {what}")
    return data


def _read_array(f, dtype, count, what):
    itemsize = np.dtype(dtype).itemsize
    data = _read_exact(f, itemsize * count, what)
    return np.frombuffer(data, dtype=dtype, count=count)


def load(path) -> Problem:
    """Read and validate a container; returns a Problem (config is None)."""
    try:
        f = open(path, "rb")
    except OSError as exc:
        raise IoFailure(f"opening {path}: {exc}") from exc
    with f:
        raw = _read_exact(f, _HEADER.size, "header")
        magic, version, flags, na, nv, nf, nd, nc = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise CorruptContainer(f"bad magic {magic!r}")
        if version != VERSION:
            raise UnsupportedVersion(f"container version {version}")
        if flags & ~_KNOWN_FLAGS:
            raise CorruptContainer(f"unknown flag bits 0x{flags:x}")
        try:
            dims = Dims(n_atoms=na, n_voxels=nv, n_fibers=nf, n_dirs=nd,
                        n_coeffs=nc)
        except ConfigInvalid as exc:
            raise CorruptContainer(f"bad dims: {exc}") from exc

        atoms = _read_array(f, "<u4", nc, "atoms")
        voxels = _read_array(f, "<u4", nc, "voxels")
        fibers = _read_array(f, "<u4", nc, "fibers")
        values = _read_array(f, "<f8", nc, "values")
        dict_data = _read_array(f, "<f8", dims.dict_len, "dictionary")
        y = w_true = None
        if flags & FLAG_Y:
            y = _read_array(f, "<f8", dims.signal_len, "y").copy()
        if flags & FLAG_W_TRUE:
            w_true = _read_array(f, "<f8", dims.n_fibers, "w_true").copy()
        if f.read(1):
            raise CorruptContainer("trailing data after payload")

    ordering = "by_voxel" if flags & FLAG_VOXEL_SORTED else "unsorted"
    tensor = PhiTensor(atoms=atoms, voxels=voxels, fibers=fibers,
                       values=values, dims=dims, ordering=ordering)
    dictionary = Dictionary(data=dict_data, dims=dims)
    report = validate(tensor, dictionary, y, w_true)
    if not report.ok:
        raise CorruptContainer(f"payload fails validation: {report}")
    return Problem(tensor=tensor, dictionary=dictionary, y=y, w_true=w_true)


@dataclass(frozen=True)
class ReportRow:
    """One timed kernel measurement for the CSV report."""

    iteration: int
    op: str
    restructure: str
    partition: str
    threads: int
    elapsed_s: float
    skipped: int


def export_report(rows, path, format="csv") -> None:
    """Write measurement rows as CSV, in the order given."""
    if format != "csv":
        raise ConfigInvalid(f"unsupported report format {format!r}")
    try:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(REPORT_COLUMNS)
            for row in rows:
                writer.writerow([row.iteration, row.op, row.restructure,
                                 row.partition, row.threads,
                                 repr(row.elapsed_s), row.skipped])
    except OSError as exc:
        raise IoFailure(f"writing {path}: {exc}") from exc


def read_report(path):
    """Parse a report back into ReportRow objects (round-trip of export)."""
    try:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if tuple(header or ()) != REPORT_COLUMNS:
                raise CorruptContainer(f"unexpected report header {header}")
            return [ReportRow(int(r[0]), r[1], r[2], r[3], int(r[4]),
                              float(r[5]), int(r[6])) for r in reader]
    except OSError as exc:
        raise IoFailure(f"reading {path}: {exc}") from exc
