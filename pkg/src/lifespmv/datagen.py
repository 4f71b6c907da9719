"""Deterministic synthetic problem generator.

Real connectome tensors have strong run structure: sorting by voxel yields
long stretches of identical voxel indices whose lengths span orders of
magnitude.  The generator mimics that with geometrically distributed run
lengths (a single tunable mean), draws the remaining coordinates uniformly,
and ships a nonnegative ground-truth weight vector so solver tests have a
known-solvable target.  Everything derives from one PCG64 stream, so a
seed pins the problem bit-for-bit.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid
from .tensor import (
    Dictionary,
    Dims,
    PhiTensor,
    precompute_offsets,
    validate,
    zeros_signal,
)
from . import engine


@dataclass(frozen=True)
class GenConfig:
    dims: Dims
    mean_run_length: float = 4.0
    weight_density: float = 0.5
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 1.0 <= self.mean_run_length <= max(self.dims.n_coeffs, 1):
            raise ConfigInvalid("mean_run_length must be in [1, n_coeffs]")
        if not 0.0 < self.weight_density <= 1.0:
            raise ConfigInvalid("weight_density must be in (0, 1]")
        if self.noise_sigma < 0.0:
            raise ConfigInvalid("noise_sigma must be >= 0")


@dataclass(frozen=True)
class Problem:
    """A tensor, dictionary, and signal with consistent dimensions.

    w_true is present for generated instances (and round-tripped through
    the container when saved); config echoes the generator inputs and is
    None for loaded problems.
    """

    tensor: PhiTensor
    dictionary: Dictionary
    y: np.ndarray = None
    w_true: np.ndarray = None
    config: GenConfig = None

    @property
    def dims(self):
        return self.tensor.dims


def _run_lengths(rng, n_coeffs, mean):
    """Geometric run lengths truncated to sum exactly to n_coeffs."""
    if n_coeffs == 0:
        return np.empty(0, dtype=np.int64)
    p = 1.0 / mean
    lengths = []
    remaining = n_coeffs
    while remaining > 0:
        batch = rng.geometric(p, size=max(16, int(remaining * p) + 1))
        for run in batch:
            run = min(int(run), remaining)
            lengths.append(run)
            remaining -= run
            if remaining == 0:
                break
    return np.asarray(lengths, dtype=np.int64)


def generate(config: GenConfig) -> Problem:
    """Build a Problem from a GenConfig; identical seeds give identical bits."""
    dims = config.dims
    rng = np.random.default_rng(config.seed)

    lengths = _run_lengths(rng, dims.n_coeffs, config.mean_run_length)
    n_runs = len(lengths)
    if n_runs <= dims.n_voxels:
        run_voxels = rng.choice(dims.n_voxels, size=n_runs, replace=False)
    else:
        run_voxels = rng.integers(0, dims.n_voxels, size=n_runs)
    voxels = np.repeat(run_voxels.astype(np.uint32), lengths)

    atoms = rng.integers(0, dims.n_atoms, size=dims.n_coeffs, dtype=np.uint32)
    fibers = rng.integers(0, dims.n_fibers, size=dims.n_coeffs, dtype=np.uint32)
    values = 1.0 - rng.random(dims.n_coeffs)  # uniform (0, 1], never zero

    # Shuffle so the stored order carries no accidental structure; the run
    # statistics live in the voxel multiset and survive any permutation.
    perm = rng.permutation(dims.n_coeffs)
    tensor = PhiTensor(atoms=atoms[perm], voxels=voxels[perm],
                       fibers=fibers[perm], values=values[perm], dims=dims)

    rows = rng.standard_normal((dims.n_atoms, dims.n_dirs))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    dictionary = Dictionary(data=rows.ravel(), dims=dims)

    n_active = max(1, round(config.weight_density * dims.n_fibers))
    w_true = np.zeros(dims.n_fibers)
    active = rng.choice(dims.n_fibers, size=n_active, replace=False)
    w_true[active] = 1.0 - rng.random(n_active)

    y = zeros_signal(dims)
    engine.dsc_sequential(precompute_offsets(tensor), dictionary, w_true, y)
    if config.noise_sigma > 0.0:
        y += config.noise_sigma * rng.standard_normal(dims.signal_len)

    problem = Problem(tensor=tensor, dictionary=dictionary, y=y,
                      w_true=w_true, config=config)
    validate(tensor, dictionary, y, w_true).raise_first()
    return problem
