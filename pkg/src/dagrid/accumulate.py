"""Directed accumulation, slicing, grid sampling, and their backward passes.

Directed accumulation (DA) scatters every source cell's value to the target
coordinates named by one or more sampling grids:

    V[c][i][j] = sum_k sum_n sum_m U[c][n][m] * K(Gx_k[n][m], i) * K(Gy_k[n][m], j)

Slicing is the adjoint gather that reads a processed grid back into source
space, and classical grid sampling is the same gather with the grid shaped
like the *target*.  The backward pass of accumulation with respect to its
input is exactly slicing (and vice versa), so the adjoint pairs here share
one code path by construction.

All operations are pure, 64-bit, and deterministic: repeated calls and any
worker count produce bit-identical outputs (see _engine for the contract).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _engine
from .kernels import KernelKind, UnsupportedKernelError, as_kernel
from .tensor import as_plane, as_tensor

__all__ = [
    "SamplingGrid",
    "GridSet",
    "AccumulatorGrid",
    "accumulate",
    "accumulate_weights",
    "normalize",
    "slice_grid",
    "grid_sample",
    "accumulate_backward_input",
    "accumulate_backward_grid",
    "slice_backward",
]


@dataclass(frozen=True)
class SamplingGrid:
    """Per-cell fractional target coordinates (gx = row, gy = column)."""

    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gx", as_plane(self.gx, "gx"))
        object.__setattr__(self, "gy", as_plane(self.gy, "gy"))
        if self.gx.shape != self.gy.shape:
            raise ValueError(f"gx shape {self.gx.shape} != gy shape {self.gy.shape}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape


class GridSet:
    """An ordered list of sampling grids sharing one spatial shape."""

    def __init__(self, grids: Sequence[SamplingGrid] | SamplingGrid):
        if isinstance(grids, SamplingGrid):
            grids = [grids]
        grids = tuple(grids)
        if not grids:
            raise ValueError("GridSet needs at least one grid")
        shape = grids[0].shape
        for g in grids[1:]:
            if g.shape != shape:
                raise ValueError(f"grid shapes differ: {g.shape} vs {shape}")
        self.grids = grids

    @property
    def shape(self) -> tuple[int, int]:
        return self.grids[0].shape

    def __len__(self) -> int:
        return len(self.grids)

    def __iter__(self) -> Iterator[SamplingGrid]:
        return iter(self.grids)

    def __getitem__(self, k: int) -> SamplingGrid:
        return self.grids[k]


@dataclass
class AccumulatorGrid:
    """Accumulated values with their homogeneous weight plane."""

    values: np.ndarray
    weights: np.ndarray
    normalized: bool = False


def _as_gridset(grids) -> GridSet:
    if isinstance(grids, GridSet):
        return grids
    return GridSet(grids)


def _check_source(u: np.ndarray, grids: GridSet, name: str = "u") -> None:
    if u.shape[1:] != grids.shape:
        raise ValueError(
            f"{name} spatial shape {u.shape[1:]} does not match grid shape {grids.shape}"
        )


def _target_shape(shape) -> tuple[int, int]:
    h, w = int(shape[0]), int(shape[1])
    if h < 1 or w < 1:
        raise ValueError(f"target shape must be positive, got {(h, w)}")
    return h, w


def accumulate(u, grids, kind: KernelKind, shape) -> np.ndarray:
    """Directed accumulation of ``u`` into a fresh (C, H', W') tensor.

    Parameters
    ----------
    u : array-like (C, H, W)
        Source tensor.
    grids : GridSet | SamplingGrid | sequence of SamplingGrid
        Target coordinates per source cell; every grid must share ``u``'s
        spatial shape.
    kind : KernelKind
        Nearest or bilinear splatting kernel.
    shape : (H', W')
        Spatial shape of the accumulation target.

    Out-of-bounds taps are dropped.  The output is unnormalised; pair with
    :func:`accumulate_weights` and :func:`normalize` for weighted averages.
    """
    u = as_tensor(u, "u")
    grids = _as_gridset(grids)
    _check_source(u, grids)
    nearest = as_kernel(kind) is KernelKind.NEAREST
    return _engine.scatter(u, grids, nearest, _target_shape(shape))


def accumulate_weights(grids, kind: KernelKind, source_shape, shape) -> np.ndarray:
    """Homogeneous weight plane: accumulation of an all-ones (1, H, W) tensor."""
    grids = _as_gridset(grids)
    source_shape = _target_shape(source_shape)
    if source_shape != grids.shape:
        raise ValueError(
            f"source shape {source_shape} does not match grid shape {grids.shape}"
        )
    ones = np.ones((1,) + source_shape)
    return accumulate(ones, grids, kind, shape)


def normalize(acc: AccumulatorGrid, epsilon: float = 1e-8) -> AccumulatorGrid:
    """Divide accumulated values by (weights + epsilon); weights are kept."""
    if float(epsilon) <= 0.0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if acc.normalized:
        raise ValueError("accumulator is already normalized")
    values = acc.values / (acc.weights + float(epsilon))
    return AccumulatorGrid(values, acc.weights.copy(), normalized=True)


def slice_grid(v, grids, kind: KernelKind, source_shape) -> np.ndarray:
    """Slice a processed grid ``v`` back into source space (adjoint of accumulate).

    Parameters
    ----------
    v : array-like (C, H', W')
        Grid-space tensor.
    grids : GridSet | SamplingGrid | sequence of SamplingGrid
        The same grids used for accumulation; spatial shape (H, W).
    kind : KernelKind
        Sampling kernel.
    source_shape : (H, W)
        Spatial shape of the sliced output; must match the grid shape.

    Returns the (C, H, W) tensor  sum_k sum_n sum_m V[c][n][m] *
    K(Gx_k[i][j], n) * K(Gy_k[i][j], m)  with out-of-bounds reads dropped.
    """
    v = as_tensor(v, "v")
    grids = _as_gridset(grids)
    source_shape = _target_shape(source_shape)
    if source_shape != grids.shape:
        raise ValueError(
            f"source shape {source_shape} does not match grid shape {grids.shape}"
        )
    nearest = as_kernel(kind) is KernelKind.NEAREST
    return _engine.gather(v, grids, nearest)


def grid_sample(u, grid: SamplingGrid, kind: KernelKind) -> np.ndarray:
    """Classical grid sampling: gather ``u`` at the grid's coordinates.

    The grid has the shape of the *output*; each output cell reads the
    kernel-interpolated value of ``u`` at its (gx, gy).  Equivalent to
    slicing with a single grid.
    """
    u = as_tensor(u, "u")
    if not isinstance(grid, SamplingGrid):
        raise ValueError("grid_sample expects a single SamplingGrid")
    nearest = as_kernel(kind) is KernelKind.NEAREST
    return _engine.gather(u, GridSet(grid), nearest)


def accumulate_backward_input(d_v, grids, kind: KernelKind, source_shape) -> np.ndarray:
    """d(loss)/dU for accumulation: exactly slicing of d_v (shared code path)."""
    return slice_grid(d_v, grids, kind, source_shape)


def accumulate_backward_grid(d_v, u, grids, kind: KernelKind = KernelKind.BILINEAR) -> list[SamplingGrid]:
    """d(loss)/dG for bilinear accumulation, one (dgx, dgy) pair per grid.

    The tent kernel's subgradient at its kinks is -sign(g - i) with
    sign(0) = 0.  Nearest grids carry no gradient and are rejected.
    """
    if as_kernel(kind) is KernelKind.NEAREST:
        raise UnsupportedKernelError("nearest-kernel grids carry no gradient")
    d_v = as_tensor(d_v, "d_v")
    u = as_tensor(u, "u")
    grids = _as_gridset(grids)
    _check_source(u, grids)
    if d_v.shape[0] != u.shape[0]:
        raise ValueError(f"channel mismatch: d_v {d_v.shape[0]} vs u {u.shape[0]}")
    pairs = _engine.grid_gradient(d_v, u, grids)
    return [SamplingGrid(dgx, dgy) for dgx, dgy in pairs]


def slice_backward(d_u, grids, kind: KernelKind, shape) -> np.ndarray:
    """d(loss)/dV for slicing: exactly accumulation of d_u (shared code path)."""
    return accumulate(d_u, grids, kind, shape)
