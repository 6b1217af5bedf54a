"""Dense tensor plumbing: validation, mesh grids, and small separable filters.

Tensors are plain numpy arrays, C-contiguous float64, laid out channel-first
as (C, H, W).  64-bit precision is fixed for the whole library: the adjoint
and gradient tolerances in the test suite are unreachable in 32-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = ["MeshGrids", "as_tensor", "as_plane", "mesh_grids", "box_filter", "gaussian_filter"]


def as_tensor(x, name: str = "tensor") -> np.ndarray:
    """Coerce to a finite float64 (C, H, W) array or raise ValueError."""
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if arr.ndim != 3:
        raise ValueError(f"{name} must have shape (C, H, W), got {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} has a zero dimension: {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_plane(x, name: str = "plane") -> np.ndarray:
    """Coerce to a finite float64 (H, W) array or raise ValueError."""
    arr = np.ascontiguousarray(np.asarray(x, dtype=np.float64))
    if arr.ndim != 2:
        raise ValueError(f"{name} must have shape (H, W), got {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} has a zero dimension: {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} contains non-finite values")
    return arr


@dataclass(frozen=True)
class MeshGrids:
    """Integer lattice coordinates stored as reals: mx[i][j] = i, my[i][j] = j."""

    mx: np.ndarray
    my: np.ndarray


def mesh_grids(height: int, width: int) -> MeshGrids:
    """Row/column index grids of shape (height, width)."""
    if height < 1 or width < 1:
        raise ValueError(f"mesh_grids needs positive dimensions, got {height}x{width}")
    mx, my = np.meshgrid(
        np.arange(height, dtype=np.float64),
        np.arange(width, dtype=np.float64),
        indexing="ij",
    )
    return MeshGrids(np.ascontiguousarray(mx), np.ascontiguousarray(my))


def _separable_filter(t: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    # Zero-padded separable correlation, renormalised by the in-bounds
    # kernel mass so constants pass through unchanged at the borders.
    raw = t
    for axis in (1, 2):
        raw = ndimage.correlate1d(raw, kernel, axis=axis, mode="constant", cval=0.0)
    cx = ndimage.correlate1d(np.ones(t.shape[1]), kernel, mode="constant", cval=0.0)
    cy = ndimage.correlate1d(np.ones(t.shape[2]), kernel, mode="constant", cval=0.0)
    return raw / (cx[:, None] * cy[None, :])


def box_filter(t, radius: int) -> np.ndarray:
    """Mean over the (2r+1)^2 window, dividing by the count of in-bounds taps."""
    t = as_tensor(t)
    radius = int(radius)
    if radius < 0:
        raise ValueError(f"box_filter radius must be >= 0, got {radius}")
    if radius == 0:
        return t.copy()
    kernel = np.ones(2 * radius + 1, dtype=np.float64)
    return _separable_filter(t, kernel)


def gaussian_filter(t, sigma: float) -> np.ndarray:
    """Separable Gaussian, truncated at 3 sigma, kernel normalised to sum 1.

    Borders are zero-padded and renormalised by the in-bounds kernel mass.
    """
    t = as_tensor(t)
    sigma = float(sigma)
    if sigma <= 0.0:
        raise ValueError(f"gaussian_filter sigma must be > 0, got {sigma}")
    half = math.ceil(3.0 * sigma)
    offsets = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    return _separable_filter(t, kernel)
