"""Polar accumulator (PA) and polar sampling (PS).

A polar grid maps every image pixel to fractional (radius, angle) bin
coordinates around a center:

    gx[i][j] = sqrt((i - x_c)^2 + (j - y_c)^2) / s_r
    gy[i][j] = (atan2(j - y_c, i - x_c) + pi) / s_theta

Accumulating through that grid produces an H_r x W_psi polar representation
whose rows are radii and columns are angles; slicing carries a processed
grid back to image space, and the parametric slicer generalizes bilinear
slicing with a learnable per-pixel 2x2 weight tensor.

Angular bins tile the circle, so by default bilinear splats and reads wrap
across the 0/2pi seam.  Radial out-of-range taps are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _engine
from .accumulate import AccumulatorGrid, GridSet, SamplingGrid, grid_sample, normalize
from .kernels import KernelKind, as_kernel
from .tensor import as_tensor, box_filter, gaussian_filter, mesh_grids

__all__ = [
    "PolarConfig",
    "ParametricSlicer",
    "polar_grid",
    "polar_accumulate",
    "polar_accumulate_raw",
    "polar_sample",
    "polar_slice",
    "parametric_slice",
    "parametric_slice_backward",
    "polar_roundtrip_filter",
    "sector_variance",
]


@dataclass(frozen=True)
class PolarConfig:
    """Geometry of a polar accumulator grid.

    s_r is pixels per radial bin, s_theta radians per angular bin; h_r and
    w_psi are the bin counts.  center is the (row, col) pole, real-valued.
    With angular_wrap the w_psi bins must tile the full circle.
    """

    s_r: float
    s_theta: float
    h_r: int
    w_psi: int
    center: tuple[float, float]
    angular_wrap: bool = True

    def __post_init__(self):
        if not (self.s_r > 0.0 and math.isfinite(self.s_r)):
            raise ValueError(f"s_r must be finite and > 0, got {self.s_r}")
        if not (self.s_theta > 0.0 and math.isfinite(self.s_theta)):
            raise ValueError(f"s_theta must be finite and > 0, got {self.s_theta}")
        if self.h_r < 1 or self.w_psi < 1:
            raise ValueError(f"bin counts must be >= 1, got ({self.h_r}, {self.w_psi})")
        if self.angular_wrap and self.s_theta * self.w_psi < 2.0 * math.pi - 1e-9:
            raise ValueError(
                "angular bins must tile the circle when angular_wrap is on: "
                f"s_theta*w_psi = {self.s_theta * self.w_psi!r} < 2*pi"
            )
        x_c, y_c = self.center
        if not (math.isfinite(x_c) and math.isfinite(y_c)):
            raise ValueError(f"center must be finite, got {self.center}")
        object.__setattr__(self, "center", (float(x_c), float(y_c)))

    @classmethod
    def for_image(
        cls,
        h: int,
        w: int,
        h_r: int = 64,
        w_psi: int = 64,
        center: tuple[float, float] | None = None,
        cover_corners: bool = False,
        angular_wrap: bool = True,
    ) -> "PolarConfig":
        """Config whose radial range covers an h x w image.

        The default radial scale covers the inscribed circle,
        s_r = min(h, w) / (2 (h_r - 1)); cover_corners stretches it to the
        image diagonal so no pixel falls outside the radial range.
        """
        if h_r < 2:
            raise ValueError(f"h_r must be >= 2 to derive a radial scale, got {h_r}")
        if center is None:
            center = ((h - 1) / 2.0, (w - 1) / 2.0)
        extent = math.hypot(h, w) if cover_corners else min(h, w)
        return cls(
            s_r=extent / (2.0 * (h_r - 1)),
            s_theta=2.0 * math.pi / w_psi,
            h_r=h_r,
            w_psi=w_psi,
            center=center,
            angular_wrap=angular_wrap,
        )

    @property
    def grid_shape(self) -> tuple[int, int]:
        return (self.h_r, self.w_psi)


def polar_grid(h: int, w: int, cfg: PolarConfig) -> SamplingGrid:
    """Fractional polar bin coordinates for every pixel of an h x w image."""
    mesh = mesh_grids(h, w)
    dx = mesh.mx - cfg.center[0]
    dy = mesh.my - cfg.center[1]
    gx = np.hypot(dx, dy) / cfg.s_r
    gy = (np.arctan2(dy, dx) + np.pi) / cfg.s_theta
    return SamplingGrid(gx, gy)


def polar_accumulate_raw(u, cfg: PolarConfig, kind: KernelKind) -> AccumulatorGrid:
    """Unnormalized polar accumulation of values and homogeneous weights."""
    u = as_tensor(u, "u")
    h, w = u.shape[1:]
    grid = polar_grid(h, w, cfg)
    nearest = as_kernel(kind) is KernelKind.NEAREST
    grids = GridSet(grid)
    values = _engine.scatter(u, grids, nearest, cfg.grid_shape, wrap_y=cfg.angular_wrap)
    ones = np.ones((1, h, w))
    weights = _engine.scatter(ones, grids, nearest, cfg.grid_shape, wrap_y=cfg.angular_wrap)
    return AccumulatorGrid(values, weights, normalized=False)


def polar_accumulate(
    u, cfg: PolarConfig, kind: KernelKind, epsilon: float = 1e-8
) -> AccumulatorGrid:
    """Polar accumulation normalized to per-bin weighted averages."""
    return normalize(polar_accumulate_raw(u, cfg, kind), epsilon)


def polar_sample(u, cfg: PolarConfig, kind: KernelKind) -> np.ndarray:
    """Classical grid sampling of an image at the polar lattice points.

    Polar cell (r, psi) reads u at image position
    (x_c + r s_r cos(psi s_theta - pi), y_c + r s_r sin(psi s_theta - pi)).
    Sample points outside the image contribute zero.
    """
    u = as_tensor(u, "u")
    radius = np.arange(cfg.h_r, dtype=np.float64)[:, None] * cfg.s_r
    angle = np.arange(cfg.w_psi, dtype=np.float64)[None, :] * cfg.s_theta - np.pi
    gx = cfg.center[0] + radius * np.cos(angle)
    gy = cfg.center[1] + radius * np.sin(angle)
    return grid_sample(u, SamplingGrid(gx, gy), kind)


def _check_polar_tensor(p, cfg: PolarConfig) -> np.ndarray:
    p = as_tensor(p, "p")
    if p.shape[1:] != cfg.grid_shape:
        raise ValueError(
            f"polar tensor shape {p.shape[1:]} does not match grid {cfg.grid_shape}"
        )
    return p


def polar_slice(p, cfg: PolarConfig, kind: KernelKind, image_shape) -> np.ndarray:
    """Slice a polar grid back into image space (adjoint of accumulation)."""
    p = _check_polar_tensor(p, cfg)
    h, w = int(image_shape[0]), int(image_shape[1])
    grid = polar_grid(h, w, cfg)
    nearest = as_kernel(kind) is KernelKind.NEAREST
    return _engine.gather(p, GridSet(grid), nearest, wrap_y=cfg.angular_wrap)


@dataclass(frozen=True)
class ParametricSlicer:
    """Per-pixel 2x2 slicing weights L over the image lattice.

    Pixel (i, j) with polar coordinates (gx, gy) reads the four grid cells
    at (floor(gx)+a, floor(gy)+b), a,b in {0,1}, weighted by l[i][j][a][b].
    Initialized to bilinear weights the slicer reproduces bilinear slicing
    exactly; training may then adapt the weights freely.
    """

    l: np.ndarray

    def __post_init__(self):
        l = np.ascontiguousarray(np.asarray(self.l, dtype=np.float64))
        if l.ndim != 4 or l.shape[2:] != (2, 2):
            raise ValueError(f"l must have shape (H, W, 2, 2), got {l.shape}")
        if not np.isfinite(l).all():
            raise ValueError("l contains non-finite values")
        object.__setattr__(self, "l", l)

    @classmethod
    def bilinear_init(cls, cfg: PolarConfig, image_shape) -> "ParametricSlicer":
        h, w = int(image_shape[0]), int(image_shape[1])
        grid = polar_grid(h, w, cfg)
        return cls(_engine.bilinear_weight_table(grid.gx, grid.gy))

    @property
    def image_shape(self) -> tuple[int, int]:
        return self.l.shape[:2]


def parametric_slice(p, slicer: ParametricSlicer, cfg: PolarConfig) -> np.ndarray:
    """Slice with learned per-pixel weights instead of a fixed kernel."""
    p = _check_polar_tensor(p, cfg)
    h, w = slicer.image_shape
    grid = polar_grid(h, w, cfg)
    return _engine.param_gather(p, grid.gx, grid.gy, slicer.l, wrap_y=cfg.angular_wrap)


def parametric_slice_backward(
    d_u, p, slicer: ParametricSlicer, cfg: PolarConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of parametric slicing: (d_p, d_l).

    d_l[i][j][a][b] = sum_c p[c][pi+a][qi+b] * d_u[c][i][j] with pi = floor(gx),
    qi = floor(gy); d_p scatters d_u * l into the same four cells.
    """
    p = _check_polar_tensor(p, cfg)
    d_u = as_tensor(d_u, "d_u")
    h, w = slicer.image_shape
    if d_u.shape != (p.shape[0], h, w):
        raise ValueError(
            f"d_u shape {d_u.shape} does not match (C, H, W) = {(p.shape[0], h, w)}"
        )
    grid = polar_grid(h, w, cfg)
    return _engine.param_gradients(
        d_u, p, grid.gx, grid.gy, slicer.l, wrap_y=cfg.angular_wrap
    )


def polar_roundtrip_filter(u, cfg: PolarConfig, kind: KernelKind, filter_spec=None) -> np.ndarray:
    """Accumulate, filter the normalized polar grid, and slice back.

    filter_spec is None for the bare round trip, ("box", radius) for a mean
    filter, or ("gaussian", sigma) for a Gaussian, applied in grid space so
    smoothing follows annular sectors instead of the pixel lattice.
    """
    u = as_tensor(u, "u")
    acc = polar_accumulate(u, cfg, kind)
    grid_values = acc.values
    if filter_spec is not None:
        name, arg = filter_spec
        if name == "box":
            grid_values = box_filter(grid_values, int(arg))
        elif name == "gaussian":
            grid_values = gaussian_filter(grid_values, float(arg))
        else:
            raise ValueError(f"unknown filter {name!r}; expected 'box' or 'gaussian'")
    return polar_slice(grid_values, cfg, kind, u.shape[1:])


def sector_variance(u, cfg: PolarConfig) -> float:
    """Mean within-sector variance of an image under the polar binning.

    Pixels are assigned to their nearest (radius, angle) bin; sectors with
    fewer than two pixels are skipped.  Lower values mean the image is
    smoother along annular sectors.
    """
    u = as_tensor(u, "u")
    h, w = u.shape[1:]
    grid = polar_grid(h, w, cfg)
    ri = np.floor(grid.gx + 0.5).astype(np.int64)
    ai = np.floor(grid.gy + 0.5).astype(np.int64)
    if cfg.angular_wrap:
        ai %= cfg.w_psi
    keep = (ri >= 0) & (ri < cfg.h_r) & (ai >= 0) & (ai < cfg.w_psi)
    if not keep.any():
        return 0.0
    labels = (ri * cfg.w_psi + ai)[keep]
    _, inv = np.unique(labels, return_inverse=True)
    counts = np.bincount(inv)
    vals = u[:, keep]
    per_channel = []
    for c in range(vals.shape[0]):
        s1 = np.bincount(inv, weights=vals[c])
        s2 = np.bincount(inv, weights=vals[c] ** 2)
        mean = s1 / counts
        var = s2 / counts - mean**2
        usable = counts >= 2
        if usable.any():
            per_channel.append(float(np.mean(var[usable])))
    return float(np.mean(per_channel)) if per_channel else 0.0
