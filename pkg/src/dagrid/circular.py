"""Circular accumulator (CA): voting along image-gradient rays.

Each pixel casts votes at integer distances k = 1..N along its normalized
gradient direction, so edge pixels of a circle of radius r converge on the
center in the k = r band:

    forward grid k:  gx = k * unit_x + mesh_x,  gy = k * unit_y + mesh_y
    backward grid k: gx = -k * unit_x + mesh_x, gy = -k * unit_y + mesh_y

The signed accumulations

    v_s = accumulate(S; forward) - accumulate(S; backward)
    v_u = accumulate(U; forward) - accumulate(U; backward)

stay unnormalized: a difference of sums has no meaningful homogeneous
weight.  Radius bands partition 1..N so callers can read out the response
at specific radii; detect_circle_center peaks a band's v_s after a 3x3
local-mean smoothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Sequence

import numpy as np
from scipy import ndimage

from . import _engine
from .accumulate import GridSet, SamplingGrid
from .kernels import KernelKind, as_kernel
from .tensor import as_plane, as_tensor, box_filter, mesh_grids

__all__ = [
    "GradientField",
    "CircularConfig",
    "CircularAccumulation",
    "sobel_gradient_field",
    "circular_grids",
    "circular_accumulate",
    "detect_circle_center",
]

# rows respond to d/d(row); 1/8 makes a unit ramp yield unit gradient
_SOBEL_X = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]]) / 8.0

# ks per scatter call, fixed so float associativity never depends on size
_K_CHUNK = 64


@dataclass(frozen=True)
class GradientField:
    """Image gradients with magnitude and epsilon-normalized directions."""

    ux: np.ndarray
    uy: np.ndarray
    magnitude: np.ndarray
    unit_x: np.ndarray
    unit_y: np.ndarray
    epsilon: float

    @classmethod
    def from_raw(cls, ux, uy, epsilon: float = 1e-8) -> "GradientField":
        """Build a field from raw gradient planes: S = hypot, unit = grad/(S+eps)."""
        ux = as_plane(ux, "ux")
        uy = as_plane(uy, "uy")
        if ux.shape != uy.shape:
            raise ValueError(f"ux shape {ux.shape} != uy shape {uy.shape}")
        if not (float(epsilon) > 0.0 and math.isfinite(epsilon)):
            raise ValueError(f"epsilon must be finite and > 0, got {epsilon}")
        magnitude = np.hypot(ux, uy)
        unit_x = ux / (magnitude + epsilon)
        unit_y = uy / (magnitude + epsilon)
        return cls(ux, uy, magnitude, unit_x, unit_y, float(epsilon))

    @property
    def shape(self) -> tuple[int, int]:
        return self.ux.shape

    def flipped(self) -> "GradientField":
        """The same field with every gradient vector negated."""
        return GradientField.from_raw(-self.ux, -self.uy, self.epsilon)


def sobel_gradient_field(u, epsilon: float = 1e-8) -> GradientField:
    """Sobel gradients of a single-channel image, replicate-padded borders."""
    u = as_tensor(u, "u")
    if u.shape[0] != 1:
        raise ValueError(f"expected a single-channel image, got C={u.shape[0]}")
    plane = u[0]
    ux = ndimage.correlate(plane, _SOBEL_X, mode="nearest")
    uy = ndimage.correlate(plane, _SOBEL_X.T, mode="nearest")
    return GradientField.from_raw(ux, uy, epsilon)


@dataclass(frozen=True)
class CircularConfig:
    """Radius bands and accumulation options.

    radii is a single maximum N (one band k = 1..N) or a strictly
    decreasing sequence like (15, 10, 5), where the band for radius a with
    next-lower radius b covers k in (b..a].
    """

    radii: tuple[int, ...]
    symmetric: bool = True
    epsilon: float = 1e-8
    kernel: KernelKind = KernelKind.BILINEAR

    def __init__(
        self,
        radii: int | Sequence[int],
        symmetric: bool = True,
        epsilon: float = 1e-8,
        kernel: KernelKind = KernelKind.BILINEAR,
    ):
        if isinstance(radii, (int, np.integer)):
            radii = (int(radii),)
        else:
            radii = tuple(int(r) for r in radii)
        if not radii:
            raise ValueError("radii must be nonempty")
        if any(r < 1 for r in radii):
            raise ValueError(f"radii must all be >= 1, got {radii}")
        if any(a <= b for a, b in zip(radii, radii[1:])):
            raise ValueError(f"radii must be strictly decreasing, got {radii}")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "symmetric", bool(symmetric))
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "kernel", as_kernel(kernel))

    def bands(self) -> list[range]:
        """k ranges per band, in the order of self.radii."""
        out = []
        for pos, upper in enumerate(self.radii):
            lower = self.radii[pos + 1] if pos + 1 < len(self.radii) else 0
            out.append(range(lower + 1, upper + 1))
        return out


@dataclass
class CircularAccumulation:
    """Signed accumulations, total and per radius band."""

    v_s: np.ndarray
    v_u: np.ndarray
    per_band: list[tuple[np.ndarray, np.ndarray]] = dataclass_field(default_factory=list)


def _grids_for_ks(field: GradientField, ks: Sequence[int], sign: float) -> GridSet:
    mesh = mesh_grids(*field.shape)
    return GridSet(
        [
            SamplingGrid(
                sign * k * field.unit_x + mesh.mx,
                sign * k * field.unit_y + mesh.my,
            )
            for k in ks
        ]
    )


def circular_grids(field: GradientField, radii_max: int) -> tuple[GridSet, GridSet]:
    """Forward and backward grid sets for k = 1..radii_max."""
    if radii_max < 1:
        raise ValueError(f"radii_max must be >= 1, got {radii_max}")
    ks = range(1, radii_max + 1)
    return _grids_for_ks(field, ks, 1.0), _grids_for_ks(field, ks, -1.0)


def _accumulate_ks(
    t: np.ndarray, field: GradientField, ks: range, sign: float, nearest: bool
) -> np.ndarray:
    shape = field.shape
    out = np.zeros((t.shape[0],) + shape)
    ks = list(ks)
    for start in range(0, len(ks), _K_CHUNK):
        grids = _grids_for_ks(field, ks[start : start + _K_CHUNK], sign)
        out += _engine.scatter(t, grids, nearest, shape)
    return out


def circular_accumulate(u, field: GradientField, cfg: CircularConfig) -> CircularAccumulation:
    """Accumulate magnitude (v_s) and features (v_u) along gradient rays.

    Outputs have the source's spatial shape, are unnormalized, and carry
    sign: with symmetric voting the backward-direction accumulation is
    subtracted, so wrong-direction mass shows up negative.
    """
    u = as_tensor(u, "u")
    if u.shape[1:] != field.shape:
        raise ValueError(
            f"u spatial shape {u.shape[1:]} does not match field shape {field.shape}"
        )
    s = field.magnitude[None]
    nearest = cfg.kernel is KernelKind.NEAREST
    per_band: list[tuple[np.ndarray, np.ndarray]] = []
    for ks in cfg.bands():
        band_s = _accumulate_ks(s, field, ks, 1.0, nearest)
        band_u = _accumulate_ks(u, field, ks, 1.0, nearest)
        if cfg.symmetric:
            band_s = band_s - _accumulate_ks(s, field, ks, -1.0, nearest)
            band_u = band_u - _accumulate_ks(u, field, ks, -1.0, nearest)
        per_band.append((band_s, band_u))
    v_s = per_band[0][0].copy()
    v_u = per_band[0][1].copy()
    for band_s, band_u in per_band[1:]:
        v_s += band_s
        v_u += band_u
    return CircularAccumulation(v_s, v_u, per_band)


def detect_circle_center(acc: CircularAccumulation, band: int = 0) -> tuple[int, int, float]:
    """Peak of a band's v_s after 3x3 local-mean smoothing.

    Ties on the smoothed map are broken by the raw v_s value, then by
    smallest (row, col).  Returns (row, col, smoothed peak value).
    """
    if not acc.per_band:
        raise ValueError("accumulation has no bands")
    if not 0 <= band < len(acc.per_band):
        raise ValueError(f"band {band} out of range [0, {len(acc.per_band)})")
    raw = acc.per_band[band][0][0]
    if raw.size == 0:
        raise ValueError("empty accumulation")
    smoothed = box_filter(raw[None], 1)[0]
    peak = smoothed.max()
    rows, cols = np.nonzero(smoothed == peak)
    if len(rows) > 1:
        raw_at = raw[rows, cols]
        keep = raw_at == raw_at.max()
        rows, cols = rows[keep], cols[keep]
    return int(rows[0]), int(cols[0]), float(peak)
