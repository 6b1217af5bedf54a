"""Sampling kernels shared by accumulation, slicing, and grid sampling.

Two kernels are supported: a nearest-neighbour kernel (a Kronecker delta on
the rounded coordinate, round-half-up) and the bilinear tent kernel
``max(0, 1 - |g - i|)``.  Out-of-bounds taps are dropped, never clamped:
clamping would pile mass onto border cells and break mass conservation.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = ["KernelKind", "Tap", "UnsupportedKernelError", "kernel_weight", "taps"]


class KernelKind(enum.Enum):
    NEAREST = "nearest"
    BILINEAR = "bilinear"


class UnsupportedKernelError(ValueError):
    """An operation was asked to use a kernel it cannot support."""


def as_kernel(kind) -> KernelKind:
    """Coerce a KernelKind or its string name ("nearest"/"bilinear")."""
    if isinstance(kind, KernelKind):
        return kind
    try:
        return KernelKind(str(kind).lower())
    except ValueError:
        raise UnsupportedKernelError(f"unknown kernel kind: {kind!r}") from None


@dataclass(frozen=True)
class Tap:
    """One nonzero kernel product: target cell (row, col) and its weight.

    Zero-weight taps are never emitted.
    """

    row: int
    col: int
    weight: float


def kernel_weight(kind: KernelKind, g: float, i: int) -> float:
    """Weight of kernel ``kind`` centred at coordinate ``g`` on integer cell ``i``.

    Nearest returns 1 iff floor(g + 0.5) == i; bilinear returns
    max(0, 1 - |g - i|).
    """
    kind = as_kernel(kind)
    if kind is KernelKind.NEAREST:
        return 1.0 if math.floor(g + 0.5) == i else 0.0
    return max(0.0, 1.0 - abs(g - i))


def taps(kind: KernelKind, gx: float, gy: float, target_h: int, target_w: int) -> list[Tap]:
    """Enumerate the in-bounds cells with positive weight 𝒦(gx,i)·𝒦(gy,j).

    Bilinear emits at most 4 taps, nearest at most 1.  Out-of-bounds cells
    are dropped; their weight is lost, not redistributed.
    """
    kind = as_kernel(kind)
    out: list[Tap] = []
    if kind is KernelKind.NEAREST:
        i = math.floor(gx + 0.5)
        j = math.floor(gy + 0.5)
        if 0 <= i < target_h and 0 <= j < target_w:
            out.append(Tap(i, j, 1.0))
        return out
    x0 = math.floor(gx)
    y0 = math.floor(gy)
    for i in (x0, x0 + 1):
        if not 0 <= i < target_h:
            continue
        wx = 1.0 - abs(gx - i)
        if wx <= 0.0:
            continue
        for j in (y0, y0 + 1):
            if not 0 <= j < target_w:
                continue
            wy = 1.0 - abs(gy - j)
            if wy <= 0.0:
                continue
            out.append(Tap(i, j, wx * wy))
    return out
