"""Compiled scatter/gather kernels and the deterministic parallel driver.

Every kernel below is a hand-written loop compiled with numba (nogil so real
thread parallelism is possible, fastmath off so IEEE semantics and summation
order are exact).  Determinism contract:

* Scatter (accumulation) partitions the SOURCE rows into a fixed number of
  chunks, a function of the problem only, never of the worker count.  Each
  chunk accumulates into a private buffer; buffers are merged in fixed chunk
  order.  Results are therefore bit-identical for 1, 2, 4, ... workers.
* Gather (slicing / grid sampling) partitions OUTPUT rows; each cell has a
  single writer with a fixed inner summation order, so any partition gives
  bit-identical results.

Per-cell summation order is fixed throughout: source cells row-major, grids
in set order, the 2x2 bilinear taps in (row, col) order, channels innermost.

`wrap_y` applies modular wrapping to the second (column) coordinate only;
the polar accumulator uses it to splat across the 0/2pi seam.  Everything
else bounds-checks and drops.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from .parallel import get_num_threads

# Fixed chunk count for scatter partitions; independent of worker count so
# the merge order (and hence every bit of the result) never changes.
_SCATTER_CHUNKS = 8


def _chunks(n_rows: int, count: int = _SCATTER_CHUNKS) -> list[tuple[int, int]]:
    count = min(count, n_rows)
    return [(n_rows * i // count, n_rows * (i + 1) // count) for i in range(count)]


def _run(tasks, threads: int) -> None:
    if threads <= 1 or len(tasks) <= 1:
        for task in tasks:
            task()
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        for future in [pool.submit(task) for task in tasks]:
            future.result()


# =============================================================
# scatter: V[c,i,j] += U[c,n,m] * K(gx,i) * K(gy,j)
# =============================================================

@njit(cache=True, nogil=True)
def _scatter_bilinear(u, gxs, gys, row0, row1, wrap_y, out):  # pragma: no cover
    n_grids = gxs.shape[0]
    channels = u.shape[0]
    width = u.shape[2]
    target_h = out.shape[1]
    target_w = out.shape[2]
    for n in range(row0, row1):
        for m in range(width):
            for k in range(n_grids):
                gx = gxs[k, n, m]
                gy = gys[k, n, m]
                x0 = int(np.floor(gx))
                y0 = int(np.floor(gy))
                fx = gx - x0
                fy = gy - y0
                for a in range(2):
                    i = x0 + a
                    if i < 0 or i >= target_h:
                        continue
                    wx = 1.0 - fx if a == 0 else fx
                    for b in range(2):
                        j = y0 + b
                        if wrap_y:
                            j = j % target_w
                        elif j < 0 or j >= target_w:
                            continue
                        wy = 1.0 - fy if b == 0 else fy
                        w = wx * wy
                        for c in range(channels):
                            out[c, i, j] += u[c, n, m] * w


@njit(cache=True, nogil=True)
def _scatter_nearest(u, gxs, gys, row0, row1, wrap_y, out):  # pragma: no cover
    n_grids = gxs.shape[0]
    channels = u.shape[0]
    width = u.shape[2]
    target_h = out.shape[1]
    target_w = out.shape[2]
    for n in range(row0, row1):
        for m in range(width):
            for k in range(n_grids):
                i = int(np.floor(gxs[k, n, m] + 0.5))
                j = int(np.floor(gys[k, n, m] + 0.5))
                if i < 0 or i >= target_h:
                    continue
                if wrap_y:
                    j = j % target_w
                elif j < 0 or j >= target_w:
                    continue
                for c in range(channels):
                    out[c, i, j] += u[c, n, m]


# =============================================================
# gather: out[c,i,j] += V[c,n,m] * K(gx,n) * K(gy,m)
# =============================================================

@njit(cache=True, nogil=True)
def _gather_bilinear(v, gxs, gys, row0, row1, wrap_y, out):  # pragma: no cover
    n_grids = gxs.shape[0]
    channels = v.shape[0]
    source_h = v.shape[1]
    source_w = v.shape[2]
    width = gxs.shape[2]
    for i in range(row0, row1):
        for j in range(width):
            for k in range(n_grids):
                gx = gxs[k, i, j]
                gy = gys[k, i, j]
                x0 = int(np.floor(gx))
                y0 = int(np.floor(gy))
                fx = gx - x0
                fy = gy - y0
                for a in range(2):
                    n = x0 + a
                    if n < 0 or n >= source_h:
                        continue
                    wx = 1.0 - fx if a == 0 else fx
                    for b in range(2):
                        m = y0 + b
                        if wrap_y:
                            m = m % source_w
                        elif m < 0 or m >= source_w:
                            continue
                        wy = 1.0 - fy if b == 0 else fy
                        w = wx * wy
                        for c in range(channels):
                            out[c, i, j] += v[c, n, m] * w


@njit(cache=True, nogil=True)
def _gather_nearest(v, gxs, gys, row0, row1, wrap_y, out):  # pragma: no cover
    n_grids = gxs.shape[0]
    channels = v.shape[0]
    source_h = v.shape[1]
    source_w = v.shape[2]
    width = gxs.shape[2]
    for i in range(row0, row1):
        for j in range(width):
            for k in range(n_grids):
                n = int(np.floor(gxs[k, i, j] + 0.5))
                m = int(np.floor(gys[k, i, j] + 0.5))
                if n < 0 or n >= source_h:
                    continue
                if wrap_y:
                    m = m % source_w
                elif m < 0 or m >= source_w:
                    continue
                for c in range(channels):
                    out[c, i, j] += v[c, n, m]


# =============================================================
# grid gradient (bilinear only)
# dGx[k,n,m] = sum_c sum_taps U[c,n,m] * K'(gx,i) * K(gy,j) * dV[c,i,j]
# =============================================================

@njit(cache=True, nogil=True)
def _grid_grad_bilinear(d_v, u, gxs, gys, row0, row1, dgx, dgy):  # pragma: no cover
    # Subgradient of max(0, 1-|d|) is -sign(d) on |d| <= 1 with sign(0)=0.
    # The 3-wide window covers the |d| == 1 kink cells whose weight is zero
    # but whose one-sided derivative is not.
    n_grids = gxs.shape[0]
    channels = u.shape[0]
    width = u.shape[2]
    target_h = d_v.shape[1]
    target_w = d_v.shape[2]
    for n in range(row0, row1):
        for m in range(width):
            for k in range(n_grids):
                gx = gxs[k, n, m]
                gy = gys[k, n, m]
                x0 = int(np.floor(gx))
                y0 = int(np.floor(gy))
                sx = 0.0
                sy = 0.0
                for a in range(-1, 2):
                    i = x0 + a
                    if i < 0 or i >= target_h:
                        continue
                    dx = gx - i
                    adx = abs(dx)
                    if adx > 1.0:
                        continue
                    wx = 1.0 - adx
                    dwx = 0.0 if dx == 0.0 else (-1.0 if dx > 0.0 else 1.0)
                    for b in range(-1, 2):
                        j = y0 + b
                        if j < 0 or j >= target_w:
                            continue
                        dy = gy - j
                        ady = abs(dy)
                        if ady > 1.0:
                            continue
                        wy = 1.0 - ady
                        dwy = 0.0 if dy == 0.0 else (-1.0 if dy > 0.0 else 1.0)
                        for c in range(channels):
                            g = d_v[c, i, j] * u[c, n, m]
                            sx += dwx * wy * g
                            sy += wx * dwy * g
                dgx[k, n, m] = sx
                dgy[k, n, m] = sy


# =============================================================
# parametric slicing: out[c,i,j] = sum_ab P[c,p+a,q+b] * L[i,j,a,b]
# =============================================================

@njit(cache=True, nogil=True)
def _param_gather(p, gx, gy, l, row0, row1, wrap_y, out):  # pragma: no cover
    channels = p.shape[0]
    source_h = p.shape[1]
    source_w = p.shape[2]
    width = gx.shape[1]
    for i in range(row0, row1):
        for j in range(width):
            x0 = int(np.floor(gx[i, j]))
            y0 = int(np.floor(gy[i, j]))
            for a in range(2):
                n = x0 + a
                if n < 0 or n >= source_h:
                    continue
                for b in range(2):
                    m = y0 + b
                    if wrap_y:
                        m = m % source_w
                    elif m < 0 or m >= source_w:
                        continue
                    w = l[i, j, a, b]
                    for c in range(channels):
                        out[c, i, j] += p[c, n, m] * w


@njit(cache=True, nogil=True)
def _param_grad_l(d_u, p, gx, gy, row0, row1, wrap_y, d_l):  # pragma: no cover
    channels = p.shape[0]
    source_h = p.shape[1]
    source_w = p.shape[2]
    width = gx.shape[1]
    for i in range(row0, row1):
        for j in range(width):
            x0 = int(np.floor(gx[i, j]))
            y0 = int(np.floor(gy[i, j]))
            for a in range(2):
                n = x0 + a
                if n < 0 or n >= source_h:
                    continue
                for b in range(2):
                    m = y0 + b
                    if wrap_y:
                        m = m % source_w
                    elif m < 0 or m >= source_w:
                        continue
                    s = 0.0
                    for c in range(channels):
                        s += p[c, n, m] * d_u[c, i, j]
                    d_l[i, j, a, b] = s


@njit(cache=True, nogil=True)
def _param_grad_p(d_u, gx, gy, l, row0, row1, wrap_y, out):  # pragma: no cover
    channels = d_u.shape[0]
    source_h = out.shape[1]
    source_w = out.shape[2]
    width = gx.shape[1]
    for i in range(row0, row1):
        for j in range(width):
            x0 = int(np.floor(gx[i, j]))
            y0 = int(np.floor(gy[i, j]))
            for a in range(2):
                n = x0 + a
                if n < 0 or n >= source_h:
                    continue
                for b in range(2):
                    m = y0 + b
                    if wrap_y:
                        m = m % source_w
                    elif m < 0 or m >= source_w:
                        continue
                    w = l[i, j, a, b]
                    for c in range(channels):
                        out[c, n, m] += d_u[c, i, j] * w


# =============================================================
# drivers
# =============================================================

def _grid_stack(grids) -> tuple[np.ndarray, np.ndarray]:
    gxs = np.ascontiguousarray(np.stack([g.gx for g in grids]))
    gys = np.ascontiguousarray(np.stack([g.gy for g in grids]))
    return gxs, gys


def scatter(u, grids, nearest: bool, target_shape, wrap_y: bool = False) -> np.ndarray:
    """Directed accumulation of u along every grid; deterministic chunk merge."""
    gxs, gys = _grid_stack(grids)
    kernel = _scatter_nearest if nearest else _scatter_bilinear
    channels = u.shape[0]
    target_h, target_w = target_shape
    chunks = _chunks(u.shape[1])
    buffers = np.zeros((len(chunks), channels, target_h, target_w))
    tasks = [
        (lambda r0=r0, r1=r1, buf=buffers[idx]: kernel(u, gxs, gys, r0, r1, wrap_y, buf))
        for idx, (r0, r1) in enumerate(chunks)
    ]
    _run(tasks, get_num_threads())
    out = np.zeros((channels, target_h, target_w))
    for buf in buffers:
        out += buf
    return out


def gather(v, grids, nearest: bool, wrap_y: bool = False) -> np.ndarray:
    """Slice v back through every grid (adjoint of scatter); row-parallel."""
    gxs, gys = _grid_stack(grids)
    kernel = _gather_nearest if nearest else _gather_bilinear
    out = np.zeros((v.shape[0],) + gxs.shape[1:])
    tasks = [
        (lambda r0=r0, r1=r1: kernel(v, gxs, gys, r0, r1, wrap_y, out))
        for r0, r1 in _chunks(gxs.shape[1])
    ]
    _run(tasks, get_num_threads())
    return out


def grid_gradient(d_v, u, grids) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per-grid (dgx, dgy) for bilinear accumulation; row-parallel gather."""
    gxs, gys = _grid_stack(grids)
    dgx = np.zeros_like(gxs)
    dgy = np.zeros_like(gys)
    tasks = [
        (lambda r0=r0, r1=r1: _grid_grad_bilinear(d_v, u, gxs, gys, r0, r1, dgx, dgy))
        for r0, r1 in _chunks(u.shape[1])
    ]
    _run(tasks, get_num_threads())
    return [(dgx[k], dgy[k]) for k in range(len(grids))]


def param_gather(p, gx, gy, l, wrap_y: bool) -> np.ndarray:
    out = np.zeros((p.shape[0],) + gx.shape)
    tasks = [
        (lambda r0=r0, r1=r1: _param_gather(p, gx, gy, l, r0, r1, wrap_y, out))
        for r0, r1 in _chunks(gx.shape[0])
    ]
    _run(tasks, get_num_threads())
    return out


def param_gradients(d_u, p, gx, gy, l, wrap_y: bool) -> tuple[np.ndarray, np.ndarray]:
    d_l = np.zeros(gx.shape + (2, 2))
    tasks = [
        (lambda r0=r0, r1=r1: _param_grad_l(d_u, p, gx, gy, r0, r1, wrap_y, d_l))
        for r0, r1 in _chunks(gx.shape[0])
    ]
    _run(tasks, get_num_threads())

    chunks = _chunks(gx.shape[0])
    buffers = np.zeros((len(chunks),) + p.shape)
    tasks = [
        (lambda r0=r0, r1=r1, buf=buffers[idx]: _param_grad_p(d_u, gx, gy, l, r0, r1, wrap_y, buf))
        for idx, (r0, r1) in enumerate(chunks)
    ]
    _run(tasks, get_num_threads())
    d_p = np.zeros(p.shape)
    for buf in buffers:
        d_p += buf
    return d_p, d_l


def bilinear_weight_table(gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """The 2x2 bilinear weights of each cell, as an (H, W, 2, 2) table.

    Computed with exactly the expressions the gather kernels use, so a
    parametric slicer initialised from this table reproduces bilinear
    slicing bit for bit.
    """
    x0 = np.floor(gx)
    y0 = np.floor(gy)
    fx = gx - x0
    fy = gy - y0
    table = np.empty(gx.shape + (2, 2))
    table[..., 0, 0] = (1.0 - fx) * (1.0 - fy)
    table[..., 0, 1] = (1.0 - fx) * fy
    table[..., 1, 0] = fx * (1.0 - fy)
    table[..., 1, 1] = fx * fy
    return table
