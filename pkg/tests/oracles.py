"""Brute-force reference implementations used to certify the fast kernels.

Every function here is a direct loop transcription of an operator
definition: no shared code with the package, no vectorization, no compiled
helpers.  Slow on purpose and only ever run on tiny inputs.
"""

import math

import numpy as np


def weight(kind, g, i):
    """Kernel weight of coordinate g on integer cell i."""
    if kind == "nearest":
        return 1.0 if math.floor(g + 0.5) == i else 0.0
    if kind == "bilinear":
        return max(0.0, 1.0 - abs(g - i))
    raise ValueError(kind)


def wrapped_weight(kind, g, j, period):
    """Angular kernel weight with the +period alias folded in.

    Valid for g in [0, period], which is the range polar angles occupy.
    """
    if kind == "nearest":
        return 1.0 if math.floor(g + 0.5) % period == j else 0.0
    return weight(kind, g, j) + weight(kind, g, j + period)


def oracle_accumulate(u, grids, kind, shape):
    """V[c,i,j] = sum over grids k and source cells (n,m) of
    U[c,n,m] * K(gx_k[n,m], i) * K(gy_k[n,m], j); out-of-range taps drop."""
    channels, h, w = u.shape
    th, tw = shape
    out = np.zeros((channels, th, tw))
    for c in range(channels):
        for i in range(th):
            for j in range(tw):
                s = 0.0
                for gx, gy in grids:
                    for n in range(h):
                        for m in range(w):
                            s += (
                                u[c, n, m]
                                * weight(kind, gx[n, m], i)
                                * weight(kind, gy[n, m], j)
                            )
                out[c, i, j] = s
    return out


def oracle_slice(v, grids, kind):
    """U[c,i,j] = sum over grids k and grid cells (n,m) of
    V[c,n,m] * K(gx_k[i,j], n) * K(gy_k[i,j], m)."""
    channels, sh, sw = v.shape
    th, tw = grids[0][0].shape
    out = np.zeros((channels, th, tw))
    for c in range(channels):
        for i in range(th):
            for j in range(tw):
                s = 0.0
                for gx, gy in grids:
                    for n in range(sh):
                        for m in range(sw):
                            s += (
                                v[c, n, m]
                                * weight(kind, gx[i, j], n)
                                * weight(kind, gy[i, j], m)
                            )
                out[c, i, j] = s
    return out


def oracle_grid_sample(u, gx, gy, kind):
    return oracle_slice(u, [(gx, gy)], kind)


def oracle_polar_coords(i, j, s_r, s_theta, center):
    gx = math.hypot(i - center[0], j - center[1]) / s_r
    gy = (math.atan2(j - center[1], i - center[0]) + math.pi) / s_theta
    return gx, gy


def oracle_polar_accumulate(u, h_r, w_psi, s_r, s_theta, center, kind, wrap=True):
    """Polar accumulation of values and unit weights, angularly wrapped."""
    channels, h, w = u.shape
    values = np.zeros((channels, h_r, w_psi))
    weights = np.zeros((1, h_r, w_psi))
    for n in range(h):
        for m in range(w):
            gx, gy = oracle_polar_coords(n, m, s_r, s_theta, center)
            for i in range(h_r):
                wx = weight(kind, gx, i)
                if wx == 0.0:
                    continue
                for j in range(w_psi):
                    if wrap:
                        wy = wrapped_weight(kind, gy, j, w_psi)
                    else:
                        wy = weight(kind, gy, j)
                    if wy == 0.0:
                        continue
                    weights[0, i, j] += wx * wy
                    for c in range(channels):
                        values[c, i, j] += u[c, n, m] * wx * wy
    return values, weights


def oracle_polar_slice(p, s_r, s_theta, center, image_shape, kind, wrap=True):
    channels, h_r, w_psi = p.shape
    h, w = image_shape
    out = np.zeros((channels, h, w))
    for i in range(h):
        for j in range(w):
            gx, gy = oracle_polar_coords(i, j, s_r, s_theta, center)
            for n in range(h_r):
                wx = weight(kind, gx, n)
                if wx == 0.0:
                    continue
                for m in range(w_psi):
                    if wrap:
                        wy = wrapped_weight(kind, gy, m, w_psi)
                    else:
                        wy = weight(kind, gy, m)
                    if wy == 0.0:
                        continue
                    for c in range(channels):
                        out[c, i, j] += p[c, n, m] * wx * wy
    return out


def oracle_polar_sample(u, h_r, w_psi, s_r, s_theta, center, kind):
    """Grid sampling at the polar lattice: cell (r, t) reads the image at
    (x_c + r s_r cos(t s_theta - pi), y_c + r s_r sin(t s_theta - pi))."""
    channels, h, w = u.shape
    out = np.zeros((channels, h_r, w_psi))
    for r in range(h_r):
        for t in range(w_psi):
            angle = t * s_theta - math.pi
            px = center[0] + r * s_r * math.cos(angle)
            py = center[1] + r * s_r * math.sin(angle)
            for c in range(channels):
                s = 0.0
                for n in range(h):
                    for m in range(w):
                        s += u[c, n, m] * weight(kind, px, n) * weight(kind, py, m)
                out[c, r, t] = s
    return out


def oracle_parametric_slice(p, l, s_r, s_theta, center, wrap=True):
    """Per-pixel 2x2 linear combination of the four bilinear-neighbor cells:
    out[c,i,j] = sum_{a,b in {0,1}} P[c, floor(gx)+a, floor(gy)+b] * L[i,j,a,b],
    angular taps wrapped, radial out-of-range taps dropped."""
    channels, h_r, w_psi = p.shape
    h, w = l.shape[:2]
    out = np.zeros((channels, h, w))
    for i in range(h):
        for j in range(w):
            gx, gy = oracle_polar_coords(i, j, s_r, s_theta, center)
            p0 = math.floor(gx)
            q0 = math.floor(gy)
            for a in range(2):
                n = p0 + a
                if n < 0 or n >= h_r:
                    continue
                for b in range(2):
                    m = q0 + b
                    if wrap:
                        m %= w_psi
                    elif m < 0 or m >= w_psi:
                        continue
                    for c in range(channels):
                        out[c, i, j] += p[c, n, m] * l[i, j, a, b]
    return out
