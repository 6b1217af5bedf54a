"""Randomized property trials shared by the CLI and the test suite.

Two families: adjoint-identity trials over random accumulate/slice pairs,
and finite-difference trials certifying every analytic backward pass.
Grid positions are sampled with their fractional parts kept away from
integers (the tent kernel's kinks) by a configurable margin so central
differences stay on one smooth piece.
"""

from __future__ import annotations

import numpy as np

from .accumulate import (
    GridSet,
    SamplingGrid,
    accumulate,
    accumulate_backward_grid,
    accumulate_backward_input,
    grid_sample,
    slice_backward,
    slice_grid,
)
from .circular import CircularConfig, GradientField, circular_accumulate, circular_grids
from .gradcheck import GradReport, check, finite_difference
from .kernels import KernelKind, as_kernel
from .polar import ParametricSlicer, PolarConfig, parametric_slice, parametric_slice_backward

__all__ = [
    "KINK_MARGIN",
    "GRAD_OPS",
    "margin_uniform",
    "adjoint_trials",
    "run_grad_trials",
]

KINK_MARGIN = 0.05


def margin_uniform(rng, lo: int, hi: int, shape, margin: float = KINK_MARGIN) -> np.ndarray:
    """Random coordinates in [lo, hi) whose fractional part avoids integers."""
    base = rng.integers(lo, hi, size=shape)
    frac = rng.uniform(margin, 1.0 - margin, size=shape)
    return base + frac


def _random_grids(rng, n: int, shape, target_shape, margin: float = KINK_MARGIN) -> GridSet:
    ht, wt = target_shape
    return GridSet(
        [
            SamplingGrid(
                margin_uniform(rng, -2, ht + 1, shape, margin),
                margin_uniform(rng, -2, wt + 1, shape, margin),
            )
            for _ in range(n)
        ]
    )


def adjoint_trials(
    rng,
    instances: int = 100,
    max_size: int = 64,
    ns: tuple[int, ...] = (1, 2, 5),
    kernels: tuple = (KernelKind.BILINEAR, KernelKind.NEAREST),
) -> dict:
    """<accumulate(u), v> == <u, slice(v)> over random instances.

    Returns {"instances", "max_rel_err"}; the identity is exact up to
    float summation order, so relative errors sit near machine epsilon.
    """
    worst = 0.0
    for i in range(instances):
        kernel = kernels[i % len(kernels)]
        n = int(ns[i % len(ns)])
        hs, ws = rng.integers(3, max_size + 1, size=2)
        ht, wt = rng.integers(3, max_size + 1, size=2)
        c = int(rng.integers(1, 3))
        u = rng.standard_normal((c, hs, ws))
        v = rng.standard_normal((c, ht, wt))
        grids = _random_grids(rng, n, (hs, ws), (ht, wt), margin=0.0)
        lhs = float(np.sum(accumulate(u, grids, kernel, (ht, wt)) * v))
        rhs = float(np.sum(u * slice_grid(v, grids, kernel, (hs, ws))))
        rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), 1e-12)
        worst = max(worst, rel)
    return {"instances": instances, "max_rel_err": worst}


def _check_accumulate_input(rng, kernel, h, tol, margin) -> list[GradReport]:
    c = int(rng.integers(1, 3))
    hs, ws = rng.integers(3, 7, size=2)
    ht, wt = rng.integers(3, 8, size=2)
    n = int(rng.integers(1, 3))
    u = rng.standard_normal((c, hs, ws))
    r = rng.standard_normal((c, ht, wt))
    grids = _random_grids(rng, n, (hs, ws), (ht, wt), margin)

    def loss(x):
        return float(np.sum(accumulate(x, grids, kernel, (ht, wt)) * r))

    analytic = accumulate_backward_input(r, grids, kernel, (hs, ws))
    numeric = finite_difference(loss, u, h)
    return [check("accumulate/input", analytic, numeric, tol)]


def _check_accumulate_grid(rng, kernel, h, tol, margin) -> list[GradReport]:
    c = int(rng.integers(1, 3))
    hs, ws = rng.integers(3, 7, size=2)
    ht, wt = rng.integers(3, 8, size=2)
    n = int(rng.integers(1, 3))
    u = rng.standard_normal((c, hs, ws))
    r = rng.standard_normal((c, ht, wt))
    grids = _random_grids(rng, n, (hs, ws), (ht, wt), margin)
    packed = np.stack([np.stack([g.gx, g.gy]) for g in grids])

    def loss(x):
        rebuilt = GridSet([SamplingGrid(x[k, 0], x[k, 1]) for k in range(n)])
        return float(np.sum(accumulate(u, rebuilt, KernelKind.BILINEAR, (ht, wt)) * r))

    pairs = accumulate_backward_grid(r, u, grids)
    analytic = np.stack([np.stack([p.gx, p.gy]) for p in pairs])
    numeric = finite_difference(loss, packed, h)
    return [check("accumulate/grid", analytic, numeric, tol)]


def _check_slice(rng, kernel, h, tol, margin) -> list[GradReport]:
    c = int(rng.integers(1, 3))
    hs, ws = rng.integers(3, 7, size=2)
    ht, wt = rng.integers(3, 8, size=2)
    n = int(rng.integers(1, 3))
    v = rng.standard_normal((c, ht, wt))
    r = rng.standard_normal((c, hs, ws))
    grids = _random_grids(rng, n, (hs, ws), (ht, wt), margin)

    def loss(x):
        return float(np.sum(slice_grid(x, grids, kernel, (hs, ws)) * r))

    analytic = slice_backward(r, grids, kernel, (ht, wt))
    numeric = finite_difference(loss, v, h)
    return [check("slice/input", analytic, numeric, tol)]


def _check_grid_sample(rng, kernel, h, tol, margin) -> list[GradReport]:
    c = int(rng.integers(1, 3))
    hs, ws = rng.integers(3, 7, size=2)
    ho, wo = rng.integers(3, 8, size=2)
    u = rng.standard_normal((c, hs, ws))
    r = rng.standard_normal((c, ho, wo))
    grid = SamplingGrid(
        margin_uniform(rng, -2, hs + 1, (ho, wo), margin),
        margin_uniform(rng, -2, ws + 1, (ho, wo), margin),
    )

    def loss(x):
        return float(np.sum(grid_sample(x, grid, kernel) * r))

    analytic = accumulate(r, GridSet(grid), kernel, (hs, ws))
    numeric = finite_difference(loss, u, h)
    return [check("grid_sample/input", analytic, numeric, tol)]


def _check_parametric(rng, kernel, h, tol, margin) -> list[GradReport]:
    c = int(rng.integers(1, 3))
    himg, wimg = rng.integers(4, 8, size=2)
    cfg = PolarConfig.for_image(int(himg), int(wimg), h_r=4, w_psi=8)
    p = rng.standard_normal((c, cfg.h_r, cfg.w_psi))
    slicer = ParametricSlicer(rng.standard_normal((himg, wimg, 2, 2)))
    r = rng.standard_normal((c, himg, wimg))
    d_p, d_l = parametric_slice_backward(r, p, slicer, cfg)

    def loss_p(x):
        return float(np.sum(parametric_slice(x, slicer, cfg) * r))

    def loss_l(x):
        return float(np.sum(parametric_slice(p, ParametricSlicer(x), cfg) * r))

    return [
        check("parametric/p", d_p, finite_difference(loss_p, p, h), tol),
        check("parametric/l", d_l, finite_difference(loss_l, slicer.l, h), tol),
    ]


def _frac_distance(g: np.ndarray) -> np.ndarray:
    return np.abs(g - np.round(g))


def _check_circular_chain(rng, kernel, h, tol, margin) -> list[GradReport]:
    """Full chain d(sum v_s * R)/d(ux, uy) through S, the unit field, and the grids."""
    hs = ws = 8
    n = 3
    eps = 1e-8
    u = rng.standard_normal((1, hs, ws))
    ux = rng.uniform(0.3, 1.2, (hs, ws)) * rng.choice([-1.0, 1.0], (hs, ws))
    uy = rng.uniform(0.3, 1.2, (hs, ws)) * rng.choice([-1.0, 1.0], (hs, ws))
    r = rng.standard_normal((1, hs, ws))
    cfg = CircularConfig(n, symmetric=True, epsilon=eps)

    def loss(x):
        f = GradientField.from_raw(x[0], x[1], eps)
        return float(np.sum(circular_accumulate(u, f, cfg).v_s * r))

    field = GradientField.from_raw(ux, uy, eps)
    s = field.magnitude
    s_t = s[None]
    fwd, bwd = circular_grids(field, n)
    d_s_values = (
        slice_grid(r, fwd, KernelKind.BILINEAR, (hs, ws))
        - slice_grid(r, bwd, KernelKind.BILINEAR, (hs, ws))
    )[0]
    grad_fwd = accumulate_backward_grid(r, s_t, fwd)
    grad_bwd = accumulate_backward_grid(r, s_t, bwd)
    d_unit_x = np.zeros((hs, ws))
    d_unit_y = np.zeros((hs, ws))
    for k0, (gf, gb) in enumerate(zip(grad_fwd, grad_bwd)):
        k = float(k0 + 1)
        d_unit_x += k * (gf.gx + gb.gx)
        d_unit_y += k * (gf.gy + gb.gy)
    denom = s + eps
    d_ux = (
        d_s_values * (ux / s)
        + d_unit_x * (1.0 / denom - ux**2 / (s * denom**2))
        + d_unit_y * (-ux * uy / (s * denom**2))
    )
    d_uy = (
        d_s_values * (uy / s)
        + d_unit_y * (1.0 / denom - uy**2 / (s * denom**2))
        + d_unit_x * (-ux * uy / (s * denom**2))
    )
    analytic = np.stack([d_ux, d_uy])
    numeric = finite_difference(loss, np.stack([ux, uy]), h)

    near_kink = np.zeros((hs, ws), dtype=bool)
    for grids in (fwd, bwd):
        for g in grids:
            near_kink |= _frac_distance(g.gx) < margin
            near_kink |= _frac_distance(g.gy) < margin
    masked = near_kink | (s < 10 * eps)
    analytic = analytic.copy()
    numeric = numeric.copy()
    analytic[:, masked] = 0.0
    numeric[:, masked] = 0.0
    return [check("circular/field", analytic, numeric, tol)]


GRAD_OPS = {
    "accumulate": _check_accumulate_input,
    "accumulate-grid": _check_accumulate_grid,
    "slice": _check_slice,
    "grid-sample": _check_grid_sample,
    "parametric": _check_parametric,
    "circular": _check_circular_chain,
}


def run_grad_trials(
    op: str,
    trials: int = 20,
    seed: int = 0,
    kernel=KernelKind.BILINEAR,
    h: float = 1e-5,
    tol: float = 1e-6,
    margin: float = KINK_MARGIN,
) -> list[GradReport]:
    """Run one op's finite-difference trials; see GRAD_OPS for names."""
    if op not in GRAD_OPS:
        raise ValueError(f"unknown gradcheck op {op!r}; choose from {sorted(GRAD_OPS)}")
    kernel = as_kernel(kernel)
    rng = np.random.default_rng(seed)
    reports: list[GradReport] = []
    for _ in range(trials):
        reports.extend(GRAD_OPS[op](rng, kernel, h, tol, margin))
    return reports
