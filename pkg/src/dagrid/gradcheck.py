"""Finite-difference verification of hand-derived backward passes.

Central differences with a configurable step perturb one element at a time,
so the cost is one pair of forward evaluations per element.  Callers compare
against analytic gradients with :func:`check`, which reports the worst
element by relative error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["OracleError", "GradReport", "finite_difference", "check", "relative_error"]

DEFAULT_STEP = 1e-5


class OracleError(RuntimeError):
    """A numeric oracle produced a non-finite evaluation."""


@dataclass
class GradReport:
    """Outcome of one analytic-vs-numeric gradient comparison."""

    op_name: str
    max_abs_err: float
    max_rel_err: float
    worst_index: tuple
    passed: bool

    def __str__(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return (
            f"[{status}] {self.op_name}: max_abs={self.max_abs_err:.3e} "
            f"max_rel={self.max_rel_err:.3e} at {self.worst_index}"
        )


def finite_difference(
    scalar_fn: Callable[[np.ndarray], float],
    x: np.ndarray,
    h: float = DEFAULT_STEP,
) -> np.ndarray:
    """Central-difference gradient of a scalar function at ``x``.

    Every element is perturbed by +/- h in turn; non-finite evaluations
    raise OracleError rather than polluting the estimate.
    """
    if h <= 0.0:
        raise ValueError(f"step must be > 0, got {h}")
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for idx in range(flat.size):
        orig = flat[idx]
        flat[idx] = orig + h
        f_plus = float(scalar_fn(x))
        flat[idx] = orig - h
        f_minus = float(scalar_fn(x))
        flat[idx] = orig
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise OracleError(
                f"non-finite evaluation at flat index {idx}: f(+h)={f_plus}, f(-h)={f_minus}"
            )
        gflat[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """Elementwise |a - n| / max(|a|, |n|, 1e-12)."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-12)
    return np.abs(analytic - numeric) / denom


def check(
    op_name: str,
    analytic: np.ndarray,
    numeric: np.ndarray,
    tol: float = 1e-6,
) -> GradReport:
    """Compare an analytic gradient against a numeric one elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise ValueError(
            f"shape mismatch for {op_name}: analytic {analytic.shape} vs numeric {numeric.shape}"
        )
    rel = relative_error(analytic, numeric)
    worst = int(np.argmax(rel)) if rel.size else 0
    worst_index = tuple(np.unravel_index(worst, rel.shape)) if rel.size else ()
    max_abs = float(np.max(np.abs(analytic - numeric))) if rel.size else 0.0
    max_rel = float(rel.reshape(-1)[worst]) if rel.size else 0.0
    return GradReport(
        op_name=op_name,
        max_abs_err=max_abs,
        max_rel_err=max_rel,
        worst_index=worst_index,
        passed=bool(max_rel < tol),
    )
