"""Worker-count state shared by the accumulation/slicing engine.

Results are bit-identical for any worker count (see _engine), so the
setting here is purely a performance knob.  The initial value comes from
the DAGRID_THREADS environment variable, defaulting to 1.
"""

from __future__ import annotations

import os

__all__ = ["get_num_threads", "set_num_threads"]


def _env_default() -> int:
    raw = os.environ.get("DAGRID_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


_num_threads = _env_default()


def get_num_threads() -> int:
    return _num_threads


def set_num_threads(n: int) -> None:
    global _num_threads
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    _num_threads = n
