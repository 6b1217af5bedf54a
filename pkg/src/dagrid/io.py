"""PGM and DGT serialization plus synthetic phantom generation.

PGM covers interchange with image tools (P2/P5, maxval up to 65535, 16-bit
payloads big-endian per the format convention).  DGT is this package's
bit-exact float64 tensor dump:

    bytes 0..3   magic "DAG1"
    bytes 4..7   ndim, unsigned 32-bit little-endian, 2 or 3
    then         ndim dims, unsigned 32-bit little-endian each
    then         product(dims) IEEE-754 float64 little-endian, row-major

Phantom randomness (noise, blob placement) comes from numpy's default
PCG64 bit generator seeded explicitly, so a (kind, seed) pair reproduces
bit-identical tensors on any platform.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path

import numpy as np

from .tensor import as_tensor

__all__ = [
    "PgmParseError",
    "DgtParseError",
    "read_pgm",
    "write_pgm",
    "read_dgt",
    "write_dgt",
    "synth",
]

_DGT_MAGIC = b"DAG1"
_MAX_DGT_CELLS = 1 << 33


class PgmParseError(ValueError):
    """Malformed PGM input; the message names the failing byte offset."""


class DgtParseError(ValueError):
    """Malformed DGT input; the message names the failing byte offset."""


def _pgm_token(data: bytes, pos: int, path) -> tuple[bytes, int, int]:
    """Next whitespace-delimited token, skipping # comments to end of line."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise PgmParseError(f"{path}: unexpected end of header at byte {pos}")
    start = pos
    while pos < n and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], start, pos


def _pgm_int(data: bytes, pos: int, path, what: str) -> tuple[int, int]:
    tok, start, pos = _pgm_token(data, pos, path)
    try:
        value = int(tok)
    except ValueError:
        raise PgmParseError(
            f"{path}: invalid {what} {tok!r} at byte {start}"
        ) from None
    if value < 0:
        raise PgmParseError(f"{path}: negative {what} {value} at byte {start}")
    return value, pos


def read_pgm(path) -> np.ndarray:
    """Read a P2 or P5 PGM file into a (1, H, W) tensor scaled to [0, 1]."""
    path = Path(path)
    data = path.read_bytes()
    magic, magic_at, pos = _pgm_token(data, 0, path)
    if magic not in (b"P2", b"P5"):
        raise PgmParseError(f"{path}: unsupported magic {magic!r} at byte {magic_at}")
    width, pos = _pgm_int(data, pos, path, "width")
    height, pos = _pgm_int(data, pos, path, "height")
    maxval, pos = _pgm_int(data, pos, path, "maxval")
    if width < 1 or height < 1:
        raise PgmParseError(f"{path}: bad dimensions {width}x{height} at byte {pos}")
    if not 0 < maxval <= 65535:
        raise PgmParseError(f"{path}: unsupported maxval {maxval} at byte {pos}")
    count = width * height
    if magic == b"P5":
        if pos >= len(data) or not data[pos : pos + 1].isspace():
            raise PgmParseError(f"{path}: expected whitespace after maxval at byte {pos}")
        pos += 1
        itemsize = 2 if maxval > 255 else 1
        needed = count * itemsize
        payload = data[pos : pos + needed]
        if len(payload) < needed:
            raise PgmParseError(
                f"{path}: truncated payload at byte {len(data)}: "
                f"need {needed} bytes, have {len(payload)}"
            )
        dtype = ">u2" if maxval > 255 else np.uint8
        values = np.frombuffer(payload, dtype=dtype).astype(np.float64)
    else:
        values = np.empty(count, dtype=np.float64)
        for k in range(count):
            try:
                v, pos = _pgm_int(data, pos, path, "pixel")
            except PgmParseError:
                raise PgmParseError(
                    f"{path}: truncated payload at byte {len(data)}: "
                    f"expected {count} values, got {k}"
                ) from None
            values[k] = v
    grid = (values / maxval).reshape(height, width)
    return grid[None]


def write_pgm(t, path, normalize: bool = True) -> None:
    """Write a single-channel tensor as binary 8-bit PGM (P5, maxval 255).

    With normalize the value range maps onto [0, 255] (a constant tensor
    becomes all 128); otherwise values are clamped to [0, 1] and scaled
    with round-half-up, so data on the 1/255 lattice round-trips exactly.
    """
    t = as_tensor(t, "t")
    if t.shape[0] != 1:
        raise ValueError(f"write_pgm expects a single channel, got C={t.shape[0]}")
    plane = t[0]
    if normalize:
        lo, hi = float(plane.min()), float(plane.max())
        if hi > lo:
            scaled = (plane - lo) / (hi - lo)
            bytes_ = np.floor(scaled * 255.0 + 0.5)
        else:
            bytes_ = np.full(plane.shape, 128.0)
    else:
        bytes_ = np.floor(np.clip(plane, 0.0, 1.0) * 255.0 + 0.5)
    h, w = plane.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + bytes_.astype(np.uint8).tobytes())


def write_dgt(t, path) -> None:
    """Write a 2-D or 3-D float64 tensor bit-exactly; non-finite values refused."""
    t = np.ascontiguousarray(np.asarray(t, dtype=np.float64))
    if t.ndim not in (2, 3):
        raise ValueError(f"dgt tensors are 2-D or 3-D, got ndim={t.ndim}")
    if not np.isfinite(t).all():
        raise ValueError("refusing to write non-finite values")
    header = _DGT_MAGIC + struct.pack("<I", t.ndim)
    header += struct.pack(f"<{t.ndim}I", *t.shape)
    Path(path).write_bytes(header + t.astype("<f8").tobytes(order="C"))


def read_dgt(path) -> np.ndarray:
    """Read a DGT file back into the tensor that was written."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 8:
        raise DgtParseError(f"{path}: truncated header at byte {len(data)}")
    if data[:4] != _DGT_MAGIC:
        raise DgtParseError(f"{path}: bad magic {data[:4]!r} at byte 0")
    (ndim,) = struct.unpack_from("<I", data, 4)
    if ndim not in (2, 3):
        raise DgtParseError(f"{path}: unsupported ndim {ndim} at byte 4")
    dims_end = 8 + 4 * ndim
    if len(data) < dims_end:
        raise DgtParseError(f"{path}: truncated dims at byte {len(data)}")
    dims = struct.unpack_from(f"<{ndim}I", data, 8)
    if any(d < 1 for d in dims):
        raise DgtParseError(f"{path}: zero dimension in {dims} at byte 8")
    count = math.prod(dims)
    if count > _MAX_DGT_CELLS:
        raise DgtParseError(f"{path}: dims {dims} overflow at byte 8")
    expected = dims_end + 8 * count
    if len(data) != expected:
        raise DgtParseError(
            f"{path}: payload length mismatch at byte {len(data)}: expected {expected} bytes"
        )
    values = np.frombuffer(data, dtype="<f8", count=count, offset=dims_end)
    return values.reshape(dims).copy()


def _radial_distance(h: int, w: int, center: tuple[float, float]) -> np.ndarray:
    rows = np.arange(h, dtype=np.float64)[:, None] - center[0]
    cols = np.arange(w, dtype=np.float64)[None, :] - center[1]
    return np.hypot(rows, cols)


def synth(
    kind: str,
    h: int,
    w: int,
    center: tuple[float, float] | None = None,
    noise_sigma: float = 0.0,
    seed: int = 0,
    *,
    radius: float | None = None,
    thickness: float | None = None,
    cell: int | None = None,
    sigmas=None,
) -> np.ndarray:
    """Deterministic synthetic phantom, shape (1, h, w).

    Kinds: "disk" (1 where distance <= radius), "ring" (1 where
    |distance - radius| <= thickness/2), "checker" (cell x cell squares),
    "smooth_blob" (sum of one Gaussian bump per entry of sigmas, random
    position and amplitude, peak-normalized to 1).  Gaussian noise with
    noise_sigma is added last.  All randomness comes from
    numpy.random.default_rng(seed) (PCG64), so equal arguments produce
    bit-identical tensors.
    """
    if h < 1 or w < 1:
        raise ValueError(f"phantom size must be positive, got {h}x{w}")
    if noise_sigma < 0:
        raise ValueError(f"noise_sigma must be >= 0, got {noise_sigma}")
    if center is None:
        center = ((h - 1) / 2.0, (w - 1) / 2.0)
    center = (float(center[0]), float(center[1]))
    rng = np.random.default_rng(seed)
    if kind == "disk":
        if radius is None or radius < 0:
            raise ValueError(f"disk needs radius >= 0, got {radius}")
        plane = (_radial_distance(h, w, center) <= radius).astype(np.float64)
    elif kind == "ring":
        if radius is None or radius <= 0:
            raise ValueError(f"ring needs radius > 0, got {radius}")
        if thickness is None or thickness <= 0:
            raise ValueError(f"ring needs thickness > 0, got {thickness}")
        rho = _radial_distance(h, w, center)
        plane = (np.abs(rho - radius) <= thickness / 2.0).astype(np.float64)
    elif kind == "checker":
        if cell is None or int(cell) < 1:
            raise ValueError(f"checker needs cell >= 1, got {cell}")
        cell = int(cell)
        rows = np.arange(h)[:, None] // cell
        cols = np.arange(w)[None, :] // cell
        plane = ((rows + cols) % 2).astype(np.float64)
    elif kind == "smooth_blob":
        if sigmas is None or len(tuple(sigmas)) == 0:
            raise ValueError("smooth_blob needs a nonempty sigmas list")
        sigmas = tuple(float(s) for s in sigmas)
        if any(s <= 0 for s in sigmas):
            raise ValueError(f"blob sigmas must be > 0, got {sigmas}")
        rows = np.arange(h, dtype=np.float64)[:, None]
        cols = np.arange(w, dtype=np.float64)[None, :]
        plane = np.zeros((h, w))
        for sigma in sigmas:
            cx = rng.uniform(0, h - 1)
            cy = rng.uniform(0, w - 1)
            amp = rng.uniform(0.5, 1.0)
            plane += amp * np.exp(-((rows - cx) ** 2 + (cols - cy) ** 2) / (2 * sigma**2))
        plane /= plane.max()
    else:
        raise ValueError(f"unknown phantom kind {kind!r}")
    if noise_sigma > 0:
        plane = plane + rng.normal(0.0, noise_sigma, size=plane.shape)
    return plane[None]
