"""Figure and CSV rendering for the CLI's --report-dir option."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["ensure_dir", "save_heatmap", "save_curve", "save_bars", "save_csv"]


def ensure_dir(path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def save_heatmap(path, plane, title: str, marker: tuple[int, int] | None = None) -> Path:
    """Render a 2-D array as an image; marker draws a crosshair at (row, col)."""
    plane = np.asarray(plane, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 5))
    im = ax.imshow(plane, cmap="magma", interpolation="nearest")
    if marker is not None:
        ax.plot(marker[1], marker[0], "c+", markersize=14, markeredgewidth=2)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_curve(path, xs, ys, xlabel: str, ylabel: str, title: str, logy: bool = False) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(xs, ys, "o-")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_bars(path, labels, values, ylabel: str, title: str) -> Path:
    fig, ax = plt.subplots(figsize=(max(5, 0.6 * len(labels)), 3.5))
    ax.bar(range(len(labels)), values)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_csv(path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return Path(path)
