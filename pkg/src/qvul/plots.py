"""Optional PNG figures written next to the CLI's CSV output.

matplotlib is imported lazily with the Agg backend so the library and the
data-only CLI paths never need a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    _pyplot().close(fig)
    return path


def ace_heatmap(table, path: str | Path) -> Path:
    """Physical qubit x cycle map: dark cells are ACE, light cells un-ACE."""
    plt = _pyplot()
    depth, n = table.ace.shape
    fig, ax = plt.subplots(figsize=(min(2 + depth * 0.25, 16), 1 + n * 0.35))
    ax.imshow(table.ace.T.astype(float), aspect="auto", cmap="Greys", vmin=0, vmax=1.4,
              interpolation="nearest", origin="lower")
    ax.set_xlabel("cycle")
    ax.set_ylabel("physical qubit")
    ax.set_title(f"ACE cells ({int(table.ace.sum())} of {table.ace.size})")
    return _save(fig, path)


def prediction_bars(labels: Sequence[str], esp: Sequence[float], one_minus_cqv: Sequence[float],
                    real_sr: Sequence[float | None] | None, path: str | Path) -> Path:
    plt = _pyplot()
    x = np.arange(len(labels))
    series = [("ESP", esp), ("1-CQV", one_minus_cqv)]
    if real_sr is not None and any(v is not None for v in real_sr):
        series.append(("SR", [np.nan if v is None else v for v in real_sr]))
    width = 0.8 / len(series)
    fig, ax = plt.subplots(figsize=(max(4, len(labels) * 0.9), 3.5))
    for k, (name, vals) in enumerate(series):
        ax.bar(x + (k - (len(series) - 1) / 2) * width, vals, width, label=name)
    ax.set_xticks(x, labels, rotation=30, ha="right")
    ax.set_ylim(0, 1)
    ax.set_ylabel("success rate")
    ax.legend(frameon=False)
    return _save(fig, path)


def cqv_traces(traces: np.ndarray, names: Sequence[str], path: str | Path) -> Path:
    """Cumulative success of every virtual qubit over the cycles."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for k, name in enumerate(names):
        ax.plot(np.arange(traces.shape[0]), traces[:, k], lw=1, label=name)
    ax.set_xlabel("cycle")
    ax.set_ylabel("S")
    if len(names) <= 12:
        ax.legend(frameon=False, fontsize=7, ncol=2)
    return _save(fig, path)


def sweep_curve(weights: np.ndarray, predictions: np.ndarray, real_sr: float, best: float,
                path: str | Path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(weights, predictions, label="1-CQV")
    ax.axhline(real_sr, color="k", ls="--", lw=0.8, label="SR")
    ax.axvline(best, color="C3", lw=0.8, label=f"best w = {best:.2f}")
    ax.set_xlabel("weight")
    ax.set_ylabel("predicted success rate")
    ax.legend(frameon=False)
    return _save(fig, path)


def compare_scatter(rows, path: str | Path) -> Path:
    """Predicted against oracle SR for both estimators."""
    plt = _pyplot()
    sr = np.array([r.sr for r in rows])
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot([0, 1], [0, 1], color="0.6", lw=0.8)
    ax.scatter(sr, [r.esp for r in rows], s=14, label="ESP")
    ax.scatter(sr, [r.one_minus_cqv for r in rows], s=14, marker="^", label="1-CQV")
    ax.set_xlabel("oracle SR")
    ax.set_ylabel("prediction")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(frameon=False)
    return _save(fig, path)
