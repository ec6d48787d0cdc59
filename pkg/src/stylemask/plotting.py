"""Figure rendering for the CLI report paths.

Every CLI command that emits delimited output can render a matching figure
next to it; these helpers own the matplotlib side.  The Agg backend is
forced since figures only ever go to files.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_GRID = dict(alpha=0.3, linewidth=0.5)


def save_figure(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def loss_curves_figure(records: Sequence[dict]):
    """Per-term loss trajectories from the line-delimited training log."""
    fig, ax = plt.subplots(figsize=(7, 4))
    steps = [r["step"] for r in records]
    for key, label in (
        ("total", "total"),
        ("l_attr", "attribute"),
        ("l_bg", "background"),
        ("l_prob", "concentration"),
    ):
        ax.plot(steps, [r[key] for r in records], label=label, linewidth=1.2)
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.set_yscale("log")
    ax.grid(**_GRID)
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def qmm_report_figure(report: Sequence[dict], title: str = "attribute distances"):
    """Bar chart of per-attribute distances (targeted vs preserved)."""
    fig, ax = plt.subplots(figsize=(6, 3.2))
    names = [r["name"] for r in report]
    values = [r["distance"] for r in report]
    colors = ["#d95f02" if r.get("targeted") else "#7570b3" for r in report]
    ax.bar(names, values, color=colors)
    ax.set_ylabel("distance")
    ax.set_title(title)
    ax.grid(axis="y", **_GRID)
    handles = [
        plt.Rectangle((0, 0), 1, 1, color="#d95f02"),
        plt.Rectangle((0, 0), 1, 1, color="#7570b3"),
    ]
    ax.legend(handles, ["to reference (targeted)", "to source (preserved)"], frameon=False)
    fig.tight_layout()
    return fig


def sweep_figure(deltas: Sequence[float], series: dict[str, Sequence[float]]):
    """Attribute distance versus editing intensity."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    for name, values in series.items():
        ax.plot(deltas, values, marker="o", markersize=3, linewidth=1.2, label=name)
    ax.set_xlabel("editing intensity")
    ax.set_ylabel("distance")
    ax.grid(**_GRID)
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def attribution_figure(scores: np.ndarray, regions: Sequence[str]):
    """Channel-by-region attribution heatmap."""
    fig, ax = plt.subplots(figsize=(4.5, max(3.0, 0.14 * scores.shape[0])))
    im = ax.imshow(scores, aspect="auto", cmap="magma", interpolation="nearest")
    ax.set_xticks(range(len(regions)), regions, rotation=30, ha="right")
    ax.set_xlabel("region")
    ax.set_ylabel("channel")
    fig.colorbar(im, ax=ax, label="influence share")
    fig.tight_layout()
    return fig
