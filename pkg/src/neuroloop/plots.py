"""SVG figures for the command-line experiments.

Only the CLI imports this module, and only when plots are requested, so
headless runs with ``--no-plots`` never load matplotlib.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "neuroloop"

_META = {"Date": None}


def _save(fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def traces(path: Path, t: np.ndarray, curves: dict[str, np.ndarray], ylabel: str, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for label, y in curves.items():
        ax.plot(t, y, label=label, lw=1.2)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    _save(fig, path)


def field_heatmap(path: Path, t: np.ndarray, u: np.ndarray, h: float) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    extent = (0, u.shape[1] - 1, float(t[-1]) if t.size else 1.0, float(t[0]) if t.size else 0.0)
    im = ax.imshow(u, aspect="auto", extent=extent, cmap="viridis", vmin=min(h, float(u.min())))
    ax.set_xlabel("field position")
    ax.set_ylabel("time (s)")
    fig.colorbar(im, ax=ax, label="activation")
    _save(fig, path)


def raster(path: Path, t_us: np.ndarray, idx: np.ndarray, ylabel: str = "neuron",
           bands: dict[str, range] | None = None, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.scatter(np.asarray(t_us) * 1e-6, idx, s=0.5, c="k", marker=".", linewidths=0)
    if bands:
        for name, r in bands.items():
            ax.axhline(r.start - 0.5, color="0.8", lw=0.5)
            ax.text(1.0, (r.start + r.stop) / 2, f" {name}", transform=ax.get_yaxis_transform(),
                    va="center", fontsize=6)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    _save(fig, path)


def trajectory(path: Path, arena, traj: np.ndarray, title: str = "") -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.add_patch(plt.Rectangle((0, 0), arena.width, arena.height, fill=False, lw=1))
    for ob in arena.obstacles:
        ax.add_patch(plt.Circle((ob.x, ob.y), ob.r, color="0.6"))
    ax.plot(arena.target.x, arena.target.y, "r*", ms=12)
    ax.plot(arena.start[0], arena.start[1], "go", ms=5)
    if traj.size:
        ax.plot(traj[:, 1], traj[:, 2], "b-", lw=1)
    ax.set_xlim(-0.05, arena.width + 0.05)
    ax.set_ylim(-0.05, arena.height + 0.05)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    if title:
        ax.set_title(title)
    _save(fig, path)


def heatmap(path: Path, x: np.ndarray, xlabel: str, ylabel: str, label: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    im = ax.imshow(x, aspect="auto", cmap="magma", vmin=0.0, vmax=1.0, interpolation="nearest")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    fig.colorbar(im, ax=ax, label=label)
    _save(fig, path)


def bars(path: Path, names: list[str], values: list[float], ylabel: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(range(len(names)), values, color="0.4")
    ax.set_xticks(range(len(names)), names, rotation=30, ha="right", fontsize=7)
    ax.set_yscale("log")
    ax.set_ylabel(ylabel)
    _save(fig, path)
