"""File-target matplotlib rendering for report-style CLI runs.

Every helper draws one figure and writes it atomically as a PNG next to
the delimited artifact it illustrates.  Rendering is strictly opt-in from
the command line; nothing here is imported by the numerical modules.
"""

from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

from ._util import atomic_write_bytes  # noqa: E402

DPI = 130


def _save(fig, path: str) -> str:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())
    return path


def save_measure_scatter(mu, path: str, title: str = "") -> str:
    """Scatter the atoms of a planar discrete measure, weight-colored."""
    if mu.dim != 2:
        raise ValueError("scatter rendering is planar only")
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    order = np.argsort(mu.weights)
    sc = ax.scatter(mu.points[order, 0], mu.points[order, 1], s=4.0,
                    c=mu.weights[order], cmap="viridis", linewidths=0)
    fig.colorbar(sc, ax=ax, label="atom weight")
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    return _save(fig, path)


def save_profile(path: str, r: list, series: dict[str, list], *,
                 ylabel: str, title: str = "", loglog: bool = False) -> str:
    """Line plot of one or more per-radius profiles on a shared r axis."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, vals in series.items():
        pairs = [(ri, v) for ri, v in zip(r, vals) if v is not None]
        if not pairs:
            continue
        ax.plot([p[0] for p in pairs], [p[1] for p in pairs],
                marker="o", label=label)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel(ylabel)
    if len(series) > 1:
        ax.legend()
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return _save(fig, path)


def save_boundary_histogram(hits: np.ndarray, path: str, *, axis: int = 0,
                            bins: int = 80, title: str = "") -> str:
    """Histogram of boundary-hit coordinates from a walk ensemble."""
    hits = np.atleast_2d(np.asarray(hits, dtype=float))
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    ax.hist(hits[:, axis], bins=bins, density=True, color="#3465a4",
            edgecolor="none")
    ax.set_xlabel(f"coordinate {axis}")
    ax.set_ylabel("hit density")
    if title:
        ax.set_title(title)
    return _save(fig, path)
