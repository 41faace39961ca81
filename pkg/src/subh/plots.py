"""SVG figure emission for solve and scan artifacts.

Figures are rendered from the already-written CSV/JSON files, never from
live solver state, so plotting can never perturb the numeric outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .loops import SpectralLoop, TimeGrid, loop_from_dict, synthesize  # noqa: E402


def orbit_svg(loop_record: dict, path: str, title: str = "") -> None:
    """Phase projection (x1, x2) and |x(t)| trace for one loop record."""
    loop = loop_from_dict(loop_record)
    grid = TimeGrid(loop.system, max(16 * (2 * loop.n_max + 1), 512))
    u = synthesize(loop, grid)
    t = grid.times
    mag = np.sqrt(np.sum(u ** 2, axis=1))

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(u[:, 0], u[:, 1], lw=1.0)
    ax1.plot([u[0, 0]], [u[0, 1]], "o", ms=4)
    ax1.set_xlabel("x1")
    ax1.set_ylabel("x2")
    ax1.set_title("phase projection")
    ax1.set_aspect("equal", adjustable="datalim")
    ax2.plot(t, mag, lw=1.0)
    ax2.set_xlabel("t")
    ax2.set_ylabel("|x(t)|")
    ax2.set_title("state magnitude")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def scan_trends_svg(csv_text: str, path: str, title: str = "") -> None:
    """Level-per-index and sup-norm trends with minimal-period markers,
    rendered from the scan CSV text."""
    lines = [ln for ln in csv_text.strip().splitlines() if ln]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    col = {name: i for i, name in enumerate(header)}
    k = np.array([int(r[col["k"]]) for r in rows])
    level = np.array([float(r[col["C_k_over_k"]]) for r in rows])
    sup = np.array([float(r[col["sup_norm"]]) for r in rows])
    minimal_r = np.array([int(r[col["minimal_r"]]) for r in rows])
    conv = np.array([r[col["converged"]] == "true" for r in rows])

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    for ax, vals, label in ((ax1, level, "C_k / k"), (ax2, sup, "sup |x_k|")):
        ax.plot(k[conv], vals[conv], "o-", ms=5)
        if np.any(~conv):
            ax.plot(k[~conv], vals[~conv], "x", ms=7, color="tab:red",
                    label="not converged")
            ax.legend()
        ax.set_xlabel("k")
        ax.set_ylabel(label)
        ax.set_xticks(k)
    for ki, si, ri, ci in zip(k, sup, minimal_r, conv):
        if ci:
            ax2.annotate(f"r={ri}", (ki, si), textcoords="offset points",
                         xytext=(4, 4), fontsize=8)
    ax1.set_title("level per index")
    ax2.set_title("sup norm (minimal period markers)")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
