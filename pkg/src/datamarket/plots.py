"""PNG figures for region grids and beta sweeps (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import ListedColormap  # noqa: E402
from matplotlib.patches import Patch  # noqa: E402

from .harness import BetaSweep, RegionGrid  # noqa: E402

REGION_COLORS = ("#f0f0f0", "#7fb3d5", "#f5b041", "#58a55c")
REGION_NAMES = ("shares with none", "shares with 1 only", "shares with 2 only", "shares with both")


def plot_region_grid(grid: RegionGrid, path, title: str | None = None) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    extent = (grid.x[0], grid.x[-1], grid.y[0], grid.y[-1])
    ax.imshow(grid.labels.T, origin="lower", extent=extent, aspect="auto",
              cmap=ListedColormap(REGION_COLORS), vmin=-0.5, vmax=3.5, interpolation="nearest")
    ax.set_xlabel("noise variance, platform 1")
    ax.set_ylabel("noise variance, platform 2")
    present = sorted(int(m) for m in np.unique(grid.labels))
    ax.legend(handles=[Patch(color=REGION_COLORS[m], label=REGION_NAMES[m]) for m in present],
              loc="upper right", fontsize=8, framealpha=0.9)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_beta_sweep(sweep: BetaSweep, path, title: str | None = None) -> Path:
    beta = np.array([r.beta for r in sweep.rows])
    ok = np.array([r.status == "Verified" for r in sweep.rows])
    count = np.array([len(r.entrants) for r in sweep.rows], dtype=float)
    analytic = np.array([r.analytic_count for r in sweep.rows], dtype=float)
    fig, (top, bottom) = plt.subplots(2, 1, figsize=(6.5, 6), sharex=True)

    top.step(beta, analytic, where="post", color="0.6", linestyle="--", label="analytic count")
    top.plot(beta[ok], count[ok], ".", color="#1f77b4", markersize=3, label="verified entrants")
    if (~ok).any():
        top.plot(beta[~ok], np.full((~ok).sum(), -0.2), "|", color="#c0392b",
                 label="no equilibrium found")
    for b in sweep.thresholds:
        if beta[0] < b <= beta[-1]:
            top.axvline(b, color="0.8", linewidth=0.8)
    top.set_ylabel("entrants")
    top.legend(fontsize=8, loc="upper left")

    for name, color in (("u_user", "#1f77b4"), ("u_buyer", "#ff7f0e"), ("welfare", "#2ca02c")):
        v = np.array([getattr(r, name) for r in sweep.rows])
        bottom.plot(beta, np.where(ok, v, np.nan), color=color, label=name.replace("_", " "))
    bottom.set_xlabel("buyer valuation beta")
    bottom.set_ylabel("utility")
    bottom.legend(fontsize=8, loc="upper left")
    if title:
        top.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
