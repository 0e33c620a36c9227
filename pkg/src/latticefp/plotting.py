"""Figures for first-passage results (matplotlib, Agg backend)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_first_passage(result, path, head: int = 100, dpi: int = 120):
    """Two panels: the first ``head`` probabilities, and the full reported
    range on a log scale with the certified error bound overlaid.
    """
    values = result.pmf.values
    bounds = result.error_bounds()
    rows = bounds.size
    t = np.arange(rows) * result.pmf.dt
    h = min(head, rows)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.vlines(t[:h], 0, values[:h], lw=1.5)
    ax1.plot(t[:h], values[:h], "o", ms=2.5)
    ax1.set_xlabel("time")
    ax1.set_ylabel("probability")
    ax1.set_title(f"first passage PMF (first {h} points)")

    pos = values[:rows] > 0
    ax2.semilogy(t[:rows][pos], values[:rows][pos], lw=1, label="PMF estimate")
    ax2.semilogy(t[:rows], np.maximum(bounds, np.finfo(float).tiny), "--", lw=1,
                 label=f"error bound ({result.certificate.method})")
    ax2.set_xlabel("time")
    ax2.legend(frameon=False, fontsize=8)
    ax2.set_title(f"N = {result.certificate.N_used}")
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
