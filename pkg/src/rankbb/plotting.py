"""Figures for experiment reports (Agg backend, files only)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def plot_report(report, path: str | Path) -> Path:
    """Mean query count per ``n`` against the reference bound.

    A single-``n`` report gets a histogram of per-trial query counts instead.
    """
    path = Path(path)
    data = report.plot_data()
    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    algo = report.config.algorithm
    if len({n for n, _, _ in data}) > 1:
        ns = [n for n, _, _ in data]
        ax.plot(ns, [m for _, m, _ in data], "o-", color="tab:blue", label=f"{algo} (mean)")
        ax.plot(ns, [b for _, _, b in data], "--", color="0.4", label="reference bound")
        ax.set_xlabel("n")
        ax.set_ylabel("queries")
    else:
        qs = [r.queries for r in report.rows]
        ax.hist(qs, bins=min(30, max(1, len(set(qs)))), color="tab:blue", alpha=0.8, label=algo)
        ax.axvline(data[0][2], ls="--", color="0.4", label="reference bound")
        ax.set_xlabel("queries")
        ax.set_ylabel("trials")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
