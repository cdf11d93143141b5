"""Static SVG line plots of photon/phonon traces."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# deterministic element ids so repeated runs write identical files
plt.rcParams["svg.hashsalt"] = "optocascade"


def plot_series(path, title: str, curves, xlabel: str = "time (1/kappa)", ylabel: str = "mean number") -> None:
    """Write an SVG with one line per ``(label, times, values)`` entry of ``curves``."""
    fig, ax = plt.subplots(figsize=(7, 4))
    try:
        for label, times, values in curves:
            ax.plot(times, values, label=label, lw=1.2)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
