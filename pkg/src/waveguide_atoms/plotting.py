"""PNG rendering of figure panels, written next to their CSVs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .figures import Panel  # noqa: E402


def _curves(panel: Panel, ycol: str):
    labels = [row[0] for row in panel.rows]
    xi, yi = 1, panel.header.index(ycol)
    for label in dict.fromkeys(labels):
        rows = [row for row in panel.rows if row[0] == label]
        yield label, np.array([r[xi] for r in rows], dtype=float), np.array([r[yi] for r in rows], dtype=float)


def render(panel: Panel, path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if panel.style == "spectrum":
        for label, x, y in _curves(panel, "T"):
            ax.plot(x, y, label=label)
        ax.set_xlabel(r"$\Delta/\gamma_w$")
        ax.set_ylabel("T")
        ax.legend(fontsize="small")
    elif panel.style == "ensemble":
        for label, x, y in _curves(panel, "mean_T"):
            ax.plot(x, y, label=label)
        ax.set_xlabel(r"$\Delta/\gamma_w$")
        ax.set_ylabel(r"$\langle T \rangle$")
        ax.legend(fontsize="small")
    elif panel.style == "eigen":
        data = np.array([r[:4] for r in panel.rows], dtype=float)
        g, shift, width = data[:, 0], data[:, 2], data[:, 3]
        ax.plot(g, shift, color="k")
        ax.fill_between(g, shift - width / 2, shift + width / 2, alpha=0.3)
        ax.set_xlabel(r"position / $\lambda$")
        ax.set_ylabel(r"shift, linewidth / $\gamma_w$")
    elif panel.style == "weights":
        data = np.array(panel.rows, dtype=float)
        ax.plot(data[:, 0], data[:, 2], "r--", label="L1")
        for j in range(3, data.shape[1]):
            ax.plot(data[:, 0], data[:, j], label=f"L{j - 1}")
        ax.set_xlabel(r"$t\gamma_w$")
        ax.set_ylabel("mode population")
        ax.legend(fontsize="small")
    elif panel.style == "excitation":
        data = np.array(panel.rows, dtype=float)
        ax.plot(data[:, 0], data[:, 1], label="protocol")
        ax.plot(data[:, 0], data[:, 2], "r--", label="comparison")
        ax.set_xlabel(r"$t\gamma_w$")
        ax.set_ylabel("normalized excitation")
        ax.legend(fontsize="small")
    else:
        plt.close(fig)
        raise ValueError(f"unknown panel style {panel.style!r}")
    if panel.title:
        ax.set_title(panel.title, fontsize="medium")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
