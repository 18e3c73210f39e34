"""Static SVG charts for the experiment outputs."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed metadata and hash salt keep the SVG bytes reproducible
_SVG_META = {"Date": None, "Creator": "quatlearn"}
plt.rcParams["svg.hashsalt"] = "quatlearn"


def learning_curve_svg(summary, path: Path, title: str = "Learning curve") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.fill_between(summary.iteration, summary.min_db, summary.max_db, color="#f4b6b6", lw=0,
                    label="all trials")
    ax.plot(summary.iteration, summary.mean_db, color="#c0392b", lw=1.5, label="mean")
    ax.set_xlabel("iteration")
    ax.set_ylabel("cost (dB)")
    ax.set_title(title)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def likelihood_svg(report, path: Path) -> None:
    import numpy as np

    x = np.arange(len(report.labels))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(x - 0.2, report.true_likelihoods, width=0.4, label="true", color="#34495e")
    ax.bar(x + 0.2, report.estimated_likelihoods, width=0.4, label="estimate", color="#e67e22")
    ax.set_xticks(x, report.labels, rotation=30)
    ax.set_ylabel("likelihood")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
