"""Report figures."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def relation_distribution(counts: dict[str, int], path):
    names = sorted(counts, key=lambda k: (-counts[k], k))
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(names, [counts[n] for n in names], color="#4c72b0")
    ax.set_ylabel("splits")
    ax.set_title("Relations assigned by the system")
    ax.tick_params(axis="x", rotation=45)
    for label in ax.get_xticklabels():
        label.set_horizontalalignment("right")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def relation_precision(precision: dict[str, float | None], path):
    names = sorted(k for k, v in precision.items() if v is not None)
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.barh(names, [precision[n] for n in names], color="#dd8452")
    ax.set_xlim(0, 1)
    ax.set_xlabel("precision")
    ax.set_title("Relation precision per class")
    ax.invert_yaxis()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
