"""Figure rendering for the report paths.

Every figure goes straight to a file next to the delimited output it
illustrates; nothing is ever shown interactively. PNG metadata is pinned
so repeated runs produce byte-identical images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ruleset import Ruleset

# Fixed PNG text chunk; the default embeds the matplotlib version, which
# would make artifacts differ across environments.
_PNG_METADATA = {"Software": "ruleconf"}

_CLASS_COLORS = {0: "tab:blue", 1: "tab:red"}


def save_score_heatmap(
    path: str | Path,
    x1: np.ndarray,
    x2: np.ndarray,
    scores: np.ndarray,
    ruleset: Ruleset,
    label: int,
):
    """Render a score surface with the rule boxes drawn on top.

    ``scores`` must be indexed [i, j] for point (x1[i], x2[j]), matching
    the grid CSV layout.
    """
    fig, ax = plt.subplots(figsize=(7.0, 5.0), dpi=110)
    mesh = ax.pcolormesh(x1, x2, scores.T, shading="nearest", vmin=0.0, vmax=1.0, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=f"score for label {label}")
    for rule in ruleset.rules:
        ivx, ivy = rule.intervals
        color = _CLASS_COLORS.get(rule.label, "tab:green")
        ax.add_patch(
            plt.Rectangle(
                (ivx.low, ivy.low),
                ivx.width,
                ivy.width,
                fill=False,
                edgecolor=color,
                linewidth=1.6,
            )
        )
        ax.annotate(
            f"{rule.id} (y={rule.label})",
            (ivx.low + 0.01 * ivx.width, ivy.high),
            ha="left",
            va="bottom",
            fontsize=8,
            color=color,
        )
    ax.set_xlabel(ruleset.feature_names[0])
    ax.set_ylabel(ruleset.feature_names[1])
    ax.set_xlim(ruleset.bounds.lower[0], ruleset.bounds.upper[0])
    ax.set_ylim(ruleset.bounds.lower[1], ruleset.bounds.upper[1])
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)


def save_trend_figure(path: str | Path, reports):
    """Error and set-size rates against epsilon, one marker per report row."""
    eps = [r.epsilon for r in reports]
    fig, (ax_err, ax_size) = plt.subplots(1, 2, figsize=(9.0, 4.0), dpi=110)
    ax_err.plot(eps, [r.avg_err for r in reports], "o-", color="tab:red", label="avg_err")
    ax_err.plot(eps, eps, "--", color="gray", linewidth=1.0, label="target")
    ax_err.set_xlabel("epsilon")
    ax_err.set_ylabel("rate")
    ax_err.set_title("coverage error")
    ax_err.legend()
    ax_err.grid(alpha=0.3)
    for attr, color in (("avg_empty", "tab:gray"), ("avg_single", "tab:green"), ("avg_double", "tab:orange")):
        ax_size.plot(eps, [getattr(r, attr) for r in reports], "o-", color=color, label=attr)
    ax_size.set_xlabel("epsilon")
    ax_size.set_ylabel("rate")
    ax_size.set_title("set sizes")
    ax_size.legend()
    ax_size.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
