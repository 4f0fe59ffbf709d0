"""Matplotlib renderings of the report tables (box plot, dendrogram, PC scatter)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .cluster import Dendrogram  # noqa: E402

GROUP_COLORS = {"amputee": "tab:red", "intact": "tab:blue"}


def _color_for(group: str) -> str:
    return GROUP_COLORS.get(group, "tab:gray")


def accuracy_boxplot(per_subject: pd.DataFrame, path: Path) -> None:
    """Box plot of per-subject gesture CV accuracies, one box per group."""
    groups = sorted(per_subject["group"].unique())
    data = [per_subject.loc[per_subject["group"] == g, "accuracy"] * 100
            for g in groups]
    fig, ax = plt.subplots(figsize=(5, 4))
    boxes = ax.boxplot(data, tick_labels=groups, patch_artist=True,
                       medianprops={"color": "black"})
    for patch, group in zip(boxes["boxes"], groups):
        patch.set_facecolor(_color_for(group))
        patch.set_alpha(0.5)
    ax.set_ylabel("gesture classification accuracy (%)")
    ax.set_title("Within-subject gesture recognition by group")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def dendrogram_figure(dendro: Dendrogram, groups: dict[str, str] | None,
                      cut_ks: list[int], path: Path) -> None:
    """Draw the merge tree with leaves on the x axis and cut lines."""
    n = dendro.n_leaves
    order = dendro.leaf_order()
    x_of: dict[int, float] = {leaf: float(i) for i, leaf in enumerate(order)}
    y_of: dict[int, float] = {leaf: 0.0 for leaf in range(n)}

    fig, ax = plt.subplots(figsize=(max(6, 0.35 * n), 4.5))
    for idx, merge in enumerate(dendro.merges):
        node = n + idx
        xl, xr = x_of[merge.left], x_of[merge.right]
        yl, yr = y_of[merge.left], y_of[merge.right]
        ax.plot([xl, xl, xr, xr], [yl, merge.height, merge.height, yr],
                color="black", linewidth=1.0)
        x_of[node] = 0.5 * (xl + xr)
        y_of[node] = merge.height

    heights = [m.height for m in dendro.merges]
    for k in cut_ks:
        if not 2 <= k <= n:
            continue
        upper = heights[n - k]
        lower = heights[n - k - 1] if n - k - 1 >= 0 else 0.0
        ax.axhline(0.5 * (upper + lower), linestyle="--", linewidth=0.8,
                   color="gray")
        ax.text(n - 0.5, 0.5 * (upper + lower), f" k={k}", va="bottom",
                fontsize=8, color="gray")

    ax.set_xticks(range(n))
    labels = [dendro.leaf_labels[leaf] for leaf in order]
    ax.set_xticklabels(labels, rotation=90, fontsize=8)
    if groups:
        for tick, label in zip(ax.get_xticklabels(), labels):
            tick.set_color(_color_for(groups.get(label, "")))
    ax.set_ylabel("linkage height")
    ax.set_title("Ward dendrogram of subject signatures")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def pc_scatter(scores: pd.DataFrame, path: Path) -> None:
    """Scatter of the first three PC scores, colored by group."""
    cols = [c for c in ("pc1", "pc2", "pc3") if c in scores.columns]
    fig = plt.figure(figsize=(5.5, 4.5))
    if len(cols) >= 3:
        ax = fig.add_subplot(projection="3d")
    else:
        ax = fig.add_subplot()
    for group, grp in scores.groupby("group"):
        coords = [grp[c] for c in cols[:3]]
        ax.scatter(*coords, label=str(group), color=_color_for(str(group)),
                   s=30)
    ax.set_xlabel("PC1")
    ax.set_ylabel("PC2")
    if len(cols) >= 3:
        ax.set_zlabel("PC3")
    ax.legend()
    ax.set_title("Subject signatures in PC space")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
