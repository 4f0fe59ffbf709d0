"""Agglomerative clustering under Ward's minimum-variance criterion.

Merge costs follow the centroid definition
``delta(A, B) = |A||B| / (|A| + |B|) * ||c_A - c_B||^2`` and are updated with
the Lance-Williams recurrence.  Recorded heights are ``sqrt(2 * delta)`` so
that merging two singletons lands exactly at their Euclidean distance -- the
convention most dendrogram tooling uses, and the one the inconsistency
coefficients below depend on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import pandas as pd


class Merge(NamedTuple):
    left: int    # node id (leaves are 0..n-1, merge i creates node n+i)
    right: int
    height: float
    size: int


@dataclass
class Dendrogram:
    n_leaves: int
    merges: list[Merge]
    leaf_labels: list[str]

    def __post_init__(self) -> None:
        n = self.n_leaves
        if len(self.merges) != n - 1:
            raise ValueError(
                f"{len(self.merges)} merges for {n} leaves (need n-1)"
            )
        if len(self.leaf_labels) != n:
            raise ValueError("one leaf label per leaf required")
        sizes = {i: 1 for i in range(n)}
        prev = -np.inf
        for step, merge in enumerate(self.merges):
            expected = sizes[merge.left] + sizes[merge.right]
            if merge.size != expected:
                raise ValueError(
                    f"merge {step}: size {merge.size} != |left|+|right| = {expected}"
                )
            if merge.height < prev:
                raise ValueError(
                    f"merge {step}: height {merge.height} decreases below {prev}"
                )
            prev = merge.height
            sizes[n + step] = merge.size

    def children(self, node: int) -> tuple[int, int] | None:
        if node < self.n_leaves:
            return None
        merge = self.merges[node - self.n_leaves]
        return merge.left, merge.right

    def leaves_under(self, node: int) -> list[int]:
        if node < self.n_leaves:
            return [node]
        left, right = self.children(node)
        return self.leaves_under(left) + self.leaves_under(right)

    def leaf_order(self) -> list[int]:
        """Leaf indices in drawing order (root-first traversal)."""
        return self.leaves_under(self.n_leaves + len(self.merges) - 1)


def ward_linkage(points: np.ndarray,
                 leaf_labels: list[str] | None = None) -> Dendrogram:
    """Cluster row vectors bottom-up under Ward's criterion.

    Ties in the merge cost are broken by the smallest (left, right) node-id
    pair, making the tree reproducible.  Heights are clamped to be
    non-decreasing when floating-point noise nudges them below the previous
    merge (relative wiggle under 1e-12); larger inversions raise.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("points must be a 2-D [n, dim] matrix")
    n = x.shape[0]
    if n < 2:
        raise ValueError("clustering needs at least 2 points")
    if not np.all(np.isfinite(x)):
        raise ValueError("points contain non-finite values")
    if leaf_labels is None:
        leaf_labels = [str(i) for i in range(n)]
    if len(leaf_labels) != n:
        raise ValueError("one leaf label per point required")

    # dist2[i, j] holds 2*delta between active clusters in slots i, j.
    diff = x[:, None, :] - x[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(dist2, np.inf)

    active = list(range(n))          # slots still in play
    node_of = list(range(n))         # slot -> node id
    sizes = [1] * n                  # slot -> cluster size
    merges: list[Merge] = []
    prev_height = 0.0

    for step in range(n - 1):
        best = None  # (cost, left_node, right_node, slot_a, slot_b)
        for ai in range(len(active)):
            a = active[ai]
            for bi in range(ai + 1, len(active)):
                b = active[bi]
                cost = dist2[a, b]
                pair = tuple(sorted((node_of[a], node_of[b])))
                key = (cost, pair[0], pair[1])
                if best is None or key < (best[0], best[1], best[2]):
                    best = (cost, pair[0], pair[1], a, b)

        cost, left, right, sa, sb = best
        height = float(np.sqrt(cost))
        if height < prev_height:
            if height >= prev_height * (1.0 - 1e-12):
                height = prev_height
            else:
                raise AssertionError(
                    f"Ward monotonicity violated at step {step}: "
                    f"{height} < {prev_height}"
                )
        prev_height = height

        na, nb = sizes[sa], sizes[sb]
        merges.append(Merge(left=left, right=right, height=height, size=na + nb))

        # Lance-Williams update of 2*delta against every other active cluster.
        for c in active:
            if c in (sa, sb):
                continue
            nc = sizes[c]
            updated = ((na + nc) * dist2[sa, c] + (nb + nc) * dist2[sb, c]
                       - nc * cost) / (na + nb + nc)
            dist2[sa, c] = dist2[c, sa] = updated

        sizes[sa] = na + nb
        node_of[sa] = n + step
        active.remove(sb)
        dist2[sb, :] = np.inf
        dist2[:, sb] = np.inf

    return Dendrogram(n_leaves=n, merges=merges, leaf_labels=list(leaf_labels))


class LinkStats(NamedTuple):
    merge_index: int
    height: float
    mean: float
    std: float
    count: int
    coefficient: float


@dataclass
class InconsistencyReport:
    depth: int
    rows: list[LinkStats]

    def coefficients(self) -> np.ndarray:
        return np.array([r.coefficient for r in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=LinkStats._fields)


def inconsistency(dendro: Dendrogram, depth: int = 2) -> InconsistencyReport:
    """Standardised height of each link against nearby lower links.

    For each merge, collect the heights of links reachable within ``depth``
    levels going down (the link itself is level 1).  The coefficient is
    ``(height - mean) / std`` with the sample std, or 0 when fewer than two
    links contribute or the std is zero.  Large values mark natural cluster
    boundaries.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = dendro.n_leaves
    rows: list[LinkStats] = []
    for idx, merge in enumerate(dendro.merges):
        heights: list[float] = []
        frontier = [(n + idx, 1)]
        while frontier:
            node, level = frontier.pop()
            if node < n:
                continue
            node_merge = dendro.merges[node - n]
            heights.append(node_merge.height)
            if level < depth:
                frontier.append((node_merge.left, level + 1))
                frontier.append((node_merge.right, level + 1))
        arr = np.array(heights)
        mean = float(arr.mean())
        if arr.size < 2:
            std, coeff = 0.0, 0.0
        else:
            std = float(arr.std(ddof=1))
            coeff = 0.0 if std == 0.0 else (merge.height - mean) / std
        rows.append(LinkStats(merge_index=idx, height=merge.height,
                              mean=mean, std=std, count=int(arr.size),
                              coefficient=float(coeff)))
    return InconsistencyReport(depth=depth, rows=rows)


def cut(dendro: Dendrogram, k: int) -> dict[str, int]:
    """Flat clustering with k groups by removing the k-1 highest merges.

    Returns leaf label -> cluster id, ids assigned 1..k in order of first
    leaf appearance.
    """
    n = dendro.n_leaves
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    merged_into: dict[int, int] = {}
    for step in range(n - k):
        merge = dendro.merges[step]
        merged_into[merge.left] = n + step
        merged_into[merge.right] = n + step

    def root(node: int) -> int:
        while node in merged_into:
            node = merged_into[node]
        return node

    assignment: dict[str, int] = {}
    cluster_of_root: dict[int, int] = {}
    for leaf in range(n):
        r = root(leaf)
        if r not in cluster_of_root:
            cluster_of_root[r] = len(cluster_of_root) + 1
        assignment[dendro.leaf_labels[leaf]] = cluster_of_root[r]
    return assignment


def merges_frame(dendro: Dendrogram) -> pd.DataFrame:
    """Merge list as a table: step, left, right, height, size."""
    return pd.DataFrame(
        [(i, m.left, m.right, m.height, m.size)
         for i, m in enumerate(dendro.merges)],
        columns=["step", "left", "right", "height", "size"])


def to_dot(dendro: Dendrogram, groups: dict[str, str] | None = None) -> str:
    """DOT graph of the merge tree; internal nodes annotated with heights."""
    lines = ["digraph dendrogram {", "  rankdir=BT;",
             '  node [shape=box, fontsize=10];']
    for leaf, label in enumerate(dendro.leaf_labels):
        extra = ""
        if groups and label in groups:
            fill = "lightsalmon" if groups[label] == "amputee" else "lightblue"
            extra = f', style=filled, fillcolor="{fill}"'
        lines.append(f'  L{leaf} [label="{label}"{extra}];')
    n = dendro.n_leaves
    for idx, merge in enumerate(dendro.merges):
        node = n + idx
        lines.append(
            f'  N{node} [label="h={merge.height:.4g}\\nsize={merge.size}", '
            f'shape=ellipse];')
        for child in (merge.left, merge.right):
            child_name = f"L{child}" if child < n else f"N{child}"
            lines.append(f"  {child_name} -> N{node};")
    lines.append("}")
    return "\n".join(lines) + "\n"
