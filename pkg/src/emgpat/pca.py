"""Principal component analysis for signature visualisation.

Fit is an SVD of the mean-centered data (equivalent to the eigendecomposition
of the 1/(n-1) covariance); components are sorted by descending variance and
signed so each component's largest-magnitude loading is positive, which keeps
score plots reproducible across runs and machines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd


@dataclass
class PcaModel:
    mean: np.ndarray                      # [dim]
    components: np.ndarray                # [dim, k], orthonormal columns
    explained_variance: np.ndarray        # [k]
    explained_variance_ratio: np.ndarray  # [k]
    total_variance: float

    @property
    def n_components(self) -> int:
        return self.components.shape[1]


def pca_fit(x: np.ndarray, n_components: int | None = None) -> PcaModel:
    """Fit a PCA model on rows of ``x``.

    By default keeps min(n-1, dim) components, which spans all the variance
    the centered data can carry.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("x must be a 2-D [n, dim] matrix")
    n, dim = x.shape
    if n < 2:
        raise ValueError("PCA needs at least 2 rows")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite values")

    max_components = min(n - 1, dim)
    if n_components is None:
        n_components = max_components
    if not 1 <= n_components <= max_components:
        raise ValueError(
            f"n_components={n_components} outside [1, {max_components}]"
        )

    mean = x.mean(axis=0)
    centered = x - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    variances = singular ** 2 / (n - 1)
    total = float(variances.sum())

    components = vt[:n_components].T.copy()
    for j in range(components.shape[1]):
        col = components[:, j]
        if col[np.argmax(np.abs(col))] < 0:
            components[:, j] = -col

    explained = variances[:n_components]
    if total > 0:
        ratios = explained / total
    else:
        ratios = np.zeros_like(explained)
    return PcaModel(mean=mean, components=components,
                    explained_variance=explained,
                    explained_variance_ratio=ratios,
                    total_variance=total)


def pca_transform(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Project rows onto the model's components."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"dimension mismatch: data has {x.shape[1]}, model expects "
            f"{model.mean.shape[0]}"
        )
    return (x - model.mean) @ model.components


def pca_inverse(model: PcaModel, scores: np.ndarray) -> np.ndarray:
    """Map scores back to the original space."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim == 1:
        scores = scores[None, :]
    if scores.shape[1] != model.n_components:
        raise ValueError(
            f"score dimension {scores.shape[1]} != {model.n_components}"
        )
    return scores @ model.components.T + model.mean


def scores_frame(model: PcaModel, x: np.ndarray, subject_ids: list[str],
                 groups: dict[str, str] | None = None,
                 n_components: int | None = None) -> pd.DataFrame:
    """Score table: subject, group, pc1..pcK."""
    scores = pca_transform(model, x)
    k = scores.shape[1] if n_components is None else min(n_components,
                                                         scores.shape[1])
    frame = pd.DataFrame(scores[:, :k],
                         columns=[f"pc{i + 1}" for i in range(k)])
    frame.insert(0, "subject", subject_ids)
    frame.insert(1, "group", [(groups or {}).get(s, "") for s in subject_ids])
    return frame


def variance_frame(model: PcaModel) -> pd.DataFrame:
    """Variance table: component, variance, ratio, cumulative."""
    cumulative = np.cumsum(model.explained_variance_ratio)
    return pd.DataFrame({
        "component": np.arange(1, model.n_components + 1),
        "variance": model.explained_variance,
        "ratio": model.explained_variance_ratio,
        "cumulative": cumulative,
    })
