"""Per-subject signature vectors: the average myoelectric pattern.

A signature is the mean feature value per (gesture, channel, feature kind),
pooled over every window of every repetition, flattened gesture-major.  With
the paper-scale dataset that is 38 x 12 x 4 = 1824 dimensions per subject.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from .features import FEATURE_NAMES, FeatureTensor


@dataclass
class SubjectSignature:
    subject_id: str
    vector: np.ndarray  # [n_gestures * n_channels * 4]
    scheme: str = "mean-over-windows"


@dataclass
class Standardizer:
    """Per-dimension moments used to z-score signatures across subjects."""

    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray  # bool mask of flagged dimensions

    def apply(self, vector: np.ndarray) -> np.ndarray:
        out = np.zeros_like(vector, dtype=np.float64)
        ok = ~self.zero_variance
        out[ok] = (vector[ok] - self.mean[ok]) / self.std[ok]
        return out


def dimension_names(gesture_ids: list[int], n_channels: int) -> list[str]:
    """Column names in signature order; channels displayed 1-based."""
    return [
        f"g{gid}_ch{c + 1}_{feat}"
        for gid in gesture_ids
        for c in range(n_channels)
        for feat in FEATURE_NAMES
    ]


def build_signature(tensor: FeatureTensor, subject_id: str,
                    gesture_ids: list[int] | None = None) -> SubjectSignature:
    """Average one subject's windows into a fixed-length signature.

    Entry (g, c, f) is the mean of feature f on channel c over all windows of
    all repetitions of gesture g; missing (subject, gesture) coverage is an
    error rather than an imputation.
    """
    if gesture_ids is None:
        gesture_ids = tensor.gesture_ids()
    per_gesture: dict[int, list[np.ndarray]] = {g: [] for g in gesture_ids}
    for key, arr in zip(tensor.segments, tensor.values):
        if key.subject_id != subject_id or key.gesture_id not in per_gesture:
            continue
        per_gesture[key.gesture_id].append(arr)

    parts = []
    for gid in gesture_ids:
        chunks = per_gesture[gid]
        if not chunks:
            raise ValueError(
                f"subject {subject_id}: no windows for gesture {gid}; "
                f"cannot build signature"
            )
        stacked = np.concatenate(chunks, axis=0)  # [windows, C, 4]
        parts.append(stacked.mean(axis=0).ravel())
    vector = np.concatenate(parts)
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"subject {subject_id}: non-finite signature values")
    return SubjectSignature(subject_id=subject_id, vector=vector)


def build_signatures(tensor: FeatureTensor,
                     gesture_ids: list[int] | None = None) -> list[SubjectSignature]:
    """Signatures for every subject in the tensor, in order of appearance."""
    if gesture_ids is None:
        gesture_ids = tensor.gesture_ids()
    return [build_signature(tensor, subject, gesture_ids)
            for subject in tensor.subjects()]


def signature_matrix(signatures: list[SubjectSignature]) -> tuple[list[str], np.ndarray]:
    ids = [s.subject_id for s in signatures]
    lengths = {len(s.vector) for s in signatures}
    if len(lengths) > 1:
        raise ValueError(f"signatures have inconsistent lengths: {sorted(lengths)}")
    return ids, np.vstack([s.vector for s in signatures])


def standardize(signatures: list[SubjectSignature]) -> tuple[list[SubjectSignature], Standardizer]:
    """Z-score each dimension across subjects (sample std, ddof=1).

    Zero-variance dimensions are set to 0 and flagged in the returned
    :class:`Standardizer`.
    """
    if len(signatures) < 2:
        raise ValueError("standardize needs at least 2 subjects")
    ids, x = signature_matrix(signatures)
    mean = x.mean(axis=0)
    std = x.std(axis=0, ddof=1)
    # Identical inputs can leave femto-scale residual variance; flag those too.
    zero_var = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    scaled = np.zeros_like(x)
    ok = ~zero_var
    scaled[:, ok] = (x[:, ok] - mean[ok]) / std[ok]
    out = [SubjectSignature(subject_id=s.subject_id, vector=scaled[i],
                            scheme=s.scheme + "+standardized")
           for i, s in enumerate(signatures)]
    return out, Standardizer(mean=mean, std=std, zero_variance=zero_var)


def signatures_to_frame(signatures: list[SubjectSignature],
                        gesture_ids: list[int], n_channels: int,
                        groups: dict[str, str] | None = None) -> pd.DataFrame:
    ids, x = signature_matrix(signatures)
    names = dimension_names(gesture_ids, n_channels)
    if x.shape[1] != len(names):
        raise ValueError(
            f"signature length {x.shape[1]} does not match "
            f"{len(names)} dimension names"
        )
    frame = pd.DataFrame(x, columns=names)
    frame.insert(0, "subject", ids)
    if groups is not None:
        frame.insert(1, "group", [groups.get(i, "") for i in ids])
    return frame


def signatures_from_frame(frame: pd.DataFrame) -> tuple[list[SubjectSignature], dict[str, str]]:
    if "subject" not in frame.columns:
        raise ValueError("signature table missing 'subject' column")
    groups: dict[str, str] = {}
    value_cols = [c for c in frame.columns if c not in ("subject", "group")]
    signatures = []
    for _, row in frame.iterrows():
        sid = str(row["subject"])
        signatures.append(SubjectSignature(
            subject_id=sid,
            vector=row[value_cols].to_numpy(dtype=np.float64),
        ))
        if "group" in frame.columns:
            groups[sid] = str(row["group"])
    return signatures, groups
