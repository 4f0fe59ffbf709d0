"""Overlapped windowing and the four Hudgins time-domain features.

Feature conventions, fixed for reproducibility:

* ZC counts adjacent sample pairs with strictly opposite (nonzero) signs
  whose gap ``|x[i] - x[i+1]|`` meets the threshold (>=).
* SSC counts interior points whose slope product
  ``(x[i] - x[i-1]) * (x[i] - x[i+1])`` meets the threshold (>=) and is
  strictly positive, i.e. the slope genuinely reverses; flat runs never
  count, so an all-zero window scores 0 even at threshold 0.
* Default thresholds are 0.01 of the per-channel RMS over the whole trial,
  which keeps the counts comparable across electrodes with different gains.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import pandas as pd
from numpy.lib.stride_tricks import sliding_window_view

from .bundle import EmgBundle, RepetitionSegment

FEATURE_NAMES = ("MAV", "WL", "ZC", "SSC")


@dataclass
class WindowingConfig:
    window_ms: float = 200.0
    increment_ms: float = 100.0

    def __post_init__(self) -> None:
        if not self.window_ms > 0:
            raise ValueError("window_ms must be > 0")
        if not 0 < self.increment_ms <= self.window_ms:
            raise ValueError("increment_ms must satisfy 0 < increment <= window")

    def in_samples(self, rate: float) -> tuple[int, int]:
        w = int(round(self.window_ms * rate / 1000.0))
        i = int(round(self.increment_ms * rate / 1000.0))
        return w, i


@dataclass
class ThresholdSpec:
    """ZC/SSC thresholds; relative values are scaled by per-channel trial RMS."""

    eps_zc: float = 0.01
    eps_ssc: float = 0.01
    relative: bool = True

    def __post_init__(self) -> None:
        if self.eps_zc < 0 or self.eps_ssc < 0:
            raise ValueError("thresholds must be >= 0")

    def resolve(self, trial_rms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-channel (eps_zc, eps_ssc) for one trial."""
        if self.relative:
            return self.eps_zc * trial_rms, self.eps_ssc * trial_rms
        n = len(trial_rms)
        return np.full(n, self.eps_zc), np.full(n, self.eps_ssc)


def windows(n_samples: int, cfg: WindowingConfig, rate: float) -> list[tuple[int, int]]:
    """Half-open window ranges ``[k*I, k*I + W)`` covering a segment."""
    w, inc = cfg.in_samples(rate)
    if n_samples < w:
        raise ValueError(
            f"segment of {n_samples} samples is shorter than the "
            f"{w}-sample window"
        )
    count = (n_samples - w) // inc + 1
    return [(k * inc, k * inc + w) for k in range(count)]


def mav(x: np.ndarray) -> float:
    """Mean absolute value."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("mav: empty window")
    return float(np.mean(np.abs(x)))


def wl(x: np.ndarray) -> float:
    """Waveform length: total absolute first difference."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise ValueError("wl: window must have >= 2 samples")
    return float(np.sum(np.abs(np.diff(x))))


def zc(x: np.ndarray, eps: float = 0.0) -> int:
    """Thresholded zero-crossing count."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise ValueError("zc: window must have >= 2 samples")
    if eps < 0:
        raise ValueError("zc: eps must be >= 0")
    a, b = x[:-1], x[1:]
    sa, sb = np.sign(a), np.sign(b)
    flips = (sa != 0) & (sb != 0) & (sa != sb) & (np.abs(a - b) >= eps)
    return int(np.count_nonzero(flips))


def ssc(x: np.ndarray, eps: float = 0.0) -> int:
    """Thresholded slope-sign-change count."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        raise ValueError("ssc: window must have >= 3 samples")
    if eps < 0:
        raise ValueError("ssc: eps must be >= 0")
    mid = x[1:-1]
    product = (mid - x[:-2]) * (mid - x[2:])
    hits = (product >= eps) & (product > 0)
    return int(np.count_nonzero(hits))


class SegmentKey(NamedTuple):
    subject_id: str
    gesture_id: int
    repetition_index: int


@dataclass
class FeatureTensor:
    """Per-window features for a set of segments.

    ``values[i]`` has shape [n_windows, n_channels, 4] with the feature axis
    ordered as ``FEATURE_NAMES``; ``segments[i]`` identifies the segment.
    """

    segments: list[SegmentKey]
    values: list[np.ndarray]
    n_channels: int
    thresholds: ThresholdSpec = field(default_factory=ThresholdSpec)

    def subjects(self) -> list[str]:
        out: list[str] = []
        for key in self.segments:
            if key.subject_id not in out:
                out.append(key.subject_id)
        return out

    def gesture_ids(self) -> list[int]:
        return sorted({key.gesture_id for key in self.segments})

    def window_table(self) -> tuple[np.ndarray, pd.DataFrame]:
        """Flatten to per-window vectors.

        Returns (X, meta): X is [n_windows_total, n_channels * 4] with
        channel-major layout (ch0 MAV, ch0 WL, ch0 ZC, ch0 SSC, ch1 MAV, ...)
        and meta carries subject/gesture/repetition/window per row.
        """
        blocks, rows = [], []
        for key, arr in zip(self.segments, self.values):
            k = arr.shape[0]
            blocks.append(arr.reshape(k, -1))
            for widx in range(k):
                rows.append((key.subject_id, key.gesture_id,
                             key.repetition_index, widx))
        x = np.vstack(blocks) if blocks else np.empty((0, self.n_channels * 4))
        meta = pd.DataFrame(rows, columns=["subject", "gesture",
                                           "repetition", "window"])
        return x, meta

    def to_frame(self) -> pd.DataFrame:
        """Long form: subject,gesture,repetition,window,channel,feature,value."""
        records = []
        for key, arr in zip(self.segments, self.values):
            n_windows, n_channels, _ = arr.shape
            for widx in range(n_windows):
                for c in range(n_channels):
                    for f, name in enumerate(FEATURE_NAMES):
                        records.append((key.subject_id, key.gesture_id,
                                        key.repetition_index, widx, c, name,
                                        arr[widx, c, f]))
        return pd.DataFrame(records, columns=[
            "subject", "gesture", "repetition", "window",
            "channel", "feature", "value"])

    @classmethod
    def from_frame(cls, frame: pd.DataFrame,
                   thresholds: ThresholdSpec | None = None) -> "FeatureTensor":
        required = {"subject", "gesture", "repetition", "window",
                    "channel", "feature", "value"}
        missing = required - set(frame.columns)
        if missing:
            raise ValueError(f"feature table missing columns: {sorted(missing)}")
        n_channels = int(frame["channel"].max()) + 1
        segments: list[SegmentKey] = []
        values: list[np.ndarray] = []
        feat_idx = {name: i for i, name in enumerate(FEATURE_NAMES)}
        grouped = frame.groupby(["subject", "gesture", "repetition"], sort=False)
        for (subj, gest, rep), grp in grouped:
            n_windows = int(grp["window"].max()) + 1
            arr = np.full((n_windows, n_channels, 4), np.nan)
            arr[grp["window"].to_numpy(),
                grp["channel"].to_numpy(),
                [feat_idx[f] for f in grp["feature"]]] = grp["value"].to_numpy()
            if np.isnan(arr).any():
                raise ValueError(
                    f"feature table incomplete for subject {subj} "
                    f"gesture {gest} rep {rep}")
            segments.append(SegmentKey(str(subj), int(gest), int(rep)))
            values.append(arr)
        return cls(segments=segments, values=values, n_channels=n_channels,
                   thresholds=thresholds or ThresholdSpec())


def _segment_features(seg_signal: np.ndarray, w: int, inc: int,
                      eps_zc: np.ndarray, eps_ssc: np.ndarray) -> np.ndarray:
    """Vectorised per-window features for one segment [n, C] -> [K, C, 4]."""
    n, n_channels = seg_signal.shape
    count = (n - w) // inc + 1
    out = np.empty((count, n_channels, 4))
    for c in range(n_channels):
        win = sliding_window_view(seg_signal[:, c], w)[::inc][:count]
        diffs = np.diff(win, axis=1)
        out[:, c, 0] = np.mean(np.abs(win), axis=1)
        out[:, c, 1] = np.sum(np.abs(diffs), axis=1)
        sa, sb = np.sign(win[:, :-1]), np.sign(win[:, 1:])
        flips = (sa != 0) & (sb != 0) & (sa != sb) & (np.abs(diffs) >= eps_zc[c])
        out[:, c, 2] = np.count_nonzero(flips, axis=1)
        mid = win[:, 1:-1]
        product = (mid - win[:, :-2]) * (mid - win[:, 2:])
        hits = (product >= eps_ssc[c]) & (product > 0)
        out[:, c, 3] = np.count_nonzero(hits, axis=1)
    return out


def extract(bundle: EmgBundle, segments: Iterable[RepetitionSegment],
            cfg: WindowingConfig | None = None,
            thresholds: ThresholdSpec | None = None) -> FeatureTensor:
    """Compute the Hudgins features for every window of every segment."""
    cfg = cfg or WindowingConfig()
    thresholds = thresholds or ThresholdSpec()
    segments = list(segments)

    channel_counts = {bundle.trials[s.trial_index].n_channels for s in segments}
    if len(channel_counts) > 1:
        raise ValueError(
            f"segments span trials with differing channel counts: "
            f"{sorted(channel_counts)}"
        )
    n_channels = channel_counts.pop() if channel_counts else 0

    trial_eps: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    keys: list[SegmentKey] = []
    values: list[np.ndarray] = []
    for seg in segments:
        trial = bundle.trials[seg.trial_index]
        w, inc = cfg.in_samples(trial.sample_rate)
        if w < 3:
            raise ValueError(
                f"window of {w} samples too short for SSC (needs >= 3)"
            )
        if seg.n_samples < w:
            raise ValueError(
                f"{seg.describe()}: {seg.n_samples} samples shorter than "
                f"the {w}-sample window"
            )
        if seg.trial_index not in trial_eps:
            rms = np.sqrt(np.mean(
                trial.signal.astype(np.float64) ** 2, axis=0))
            trial_eps[seg.trial_index] = thresholds.resolve(rms)
        eps_zc_ch, eps_ssc_ch = trial_eps[seg.trial_index]
        sig = trial.signal[seg.start:seg.stop].astype(np.float64)
        arr = _segment_features(sig, w, inc, eps_zc_ch, eps_ssc_ch)
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{seg.describe()}: non-finite feature values")
        keys.append(SegmentKey(seg.subject_id, seg.gesture_id,
                               seg.repetition_index))
        values.append(arr)

    return FeatureTensor(segments=keys, values=values,
                         n_channels=n_channels, thresholds=thresholds)
