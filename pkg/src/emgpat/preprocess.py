"""Power-line interference removal and transition trimming.

The interference filter is a Hampel outlier detector applied to the magnitude
spectrum of a whole trial, restricted to neighborhoods of the line frequency
and its harmonics.  A time-domain Hampel cannot target specific frequencies;
operating on the spectrum is the established way to clean line hum from EMG
without notching away genuine signal power elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bundle import EmgBundle, RepetitionSegment, TrialRecord

MAD_TO_SIGMA = 1.4826  # consistent scale factor for Gaussian data


@dataclass
class HampelConfig:
    """Spectral Hampel parameters.

    ``harmonics=None`` targets every integer multiple of ``line_freq`` below
    Nyquist; pass an explicit list of frequencies to restrict it.
    """

    line_freq: float = 50.0
    half_window_bins: int = 3
    nsigma: float = 3.0
    harmonics: Sequence[float] | None = None

    def validate(self, sample_rate: float) -> None:
        if self.half_window_bins < 1:
            raise ValueError("half_window_bins must be >= 1")
        if not self.nsigma > 0:
            raise ValueError("nsigma must be > 0")
        if not 0 < self.line_freq < sample_rate / 2:
            raise ValueError(
                f"line_freq {self.line_freq} Hz outside (0, Nyquist="
                f"{sample_rate / 2} Hz)"
            )
        if self.harmonics is not None:
            for freq in self.harmonics:
                if not 0 < freq < sample_rate / 2:
                    raise ValueError(
                        f"harmonic {freq} Hz outside (0, Nyquist)"
                    )

    def target_frequencies(self, sample_rate: float) -> list[float]:
        if self.harmonics is not None:
            return sorted(self.harmonics)
        out = []
        k = 1
        while k * self.line_freq < sample_rate / 2:
            out.append(k * self.line_freq)
            k += 1
        return out


def hampel_despike_spectrum(
    channel: np.ndarray, rate: float, cfg: HampelConfig | None = None
) -> np.ndarray:
    """Suppress line-frequency spectral spikes in one channel.

    Every magnitude bin within ``half_window_bins`` of a targeted harmonic is
    compared against the median of its local window (same width, computed on
    the unmodified spectrum); bins deviating by more than
    ``nsigma * 1.4826 * MAD`` are replaced by that median, phase untouched.
    Returns a real vector of the same length.
    """
    cfg = cfg or HampelConfig()
    cfg.validate(rate)
    x = np.asarray(channel, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("channel must be a 1-D sample vector")

    n = x.size
    n_bins = n // 2 + 1
    w = cfg.half_window_bins
    if n_bins < 2 * w + 1:
        raise ValueError(
            f"signal too short: {n_bins} frequency bins, need >= {2 * w + 1}"
        )

    spectrum = np.fft.rfft(x)
    magnitude = np.abs(spectrum)

    candidates: set[int] = set()
    for freq in cfg.target_frequencies(rate):
        center = int(round(freq * n / rate))
        lo = max(center - w, 0)
        hi = min(center + w, n_bins - 1)
        candidates.update(range(lo, hi + 1))

    for i in sorted(candidates):
        lo = max(i - w, 0)
        hi = min(i + w, n_bins - 1)
        window = magnitude[lo:hi + 1]
        median = np.median(window)
        mad = np.median(np.abs(window - median))
        if np.abs(magnitude[i] - median) > cfg.nsigma * MAD_TO_SIGMA * mad:
            old = magnitude[i]
            phase = spectrum[i] / old if old > 0 else 1.0
            spectrum[i] = median * phase

    return np.fft.irfft(spectrum, n=n)


def despike_trial(trial: TrialRecord, cfg: HampelConfig | None = None) -> TrialRecord:
    """Apply the spectral Hampel filter to every channel of a trial."""
    cleaned = np.empty_like(trial.signal, dtype=np.float64)
    for c in range(trial.n_channels):
        cleaned[:, c] = hampel_despike_spectrum(
            trial.signal[:, c], trial.sample_rate, cfg
        )
    return TrialRecord(
        subject_id=trial.subject_id,
        signal=cleaned,
        labels=trial.labels.copy(),
        sample_rate=trial.sample_rate,
    )


def despike_bundle(bundle: EmgBundle, cfg: HampelConfig | None = None) -> EmgBundle:
    """Return a new bundle with every trial despiked."""
    return EmgBundle(
        subjects=list(bundle.subjects),
        gestures=dict(bundle.gestures),
        trials=[despike_trial(t, cfg) for t in bundle.trials],
        provenance=list(bundle.provenance),
    )


def trim_samples(trim_ms: float, rate: float) -> int:
    return int(round(trim_ms * rate / 1000.0))


def trim_transitions(
    seg: RepetitionSegment, trim_ms: float, rate: float
) -> RepetitionSegment:
    """Shrink a segment by ``trim_ms`` worth of samples on each side.

    Intended to drop the ambiguous transition samples around movement onset
    and offset.  Raises if the trimmed segment would be empty.
    """
    if trim_ms < 0:
        raise ValueError("trim_ms must be >= 0")
    t = trim_samples(trim_ms, rate)
    start, stop = seg.start + t, seg.stop - t
    if start >= stop:
        raise ValueError(
            f"over-trim: {seg.describe()} has {seg.n_samples} samples, "
            f"cannot trim {t} from each side"
        )
    return replace(seg, start=start, stop=stop)


def trim_bundle_labels(bundle: EmgBundle, trim_ms: float) -> EmgBundle:
    """Bake transition trimming into a bundle by zeroing run-boundary labels.

    Equivalent to applying :func:`trim_transitions` to every segment and
    rebuilding the label streams, so downstream segmentation sees the
    trimmed ranges directly.
    """
    from .bundle import segment_repetitions  # local to avoid cycle at import

    trials = []
    for idx, trial in enumerate(bundle.trials):
        labels = np.zeros_like(trial.labels)
        for seg in segment_repetitions(trial, idx):
            trimmed = trim_transitions(seg, trim_ms, trial.sample_rate)
            labels[trimmed.start:trimmed.stop] = trimmed.gesture_id
        trials.append(TrialRecord(
            subject_id=trial.subject_id,
            signal=trial.signal,
            labels=labels,
            sample_rate=trial.sample_rate,
        ))
    return EmgBundle(
        subjects=list(bundle.subjects),
        gestures=dict(bundle.gestures),
        trials=trials,
        provenance=list(bundle.provenance),
    )
