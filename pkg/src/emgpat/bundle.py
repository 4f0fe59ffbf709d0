"""Canonical on-disk EMG bundle format: types, reader/writer, segmentation.

A bundle is a directory holding ``manifest.json`` plus one ``.sig`` (signal)
and one ``.lab`` (labels) file per trial.  Signals are stored as little-endian
float32 in sample-major order so that windowing reads sequentially; labels are
one int16 per sample (0 = rest, k > 0 = gesture id).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import BundleError

SIG_MAGIC = b"EMGB"
LAB_MAGIC = b"EMGL"
FORMAT_VERSION = 1

GROUPS = ("intact", "amputee")
HANDS = ("left", "right", "both")


@dataclass
class SubjectMeta:
    """Identity and clinical metadata for one subject.

    Amputation fields are only meaningful for the amputee group; intact
    subjects must leave them unset.
    """

    id: str
    group: str
    amputated_hand: str | None = None
    years_since_amputation: int | None = None
    remaining_forearm_pct: int | None = None
    cause: str | None = None

    def validate(self) -> None:
        if not self.id or not isinstance(self.id, str):
            raise BundleError("subject id must be a non-empty string")
        if self.group not in GROUPS:
            raise BundleError(
                f"subject {self.id}: group must be one of {GROUPS}, got {self.group!r}"
            )
        amputation = {
            "amputated_hand": self.amputated_hand,
            "years_since_amputation": self.years_since_amputation,
            "remaining_forearm_pct": self.remaining_forearm_pct,
            "cause": self.cause,
        }
        if self.group == "intact":
            set_fields = [k for k, v in amputation.items() if v is not None]
            if set_fields:
                raise BundleError(
                    f"subject {self.id}: intact subject carries amputation "
                    f"fields {set_fields}"
                )
        if self.amputated_hand is not None and self.amputated_hand not in HANDS:
            raise BundleError(
                f"subject {self.id}: amputated_hand must be one of {HANDS}, "
                f"got {self.amputated_hand!r}"
            )
        if self.remaining_forearm_pct is not None and not (
            0 <= self.remaining_forearm_pct <= 100
        ):
            raise BundleError(
                f"subject {self.id}: remaining_forearm_pct "
                f"{self.remaining_forearm_pct} outside [0, 100]"
            )

    def to_json(self) -> dict:
        out: dict = {"id": self.id, "group": self.group}
        for key in ("amputated_hand", "years_since_amputation",
                    "remaining_forearm_pct", "cause"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SubjectMeta":
        return cls(
            id=obj.get("id", ""),
            group=obj.get("group", ""),
            amputated_hand=obj.get("amputated_hand"),
            years_since_amputation=obj.get("years_since_amputation"),
            remaining_forearm_pct=obj.get("remaining_forearm_pct"),
            cause=obj.get("cause"),
        )


@dataclass(eq=False)
class TrialRecord:
    """One continuous recording: signal matrix plus a per-sample label stream."""

    subject_id: str
    signal: np.ndarray  # [n_samples, n_channels] float32, millivolts
    labels: np.ndarray  # [n_samples] int16
    sample_rate: float

    def __post_init__(self) -> None:
        signal = np.asarray(self.signal)
        if signal.ndim != 2:
            raise BundleError(
                f"trial of subject {self.subject_id}: signal must be 2-D "
                f"[n_samples, n_channels], got shape {signal.shape}"
            )
        self.signal = np.ascontiguousarray(signal, dtype=np.float32)
        labels = np.asarray(self.labels)
        if labels.ndim != 1:
            raise BundleError(
                f"trial of subject {self.subject_id}: labels must be 1-D"
            )
        if labels.size and (labels.min() < 0 or labels.max() > np.iinfo(np.int16).max):
            raise BundleError(
                f"trial of subject {self.subject_id}: labels must lie in "
                f"[0, {np.iinfo(np.int16).max}]"
            )
        self.labels = np.ascontiguousarray(labels, dtype=np.int16)
        if len(self.labels) != self.n_samples:
            raise BundleError(
                f"trial of subject {self.subject_id}: {len(self.labels)} labels "
                f"for {self.n_samples} samples"
            )
        if not self.sample_rate > 0:
            raise BundleError(
                f"trial of subject {self.subject_id}: sample_rate must be > 0"
            )

    @property
    def n_samples(self) -> int:
        return self.signal.shape[0]

    @property
    def n_channels(self) -> int:
        return self.signal.shape[1]

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrialRecord):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.sample_rate == other.sample_rate
            and self.signal.shape == other.signal.shape
            and np.array_equal(self.signal, other.signal)
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class RepetitionSegment:
    """Half-open sample range of one movement repetition within a trial."""

    subject_id: str
    gesture_id: int
    repetition_index: int
    start: int
    stop: int
    trial_index: int = 0

    @property
    def n_samples(self) -> int:
        return self.stop - self.start

    def describe(self) -> str:
        return (
            f"subject {self.subject_id} gesture {self.gesture_id} "
            f"rep {self.repetition_index} [{self.start}, {self.stop})"
        )


@dataclass(eq=False)
class EmgBundle:
    """A dataset: subject metadata, gesture catalog and trial recordings."""

    subjects: list[SubjectMeta]
    gestures: dict[int, str]
    trials: list[TrialRecord]
    provenance: list[str] = field(default_factory=list)

    def validate(self) -> None:
        seen: set[str] = set()
        for meta in self.subjects:
            meta.validate()
            if meta.id in seen:
                raise BundleError(f"duplicate subject id {meta.id!r} in manifest")
            seen.add(meta.id)
        for gid in self.gestures:
            if not (isinstance(gid, int) and gid > 0):
                raise BundleError(f"gesture id {gid!r} must be a positive integer")
        for idx, trial in enumerate(self.trials):
            if trial.subject_id not in seen:
                raise BundleError(
                    f"trial {idx}: subject {trial.subject_id!r} not in manifest"
                )
            used = np.unique(trial.labels)
            unknown = [int(v) for v in used if v > 0 and int(v) not in self.gestures]
            if unknown:
                raise BundleError(
                    f"trial {idx} (subject {trial.subject_id}): labels {unknown} "
                    f"missing from gesture catalog"
                )

    def subject(self, subject_id: str) -> SubjectMeta:
        for meta in self.subjects:
            if meta.id == subject_id:
                return meta
        raise KeyError(subject_id)

    def groups(self) -> dict[str, str]:
        return {meta.id: meta.group for meta in self.subjects}

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmgBundle):
            return NotImplemented
        return (
            self.subjects == other.subjects
            and self.gestures == other.gestures
            and self.provenance == other.provenance
            and self.trials == other.trials
        )


def _trial_basename(index: int) -> str:
    return f"{index:03d}"


def write_bundle(bundle: EmgBundle, path: str | Path) -> None:
    """Write a validated bundle to ``path`` (created if missing)."""
    bundle.validate()
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)

    trial_entries = []
    for idx, trial in enumerate(bundle.trials):
        base = _trial_basename(idx)
        sig_name, lab_name = base + ".sig", base + ".lab"
        with open(root / sig_name, "wb") as fh:
            fh.write(SIG_MAGIC)
            fh.write(struct.pack("<III", FORMAT_VERSION,
                                 trial.n_channels, trial.n_samples))
            fh.write(trial.signal.astype("<f4", copy=False).tobytes())
        with open(root / lab_name, "wb") as fh:
            fh.write(LAB_MAGIC)
            fh.write(struct.pack("<I", trial.n_samples))
            fh.write(trial.labels.astype("<i2", copy=False).tobytes())
        trial_entries.append({
            "subject_id": trial.subject_id,
            "signal_file": sig_name,
            "label_file": lab_name,
            "n_samples": trial.n_samples,
            "n_channels": trial.n_channels,
            "sample_rate": trial.sample_rate,
        })

    manifest = {
        "format_version": str(FORMAT_VERSION),
        "subjects": [meta.to_json() for meta in bundle.subjects],
        "gestures": {str(gid): name for gid, name in sorted(bundle.gestures.items())},
        "trials": trial_entries,
        "provenance": list(bundle.provenance),
    }
    with open(root / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_exact(path: Path, expected: int) -> bytes:
    actual = path.stat().st_size
    if actual != expected:
        raise BundleError(
            f"{path.name}: expected {expected} bytes, found {actual}"
        )
    return path.read_bytes()


def read_bundle(path: str | Path) -> EmgBundle:
    """Read a bundle directory, checking format invariants as it goes."""
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise BundleError(f"missing manifest: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleError(f"{manifest_path.name}: invalid JSON ({exc})") from exc

    version = manifest.get("format_version")
    if version != str(FORMAT_VERSION):
        raise BundleError(
            f"unsupported bundle format_version {version!r} "
            f"(expected {FORMAT_VERSION!r})"
        )

    subjects = [SubjectMeta.from_json(obj) for obj in manifest.get("subjects", [])]
    gestures: dict[int, str] = {}
    for key, name in manifest.get("gestures", {}).items():
        try:
            gid = int(key)
        except ValueError as exc:
            raise BundleError(f"gesture id {key!r} is not an integer") from exc
        gestures[gid] = str(name)

    trials = []
    for entry in manifest.get("trials", []):
        sig_path = root / entry["signal_file"]
        lab_path = root / entry["label_file"]
        for p in (sig_path, lab_path):
            if not p.is_file():
                raise BundleError(f"manifest references missing file: {p.name}")
        n_samples = int(entry["n_samples"])
        n_channels = int(entry["n_channels"])

        raw = _read_exact(sig_path, 16 + 4 * n_samples * n_channels)
        if raw[:4] != SIG_MAGIC:
            raise BundleError(
                f"{sig_path.name}: bad magic {raw[:4]!r}, expected {SIG_MAGIC!r}"
            )
        file_version, file_channels, file_samples = struct.unpack("<III", raw[4:16])
        if file_version != FORMAT_VERSION:
            raise BundleError(
                f"{sig_path.name}: version {file_version}, expected {FORMAT_VERSION}"
            )
        if (file_samples, file_channels) != (n_samples, n_channels):
            raise BundleError(
                f"{sig_path.name}: header says {file_samples}x{file_channels}, "
                f"manifest says {n_samples}x{n_channels}"
            )
        signal = np.frombuffer(raw[16:], dtype="<f4").reshape(n_samples, n_channels)

        raw = _read_exact(lab_path, 8 + 2 * n_samples)
        if raw[:4] != LAB_MAGIC:
            raise BundleError(
                f"{lab_path.name}: bad magic {raw[:4]!r}, expected {LAB_MAGIC!r}"
            )
        (count,) = struct.unpack("<I", raw[4:8])
        if count != n_samples:
            raise BundleError(
                f"{lab_path.name}: {count} labels for {n_samples} samples"
            )
        labels = np.frombuffer(raw[8:], dtype="<i2")

        trials.append(TrialRecord(
            subject_id=entry["subject_id"],
            signal=signal,
            labels=labels,
            sample_rate=float(entry["sample_rate"]),
        ))

    bundle = EmgBundle(
        subjects=subjects,
        gestures=gestures,
        trials=trials,
        provenance=[str(x) for x in manifest.get("provenance", [])],
    )
    bundle.validate()
    return bundle


def segment_repetitions(trial: TrialRecord, trial_index: int = 0) -> list[RepetitionSegment]:
    """Split a trial into movement repetitions.

    One segment per maximal run of identical nonzero labels; repetition
    indices count up per gesture in temporal order.  Rest runs (label 0)
    produce no segment.
    """
    labels = trial.labels
    n = len(labels)
    if n == 0:
        return []
    boundaries = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate(([0], boundaries))
    stops = np.concatenate((boundaries, [n]))

    segments: list[RepetitionSegment] = []
    counts: dict[int, int] = {}
    for start, stop in zip(starts, stops):
        gid = int(labels[start])
        if gid == 0:
            continue
        counts[gid] = counts.get(gid, 0) + 1
        segments.append(RepetitionSegment(
            subject_id=trial.subject_id,
            gesture_id=gid,
            repetition_index=counts[gid],
            start=int(start),
            stop=int(stop),
            trial_index=trial_index,
        ))
    return segments


def segment_bundle(bundle: EmgBundle) -> list[RepetitionSegment]:
    """Segment every trial, renumbering repetitions per (subject, gesture)
    across that subject's trials in manifest order."""
    counts: dict[tuple[str, int], int] = {}
    segments: list[RepetitionSegment] = []
    for idx, trial in enumerate(bundle.trials):
        for seg in segment_repetitions(trial, trial_index=idx):
            key = (seg.subject_id, seg.gesture_id)
            counts[key] = counts.get(key, 0) + 1
            segments.append(replace(seg, repetition_index=counts[key]))
    return segments
