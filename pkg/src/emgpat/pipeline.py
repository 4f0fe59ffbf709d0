"""End-to-end pipeline: config file, staged execution, run manifest, report.

A run executes preprocess -> features -> signatures -> {cluster, pca,
classify} into ``<out>/run``, recording parameters and content hashes of
every product in ``run-manifest.json``.  The two heavy stages (interference
filtering, feature extraction) are cached under ``<out>/cache`` keyed by
content hash, so re-running classification with new settings does not redo
the filtering.  A failing stage quarantines the partial products under
``<out>/failed-NNN`` and raises with the stage name.

The manifest deliberately contains no timestamps or absolute paths: two runs
with identical config and bundle must produce byte-identical outputs.
"""

from __future__ import annotations

import hashlib
import json
import shutil
from dataclasses import dataclass, field, asdict

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .bundle import EmgBundle, read_bundle, segment_bundle, write_bundle
from .classify import (CvReport, cv_gesture, cv_subject_group_signature,
                       cv_subject_group_window, group_accuracy_comparison,
                       welch_ttest)
from .cluster import (Dendrogram, Merge, cut, inconsistency, merges_frame,
                      to_dot, ward_linkage)
from .errors import ConfigError, PipelineError
from .features import (FeatureTensor, ThresholdSpec, WindowingConfig, extract)
from .pca import pca_fit, scores_frame, variance_frame
from .preprocess import HampelConfig, despike_bundle, trim_transitions
from .signatures import (build_signatures, signature_matrix,
                         signatures_to_frame, standardize)
from .synth import PAPER_GESTURE_NAMES

ALL_SCHEMES = ("gesture", "subject-sig", "subject-window")


@dataclass
class PipelineConfig:
    bundle: str = ""
    out_dir: str = "emgpat-out"
    # preprocessing
    hampel_enabled: bool = True
    line_freq: float = 50.0
    hampel_half_window: int = 3
    hampel_nsigma: float = 3.0
    trim_ms: float = 0.0
    # windowing and thresholds
    window_ms: float = 200.0
    increment_ms: float = 100.0
    eps_zc: float = 0.01
    eps_ssc: float = 0.01
    eps_mode: str = "relative"
    # signatures / clustering / projection
    standardize: bool = True
    inconsistency_depth: int = 2
    cut_ks: list[int] = field(default_factory=lambda: [2, 6])
    pca_components: int = 3
    # classification
    gamma: float = 1e-3
    gestures: list = field(default_factory=lambda: list(PAPER_GESTURE_NAMES))
    vote: bool = False
    schemes: list[str] = field(default_factory=lambda: list(ALL_SCHEMES))
    # synthetic fixtures only
    seed: int = 0

    def validate(self) -> None:
        if not self.bundle:
            raise ConfigError("config: 'bundle' path is required")
        if self.eps_mode not in ("relative", "absolute"):
            raise ConfigError("config: eps_mode must be 'relative' or 'absolute'")
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ConfigError(
                f"config: unknown schemes {unknown}; valid: {list(ALL_SCHEMES)}"
            )
        for k in self.cut_ks:
            if not (isinstance(k, int) and k >= 1):
                raise ConfigError(f"config: cut k must be a positive integer, got {k!r}")
        try:
            WindowingConfig(self.window_ms, self.increment_ms)
            ThresholdSpec(self.eps_zc, self.eps_ssc,
                          relative=self.eps_mode == "relative")
        except ValueError as exc:
            raise ConfigError(f"config: {exc}") from exc
        if self.trim_ms < 0:
            raise ConfigError("config: trim_ms must be >= 0")
        if self.gamma < 0:
            raise ConfigError("config: gamma must be >= 0")

    def hampel(self) -> HampelConfig:
        return HampelConfig(line_freq=self.line_freq,
                            half_window_bins=self.hampel_half_window,
                            nsigma=self.hampel_nsigma)

    def windowing(self) -> WindowingConfig:
        return WindowingConfig(self.window_ms, self.increment_ms)

    def thresholds(self) -> ThresholdSpec:
        return ThresholdSpec(self.eps_zc, self.eps_ssc,
                             relative=self.eps_mode == "relative")


_CONFIG_COMMENTS = {
    "bundle": "path to the input bundle directory",
    "out_dir": "analysis products are written under this directory",
    "hampel_enabled": "spectral interference filtering on/off",
    "line_freq": "power-line fundamental, Hz",
    "hampel_half_window": "half window, frequency bins",
    "hampel_nsigma": "outlier threshold, robust sigmas",
    "trim_ms": "transition trim per segment side, ms (0 = off)",
    "window_ms": "analysis window length, ms",
    "increment_ms": "window increment, ms",
    "eps_zc": "zero-crossing threshold",
    "eps_ssc": "slope-sign-change threshold",
    "eps_mode": "'relative' (fraction of per-channel trial RMS) or 'absolute'",
    "standardize": "z-score signature dimensions before cluster/PCA/group CV",
    "inconsistency_depth": "levels of lower links per inconsistency coefficient",
    "cut_ks": "flat cluster counts to export",
    "pca_components": "score columns to export",
    "gamma": "LDA covariance shrinkage",
    "gestures": "gesture subset for gesture CV (names or ids)",
    "vote": "majority-vote per repetition instead of per-window scoring",
    "schemes": "which classification schemes to run",
    "seed": "random seed (synthetic fixtures only)",
}


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def config_to_toml(config: PipelineConfig) -> str:
    lines = ["# emgpat pipeline configuration", ""]
    for key, value in asdict(config).items():
        comment = _CONFIG_COMMENTS.get(key)
        if comment:
            lines.append(f"# {comment}")
        lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def config_from_toml(path: str | Path) -> PipelineConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML ({exc})") from exc
    valid = set(PipelineConfig.__dataclass_fields__)
    unknown = set(data) - valid
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    config = PipelineConfig(**data)
    config.validate()
    return config


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def bundle_content_hash(path: str | Path) -> str:
    root = Path(path)
    digest = hashlib.sha256()
    for name in sorted(p.name for p in root.iterdir() if p.is_file()):
        digest.update(name.encode())
        digest.update(bytes.fromhex(sha256_file(root / name)))
    return digest.hexdigest()


def resolve_gestures(bundle: EmgBundle, requested: list) -> list[int]:
    """Map requested gesture names/ids onto catalog ids, validation-first."""
    by_name = {name.strip().casefold(): gid
               for gid, name in bundle.gestures.items()}
    resolved = []
    for item in requested:
        if isinstance(item, int) or (isinstance(item, str) and item.isdigit()):
            gid = int(item)
            if gid not in bundle.gestures:
                raise ConfigError(f"gesture id {gid} not in the bundle catalog")
        else:
            key = str(item).strip().casefold()
            if key not in by_name:
                raise ConfigError(
                    f"gesture {item!r} not in the bundle catalog; "
                    f"available: {sorted(bundle.gestures.values())}"
                )
            gid = by_name[key]
        resolved.append(gid)
    if len(set(resolved)) < 2:
        raise ConfigError("gesture subset must name >= 2 distinct gestures")
    return sorted(set(resolved))


def paper_conformance_report(bundle: EmgBundle) -> list[str]:
    """Deviations from the study's recording protocol (not format errors)."""
    problems = []
    for idx, trial in enumerate(bundle.trials):
        if trial.n_channels != 12:
            problems.append(
                f"trial {idx}: {trial.n_channels} channels (paper uses 12)")
        if trial.sample_rate != 2000.0:
            problems.append(
                f"trial {idx}: {trial.sample_rate} Hz (paper uses 2000 Hz)")
    if len(bundle.gestures) != 38:
        problems.append(
            f"{len(bundle.gestures)} gestures in catalog (paper uses 38)")
    reps: dict[tuple[str, int], int] = {}
    for seg in segment_bundle(bundle):
        key = (seg.subject_id, seg.gesture_id)
        reps[key] = max(reps.get(key, 0), seg.repetition_index)
    for (subject, gesture), count in sorted(reps.items()):
        if count > 6:
            problems.append(
                f"subject {subject} gesture {gesture}: {count} repetitions "
                f"(paper uses 6)")
    return problems


# ---------------------------------------------------------------------------
# staged execution

def _cache_key(stage: str, params: dict, input_hash: str) -> str:
    blob = json.dumps({"stage": stage, "params": params,
                       "input": input_hash}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _cache_dir(cache_root: Path, key: str) -> Path | None:
    path = cache_root / key
    return path if (path / ".complete").exists() else None


def _cache_store(cache_root: Path, key: str) -> Path:
    """Return a fresh build directory; caller fills it then calls _cache_seal."""
    path = cache_root / (key + ".building")
    if path.exists():
        shutil.rmtree(path)
    path.mkdir(parents=True)
    return path


def _cache_seal(cache_root: Path, key: str, building: Path) -> Path:
    final = cache_root / key
    if final.exists():
        shutil.rmtree(final)
    (building / ".complete").touch()
    building.rename(final)
    return final


def _save_tensor(tensor: FeatureTensor, path: Path) -> None:
    subjects = np.array([k.subject_id for k in tensor.segments])
    gestures = np.array([k.gesture_id for k in tensor.segments])
    reps = np.array([k.repetition_index for k in tensor.segments])
    counts = np.array([v.shape[0] for v in tensor.values])
    stacked = (np.concatenate(tensor.values, axis=0) if tensor.values
               else np.empty((0, tensor.n_channels, 4)))
    np.savez(path, subjects=subjects, gestures=gestures, reps=reps,
             counts=counts, values=stacked,
             n_channels=np.array([tensor.n_channels]),
             eps=np.array([tensor.thresholds.eps_zc, tensor.thresholds.eps_ssc]),
             relative=np.array([tensor.thresholds.relative]))


def _load_tensor(path: Path) -> FeatureTensor:
    from .features import SegmentKey
    data = np.load(path, allow_pickle=False)
    counts = data["counts"]
    splits = np.cumsum(counts)[:-1]
    values = np.split(data["values"], splits) if counts.size else []
    segments = [SegmentKey(str(s), int(g), int(r))
                for s, g, r in zip(data["subjects"], data["gestures"],
                                   data["reps"])]
    eps = data["eps"]
    spec = ThresholdSpec(float(eps[0]), float(eps[1]),
                         relative=bool(data["relative"][0]))
    return FeatureTensor(segments=segments, values=list(values),
                         n_channels=int(data["n_channels"][0]),
                         thresholds=spec)


@dataclass
class RunProducts:
    run_dir: Path
    manifest: dict


def _write_csv(frame: pd.DataFrame, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)


def run_pipeline(config: PipelineConfig) -> RunProducts:
    config.validate()
    out_root = Path(config.out_dir)
    cache_root = out_root / "cache"
    cache_root.mkdir(parents=True, exist_ok=True)
    partial = out_root / "run.partial"
    if partial.exists():
        shutil.rmtree(partial)
    partial.mkdir(parents=True)

    stage = "validate"
    try:
        bundle = read_bundle(config.bundle)
        bundle_hash = bundle_content_hash(config.bundle)
        gesture_subset = resolve_gestures(bundle, config.gestures)
        groups = bundle.groups()

        stage = "preprocess"
        filtered = _stage_preprocess(config, bundle, bundle_hash, cache_root)

        stage = "features"
        tensor = _stage_features(config, filtered, bundle_hash, cache_root,
                                 partial)

        stage = "signatures"
        raw_sigs, used_sigs, gesture_ids = _stage_signatures(
            config, tensor, groups, partial)

        stage = "cluster"
        cluster_summary = _stage_cluster(config, used_sigs, raw_sigs, groups,
                                         partial)

        stage = "pca"
        pca_summary = _stage_pca(config, used_sigs, raw_sigs, groups, partial)

        stage = "classify"
        classify_summary = _stage_classify(config, tensor, used_sigs, groups,
                                           gesture_subset, partial)

        stage = "summary"
        summary = pd.DataFrame(
            cluster_summary + pca_summary + classify_summary,
            columns=["metric", "variant", "value"])
        _write_csv(summary, partial / "summary.csv")

        stage = "manifest"
        manifest = _write_manifest(config, bundle, bundle_hash, gesture_subset,
                                   partial)
    except Exception as exc:
        quarantine = _quarantine(out_root, partial)
        raise PipelineError(stage, str(exc),
                            artifact=str(quarantine)) from exc

    run_dir = out_root / "run"
    if run_dir.exists():
        shutil.rmtree(run_dir)
    partial.rename(run_dir)
    manifest_path = run_dir / "run-manifest.json"
    return RunProducts(run_dir=run_dir,
                       manifest=json.loads(manifest_path.read_text()))


def _quarantine(out_root: Path, partial: Path) -> Path:
    if not partial.exists():
        return partial
    n = 1
    while (out_root / f"failed-{n:03d}").exists():
        n += 1
    target = out_root / f"failed-{n:03d}"
    partial.rename(target)
    return target


def _stage_preprocess(config: PipelineConfig, bundle: EmgBundle,
                      bundle_hash: str, cache_root: Path) -> EmgBundle:
    if not config.hampel_enabled:
        return bundle
    params = {"line_freq": config.line_freq,
              "half_window": config.hampel_half_window,
              "nsigma": config.hampel_nsigma}
    key = _cache_key("preprocess", params, bundle_hash)
    cached = _cache_dir(cache_root, key)
    if cached is not None:
        return read_bundle(cached / "bundle")
    filtered = despike_bundle(bundle, config.hampel())
    building = _cache_store(cache_root, key)
    write_bundle(filtered, building / "bundle")
    _cache_seal(cache_root, key, building)
    return filtered


def _stage_features(config: PipelineConfig, bundle: EmgBundle,
                    bundle_hash: str, cache_root: Path,
                    partial: Path) -> FeatureTensor:
    params = {"hampel": [config.hampel_enabled, config.line_freq,
                         config.hampel_half_window, config.hampel_nsigma],
              "trim_ms": config.trim_ms,
              "window_ms": config.window_ms,
              "increment_ms": config.increment_ms,
              "eps": [config.eps_zc, config.eps_ssc, config.eps_mode]}
    key = _cache_key("features", params, bundle_hash)
    cached = _cache_dir(cache_root, key)
    if cached is not None:
        tensor = _load_tensor(cached / "features.npz")
    else:
        segments = segment_bundle(bundle)
        if config.trim_ms > 0:
            segments = [
                trim_transitions(s, config.trim_ms,
                                 bundle.trials[s.trial_index].sample_rate)
                for s in segments]
        tensor = extract(bundle, segments, config.windowing(),
                         config.thresholds())
        building = _cache_store(cache_root, key)
        _save_tensor(tensor, building / "features.npz")
        _cache_seal(cache_root, key, building)
    _write_csv(tensor.to_frame(), partial / "features" / "features.csv")
    return tensor


def _stage_signatures(config: PipelineConfig, tensor: FeatureTensor,
                      groups: dict[str, str], partial: Path):
    gesture_ids = tensor.gesture_ids()
    raw = build_signatures(tensor, gesture_ids)
    if config.standardize:
        used, _ = standardize(raw)
        _write_csv(signatures_to_frame(raw, gesture_ids, tensor.n_channels,
                                       groups),
                   partial / "signatures" / "signatures_raw.csv")
    else:
        used = raw
    _write_csv(signatures_to_frame(used, gesture_ids, tensor.n_channels,
                                   groups),
               partial / "signatures" / "signatures.csv")
    return raw, used, gesture_ids


def _cut_purity(assignment: dict[str, int], groups: dict[str, str]) -> bool:
    members: dict[int, set[str]] = {}
    for subject, cluster_id in assignment.items():
        members.setdefault(cluster_id, set()).add(groups[subject])
    return all(len(g) == 1 for g in members.values())


def _cluster_variant(config: PipelineConfig, sigs, groups, partial: Path,
                     variant: str, export: bool) -> list[tuple]:
    ids, x = signature_matrix(sigs)
    dendro = ward_linkage(x, leaf_labels=ids)
    report = inconsistency(dendro, depth=config.inconsistency_depth)
    rows = []
    n = dendro.n_leaves
    if export:
        out = partial / "cluster"
        _write_csv(merges_frame(dendro), out / "merges.csv")
        leaves = pd.DataFrame({
            "leaf": range(n),
            "subject": ids,
            "group": [groups.get(s, "") for s in ids]})
        _write_csv(leaves, out / "leaves.csv")
        out.mkdir(parents=True, exist_ok=True)
        (out / "dendrogram.dot").write_text(to_dot(dendro, groups))
        _write_csv(report.to_frame(), out / "inconsistency.csv")
    for k in config.cut_ks:
        if k > n:
            rows.append((f"cut_k{k}_skipped_n_leaves", variant, n))
            continue
        assignment = cut(dendro, k)
        if export:
            table = pd.DataFrame(
                sorted(assignment.items()), columns=["subject", "cluster"])
            _write_csv(table, partial / "cluster" / f"cut_k{k}.csv")
        rows.append((f"cut_k{k}_group_pure", variant,
                     int(_cut_purity(assignment, groups))))
        link = report.rows[n - k]
        rank = int(np.sum(report.coefficients() > link.coefficient)) + 1
        rows.append((f"cut_k{k}_link_inconsistency", variant,
                     link.coefficient))
        rows.append((f"cut_k{k}_link_inconsistency_rank", variant, rank))
    return rows


def _stage_cluster(config: PipelineConfig, used_sigs, raw_sigs, groups,
                   partial: Path) -> list[tuple]:
    rows = _cluster_variant(config, used_sigs, groups, partial,
                            "standardized" if config.standardize else "raw",
                            export=True)
    if config.standardize:
        rows += _cluster_variant(config, raw_sigs, groups, partial, "raw",
                                 export=False)
    return rows


def _pca_variant(config: PipelineConfig, sigs, groups, partial: Path,
                 variant: str, export: bool) -> list[tuple]:
    ids, x = signature_matrix(sigs)
    model = pca_fit(x)
    if export:
        out = partial / "pca"
        _write_csv(scores_frame(model, x, ids, groups,
                                n_components=config.pca_components),
                   out / "scores.csv")
        _write_csv(variance_frame(model), out / "variance.csv")
    top = min(3, model.n_components)
    top3 = float(model.explained_variance_ratio[:top].sum())
    return [("pca_top3_ratio", variant, top3)]


def _stage_pca(config: PipelineConfig, used_sigs, raw_sigs, groups,
               partial: Path) -> list[tuple]:
    rows = _pca_variant(config, used_sigs, groups, partial,
                        "standardized" if config.standardize else "raw",
                        export=True)
    if config.standardize:
        rows += _pca_variant(config, raw_sigs, groups, partial, "raw",
                             export=False)
    return rows


def _stage_classify(config: PipelineConfig, tensor: FeatureTensor, used_sigs,
                    groups: dict[str, str], gesture_subset: list[int],
                    partial: Path) -> list[tuple]:
    out = partial / "classify"
    rows: list[tuple] = []
    summary_lines: list[str] = []
    variant = "standardized" if config.standardize else "raw"

    if "gesture" in config.schemes:
        reports = cv_gesture(tensor, gesture_subset, gamma=config.gamma,
                             vote=config.vote)
        folds = pd.concat([r.to_frame().assign(subject=s)
                           for s, r in reports.items()], ignore_index=True)
        _write_csv(folds[["scheme", "subject", "fold", "accuracy", "n_test"]],
                   out / "gesture_folds.csv")
        per_subject = group_accuracy_comparison(reports, groups)
        per_subject["std"] = [reports[s].std_accuracy
                              for s in per_subject["subject"]]
        _write_csv(per_subject, out / "gesture_subjects.csv")
        for group_name in sorted(per_subject["group"].unique()):
            acc = per_subject.loc[per_subject["group"] == group_name,
                                  "accuracy"]
            rows.append((f"gesture_cv_mean_{group_name}", "windows",
                         float(acc.mean())))
            rows.append((f"gesture_cv_std_{group_name}", "windows",
                         float(acc.std(ddof=1)) if len(acc) > 1 else 0.0))
        by_group = {g: per_subject.loc[per_subject["group"] == g, "accuracy"]
                        .to_numpy()
                    for g in per_subject["group"].unique()}
        if ("intact" in by_group and "amputee" in by_group
                and len(by_group["intact"]) >= 2
                and len(by_group["amputee"]) >= 2):
            welch = welch_ttest(by_group["intact"], by_group["amputee"])
            rows.append(("gesture_cv_welch_t", "windows", welch.t))
            rows.append(("gesture_cv_welch_df", "windows", welch.df))
            rows.append(("gesture_cv_welch_p", "windows", welch.p))
            summary_lines.append(
                f"gesture CV intact vs amputee: t={welch.t:.3f} "
                f"df={welch.df:.1f} p={welch.p:.2e}")
        for subject in sorted(reports):
            summary_lines.append(f"  {subject}: {reports[subject].summary()}")

    if "subject-sig" in config.schemes:
        report = cv_subject_group_signature(used_sigs, groups,
                                            gamma=config.gamma)
        _write_csv(report.to_frame(), out / "subject_signature_folds.csv")
        rows.append(("subject_sig_loso_accuracy", variant,
                     report.mean_accuracy))
        rows.append(("subject_sig_loso_chance", variant, report.chance))
        summary_lines.append(report.summary())

    if "subject-window" in config.schemes:
        report = cv_subject_group_window(tensor, groups, gamma=config.gamma)
        _write_csv(report.to_frame(), out / "subject_window_folds.csv")
        rows.append(("subject_window_loso_mean", "windows",
                     report.mean_accuracy))
        rows.append(("subject_window_loso_min", "windows",
                     report.min_accuracy))
        rows.append(("subject_window_loso_max", "windows",
                     report.max_accuracy))
        rows.append(("subject_window_loso_chance", "windows", report.chance))
        summary_lines.append(report.summary())

    if summary_lines:
        out.mkdir(parents=True, exist_ok=True)
        (out / "classify_summary.txt").write_text(
            "\n".join(summary_lines) + "\n")
    return rows


def _write_manifest(config: PipelineConfig, bundle: EmgBundle,
                    bundle_hash: str, gesture_subset: list[int],
                    partial: Path) -> dict:
    derived = {}
    for rate in sorted({t.sample_rate for t in bundle.trials}):
        w, inc = config.windowing().in_samples(rate)
        derived[f"rate_{rate:g}Hz"] = {"window_samples": w,
                                       "increment_samples": inc}
    outputs = []
    for path in sorted(partial.rglob("*")):
        if path.is_file():
            rel = path.relative_to(partial).as_posix()
            outputs.append({"path": rel,
                            "stage": rel.split("/")[0],
                            "sha256": sha256_file(path)})
    manifest = {
        "tool": {"name": "emgpat", "version": __version__},
        "config": asdict(config),
        "derived": {"windowing": derived,
                    "gesture_subset": gesture_subset,
                    "n_subjects": len(bundle.subjects),
                    "n_trials": len(bundle.trials)},
        "inputs": {"bundle": {"path": config.bundle, "sha256": bundle_hash}},
        "outputs": outputs,
    }
    with open(partial / "run-manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------------------
# report

def _box_stats(values: np.ndarray) -> dict:
    q1, median, q3 = np.percentile(values, [25, 50, 75])
    iqr = q3 - q1
    lo = values[values >= q1 - 1.5 * iqr].min()
    hi = values[values <= q3 + 1.5 * iqr].max()
    return {"n": len(values), "mean": values.mean(), "min": values.min(),
            "whisker_low": lo, "q1": q1, "median": median, "q3": q3,
            "whisker_high": hi, "max": values.max()}


def load_dendrogram(run_dir: Path) -> tuple[Dendrogram, dict[str, str]]:
    merges = pd.read_csv(run_dir / "cluster" / "merges.csv")
    leaves = pd.read_csv(run_dir / "cluster" / "leaves.csv")
    leaves = leaves.sort_values("leaf")
    labels = [str(s) for s in leaves["subject"]]
    groups = {str(s): str(g) for s, g in zip(leaves["subject"],
                                             leaves["group"].fillna(""))}
    dendro = Dendrogram(
        n_leaves=len(labels),
        merges=[Merge(int(r.left), int(r.right), float(r.height), int(r.size))
                for r in merges.itertuples()],
        leaf_labels=labels,
    )
    return dendro, groups


def write_report(run_dir: str | Path, render: bool = True) -> Path:
    """Produce figure-data tables (and PNG renderings) from a finished run."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "run-manifest.json"
    if not manifest_path.is_file():
        raise PipelineError("report", f"no run manifest under {run_dir}")
    report_dir = run_dir.parent / "report"
    report_dir.mkdir(parents=True, exist_ok=True)

    summary = pd.read_csv(run_dir / "summary.csv")
    summary.to_csv(report_dir / "summary_table.csv", index=False)

    gesture_path = run_dir / "classify" / "gesture_subjects.csv"
    accuracies = None
    if gesture_path.is_file():
        accuracies = pd.read_csv(gesture_path)
        stats = [dict(group=g, **_box_stats(grp["accuracy"].to_numpy()))
                 for g, grp in accuracies.groupby("group")]
        pd.DataFrame(stats).to_csv(report_dir / "boxplot_stats.csv",
                                   index=False)

    dendro = groups = None
    cluster_dir = run_dir / "cluster"
    if (cluster_dir / "merges.csv").is_file():
        dendro, groups = load_dendrogram(run_dir)
        shutil.copyfile(cluster_dir / "dendrogram.dot",
                        report_dir / "dendrogram.dot")
        for cut_file in sorted(cluster_dir.glob("cut_k*.csv")):
            shutil.copyfile(cut_file, report_dir / cut_file.name)

    scores = None
    scores_path = run_dir / "pca" / "scores.csv"
    if scores_path.is_file():
        scores = pd.read_csv(scores_path)
        scores.to_csv(report_dir / "pc_scores.csv", index=False)

    if render:
        from . import figures
        if accuracies is not None:
            figures.accuracy_boxplot(accuracies,
                                     report_dir / "fig1_boxplot.png")
        if dendro is not None:
            cut_ks = [int(p.stem.split("cut_k")[1])
                      for p in sorted(cluster_dir.glob("cut_k*.csv"))]
            figures.dendrogram_figure(dendro, groups, cut_ks,
                                      report_dir / "fig2_dendrogram.png")
        if scores is not None:
            figures.pc_scatter(scores, report_dir / "fig3_pc_scatter.png")
    return report_dir
