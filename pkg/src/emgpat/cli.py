"""Command-line interface.

Exit codes: 0 success, 1 validation problem (bad inputs, bad config,
non-conformant bundle), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import pandas as pd

from . import __version__
from .bundle import read_bundle, segment_bundle, write_bundle
from .classify import (cv_gesture, cv_subject_group_signature,
                       cv_subject_group_window, group_accuracy_comparison)
from .cluster import cut, inconsistency, merges_frame, to_dot, ward_linkage
from .errors import BundleError, ConfigError, EmgPatError, PipelineError
from .features import FeatureTensor, ThresholdSpec, WindowingConfig, extract
from .pca import pca_fit, scores_frame, variance_frame
from .pipeline import (PipelineConfig, config_from_toml, config_to_toml,
                       paper_conformance_report, resolve_gestures,
                       run_pipeline, write_report)
from .preprocess import HampelConfig, despike_bundle, trim_bundle_labels
from .signatures import (build_signatures, signature_matrix,
                         signatures_from_frame, signatures_to_frame,
                         standardize)
from .synth import make_synthetic_bundle


def _add_threshold_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--window-ms", type=float, default=200.0)
    parser.add_argument("--increment-ms", type=float, default=100.0)
    parser.add_argument("--eps-zc", type=float, default=0.01)
    parser.add_argument("--eps-ssc", type=float, default=0.01)
    parser.add_argument("--eps-mode", choices=["relative", "absolute"],
                        default="relative")
    parser.add_argument("--trim-ms", type=float, default=0.0)


def _tensor_from_args(args) -> FeatureTensor:
    bundle = read_bundle(args.bundle)
    if getattr(args, "trim_ms", 0.0) > 0:
        bundle = trim_bundle_labels(bundle, args.trim_ms)
    segments = segment_bundle(bundle)
    cfg = WindowingConfig(args.window_ms, args.increment_ms)
    spec = ThresholdSpec(args.eps_zc, args.eps_ssc,
                         relative=args.eps_mode == "relative")
    return extract(bundle, segments, cfg, spec)


def cmd_validate(args) -> int:
    bundle = read_bundle(args.bundle)
    print(f"bundle OK: {len(bundle.subjects)} subjects, "
          f"{len(bundle.gestures)} gestures, {len(bundle.trials)} trials")
    problems = paper_conformance_report(bundle)
    for line in problems:
        print(f"  paper-conformance: {line}")
    if problems and args.strict_paper:
        print(f"FAIL: {len(problems)} paper-conformance problems")
        return 1
    return 0


def cmd_preprocess(args) -> int:
    bundle = read_bundle(args.bundle)
    cfg = HampelConfig(line_freq=args.line_freq,
                       half_window_bins=args.hampel_window,
                       nsigma=args.hampel_nsigma)
    cleaned = despike_bundle(bundle, cfg)
    if args.trim_ms > 0:
        cleaned = trim_bundle_labels(cleaned, args.trim_ms)
    write_bundle(cleaned, args.out)
    print(f"wrote filtered bundle to {args.out}")
    return 0


def cmd_features(args) -> int:
    tensor = _tensor_from_args(args)
    frame = tensor.to_frame()
    frame.to_csv(args.out, index=False)
    print(f"wrote {len(frame)} feature rows to {args.out}")
    return 0


def _load_signature_file(path: str):
    frame = pd.read_csv(path)
    return signatures_from_frame(frame)


def cmd_signatures(args) -> int:
    frame = pd.read_csv(args.features)
    tensor = FeatureTensor.from_frame(frame)
    gesture_ids = tensor.gesture_ids()
    sigs = build_signatures(tensor, gesture_ids)
    groups = None
    if args.bundle:
        groups = read_bundle(args.bundle).groups()
    if not args.no_standardize:
        sigs, _ = standardize(sigs)
    out = signatures_to_frame(sigs, gesture_ids, tensor.n_channels, groups)
    out.to_csv(args.out, index=False)
    print(f"wrote {len(sigs)} signatures "
          f"({out.shape[1] - (2 if groups is not None else 1)} dims) to {args.out}")
    return 0


def cmd_cluster(args) -> int:
    sigs, groups = _load_signature_file(args.signatures)
    ids, x = signature_matrix(sigs)
    dendro = ward_linkage(x, leaf_labels=ids)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    merges_frame(dendro).to_csv(out_dir / "merges.csv", index=False)
    (out_dir / "dendrogram.dot").write_text(to_dot(dendro, groups))
    inconsistency(dendro, depth=args.depth).to_frame().to_csv(
        out_dir / "inconsistency.csv", index=False)
    for k in args.cut:
        assignment = cut(dendro, k)
        pd.DataFrame(sorted(assignment.items()),
                     columns=["subject", "cluster"]).to_csv(
            out_dir / f"cut_k{k}.csv", index=False)
    print(f"wrote dendrogram artifacts to {out_dir}")
    return 0


def cmd_pca(args) -> int:
    sigs, groups = _load_signature_file(args.signatures)
    ids, x = signature_matrix(sigs)
    model = pca_fit(x)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scores_frame(model, x, ids, groups,
                 n_components=args.components).to_csv(
        out_dir / "scores.csv", index=False)
    variance_frame(model).to_csv(out_dir / "variance.csv", index=False)
    top = min(3, model.n_components)
    print(f"top-{top} explained variance ratio: "
          f"{model.explained_variance_ratio[:top].sum():.3f}")
    return 0


def cmd_classify(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    bundle = read_bundle(args.bundle)
    groups = bundle.groups()

    if args.scheme == "subject-sig":
        if not args.signatures:
            raise ConfigError("--signatures is required for scheme subject-sig")
        sigs, file_groups = _load_signature_file(args.signatures)
        report = cv_subject_group_signature(sigs, groups or file_groups,
                                            gamma=args.gamma)
        report.to_frame().to_csv(out_dir / "subject_signature_folds.csv",
                                 index=False)
        print(report.summary())
        return 0

    if args.features:
        tensor = FeatureTensor.from_frame(pd.read_csv(args.features))
    else:
        tensor = _tensor_from_args(args)

    if args.scheme == "gesture":
        subset = resolve_gestures(bundle, args.gestures.split(","))
        reports = cv_gesture(tensor, subset, gamma=args.gamma,
                             vote=args.vote)
        folds = pd.concat([r.to_frame().assign(subject=s)
                           for s, r in reports.items()], ignore_index=True)
        folds.to_csv(out_dir / "gesture_folds.csv", index=False)
        group_accuracy_comparison(reports, groups).to_csv(
            out_dir / "gesture_subjects.csv", index=False)
        for subject in sorted(reports):
            print(f"{subject}: {reports[subject].summary()}")
    else:  # subject-window
        report = cv_subject_group_window(tensor, groups, gamma=args.gamma)
        report.to_frame().to_csv(out_dir / "subject_window_folds.csv",
                                 index=False)
        print(report.summary())
    return 0


def cmd_run(args) -> int:
    config = config_from_toml(args.config)
    if args.bundle:
        config.bundle = args.bundle
    if args.out_dir:
        config.out_dir = args.out_dir
    config.validate()
    products = run_pipeline(config)
    print(f"run complete: {products.run_dir}")
    print(f"  {len(products.manifest['outputs'])} output files recorded "
          f"in run-manifest.json")
    return 0


def cmd_report(args) -> int:
    report_dir = write_report(args.run, render=not args.no_figures)
    print(f"report written to {report_dir}")
    return 0


def cmd_init_config(args) -> int:
    path = Path(args.out)
    if path.exists() and not args.force:
        raise ConfigError(f"{path} exists; use --force to overwrite")
    path.write_text(config_to_toml(PipelineConfig()))
    print(f"wrote default config to {path}")
    return 0


def cmd_synth(args) -> int:
    bundle = make_synthetic_bundle(
        n_intact=args.intact, n_amputee=args.amputee,
        n_gestures=args.gestures, n_reps=args.reps,
        n_channels=args.channels, seed=args.seed,
        line_amp=args.line_amp)
    write_bundle(bundle, args.out)
    print(f"wrote synthetic bundle ({args.intact}+{args.amputee} subjects, "
          f"{args.gestures} gestures) to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emgpat",
        description="Surface-EMG pattern analysis pipeline")
    parser.add_argument("--version", action="version",
                        version=f"emgpat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a bundle directory")
    p.add_argument("bundle")
    p.add_argument("--strict-paper", action="store_true",
                   help="fail on paper-conformance deviations")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("preprocess", help="remove line interference")
    p.add_argument("bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--line-freq", type=float, default=50.0)
    p.add_argument("--hampel-window", type=int, default=3)
    p.add_argument("--hampel-nsigma", type=float, default=3.0)
    p.add_argument("--trim-ms", type=float, default=0.0)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("features", help="extract windowed time-domain features")
    p.add_argument("bundle")
    p.add_argument("--out", required=True)
    _add_threshold_args(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("signatures", help="build per-subject signatures")
    p.add_argument("features", help="long-form feature CSV")
    p.add_argument("--out", required=True)
    p.add_argument("--bundle", help="bundle directory (adds group column)")
    p.add_argument("--no-standardize", action="store_true")
    p.set_defaults(func=cmd_signatures)

    p = sub.add_parser("cluster", help="Ward clustering of signatures")
    p.add_argument("signatures", help="signature CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--cut", type=int, nargs="+", default=[2, 6])
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("pca", help="principal components of signatures")
    p.add_argument("signatures")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--components", type=int, default=3)
    p.set_defaults(func=cmd_pca)

    p = sub.add_parser("classify", help="cross-validated classification")
    p.add_argument("bundle")
    p.add_argument("--scheme", required=True,
                   choices=["gesture", "subject-sig", "subject-window"])
    p.add_argument("--out-dir", required=True)
    p.add_argument("--gamma", type=float, default=1e-3)
    p.add_argument("--gestures", default=",".join(
        ["wrist flexion", "wrist extension", "forearm pronation",
         "forearm supination", "power grip", "pinch grip"]),
        help="comma-separated gesture names or ids (gesture scheme)")
    p.add_argument("--vote", action="store_true")
    p.add_argument("--features", help="re-use a feature CSV")
    p.add_argument("--signatures", help="signature CSV (subject-sig scheme)")
    _add_threshold_args(p)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("run", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--bundle", help="override config bundle path")
    p.add_argument("--out-dir", help="override config output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="figure data + renderings from a run")
    p.add_argument("--run", required=True, help="run directory")
    p.add_argument("--no-figures", action="store_true",
                   help="skip PNG rendering")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("init-config", help="write a default config file")
    p.add_argument("--out", default="emgpat.toml")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_init_config)

    p = sub.add_parser("synth", help="write a seeded synthetic bundle")
    p.add_argument("--out", required=True)
    p.add_argument("--intact", type=int, default=4)
    p.add_argument("--amputee", type=int, default=2)
    p.add_argument("--gestures", type=int, default=6)
    p.add_argument("--reps", type=int, default=6)
    p.add_argument("--channels", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--line-amp", type=float, default=0.0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BundleError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmgPatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
