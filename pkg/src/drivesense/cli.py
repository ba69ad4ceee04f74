"""Command-line front end: featurize / cv / importance / ablate / synth / report.

Configuration comes from a flat ``key = value`` file; command-line flags override
file values. Outputs are CSV and versioned JSON documents whose bytes depend only
on (inputs, config, seed) — never on wall-clock time or worker count.

Exit codes: 0 success, 1 model or data errors, 2 missing or unreadable files,
64 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .balance import BalanceMode, BalanceSpec
from .errors import PipelineError
from .evaluate import (
    CvSpec,
    ablation_to_dict,
    eval_report_to_dict,
    importance_report_to_dict,
    modality_ablation,
    permutation_importance,
    run_cv,
    write_confusion_csv,
    write_json_report,
)
from .features import FeatureMatrix, FeatureSet, extract_features, impute_and_assemble, write_matrix_csv
from .forest import model_params
from .ingest import ChannelKind, SamplingSpec, load_trip
from .labels import Taxonomy, canonical_categories, canonical_taxonomy, label_windows, load_annotations
from .synth import SynthSpec, default_profiles, generate, write_dataset
from .windows import WindowSpec, slice_windows


class UsageError(Exception):
    pass


DEFAULT_CHANNELS = (
    ChannelKind.ACCEL_X,
    ChannelKind.ACCEL_Y,
    ChannelKind.ACCEL_Z,
    ChannelKind.GYRO_X,
    ChannelKind.GYRO_Y,
    ChannelKind.GYRO_Z,
    ChannelKind.ACCEL_MAG,
    ChannelKind.GYRO_MAG,
    ChannelKind.PPG,
    ChannelKind.HR,
    ChannelKind.LIGHT,
    ChannelKind.NOISE,
)

# sensor families in the order modalities are added during ablation
_ABLATION_FAMILIES = (
    (ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z, ChannelKind.ACCEL_MAG),
    (ChannelKind.GYRO_X, ChannelKind.GYRO_Y, ChannelKind.GYRO_Z, ChannelKind.GYRO_MAG),
    (ChannelKind.HR,),
    (ChannelKind.PPG,),
    (ChannelKind.LIGHT,),
    (ChannelKind.NOISE,),
)


@dataclass
class RunConfig:
    data_dir: str = "."
    out_dir: str = "out"
    category: str = "InsideActivity"
    target_rate: float = 10.0
    max_gap: float = 5.0
    window_length: float = 1.0
    window_overlap: float = 0.5
    channels: tuple[ChannelKind, ...] = DEFAULT_CHANNELS
    balance: str = "none"
    smote_k: int = 5
    model: str = "forest"
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_split: int = 2
    k_folds: int = 10
    seed: int = 0
    jobs: int = 1
    holdout_fraction: float = 0.2
    importance_repeats: int = 10
    ablation_order: str = ""
    synth_classes: int = 5
    synth_events: int = 20
    synth_duration_min: float = 4.0
    synth_duration_max: float = 8.0
    synth_separation: float = 1.0
    synth_noise_sd: float = 0.1

    def sampling_spec(self) -> SamplingSpec:
        return SamplingSpec(self.target_rate, self.max_gap)

    def window_spec(self) -> WindowSpec:
        return WindowSpec(self.window_length, self.window_overlap)

    def balance_spec(self) -> BalanceSpec:
        return BalanceSpec(BalanceMode(self.balance), self.smote_k, self.seed)

    def cv_spec(self) -> CvSpec:
        return CvSpec(self.k_folds, self.seed, self.balance_spec())


_INT_KEYS = {"smote_k", "n_trees", "min_samples_split", "k_folds", "seed", "jobs",
             "importance_repeats", "synth_classes", "synth_events", "max_depth"}
_FLOAT_KEYS = {"target_rate", "max_gap", "window_length", "window_overlap",
               "holdout_fraction", "synth_duration_min", "synth_duration_max",
               "synth_separation", "synth_noise_sd"}


def parse_channels(text: str) -> tuple[ChannelKind, ...]:
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(ChannelKind(n) for n in names)
    except ValueError as exc:
        raise UsageError(f"unknown channel in {text!r}: {exc}") from None


def load_config(path: str | Path) -> dict:
    """Parse a flat ``key = value`` config file; '#' starts a comment."""
    values: dict[str, object] = {}
    known = {f.name for f in fields(RunConfig)}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {line_no}: expected key = value")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in known:
                raise UsageError(f"{path}: line {line_no}: unknown key {key!r}")
            if key == "channels":
                values[key] = parse_channels(val)
            elif key in _INT_KEYS:
                values[key] = None if val.lower() == "none" else int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            else:
                values[key] = val
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict[str, object] = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        values.update(load_config(path))
    for flag, key in (
        ("data", "data_dir"),
        ("category", "category"),
        ("seed", "seed"),
        ("jobs", "jobs"),
        ("out", "out_dir"),
        ("balance", "balance"),
        ("model", "model"),
    ):
        val = getattr(args, flag, None)
        if val is not None:
            values[key] = val
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def resolve_taxonomy(cfg: RunConfig) -> Taxonomy:
    """Canonical taxonomy for the three built-in categories; otherwise classes are
    inferred (sorted) from the annotation files in the data directory."""
    if cfg.category in canonical_categories():
        return canonical_taxonomy(cfg.category)
    names: set[str] = set()
    for path in sorted(Path(cfg.data_dir).glob(f"*_{cfg.category}.csv")):
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",", 2)
                if len(parts) == 3:
                    try:
                        float(parts[0])
                    except ValueError:
                        continue
                    names.add(parts[2].strip())
    if not names:
        raise FileNotFoundError(
            f"no annotation files *_{cfg.category}.csv under {cfg.data_dir}"
        )
    return Taxonomy(cfg.category, tuple(sorted(names)))


def featurize_directory(cfg: RunConfig):
    """Run ingest -> windows -> labels -> features over a data directory.

    Returns (matrix, labels, taxonomy, audit dict).
    """
    data_dir = Path(cfg.data_dir)
    if not data_dir.is_dir():
        raise FileNotFoundError(f"data directory not found: {data_dir}")
    taxonomy = resolve_taxonomy(cfg)
    annotation_files = sorted(data_dir.glob(f"*_{cfg.category}.csv"))
    if not annotation_files:
        raise FileNotFoundError(f"no annotation files *_{cfg.category}.csv under {data_dir}")

    fs = FeatureSet(cfg.channels)
    sampling = cfg.sampling_spec()
    wspec = cfg.window_spec()
    rows, label_list = [], []
    n_windows = n_gap_samples = 0
    for ann_path in annotation_files:
        trip_id = ann_path.name[: -(len(cfg.category) + 5)]
        trip = load_trip(data_dir, trip_id, list(cfg.channels), sampling)
        n_gap_samples += int(trip.gap_mask.sum())
        windows = slice_windows(trip, wspec)
        n_windows += len(windows)
        track = load_annotations(ann_path, taxonomy)
        labeled = label_windows(windows, track)
        for w in labeled.windows:
            rows.append(extract_features(w, fs))
        label_list.extend(int(v) for v in labeled.labels)

    matrix = impute_and_assemble(rows)
    labels = np.array(label_list, dtype=np.int64)
    audit = {
        "trips": len(annotation_files),
        "windows": n_windows,
        "labeled_windows": int(labels.size),
        "gap_masked_samples": n_gap_samples,
        "imputed_values": matrix.imputed_count,
    }
    return matrix, labels, taxonomy, audit


def _model_params(cfg: RunConfig, n_features: int):
    params = model_params(cfg.model, seed=cfg.seed, n_features=n_features, n_trees=cfg.n_trees)
    tree = replace(
        params.tree, max_depth=cfg.max_depth, min_samples_split=cfg.min_samples_split
    )
    return replace(params, tree=tree)


def _ablation_groups(cfg: RunConfig) -> list[list[ChannelKind]]:
    if cfg.ablation_order:
        groups = []
        for chunk in cfg.ablation_order.split(";"):
            chunk = chunk.strip()
            if chunk:
                groups.append(list(parse_channels(chunk)))
        if not groups:
            raise UsageError("ablation_order is empty")
        return groups
    present = set(cfg.channels)
    groups = [[ch for ch in family if ch in present] for family in _ABLATION_FAMILIES]
    return [g for g in groups if g]


def cmd_featurize(cfg: RunConfig) -> int:
    matrix, labels, taxonomy, audit = featurize_directory(cfg)
    out = Path(cfg.out_dir)
    csv_path = write_matrix_csv(
        matrix, out / f"features_{cfg.category}.csv", labels, list(taxonomy.classes)
    )
    write_json_report(audit, out / f"featurize_audit_{cfg.category}.json")
    print(f"wrote {csv_path} ({matrix.n_rows} rows x {matrix.n_cols} features)")
    return 0


def cmd_cv(cfg: RunConfig) -> int:
    matrix, labels, taxonomy, _ = featurize_directory(cfg)
    params = _model_params(cfg, matrix.n_cols)
    report = run_cv(
        matrix, labels, params, cfg.cv_spec(), list(taxonomy.classes), n_jobs=cfg.jobs
    )
    out = Path(cfg.out_dir)
    write_json_report(eval_report_to_dict(report), out / f"cv_report_{cfg.category}.json")
    write_confusion_csv(report, out / f"confusion_{cfg.category}.csv")
    print(f"mean weighted F1 = {report.mean_f1:.4f} (sd {report.sd_f1:.4f})")
    return 0


def cmd_importance(cfg: RunConfig) -> int:
    matrix, labels, taxonomy, _ = featurize_directory(cfg)
    params = _model_params(cfg, matrix.n_cols)
    report = permutation_importance(
        matrix,
        labels,
        params,
        holdout_fraction=cfg.holdout_fraction,
        repeats=cfg.importance_repeats,
        seed=cfg.seed,
        balance=cfg.balance_spec(),
    )
    out = write_json_report(
        importance_report_to_dict(report), Path(cfg.out_dir) / f"importance_{cfg.category}.json"
    )
    top = report.ranking()[0]
    print(f"wrote {out}; top feature: {report.column_names[top]}")
    return 0


def cmd_ablate(cfg: RunConfig) -> int:
    matrix, labels, taxonomy, _ = featurize_directory(cfg)
    params = _model_params(cfg, matrix.n_cols)
    steps = modality_ablation(
        matrix,
        labels,
        params,
        cfg.cv_spec(),
        _ablation_groups(cfg),
        list(taxonomy.classes),
        n_jobs=cfg.jobs,
    )
    out = write_json_report(
        ablation_to_dict(steps), Path(cfg.out_dir) / f"ablation_{cfg.category}.json"
    )
    print(f"wrote {out} ({len(steps)} steps)")
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    profiles = default_profiles(cfg.synth_classes, noise_sd=cfg.synth_noise_sd)
    spec = SynthSpec(
        classes=profiles,
        event_duration_range=(cfg.synth_duration_min, cfg.synth_duration_max),
        separation=cfg.synth_separation,
        n_events_per_class=cfg.synth_events,
        seed=cfg.seed,
        rate=cfg.target_rate,
    )
    trips, track = generate(spec)
    out = write_dataset(trips, track, cfg.out_dir)
    print(f"wrote {len(trips)} trips under {out} (category {track.category})")
    return 0


def cmd_report(cfg: RunConfig, path: str) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    schema = doc.get("schema", "unknown")
    print(f"schema: {schema}")
    if "mean_f1" in doc:
        print(f"mean weighted F1: {doc['mean_f1']:.4f} (sd {doc['sd_f1']:.4f})")
        print(f"mean macro F1:    {doc['mean_macro_f1']:.4f} (sd {doc['sd_macro_f1']:.4f})")
        print(f"classes: {', '.join(doc['class_names'])}")
        if doc.get("flagged_folds"):
            print(f"flagged folds: {doc['flagged_folds']}")
    elif "features" in doc:
        print(f"baseline F1: {doc['baseline_f1']:.4f}")
        for row in doc["features"][:10]:
            print(f"  {row['name']}: {row['mean_drop']:.4f} +/- {row['sd_drop']:.4f}")
    elif "steps" in doc:
        for step in doc["steps"]:
            chans = "+".join(step["channels"])
            print(f"  {chans}: F1 {step['mean_f1']:.4f} (sd {step['sd_f1']:.4f})")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> _Parser:
    parser = _Parser(prog="drivesense", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    for name, help_text in (
        ("featurize", "extract a labeled feature matrix from a data directory"),
        ("cv", "stratified k-fold cross-validation report"),
        ("importance", "permutation feature importance on a holdout"),
        ("ablate", "cumulative modality ablation"),
        ("synth", "generate a synthetic dataset on disk"),
        ("report", "summarize a JSON report"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--data", help="data directory")
        p.add_argument("--category", help="label category name")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--jobs", type=int, help="worker parallelism")
        p.add_argument("--out", help="output directory")
        p.add_argument("--balance", choices=["none", "weights", "smote"])
        p.add_argument("--model", choices=["tree", "forest", "extra"])
        if name == "report":
            p.add_argument("path", help="report JSON file")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing subcommand")
        cfg = build_config(args)
        if args.command == "featurize":
            return cmd_featurize(cfg)
        if args.command == "cv":
            return cmd_cv(cfg)
        if args.command == "importance":
            return cmd_importance(cfg)
        if args.command == "ablate":
            return cmd_ablate(cfg)
        if args.command == "synth":
            return cmd_synth(cfg)
        if args.command == "report":
            return cmd_report(cfg, args.path)
        raise UsageError(f"unknown subcommand {args.command!r}")
    except UsageError as exc:
        print(parser.format_usage(), file=sys.stderr, end="")
        print(f"error: {exc}", file=sys.stderr)
        return 64
    except (FileNotFoundError, NotADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
