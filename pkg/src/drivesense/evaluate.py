"""Cross-validated evaluation: stratified folds, F1 reporting, permutation
importance, and cumulative modality ablation.

Balancing is fitted strictly inside each training split (SMOTE standardization
statistics included), so no information from a test split ever reaches the
model. Every random decision is drawn from a generator seeded by explicit
(seed, purpose, index) tuples; folds are therefore independent jobs and can be
executed in parallel without changing any reported number.
"""

from __future__ import annotations

import json
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .balance import BalanceMode, BalanceSpec, class_weights, oversample_plan, smote_oversample
from .errors import ModelError
from .features import FeatureMatrix
from .forest import Forest, ForestParams, fit_forest, predict
from .ingest import ChannelKind

EVAL_SCHEMA = "eval-report/v1"
IMPORTANCE_SCHEMA = "importance-report/v1"
ABLATION_SCHEMA = "ablation-report/v1"

DEFAULT_FOLDS = 10
DEFAULT_HOLDOUT_FRACTION = 0.2
DEFAULT_IMPORTANCE_REPEATS = 10


def derive_seed(*parts: int) -> int:
    """Stable child seed from non-negative integer parts."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint32)[0])


@dataclass(frozen=True)
class CvSpec:
    k: int = DEFAULT_FOLDS
    seed: int = 0
    balance: BalanceSpec = BalanceSpec()

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class ConfusionMatrix:
    """Rows are true classes, columns predicted; entries are sample counts."""

    counts: np.ndarray
    classes: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        self.classes = np.asarray(self.classes, dtype=np.int64)
        c = len(self.classes)
        if self.counts.shape != (c, c):
            raise ValueError("confusion matrix must be C x C")
        if (self.counts < 0).any():
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_normalized(self) -> np.ndarray:
        sums = self.counts.sum(axis=1, keepdims=True)
        safe = np.where(sums > 0, sums, 1)
        out = self.counts / safe
        out[sums[:, 0] == 0] = 0.0
        return out


def confusion_from_predictions(y_true, y_pred, classes) -> ConfusionMatrix:
    classes = np.asarray(classes, dtype=np.int64)
    lut = {int(c): i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(np.asarray(y_true), np.asarray(y_pred)):
        counts[lut[int(t)], lut[int(p)]] += 1
    return ConfusionMatrix(counts, classes)


def f1_scores(cm: ConfusionMatrix | np.ndarray) -> tuple[np.ndarray, float, float]:
    """(per-class F1, macro F1, support-weighted F1) from a confusion matrix.

    A class with no predictions and no support scores 0 and carries zero weight
    in the weighted mean.
    """
    counts = cm.counts if isinstance(cm, ConfusionMatrix) else np.asarray(cm, dtype=np.int64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("f1_scores requires a non-empty confusion matrix")
    tp = np.diag(counts).astype(np.float64)
    support = counts.sum(axis=1).astype(np.float64)
    predicted = counts.sum(axis=0).astype(np.float64)
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)
    macro = float(f1.mean())
    weighted = float((f1 * support).sum() / support.sum())
    return f1, macro, weighted


def stratified_kfold(labels, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint folds covering all samples; per-class fold counts differ by <= 1.

    Classes are processed in ascending order; indices of each class are shuffled
    once and dealt round-robin, so the assignment is deterministic given seed.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.size, dtype=np.int64)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        rng.shuffle(idx)
        fold_of[idx] = np.arange(idx.size) % k
    return [
        (np.flatnonzero(fold_of != f), np.flatnonzero(fold_of == f)) for f in range(k)
    ]


@dataclass
class EvalReport:
    classes: list[int]
    class_names: list[str]
    k: int
    seed: int
    balance_mode: str
    per_fold_f1: list[float]
    per_fold_macro_f1: list[float]
    mean_f1: float
    sd_f1: float
    mean_macro_f1: float
    sd_macro_f1: float
    flagged_folds: list[int]
    small_classes: list[int]
    confusion: ConfusionMatrix
    imputed_values: int
    smote_replicated_rows: int

    @property
    def row_normalized(self) -> np.ndarray:
        return self.confusion.row_normalized()

    @property
    def zero_support_classes(self) -> list[int]:
        sums = self.confusion.counts.sum(axis=1)
        return [int(self.classes[i]) for i in np.flatnonzero(sums == 0)]


def _sample_sd(values: list[float]) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(np.asarray(values, dtype=np.float64), ddof=1))


def _fold_task(args):
    (
        fold_idx,
        x_train,
        y_train,
        x_test,
        y_test,
        column_names,
        classes,
        model,
        balance,
        forest_seed,
        smote_seed,
    ) = args
    fallback_rows = 0
    params = replace(model, seed=forest_seed)
    m_train = FeatureMatrix(x_train, column_names)
    if balance.mode is BalanceMode.SMOTE:
        fallback_rows = sum(p.n_synthetic for p in oversample_plan(y_train) if p.replicate)
        m_train, y_train = smote_oversample(
            m_train, y_train, BalanceSpec(BalanceMode.SMOTE, balance.smote_k, smote_seed)
        )
    elif balance.mode is BalanceMode.CLASS_WEIGHTS:
        params = replace(params, class_weights=class_weights(y_train))
    forest = fit_forest(m_train, y_train, params)
    y_pred = predict(forest, x_test)
    cm = confusion_from_predictions(y_test, y_pred, classes)
    _, macro, weighted = f1_scores(cm)
    return fold_idx, cm.counts, weighted, macro, fallback_rows


def run_cv(
    m: FeatureMatrix,
    labels,
    model: ForestParams,
    spec: CvSpec,
    class_names: list[str] | None = None,
    n_jobs: int = 1,
) -> EvalReport:
    """Stratified k-fold evaluation of one model configuration.

    Balancing (weights or SMOTE) is refit on each training split. A fold whose
    training split is missing a class is flagged and contributes neither to the
    fold statistics nor to the summed confusion matrix.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if m.n_rows != labels.size:
        raise ModelError("matrix rows and labels differ in length")
    classes = np.unique(labels)
    counts = {int(c): int((labels == c).sum()) for c in classes}
    small_classes = [c for c, n in counts.items() if n < spec.k]
    folds = stratified_kfold(labels, spec.k, spec.seed)

    tasks = []
    flagged: list[int] = []
    for f, (train, test) in enumerate(folds):
        y_train = labels[train]
        if test.size == 0 or len(np.unique(y_train)) != len(classes):
            flagged.append(f)
            continue
        tasks.append(
            (
                f,
                m.values[train],
                y_train,
                m.values[test],
                labels[test],
                list(m.column_names),
                classes,
                model,
                spec.balance,
                derive_seed(model.seed, 101, f),
                derive_seed(spec.balance.seed, 202, f),
            )
        )

    if n_jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_fold_task, tasks))
    else:
        results = [_fold_task(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    summed = np.zeros((len(classes), len(classes)), dtype=np.int64)
    per_fold_f1, per_fold_macro, fallback_total = [], [], 0
    for _, cm_counts, weighted, macro, fallback in results:
        summed += cm_counts
        per_fold_f1.append(weighted)
        per_fold_macro.append(macro)
        fallback_total += fallback

    if not per_fold_f1:
        raise ModelError("every fold was flagged; cannot evaluate")
    names = class_names if class_names is not None else [str(int(c)) for c in classes]
    return EvalReport(
        classes=[int(c) for c in classes],
        class_names=[names[int(c)] for c in classes] if class_names else names,
        k=spec.k,
        seed=spec.seed,
        balance_mode=spec.balance.mode.value,
        per_fold_f1=per_fold_f1,
        per_fold_macro_f1=per_fold_macro,
        mean_f1=float(np.mean(per_fold_f1)),
        sd_f1=_sample_sd(per_fold_f1),
        mean_macro_f1=float(np.mean(per_fold_macro)),
        sd_macro_f1=_sample_sd(per_fold_macro),
        flagged_folds=flagged,
        small_classes=small_classes,
        confusion=ConfusionMatrix(summed, classes),
        imputed_values=m.imputed_count,
        smote_replicated_rows=fallback_total,
    )


@dataclass
class ImportanceReport:
    column_names: list[str]
    mean_drop: np.ndarray
    sd_drop: np.ndarray
    baseline_f1: float
    holdout_fraction: float
    repeats: int
    seed: int

    def ranking(self) -> list[int]:
        """Column indices sorted by mean F1 drop, descending (ties by index)."""
        order = sorted(range(len(self.column_names)), key=lambda j: (-self.mean_drop[j], j))
        return order


def _stratified_holdout(labels: np.ndarray, fraction: float, seed: int):
    train_parts, hold_parts = [], []
    rng = np.random.default_rng([seed, 17])
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        rng.shuffle(idx)
        if idx.size < 2:
            train_parts.append(idx)
            continue
        n_hold = min(max(int(round(idx.size * fraction)), 1), idx.size - 1)
        hold_parts.append(idx[:n_hold])
        train_parts.append(idx[n_hold:])
    train = np.sort(np.concatenate(train_parts))
    hold = np.sort(np.concatenate(hold_parts)) if hold_parts else np.empty(0, dtype=np.int64)
    return train, hold


def permutation_importance(
    m: FeatureMatrix,
    labels,
    model: ForestParams,
    holdout_fraction: float = DEFAULT_HOLDOUT_FRACTION,
    repeats: int = DEFAULT_IMPORTANCE_REPEATS,
    seed: int = 0,
    balance: BalanceSpec | None = None,
) -> ImportanceReport:
    """Mean F1 drop on a held-out split when one feature column is permuted.

    The model is fitted once on the (optionally oversampled) training split. Each
    column's permutations are seeded by the column NAME, so a column keeps its
    importance when columns are reordered.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must be in (0, 1)")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    labels = np.asarray(labels, dtype=np.int64)
    classes = np.unique(labels)
    balance = balance if balance is not None else BalanceSpec()

    train, hold = _stratified_holdout(labels, holdout_fraction, seed)
    if hold.size == 0:
        raise ModelError("holdout split is empty")
    m_train = FeatureMatrix(m.values[train], list(m.column_names))
    y_train = labels[train]
    params = replace(model, seed=derive_seed(seed, 29))
    if balance.mode is BalanceMode.SMOTE:
        m_train, y_train = smote_oversample(
            m_train, y_train, BalanceSpec(BalanceMode.SMOTE, balance.smote_k, derive_seed(seed, 23))
        )
    elif balance.mode is BalanceMode.CLASS_WEIGHTS:
        params = replace(params, class_weights=class_weights(y_train))
    forest = fit_forest(m_train, y_train, params)

    x_hold = m.values[hold].copy()
    y_hold = labels[hold]
    baseline = f1_scores(confusion_from_predictions(y_hold, predict(forest, x_hold), classes))[2]

    n_cols = m.n_cols
    drops = np.zeros((n_cols, repeats))
    for j, name in enumerate(m.column_names):
        name_key = zlib.crc32(name.encode("utf-8"))
        saved = x_hold[:, j].copy()
        for r in range(repeats):
            rng = np.random.default_rng([seed, 31, name_key, r])
            x_hold[:, j] = saved[rng.permutation(hold.size)]
            f1 = f1_scores(confusion_from_predictions(y_hold, predict(forest, x_hold), classes))[2]
            drops[j, r] = baseline - f1
        x_hold[:, j] = saved

    mean_drop = drops.mean(axis=1)
    sd_drop = drops.std(axis=1, ddof=1) if repeats > 1 else np.zeros(n_cols)
    return ImportanceReport(
        list(m.column_names), mean_drop, sd_drop, float(baseline), holdout_fraction, repeats, seed
    )


@dataclass
class AblationStep:
    channels: tuple[ChannelKind, ...]
    n_columns: int
    mean_f1: float
    sd_f1: float


def modality_ablation(
    m: FeatureMatrix,
    labels,
    model: ForestParams,
    spec: CvSpec,
    channel_order: list[list[ChannelKind]],
    class_names: list[str] | None = None,
    n_jobs: int = 1,
) -> list[AblationStep]:
    """run_cv restricted to cumulative channel groups, one report entry per step."""
    if not channel_order:
        raise ModelError("channel_order must list at least one channel group")
    steps: list[AblationStep] = []
    cumulative: list[ChannelKind] = []
    for group in channel_order:
        cumulative.extend(group)
        wanted = {ch.value for ch in cumulative}
        indices = [i for i, name in enumerate(m.column_names) if name.split(".")[0] in wanted]
        if not indices:
            raise ModelError(f"no columns for channel set {sorted(wanted)}")
        report = run_cv(m.select_columns(indices), labels, model, spec, class_names, n_jobs)
        steps.append(
            AblationStep(tuple(cumulative), len(indices), report.mean_f1, report.sd_f1)
        )
    return steps


def eval_report_to_dict(report: EvalReport) -> dict:
    return {
        "schema": EVAL_SCHEMA,
        "classes": report.classes,
        "class_names": report.class_names,
        "k": report.k,
        "seed": report.seed,
        "balance_mode": report.balance_mode,
        "per_fold_f1": report.per_fold_f1,
        "per_fold_macro_f1": report.per_fold_macro_f1,
        "mean_f1": report.mean_f1,
        "sd_f1": report.sd_f1,
        "mean_macro_f1": report.mean_macro_f1,
        "sd_macro_f1": report.sd_macro_f1,
        "flagged_folds": report.flagged_folds,
        "small_classes": report.small_classes,
        "confusion": report.confusion.counts.tolist(),
        "row_normalized": report.row_normalized.tolist(),
        "zero_support_classes": report.zero_support_classes,
        "imputed_values": report.imputed_values,
        "smote_replicated_rows": report.smote_replicated_rows,
    }


def importance_report_to_dict(report: ImportanceReport) -> dict:
    ranking = report.ranking()
    return {
        "schema": IMPORTANCE_SCHEMA,
        "baseline_f1": report.baseline_f1,
        "holdout_fraction": report.holdout_fraction,
        "repeats": report.repeats,
        "seed": report.seed,
        "features": [
            {
                "name": report.column_names[j],
                "mean_drop": float(report.mean_drop[j]),
                "sd_drop": float(report.sd_drop[j]),
            }
            for j in ranking
        ],
    }


def ablation_to_dict(steps: list[AblationStep]) -> dict:
    return {
        "schema": ABLATION_SCHEMA,
        "steps": [
            {
                "channels": [ch.value for ch in s.channels],
                "n_columns": s.n_columns,
                "mean_f1": s.mean_f1,
                "sd_f1": s.sd_f1,
            }
            for s in steps
        ],
    }


def write_json_report(doc: dict, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return path


def write_confusion_csv(report: EvalReport, path: str | Path) -> Path:
    """Row-normalized confusion matrix as CSV (rows true, columns predicted)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rn = report.row_normalized
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("true\\predicted," + ",".join(report.class_names) + "\n")
        for name, row in zip(report.class_names, rn):
            fh.write(name + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
    return path
