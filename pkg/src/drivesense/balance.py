"""Class-imbalance correction: inverse-frequency weights and SMOTE oversampling."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .features import FeatureMatrix

DEFAULT_SMOTE_K = 5


class BalanceMode(enum.Enum):
    NONE = "none"
    CLASS_WEIGHTS = "weights"
    SMOTE = "smote"


@dataclass(frozen=True)
class BalanceSpec:
    mode: BalanceMode = BalanceMode.NONE
    smote_k: int = DEFAULT_SMOTE_K
    seed: int = 0

    def __post_init__(self):
        if self.smote_k < 1:
            raise ValueError("smote_k must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class ClassWeights:
    """Per-class weights w_c = N / (C * n_c); sum of n_c * w_c equals N."""

    weights: dict[int, float]

    def __getitem__(self, cls: int) -> float:
        return self.weights[cls]


def class_weights(labels: np.ndarray) -> ClassWeights:
    """Inverse-frequency weights over the classes present in `labels`."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise DataError("cannot weight an empty label list")
    classes, counts = np.unique(labels, return_counts=True)
    total = labels.size
    n_classes = len(classes)
    return ClassWeights(
        {int(c): total / (n_classes * int(n)) for c, n in zip(classes, counts)}
    )


@dataclass(frozen=True)
class OversamplePlan:
    """How one class is brought up to the majority count."""

    cls: int
    n_present: int
    n_synthetic: int
    replicate: bool  # singleton class: no neighbors, fall back to copying


def oversample_plan(labels: np.ndarray) -> list[OversamplePlan]:
    """Per-class oversampling plan (classes in ascending order, majority included)."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise DataError("cannot plan oversampling of an empty label list")
    classes, counts = np.unique(labels, return_counts=True)
    majority = int(counts.max())
    return [
        OversamplePlan(int(c), int(n), majority - int(n), replicate=int(n) == 1)
        for c, n in zip(classes, counts)
    ]


def smote_oversample(
    m: FeatureMatrix, labels: np.ndarray, spec: BalanceSpec
) -> tuple[FeatureMatrix, np.ndarray]:
    """Oversample every minority class up to the majority count.

    Each synthetic row is x_i + u * (x_nn - x_i) with u ~ Uniform[0, 1) and x_nn one
    of the `smote_k` nearest same-class neighbors; distances use columns standardized
    with this matrix's own mean/std so large-range channels do not dominate. A class
    with a single sample has no neighbors and is replicated instead. Original rows
    come first, unchanged; synthetic rows follow grouped by ascending class. The
    result is deterministic given spec.seed (one substream per class).
    """
    labels = np.asarray(labels, dtype=np.int64)
    if m.n_rows == 0:
        raise DataError("cannot oversample an empty matrix")
    if m.n_rows != labels.size:
        raise DataError("matrix rows and labels differ in length")

    x = m.values
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    scale = np.where(std > 0, std, 1.0)
    xs = (x - mean) / scale

    synth_rows: list[np.ndarray] = []
    synth_labels: list[np.ndarray] = []
    for plan in oversample_plan(labels):
        if plan.n_synthetic == 0:
            continue
        idx = np.flatnonzero(labels == plan.cls)
        rng = np.random.default_rng([spec.seed, plan.cls])
        if plan.replicate:
            new = np.repeat(x[idx], plan.n_synthetic, axis=0)
        else:
            k = min(spec.smote_k, plan.n_present - 1)
            cls_s = xs[idx]
            sq = (cls_s**2).sum(axis=1)
            d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (cls_s @ cls_s.T), 0.0)
            np.fill_diagonal(d2, np.inf)
            neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
            base = rng.integers(0, plan.n_present, plan.n_synthetic)
            pick = rng.integers(0, k, plan.n_synthetic)
            u = rng.random(plan.n_synthetic)
            x_base = x[idx[base]]
            x_nn = x[idx[neighbors[base, pick]]]
            new = x_base + u[:, None] * (x_nn - x_base)
        synth_rows.append(new)
        synth_labels.append(np.full(len(new), plan.cls, dtype=np.int64))

    if synth_rows:
        out_x = np.vstack([x] + synth_rows)
        out_y = np.concatenate([labels] + synth_labels)
    else:
        out_x, out_y = x.copy(), labels.copy()
    return FeatureMatrix(out_x, list(m.column_names), m.imputed_count), out_y
