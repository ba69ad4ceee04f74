"""Per-window feature extraction.

Every channel of a window yields 30 features: 27 time-domain statistics plus
energy, power, and spectral entropy. The canonical order is fixed by
TIME_FEATURES + FREQ_FEATURES; feature vectors are laid out channels-major,
features-minor, with column names ``<channel>.<feature>``.

Degenerate results (zero-variance moments, variation coefficient at zero mean,
series too short for a central second derivative) come out non-finite and are
imputed to 0; every imputation is counted so downstream reports can audit it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path

import numpy as np

from .errors import FeatureError
from .ingest import ChannelKind
from .windows import Window

TIME_FEATURES: tuple[str, ...] = (
    "kurtosis",
    "mean",
    "std",
    "maximum",
    "minimum",
    "variance",
    "skewness",
    "median",
    "variation_coefficient",
    "abs_sum_of_changes",
    "benford_correlation",
    "count_above_mean",
    "count_below_mean",
    "first_location_of_maximum",
    "first_location_of_minimum",
    "has_duplicate",
    "has_duplicate_max",
    "has_duplicate_min",
    "last_location_of_maximum",
    "last_location_of_minimum",
    "longest_strike_above_mean",
    "longest_strike_below_mean",
    "mean_abs_change",
    "mean_change",
    "mean_second_derivative_central",
    "sum_reoccurring_data_points",
    "sum_reoccurring_values",
)

FREQ_FEATURES: tuple[str, ...] = ("energy", "power", "entropy")

ALL_FEATURES: tuple[str, ...] = TIME_FEATURES + FREQ_FEATURES

# Benford's law first-digit probabilities, P(d) = log10(1 + 1/d) for d = 1..9.
BENFORD_P = np.log10(1.0 + 1.0 / np.arange(1, 10))


@dataclass(frozen=True)
class FeatureSet:
    """The feature bank applied to each channel of a window."""

    channels: tuple[ChannelKind, ...]
    time_features: tuple[str, ...] = TIME_FEATURES
    freq_features: tuple[str, ...] = FREQ_FEATURES

    def __post_init__(self):
        if self.time_features != TIME_FEATURES or self.freq_features != FREQ_FEATURES:
            raise ValueError("feature lists are fixed; only channels vary")
        if not self.channels:
            raise ValueError("at least one channel required")
        if len(set(self.channels)) != len(self.channels):
            raise ValueError("duplicate channels")

    @property
    def names(self) -> tuple[str, ...]:
        return ALL_FEATURES

    @property
    def width(self) -> int:
        return len(self.channels) * len(ALL_FEATURES)

    def column_names(self) -> list[str]:
        return [f"{ch.value}.{feat}" for ch in self.channels for feat in ALL_FEATURES]


@dataclass
class FeatureVector:
    """One window's features; all values finite after imputation."""

    values: np.ndarray
    window_ref: tuple[str, float]
    feature_set: FeatureSet
    imputed: int = 0


@dataclass
class FeatureMatrix:
    """Rectangular feature matrix with stable column naming."""

    values: np.ndarray
    column_names: list[str]
    imputed_count: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if self.values.shape[1] != len(self.column_names):
            raise ValueError("column_names length must equal row width")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def select_columns(self, indices: list[int]) -> "FeatureMatrix":
        return FeatureMatrix(
            self.values[:, indices],
            [self.column_names[i] for i in indices],
            self.imputed_count,
        )


def first_digits(x: np.ndarray) -> np.ndarray:
    """First significant decimal digit of |x_i| for the nonzero entries.

    Uses the exact binary-to-decimal expansion (Decimal), so values an ulp below
    a power of ten keep their true leading digit; floor(log10)-based scaling
    rounds those cases the wrong way.
    """
    av = np.abs(np.asarray(x, dtype=np.float64))
    av = av[av > 0]
    return np.array([Decimal(v).as_tuple().digits[0] for v in av], dtype=np.int64)


def benford_correlation(x: np.ndarray) -> float:
    """Pearson correlation between the first-digit frequencies of x and Benford's law.

    Zeros carry no leading digit and are excluded. Returns 0 when undefined:
    no nonzero samples, or a zero-variance frequency vector.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 1:
        raise FeatureError("benford_correlation requires at least one sample")
    d = first_digits(x)
    if d.size == 0:
        return 0.0
    freq = np.bincount(d, minlength=10)[1:10] / d.size
    if np.ptp(freq) == 0 or np.ptp(BENFORD_P) == 0:
        return 0.0
    return float(np.corrcoef(freq, BENFORD_P)[0, 1])


def spectral_entropy(x: np.ndarray) -> float:
    """Shannon entropy of the normalized one-sided periodogram (DC excluded).

    The series is mean-subtracted before the DFT; bins k = 1..floor(L/2) form the
    distribution. A constant series (zero spectrum) gives 0 by convention.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise FeatureError("spectral_entropy requires at least two samples")
    if x.min() == x.max():
        return 0.0
    spectrum = np.fft.rfft(x - x.mean())
    power = np.abs(spectrum[1:]) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    p = power / total
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def mean_second_derivative_central(x: np.ndarray) -> float:
    """Mean of the central second difference (x[i+1] - 2 x[i] + x[i-1]) / 2."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        raise FeatureError("mean_second_derivative_central requires at least three samples")
    return float(np.mean((x[2:] - 2.0 * x[1:-1] + x[:-2]) / 2.0))


def reoccurring_sums(x: np.ndarray) -> tuple[float, float]:
    """(sum of samples whose value repeats, with multiplicity; sum of repeated distinct values)."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 1:
        raise FeatureError("reoccurring_sums requires at least one sample")
    uniq, counts = np.unique(x, return_counts=True)
    repeated = counts > 1
    return float((uniq[repeated] * counts[repeated]).sum()), float(uniq[repeated].sum())


def _longest_run(flags: np.ndarray) -> int:
    if not flags.any():
        return 0
    padded = np.concatenate(([False], flags, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return int((edges[1::2] - edges[0::2]).max())


def _series_features(x: np.ndarray) -> np.ndarray:
    """All 30 features of one channel series, in canonical order.

    May contain non-finite entries for degenerate inputs; the caller imputes.
    The mean uses the exactly-rounded sum (math.fsum) so strict comparisons
    against it (counts, strikes) do not depend on summation order.
    """
    n = x.size
    mean = math.fsum(x) / n
    dev = x - mean
    m2 = float(np.mean(dev**2))
    std = float(np.sqrt(m2))
    diffs = np.diff(x)

    if n >= 3 and m2 > 0:
        g1 = float(np.mean(dev**3)) / m2**1.5
        skew = g1 * np.sqrt(n * (n - 1)) / (n - 2)
    else:
        skew = np.nan
    if n >= 4 and m2 > 0:
        g2 = float(np.mean(dev**4)) / m2**2 - 3.0
        kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    else:
        kurt = np.nan

    xmax, xmin = float(np.max(x)), float(np.min(x))
    argmax_first = int(np.argmax(x))
    argmin_first = int(np.argmin(x))
    argmax_last = n - 1 - int(np.argmax(x[::-1]))
    argmin_last = n - 1 - int(np.argmin(x[::-1]))
    n_unique = len(np.unique(x))

    if n >= 3:
        msdc = float(np.mean((x[2:] - 2.0 * x[1:-1] + x[:-2]) / 2.0))
    else:
        msdc = np.nan

    sum_points, sum_values = reoccurring_sums(x)
    energy = float(np.dot(x, x))

    return np.array(
        [
            kurt,
            mean,
            std,
            xmax,
            xmin,
            m2,
            skew,
            float(np.median(x)),
            std / mean if mean != 0.0 else np.nan,
            float(np.abs(diffs).sum()),
            benford_correlation(x),
            float(np.sum(x > mean)),
            float(np.sum(x < mean)),
            argmax_first / n,
            argmin_first / n,
            float(n_unique < n),
            float(np.sum(x == xmax) > 1),
            float(np.sum(x == xmin) > 1),
            (argmax_last + 1) / n,
            (argmin_last + 1) / n,
            float(_longest_run(x > mean)),
            float(_longest_run(x < mean)),
            float(np.abs(diffs).mean()),
            float((x[-1] - x[0]) / (n - 1)),
            msdc,
            sum_points,
            sum_values,
            energy,
            energy / n,
            spectral_entropy(x),
        ],
        dtype=np.float64,
    )


def extract_features(w: Window, fs: FeatureSet) -> FeatureVector:
    """Feature vector of one window: 30 features per channel, channels-major."""
    parts = []
    imputed = 0
    for ch in fs.channels:
        if ch not in w.values:
            raise FeatureError(f"window is missing channel {ch.value}")
        vals = _series_features(np.asarray(w.values[ch], dtype=np.float64))
        bad = ~np.isfinite(vals)
        if bad.any():
            imputed += int(bad.sum())
            vals = np.where(bad, 0.0, vals)
        parts.append(vals)
    return FeatureVector(np.concatenate(parts), (w.trip_id, w.start_ms), fs, imputed)


def impute_and_assemble(rows: list[FeatureVector]) -> FeatureMatrix:
    """Stack feature vectors into a rectangular matrix with stable column names.

    All rows must come from the same feature set. Any remaining non-finite value
    (rows built by hand) is imputed to 0 and added to the matrix tally.
    """
    if not rows:
        raise FeatureError("no feature vectors to assemble")
    fs = rows[0].feature_set
    for r in rows[1:]:
        if r.feature_set != fs:
            raise FeatureError("rows come from different feature sets")
    values = np.stack([r.values for r in rows])
    imputed = sum(r.imputed for r in rows)
    bad = ~np.isfinite(values)
    if bad.any():
        imputed += int(bad.sum())
        values = np.where(bad, 0.0, values)
    return FeatureMatrix(values, fs.column_names(), imputed)


def write_matrix_csv(
    matrix: FeatureMatrix,
    path: str | Path,
    labels: np.ndarray | None = None,
    class_names: list[str] | None = None,
) -> Path:
    """Write the matrix (optionally with a label column) as CSV.

    Values are printed with 17 significant digits so a read back is bit-exact.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = list(matrix.column_names)
    if labels is not None:
        if len(labels) != matrix.n_rows:
            raise ValueError("labels length must match row count")
        header.append("label")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(matrix.n_rows):
            fields = [f"{v:.17g}" for v in matrix.values[i]]
            if labels is not None:
                name = class_names[int(labels[i])] if class_names else str(int(labels[i]))
                fields.append(name)
            fh.write(",".join(fields) + "\n")
    return path


def read_matrix_csv(path: str | Path) -> tuple[FeatureMatrix, list[str] | None]:
    """Read a matrix written by write_matrix_csv; returns (matrix, label column or None)."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split(",")
        has_labels = header and header[-1] == "label"
        n_cols = len(header) - (1 if has_labels else 0)
        rows, labels = [], []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            rows.append([float(v) for v in parts[:n_cols]])
            if has_labels:
                labels.append(",".join(parts[n_cols:]))
    values = np.array(rows, dtype=np.float64).reshape(len(rows), n_cols)
    matrix = FeatureMatrix(values, header[:n_cols])
    return matrix, (labels if has_labels else None)
