"""Sensor log ingestion: parse per-channel CSV logs and resample a trip onto one grid.

File convention: one CSV per sensor per trip named ``<trip_id>_<sensor>.csv``.
Single-value sensors (ppg, hr, light, noise) use ``timestamp_ms,value`` records;
tri-axial sensors (accel, gyro) use ``timestamp_ms,x,y,z`` and yield three channels.
A header row is optional and detected by a non-numeric first field.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, DataError, ParseError

DEFAULT_TARGET_RATE_HZ = 10.0
DEFAULT_MAX_GAP_S = 5.0


class Interpolation(enum.Enum):
    LINEAR = "linear"
    HOLD_PREVIOUS = "hold_previous"


class ChannelKind(enum.Enum):
    """One sensor stream of the smartwatch.

    Magnitude channels are derived from the tri-axial streams and never parsed
    from files. Light and noise are sparse ambient readings and are resampled
    by zero-order hold; everything else is interpolated linearly.
    """

    ACCEL_X = "accel_x"
    ACCEL_Y = "accel_y"
    ACCEL_Z = "accel_z"
    GYRO_X = "gyro_x"
    GYRO_Y = "gyro_y"
    GYRO_Z = "gyro_z"
    ACCEL_MAG = "accel_mag"
    GYRO_MAG = "gyro_mag"
    PPG = "ppg"
    HR = "hr"
    LIGHT = "light"
    NOISE = "noise"

    @property
    def native_rate(self) -> float:
        """Nominal collection frequency in Hz."""
        return _NATIVE_RATE[self]

    @property
    def interpolation(self) -> Interpolation:
        return (
            Interpolation.HOLD_PREVIOUS
            if self in (ChannelKind.LIGHT, ChannelKind.NOISE)
            else Interpolation.LINEAR
        )

    @property
    def is_derived(self) -> bool:
        return self in (ChannelKind.ACCEL_MAG, ChannelKind.GYRO_MAG)


_NATIVE_RATE = {
    ChannelKind.ACCEL_X: 10.0,
    ChannelKind.ACCEL_Y: 10.0,
    ChannelKind.ACCEL_Z: 10.0,
    ChannelKind.GYRO_X: 10.0,
    ChannelKind.GYRO_Y: 10.0,
    ChannelKind.GYRO_Z: 10.0,
    ChannelKind.ACCEL_MAG: 10.0,
    ChannelKind.GYRO_MAG: 10.0,
    ChannelKind.PPG: 10.0,
    ChannelKind.HR: 1.0,
    ChannelKind.LIGHT: 1.0 / 60.0,
    ChannelKind.NOISE: 1.0 / 60.0,
}

# Sensor file stem -> channels carried by that file, in column order.
SENSOR_FILES: dict[str, tuple[ChannelKind, ...]] = {
    "accel": (ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z),
    "gyro": (ChannelKind.GYRO_X, ChannelKind.GYRO_Y, ChannelKind.GYRO_Z),
    "ppg": (ChannelKind.PPG,),
    "hr": (ChannelKind.HR,),
    "light": (ChannelKind.LIGHT,),
    "noise": (ChannelKind.NOISE,),
}

_SENSOR_OF_CHANNEL = {
    kind: stem for stem, kinds in SENSOR_FILES.items() for kind in kinds
}


@dataclass
class RawChannel:
    """One sensor stream at its native, irregular rate.

    Timestamps are milliseconds since epoch, strictly increasing; values finite.
    """

    kind: ChannelKind
    timestamps: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.timestamps.shape != self.values.shape or self.timestamps.ndim != 1:
            raise DataError(f"{self.kind.value}: timestamps and values must be equal-length 1-D")
        if len(self.timestamps) == 0:
            raise DataError(f"{self.kind.value}: channel has no samples")
        if np.any(np.diff(self.timestamps) <= 0):
            raise DataError(f"{self.kind.value}: timestamps not strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"{self.kind.value}: non-finite sample values")

    def __len__(self) -> int:
        return len(self.timestamps)


@dataclass(frozen=True)
class SamplingSpec:
    """Common-grid parameters: target rate and the longest tolerated source gap."""

    target_rate: float = DEFAULT_TARGET_RATE_HZ
    max_gap: float = DEFAULT_MAX_GAP_S

    def __post_init__(self):
        if self.target_rate <= 0:
            raise ValueError("target_rate must be positive")
        if self.max_gap <= 0:
            raise ValueError("max_gap must be positive")


@dataclass
class UniformTrip:
    """All channels of one drive resampled onto a shared grid.

    Sample i of every channel corresponds to time ``start_ms + i / rate`` (seconds
    after start). ``gap_mask[i]`` is true when, for at least one channel, the source
    samples bracketing grid point i were further apart than ``max_gap``.
    """

    trip_id: str
    start_ms: int
    rate: float
    channels: dict[ChannelKind, np.ndarray]
    gap_mask: np.ndarray

    def __post_init__(self):
        lengths = {len(v) for v in self.channels.values()}
        if len(lengths) != 1:
            raise DataError(f"trip {self.trip_id}: channel arrays differ in length")
        n = lengths.pop()
        if n < 1:
            raise DataError(f"trip {self.trip_id}: empty grid")
        if len(self.gap_mask) != n:
            raise DataError(f"trip {self.trip_id}: gap_mask length mismatch")

    @property
    def n_samples(self) -> int:
        return len(self.gap_mask)


def _is_header(parts: list[str]) -> bool:
    """A header row has no numeric field at all; 'abc,0.1' is malformed data."""
    for p in parts:
        try:
            float(p)
            return False
        except ValueError:
            continue
    return True


def _parse_rows(path: Path, n_values: int):
    """Yield (line_no, timestamp_ms, values) rows, skipping an optional header."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if line_no == 1 and _is_header(parts):
                continue
            if len(parts) != 1 + n_values:
                raise ParseError(
                    f"{path}: line {line_no}: expected {1 + n_values} fields, got {len(parts)}"
                )
            try:
                ts = int(parts[0])
                vals = [float(p) for p in parts[1:]]
            except ValueError:
                raise ParseError(f"{path}: line {line_no}: malformed record {line!r}") from None
            if not all(math.isfinite(v) for v in vals):
                raise DataError(f"{path}: line {line_no}: non-finite value")
            rows.append((line_no, ts, vals))
    if not rows:
        raise DataError(f"{path}: no data records")
    return rows


def _dedup_last(rows):
    """Collapse runs of duplicate timestamps, keeping the last record (log replay)."""
    out = []
    for row in rows:
        if out and out[-1][1] == row[1]:
            out[-1] = row
        else:
            out.append(row)
    return out


def parse_channel_log(path: str | Path, kind: ChannelKind) -> RawChannel:
    """Parse a single-value sensor log (``timestamp_ms,value`` per line)."""
    path = Path(path)
    rows = _dedup_last(_parse_rows(path, 1))
    for (ln_a, ts_a, _), (ln_b, ts_b, _) in zip(rows, rows[1:]):
        if ts_b <= ts_a:
            raise DataError(f"{path}: line {ln_b}: timestamp {ts_b} not after {ts_a}")
    ts = np.array([r[1] for r in rows], dtype=np.int64)
    vals = np.array([r[2][0] for r in rows], dtype=np.float64)
    return RawChannel(kind, ts, vals)


def parse_triaxial_log(
    path: str | Path, kinds: tuple[ChannelKind, ChannelKind, ChannelKind]
) -> tuple[RawChannel, RawChannel, RawChannel]:
    """Parse a tri-axial sensor log (``timestamp_ms,x,y,z``) into three channels."""
    path = Path(path)
    rows = _dedup_last(_parse_rows(path, 3))
    for (ln_a, ts_a, _), (ln_b, ts_b, _) in zip(rows, rows[1:]):
        if ts_b <= ts_a:
            raise DataError(f"{path}: line {ln_b}: timestamp {ts_b} not after {ts_a}")
    ts = np.array([r[1] for r in rows], dtype=np.int64)
    cols = np.array([r[2] for r in rows], dtype=np.float64)
    return tuple(RawChannel(k, ts, cols[:, i]) for i, k in enumerate(kinds))  # type: ignore[return-value]


def derive_magnitude(x: RawChannel, y: RawChannel, z: RawChannel) -> RawChannel:
    """Combine one tri-axial sensor into its orientation-free magnitude channel."""
    if not (np.array_equal(x.timestamps, y.timestamps) and np.array_equal(x.timestamps, z.timestamps)):
        raise DataError("magnitude inputs must share identical timestamps")
    accel = {ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z}
    kinds = {x.kind, y.kind, z.kind}
    out_kind = ChannelKind.ACCEL_MAG if kinds <= accel else ChannelKind.GYRO_MAG
    mag = np.sqrt(x.values**2 + y.values**2 + z.values**2)
    return RawChannel(out_kind, x.timestamps.copy(), mag)


def _resample_one(channel: RawChannel, grid_ms: np.ndarray):
    """Resample one channel onto grid times; returns (values, bracket_gap_seconds).

    Grid points that hit a source timestamp exactly copy the source value bitwise
    and count as a zero-length gap. The grid never extends past the channel's span,
    so a bracketing pair always exists.
    """
    ts = channel.timestamps.astype(np.float64)
    # index of the source sample at or before each grid point
    lo = np.searchsorted(ts, grid_ms, side="right") - 1
    lo = np.clip(lo, 0, len(ts) - 1)
    exact = ts[lo] == grid_ms
    hi = np.clip(lo + 1, 0, len(ts) - 1)

    vals = np.empty(len(grid_ms), dtype=np.float64)
    if channel.kind.interpolation is Interpolation.HOLD_PREVIOUS:
        vals[:] = channel.values[lo]
    else:
        span = ts[hi] - ts[lo]
        span[span == 0] = 1.0  # exact hits, overwritten below
        frac = (grid_ms - ts[lo]) / span
        vals[:] = channel.values[lo] + frac * (channel.values[hi] - channel.values[lo])
    vals[exact] = channel.values[lo][exact]

    gap_s = (ts[hi] - ts[lo]) / 1000.0
    gap_s[exact] = 0.0
    return vals, gap_s


def align_and_resample(
    channels: list[RawChannel], spec: SamplingSpec, trip_id: str = ""
) -> UniformTrip:
    """Resample all channels of one trip onto a shared uniform grid.

    The grid spans from the latest channel start to the earliest channel end, so
    every channel has data on both sides of every grid point (no extrapolation).
    """
    if not channels:
        raise DataError("no channels to align")
    kinds = [c.kind for c in channels]
    if len(set(kinds)) != len(kinds):
        raise DataError("duplicate channel kinds in trip")

    t0 = max(int(c.timestamps[0]) for c in channels)
    t1 = min(int(c.timestamps[-1]) for c in channels)
    if t0 > t1:
        raise AlignmentError(f"channels do not overlap in time (grid [{t0}, {t1}] empty)")

    span_s = (t1 - t0) / 1000.0
    n = int(math.floor(span_s * spec.target_rate + 1e-9)) + 1
    grid_ms = t0 + np.arange(n, dtype=np.float64) * (1000.0 / spec.target_rate)

    out: dict[ChannelKind, np.ndarray] = {}
    gap_mask = np.zeros(n, dtype=bool)
    for ch in channels:
        vals, gap_s = _resample_one(ch, grid_ms)
        out[ch.kind] = vals
        gap_mask |= gap_s > spec.max_gap
    return UniformTrip(trip_id, t0, spec.target_rate, out, gap_mask)


def load_trip(
    directory: str | Path,
    trip_id: str,
    channels: list[ChannelKind],
    spec: SamplingSpec,
    derive_magnitudes: bool = True,
) -> UniformTrip:
    """Load the sensor files of one trip and return it resampled onto the grid.

    ``channels`` selects which channels to produce; magnitude channels are derived
    from the corresponding tri-axial file when requested.
    """
    directory = Path(directory)
    wanted = set(channels)
    raw: dict[ChannelKind, RawChannel] = {}

    def _need_file(stem: str) -> Path:
        path = directory / f"{trip_id}_{stem}.csv"
        if not path.is_file():
            raise FileNotFoundError(f"missing sensor file: {path}")
        return path

    for stem, kinds in SENSOR_FILES.items():
        file_needed = any(k in wanted for k in kinds)
        if stem == "accel" and ChannelKind.ACCEL_MAG in wanted and derive_magnitudes:
            file_needed = True
        if stem == "gyro" and ChannelKind.GYRO_MAG in wanted and derive_magnitudes:
            file_needed = True
        if not file_needed:
            continue
        if len(kinds) == 3:
            parsed = parse_triaxial_log(_need_file(stem), kinds)  # type: ignore[arg-type]
            for ch in parsed:
                raw[ch.kind] = ch
        else:
            raw[kinds[0]] = parse_channel_log(_need_file(stem), kinds[0])

    if ChannelKind.ACCEL_MAG in wanted:
        raw[ChannelKind.ACCEL_MAG] = derive_magnitude(
            raw[ChannelKind.ACCEL_X], raw[ChannelKind.ACCEL_Y], raw[ChannelKind.ACCEL_Z]
        )
    if ChannelKind.GYRO_MAG in wanted:
        raw[ChannelKind.GYRO_MAG] = derive_magnitude(
            raw[ChannelKind.GYRO_X], raw[ChannelKind.GYRO_Y], raw[ChannelKind.GYRO_Z]
        )

    return align_and_resample([raw[k] for k in channels], spec, trip_id=trip_id)


def discover_trips(directory: str | Path) -> list[str]:
    """Return trip ids present in a data directory, inferred from accel file names."""
    directory = Path(directory)
    ids = sorted(p.name[: -len("_accel.csv")] for p in directory.glob("*_accel.csv"))
    return ids


def write_trip_csvs(trip: UniformTrip, directory: str | Path) -> list[Path]:
    """Write a trip's channels back out in the sensor-file format.

    Derived magnitude channels are skipped (they are never stored on disk). All
    samples are written at the trip's grid rate, so re-ingesting reproduces the
    trip bitwise.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    step_ms = 1000.0 / trip.rate
    ts = trip.start_ms + np.arange(trip.n_samples) * step_ms
    ts_int = np.round(ts).astype(np.int64)

    written = []
    for stem, kinds in SENSOR_FILES.items():
        present = [k for k in kinds if k in trip.channels]
        if not present:
            continue
        if len(present) != len(kinds):
            raise DataError(f"trip {trip.trip_id}: incomplete {stem} axes {present}")
        path = directory / f"{trip.trip_id}_{stem}.csv"
        cols = [trip.channels[k] for k in kinds]
        with open(path, "w", encoding="utf-8") as fh:
            for i in range(trip.n_samples):
                vals = ",".join(f"{c[i]:.17g}" for c in cols)
                fh.write(f"{ts_int[i]},{vals}\n")
        written.append(path)
    return written
