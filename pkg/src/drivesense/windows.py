"""Slice a resampled trip into fixed-length, overlapping windows."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .ingest import ChannelKind, UniformTrip

DEFAULT_WINDOW_S = 1.0
DEFAULT_OVERLAP = 0.5


@dataclass(frozen=True)
class WindowSpec:
    """Window length in seconds and the overlap fraction between consecutive windows."""

    length: float = DEFAULT_WINDOW_S
    overlap_fraction: float = DEFAULT_OVERLAP

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("window length must be positive")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError("overlap_fraction must be in [0, 1)")

    def samples(self, rate: float) -> int:
        """Window length in samples; length * rate must be an integer >= 2."""
        n = self.length * rate
        n_int = int(round(n))
        if abs(n - n_int) > 1e-9 or n_int < 2:
            raise ValueError(f"window length x rate must be an integer >= 2, got {n}")
        return n_int

    def stride(self, rate: float) -> int:
        """Stride in samples, rounded half-up, at least 1."""
        n = self.samples(rate)
        return max(1, int(math.floor(n * (1.0 - self.overlap_fraction) + 0.5)))


@dataclass
class Window:
    """A fixed-length slice of one trip.

    The window covers absolute time [start_ms, end_ms) where
    end_ms - start_ms equals L / rate in milliseconds.
    """

    trip_id: str
    start_ms: float
    end_ms: float
    values: dict[ChannelKind, np.ndarray]

    @property
    def midpoint_ms(self) -> float:
        return (self.start_ms + self.end_ms) / 2.0

    @property
    def n_samples(self) -> int:
        return len(next(iter(self.values.values())))


def slice_windows(trip: UniformTrip, spec: WindowSpec) -> list[Window]:
    """Emit complete windows at stride offsets, skipping any that touch a gap.

    A trip shorter than one window yields an empty list.
    """
    length = spec.samples(trip.rate)
    stride = spec.stride(trip.rate)
    n = trip.n_samples
    if n < length:
        return []

    step_ms = 1000.0 / trip.rate
    windows: list[Window] = []
    for offset in range(0, n - length + 1, stride):
        if trip.gap_mask[offset : offset + length].any():
            continue
        values = {k: v[offset : offset + length] for k, v in trip.channels.items()}
        start = trip.start_ms + offset * step_ms
        windows.append(Window(trip.trip_id, start, start + length * step_ms, values))
    return windows


def slice_all(trips: list[UniformTrip], spec: WindowSpec) -> list[Window]:
    """Windows of several trips, concatenated in trip order."""
    out: list[Window] = []
    for trip in trips:
        out.extend(slice_windows(trip, spec))
    return out
