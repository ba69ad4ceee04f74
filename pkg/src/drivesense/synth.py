"""Deterministic synthetic trip generator used as ground truth for pipeline tests.

Each labeled event becomes its own short trip on the common grid; every channel
is baseline + amplitude * sin(2*pi*f*t + phase) + Gaussian noise, so class signal
shows up in both time-domain statistics and the spectrum. The `separation` knob
scales the between-class baseline differences: at 0 every class collapses onto
the shared mean baseline, so classes with otherwise identical profiles become
indistinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ingest import ChannelKind, UniformTrip, write_trip_csvs
from .labels import LabelTrack, Taxonomy, write_annotations

SYNTH_CATEGORY = "Synthetic"


@dataclass(frozen=True)
class ChannelSignal:
    """Sinusoid-plus-noise parameters of one channel for one class."""

    baseline: float = 0.0
    amplitude: float = 0.0
    frequency_hz: float = 0.0
    noise_sd: float = 0.1


@dataclass(frozen=True)
class ClassProfile:
    name: str
    channels: dict[ChannelKind, ChannelSignal] = field(default_factory=dict)


@dataclass(frozen=True)
class SynthSpec:
    classes: tuple[ClassProfile, ...]
    event_duration_range: tuple[float, float] = (4.0, 8.0)
    separation: float = 1.0
    n_events_per_class: int = 20
    seed: int = 0
    rate: float = 10.0

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValueError("need at least two classes")
        lo, hi = self.event_duration_range
        if not 0 < lo <= hi:
            raise ValueError("event_duration_range must satisfy 0 < lo <= hi")
        if self.separation < 0:
            raise ValueError("separation must be >= 0")
        if self.n_events_per_class < 1:
            raise ValueError("n_events_per_class must be >= 1")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        channel_sets = {tuple(sorted(p.channels, key=lambda c: c.value)) for p in self.classes}
        if len(channel_sets) != 1:
            raise ValueError("all class profiles must cover the same channels")
        names = [p.name for p in self.classes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate class names")

    @property
    def channels(self) -> tuple[ChannelKind, ...]:
        return tuple(sorted(self.classes[0].channels, key=lambda c: c.value))


def effective_baselines(spec: SynthSpec) -> dict[str, dict[ChannelKind, float]]:
    """Per-class baselines with between-class differences scaled by `separation`."""
    out: dict[str, dict[ChannelKind, float]] = {}
    for ch in spec.channels:
        center = float(np.mean([p.channels[ch].baseline for p in spec.classes]))
        for p in spec.classes:
            out.setdefault(p.name, {})[ch] = center + spec.separation * (
                p.channels[ch].baseline - center
            )
    return out


def generate(spec: SynthSpec) -> tuple[list[UniformTrip], LabelTrack]:
    """Generate one trip per event plus the matching annotation track.

    Event order is shuffled once; each trip's duration, phases, and noise come
    from a generator seeded by (seed, event index), so output is reproducible
    and independent of generation order.
    """
    taxonomy = Taxonomy(SYNTH_CATEGORY, tuple(p.name for p in spec.classes))
    baselines = effective_baselines(spec)
    profiles = {p.name: p for p in spec.classes}

    order = [p.name for p in spec.classes for _ in range(spec.n_events_per_class)]
    np.random.default_rng([spec.seed, 7]).shuffle(order)

    lo, hi = spec.event_duration_range
    step_ms = 1000.0 / spec.rate
    gap_ms = 10_000.0

    trips: list[UniformTrip] = []
    intervals: list[tuple[float, float, str]] = []
    start_ms = 0.0
    for event_idx, cls_name in enumerate(order):
        rng = np.random.default_rng([spec.seed, 11, event_idx])
        duration_s = float(rng.uniform(lo, hi))
        n = max(2, int(round(duration_s * spec.rate)))
        t = np.arange(n) / spec.rate
        channels: dict[ChannelKind, np.ndarray] = {}
        for ch in spec.channels:
            sig = profiles[cls_name].channels[ch]
            phase = rng.uniform(0.0, 2.0 * np.pi)
            wave = baselines[cls_name][ch] + sig.amplitude * np.sin(
                2.0 * np.pi * sig.frequency_hz * t + phase
            )
            channels[ch] = wave + rng.normal(0.0, sig.noise_sd, n)
        trip = UniformTrip(
            trip_id=f"synth{event_idx:05d}",
            start_ms=int(start_ms),
            rate=spec.rate,
            channels=channels,
            gap_mask=np.zeros(n, dtype=bool),
        )
        trips.append(trip)
        end_ms = start_ms + n * step_ms
        intervals.append((start_ms, end_ms, cls_name))
        start_ms = end_ms + gap_ms

    return trips, LabelTrack(taxonomy, intervals).validate()


def write_dataset(
    trips: list[UniformTrip],
    track: LabelTrack,
    directory: str | Path,
    category: str | None = None,
) -> Path:
    """Write a generated dataset in the pipeline's file formats.

    One sensor CSV set per trip plus one annotation CSV per trip, so the result
    is consumable by the ingestion and labeling stages unchanged.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    category = category or track.category
    by_start = sorted(track.intervals, key=lambda iv: iv[0])
    for trip, interval in zip(trips, by_start):
        write_trip_csvs(trip, directory)
        write_annotations(
            LabelTrack(track.taxonomy, [interval]),
            directory / f"{trip.trip_id}_{category}.csv",
        )
    return directory


def default_profiles(
    n_classes: int,
    channels: tuple[ChannelKind, ...] = (
        ChannelKind.ACCEL_X,
        ChannelKind.ACCEL_Y,
        ChannelKind.ACCEL_Z,
        ChannelKind.GYRO_X,
        ChannelKind.GYRO_Y,
        ChannelKind.GYRO_Z,
        ChannelKind.PPG,
        ChannelKind.HR,
        ChannelKind.LIGHT,
        ChannelKind.NOISE,
    ),
    baseline_step: float = 1.0,
    noise_sd: float = 0.1,
) -> tuple[ClassProfile, ...]:
    """Well-separated class profiles: each class offsets each channel differently.

    Amplitude, frequency, and noise are identical across classes, so separation=0
    makes the classes exactly identically distributed.
    """
    if n_classes < 2:
        raise ValueError("need at least two classes")
    profiles = []
    for c in range(n_classes):
        per_channel = {}
        for j, ch in enumerate(channels):
            # (c+1)(j+1) mod (K+1): on channel 0 every class gets a distinct level
            offset = baseline_step * (((c + 1) * (j + 1)) % (n_classes + 1) - n_classes / 2.0)
            per_channel[ch] = ChannelSignal(
                baseline=offset,
                amplitude=0.5,
                frequency_hz=1.0 + 0.5 * (j % 3),
                noise_sd=noise_sd,
            )
        profiles.append(ClassProfile(f"class{c}", per_channel))
    return tuple(profiles)
