"""Annotation intervals and window labeling.

Annotations arrive as CSV records ``start_ms,end_ms,class_name``, one file per
trip per category, named ``<trip_id>_<category>.csv``. Intervals are half-open
[start, end); a window takes the label of the interval containing its midpoint
and is dropped when no interval covers it.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AnnotationError, ParseError, TaxonomyError
from .windows import Window

INSIDE_ACTIVITY = "InsideActivity"
OUTSIDE_EVENT = "OutsideEvent"
ROAD_TYPE = "RoadType"


@dataclass(frozen=True)
class Taxonomy:
    """A label category and its ordered class list; label indices point into it."""

    category: str
    classes: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.classes)) != len(self.classes):
            raise ValueError(f"{self.category}: duplicate class names")
        expected = _CANONICAL_SIZES.get(self.category)
        if expected is not None and len(self.classes) != expected:
            raise ValueError(
                f"{self.category}: expected {expected} classes, got {len(self.classes)}"
            )

    def index_of(self, name: str) -> int:
        try:
            return self.classes.index(name)
        except ValueError:
            raise TaxonomyError(f"unknown class {name!r} for category {self.category}") from None


_CANONICAL_SIZES = {INSIDE_ACTIVITY: 8, OUTSIDE_EVENT: 4, ROAD_TYPE: 5}

_CANONICAL_CLASSES = {
    INSIDE_ACTIVITY: (
        "Checking Sides",
        "Eating/Drinking",
        "Working with Center Stack",
        "Checking Speed Stack",
        "Touching Face",
        "Working with Phone",
        "Singing and Dancing",
        "Searching for an Item",
    ),
    OUTSIDE_EVENT: (
        "Change Lane",
        "Passing an Intersection",
        "Traffic Light",
        "Stuck in Traffic",
    ),
    ROAD_TYPE: (
        "City Street",
        "Parking Lot",
        "Merging Ramp",
        "2L - Highway",
        "3L - Highway",
    ),
}


def canonical_categories() -> tuple[str, ...]:
    return tuple(_CANONICAL_CLASSES)


def canonical_taxonomy(category: str) -> Taxonomy:
    """One of the three built-in taxonomies by category name."""
    try:
        return Taxonomy(category, _CANONICAL_CLASSES[category])
    except KeyError:
        raise TaxonomyError(
            f"unknown category {category!r}; expected one of {sorted(_CANONICAL_CLASSES)}"
        ) from None


@dataclass
class LabelTrack:
    """Non-overlapping annotated intervals of one category, sorted by start."""

    taxonomy: Taxonomy
    intervals: list[tuple[float, float, str]] = field(default_factory=list)

    @property
    def category(self) -> str:
        return self.taxonomy.category

    def validate(self) -> "LabelTrack":
        for start, end, name in self.intervals:
            if not start < end:
                raise AnnotationError(f"interval [{start}, {end}) is empty or inverted")
            self.taxonomy.index_of(name)
        self.intervals.sort(key=lambda iv: iv[0])
        for (s0, e0, n0), (s1, e1, n1) in zip(self.intervals, self.intervals[1:]):
            if e0 > s1:
                raise AnnotationError(
                    f"intervals [{s0}, {e0}) {n0!r} and [{s1}, {e1}) {n1!r} overlap"
                )
        return self


@dataclass
class LabeledWindowSet:
    """Windows paired with class indices of one category."""

    windows: list[Window]
    labels: np.ndarray
    taxonomy: Taxonomy

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.windows) != len(self.labels):
            raise ValueError("windows and labels must have equal length")
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= len(self.taxonomy.classes)
        ):
            raise ValueError("label index out of range for taxonomy")

    @property
    def category(self) -> str:
        return self.taxonomy.category


def _is_annotation_header(parts: list[str]) -> bool:
    """Header iff neither bound parses as a number (class names are always text)."""
    for p in parts[:2]:
        try:
            float(p)
            return False
        except ValueError:
            continue
    return True


def load_annotations(path: str | Path, taxonomy: Taxonomy) -> LabelTrack:
    """Parse an annotation CSV and validate it against the taxonomy."""
    path = Path(path)
    intervals: list[tuple[float, float, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",", 2)
            if line_no == 1 and _is_annotation_header(parts):
                continue
            if len(parts) != 3:
                raise ParseError(f"{path}: line {line_no}: expected start_ms,end_ms,class_name")
            try:
                start, end = float(parts[0]), float(parts[1])
            except ValueError:
                raise ParseError(f"{path}: line {line_no}: malformed bounds {line!r}") from None
            intervals.append((start, end, parts[2].strip()))
    return LabelTrack(taxonomy, intervals).validate()


def merge_tracks(tracks: list[LabelTrack]) -> LabelTrack:
    """Combine per-trip tracks of one category into a single validated track."""
    if not tracks:
        raise AnnotationError("no annotation tracks to merge")
    taxonomy = tracks[0].taxonomy
    for t in tracks[1:]:
        if t.taxonomy != taxonomy:
            raise AnnotationError("cannot merge tracks of different taxonomies")
    merged = [iv for t in tracks for iv in t.intervals]
    return LabelTrack(taxonomy, merged).validate()


def label_windows(windows: list[Window], track: LabelTrack) -> LabeledWindowSet:
    """Attach to each window the label of the interval containing its midpoint.

    Windows whose midpoint lies in no interval are excluded; exclusion is not an
    error. Labeling each window is independent of the others.
    """
    starts = [iv[0] for iv in track.intervals]
    kept: list[Window] = []
    labels: list[int] = []
    for w in windows:
        mid = w.midpoint_ms
        i = bisect.bisect_right(starts, mid) - 1
        if i < 0:
            continue
        start, end, name = track.intervals[i]
        if start <= mid < end:
            kept.append(w)
            labels.append(track.taxonomy.index_of(name))
    return LabeledWindowSet(kept, np.array(labels, dtype=np.int64), track.taxonomy)


def write_annotations(track: LabelTrack, path: str | Path) -> Path:
    """Write a track in the annotation CSV format (inverse of load_annotations)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for start, end, name in track.intervals:
            fh.write(f"{start:g},{end:g},{name}\n")
    return path
