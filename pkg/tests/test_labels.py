import numpy as np
import pytest

from drivesense.errors import AnnotationError, TaxonomyError
from drivesense.ingest import ChannelKind
from drivesense.labels import (
    INSIDE_ACTIVITY,
    OUTSIDE_EVENT,
    ROAD_TYPE,
    LabelTrack,
    Taxonomy,
    canonical_taxonomy,
    label_windows,
    load_annotations,
    merge_tracks,
    write_annotations,
)
from drivesense.windows import Window


def make_window(start_ms, end_ms):
    n = int((end_ms - start_ms) / 100)
    return Window("t", start_ms, end_ms, {ChannelKind.HR: np.zeros(n)})


class TestTaxonomy:
    def test_canonical_sizes(self):
        assert len(canonical_taxonomy(INSIDE_ACTIVITY).classes) == 8
        assert len(canonical_taxonomy(OUTSIDE_EVENT).classes) == 4
        assert len(canonical_taxonomy(ROAD_TYPE).classes) == 5

    def test_canonical_names_present(self):
        inside = canonical_taxonomy(INSIDE_ACTIVITY).classes
        assert "Checking Sides" in inside
        assert "Eating/Drinking" in inside
        road = canonical_taxonomy(ROAD_TYPE).classes
        assert "2L - Highway" in road and "Merging Ramp" in road

    def test_unknown_category(self):
        with pytest.raises(TaxonomyError):
            canonical_taxonomy("Weather")

    def test_wrong_size_rejected(self):
        with pytest.raises(ValueError):
            Taxonomy(INSIDE_ACTIVITY, ("a", "b"))

    def test_custom_category_any_size(self):
        t = Taxonomy("Synthetic", ("a", "b", "c"))
        assert t.index_of("b") == 1

    def test_unknown_class(self):
        t = canonical_taxonomy(INSIDE_ACTIVITY)
        with pytest.raises(TaxonomyError):
            t.index_of("Juggling")


class TestLoadAnnotations:
    def test_basic_interval(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("1000,5000,Eating/Drinking\n")
        track = load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))
        assert track.intervals == [(1000.0, 5000.0, "Eating/Drinking")]

    def test_overlap_rejected(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,10,Touching Face\n5,15,Touching Face\n")
        with pytest.raises(AnnotationError):
            load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))

    def test_unknown_class_rejected(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,10,Juggling\n")
        with pytest.raises(TaxonomyError):
            load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))

    def test_sorted_by_start(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("50,60,Touching Face\n0,10,Checking Sides\n")
        track = load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))
        assert [iv[0] for iv in track.intervals] == [0.0, 50.0]

    def test_adjacent_intervals_allowed(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("0,10,Checking Sides\n10,20,Touching Face\n")
        track = load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))
        assert len(track.intervals) == 2

    def test_inverted_interval_rejected(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("10,10,Checking Sides\n")
        with pytest.raises(AnnotationError):
            load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))

    def test_header_skipped(self, tmp_path):
        p = tmp_path / "a.csv"
        p.write_text("start_ms,end_ms,class_name\n0,10,Checking Sides\n")
        track = load_annotations(p, canonical_taxonomy(INSIDE_ACTIVITY))
        assert len(track.intervals) == 1

    def test_round_trip(self, tmp_path):
        tax = canonical_taxonomy(OUTSIDE_EVENT)
        track = LabelTrack(tax, [(0.0, 3000.0, "Change Lane"), (4000.0, 9000.0, "Traffic Light")]).validate()
        p = write_annotations(track, tmp_path / "o.csv")
        assert load_annotations(p, tax).intervals == track.intervals


class TestLabelWindows:
    def test_midpoint_containment(self):
        tax = canonical_taxonomy(INSIDE_ACTIVITY)
        track = LabelTrack(tax, [(2000.0, 4000.0, "Eating/Drinking")]).validate()
        out = label_windows([make_window(2000, 3000)], track)
        assert len(out.windows) == 1
        assert out.labels.tolist() == [tax.index_of("Eating/Drinking")]

    def test_uncovered_window_excluded(self):
        tax = canonical_taxonomy(INSIDE_ACTIVITY)
        track = LabelTrack(tax, [(0.0, 5000.0, "Touching Face")]).validate()
        out = label_windows([make_window(10000, 11000)], track)
        assert len(out.windows) == 0

    def test_midpoint_on_exclusive_end_excluded(self):
        tax = canonical_taxonomy(INSIDE_ACTIVITY)
        track = LabelTrack(tax, [(0.0, 2500.0, "Touching Face")]).validate()
        # window [2000, 3000): midpoint 2500 == interval end -> excluded
        out = label_windows([make_window(2000, 3000)], track)
        assert len(out.windows) == 0

    def test_midpoint_on_start_included(self):
        tax = canonical_taxonomy(INSIDE_ACTIVITY)
        track = LabelTrack(tax, [(2500.0, 5000.0, "Touching Face")]).validate()
        out = label_windows([make_window(2000, 3000)], track)
        assert len(out.windows) == 1

    def test_order_independent(self):
        tax = Taxonomy("Synthetic", ("a", "b"))
        track = LabelTrack(tax, [(0.0, 5000.0, "a"), (5000.0, 9000.0, "b")]).validate()
        windows = [make_window(i * 500, i * 500 + 1000) for i in range(16)]
        fwd = label_windows(windows, track)
        rev = label_windows(windows[::-1], track)
        fwd_pairs = {(w.start_ms, int(l)) for w, l in zip(fwd.windows, fwd.labels)}
        rev_pairs = {(w.start_ms, int(l)) for w, l in zip(rev.windows, rev.labels)}
        assert fwd_pairs == rev_pairs

    def test_output_no_larger_than_input_and_labels_match(self):
        rng = np.random.default_rng(0)
        tax = Taxonomy("Synthetic", ("a", "b", "c"))
        intervals = [(float(s), float(s + 2000), tax.classes[s // 2000 % 3]) for s in range(0, 20000, 4000)]
        track = LabelTrack(tax, intervals).validate()
        windows = [
            make_window(int(s), int(s) + 1000) for s in rng.integers(0, 25000, 60)
        ]
        out = label_windows(windows, track)
        assert len(out.windows) <= len(windows)
        for w, lbl in zip(out.windows, out.labels):
            containing = [iv for iv in intervals if iv[0] <= w.midpoint_ms < iv[1]]
            assert len(containing) == 1
            assert tax.index_of(containing[0][2]) == lbl

    def test_merge_tracks_overlap_detected(self):
        tax = Taxonomy("Synthetic", ("a",))
        t1 = LabelTrack(tax, [(0.0, 10.0, "a")]).validate()
        t2 = LabelTrack(tax, [(5.0, 15.0, "a")]).validate()
        with pytest.raises(AnnotationError):
            merge_tracks([t1, t2])
