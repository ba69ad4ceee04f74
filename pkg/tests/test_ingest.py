import numpy as np
import pytest

from drivesense.errors import AlignmentError, DataError, ParseError
from drivesense.ingest import (
    ChannelKind,
    Interpolation,
    RawChannel,
    SamplingSpec,
    align_and_resample,
    derive_magnitude,
    discover_trips,
    load_trip,
    parse_channel_log,
    parse_triaxial_log,
    write_trip_csvs,
)


def write(path, text):
    path.write_text(text)
    return path


class TestParseChannelLog:
    def test_basic_record(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "1614270000123,0.12\n")
        ch = parse_channel_log(p, ChannelKind.HR)
        assert ch.timestamps.tolist() == [1614270000123]
        assert ch.values.tolist() == [0.12]

    def test_duplicate_timestamps_keep_last(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "5,1\n5,2\n7,3\n")
        ch = parse_channel_log(p, ChannelKind.HR)
        assert ch.timestamps.tolist() == [5, 7]
        assert ch.values.tolist() == [2.0, 3.0]

    def test_malformed_line_names_line_number(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "abc,0.1\n")
        with pytest.raises(ParseError, match="line 1"):
            parse_channel_log(p, ChannelKind.HR)

    def test_empty_file(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "")
        with pytest.raises(DataError):
            parse_channel_log(p, ChannelKind.HR)

    def test_header_skipped(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "timestamp_ms,value\n10,60\n20,61\n")
        ch = parse_channel_log(p, ChannelKind.HR)
        assert len(ch) == 2

    def test_non_monotonic_after_dedup(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "10,1\n5,2\n")
        with pytest.raises(DataError):
            parse_channel_log(p, ChannelKind.HR)

    def test_non_finite_value(self, tmp_path):
        p = write(tmp_path / "t_hr.csv", "10,nan\n")
        with pytest.raises(DataError):
            parse_channel_log(p, ChannelKind.HR)

    def test_triaxial(self, tmp_path):
        p = write(tmp_path / "t_accel.csv", "0,1,2,3\n100,4,5,6\n")
        x, y, z = parse_triaxial_log(
            p, (ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z)
        )
        assert x.values.tolist() == [1.0, 4.0]
        assert y.values.tolist() == [2.0, 5.0]
        assert z.values.tolist() == [3.0, 6.0]

    def test_triaxial_wrong_field_count(self, tmp_path):
        p = write(tmp_path / "t_accel.csv", "0,1,2\n")
        with pytest.raises(ParseError):
            parse_triaxial_log(p, (ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z))


class TestDeriveMagnitude:
    def test_345_triangle(self):
        ts = np.array([0])
        x = RawChannel(ChannelKind.ACCEL_X, ts, [3.0])
        y = RawChannel(ChannelKind.ACCEL_Y, ts, [4.0])
        z = RawChannel(ChannelKind.ACCEL_Z, ts, [0.0])
        mag = derive_magnitude(x, y, z)
        assert mag.kind is ChannelKind.ACCEL_MAG
        assert mag.values.tolist() == [5.0]

    def test_zero_vector(self):
        ts = np.array([0])
        chans = [
            RawChannel(k, ts, [0.0])
            for k in (ChannelKind.GYRO_X, ChannelKind.GYRO_Y, ChannelKind.GYRO_Z)
        ]
        mag = derive_magnitude(*chans)
        assert mag.kind is ChannelKind.GYRO_MAG
        assert mag.values.tolist() == [0.0]

    def test_length_mismatch(self):
        x = RawChannel(ChannelKind.ACCEL_X, np.arange(10), np.ones(10))
        y = RawChannel(ChannelKind.ACCEL_Y, np.arange(9), np.ones(9))
        z = RawChannel(ChannelKind.ACCEL_Z, np.arange(10), np.ones(10))
        with pytest.raises(DataError):
            derive_magnitude(x, y, z)

    def test_sign_flip_invariance(self):
        rng = np.random.default_rng(0)
        ts = np.arange(20) * 100
        vals = rng.normal(0, 2, (3, 20))
        kinds = (ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z)
        base = derive_magnitude(*[RawChannel(k, ts, v) for k, v in zip(kinds, vals)])
        for axis in range(3):
            flipped = vals.copy()
            flipped[axis] *= -1.0
            alt = derive_magnitude(*[RawChannel(k, ts, v) for k, v in zip(kinds, flipped)])
            assert np.array_equal(base.values, alt.values)


class TestAlignAndResample:
    def test_linear_midpoint(self):
        hr = RawChannel(ChannelKind.HR, [0, 1000], [60.0, 62.0])
        trip = align_and_resample([hr], SamplingSpec(10.0, 5.0))
        assert trip.n_samples == 11
        assert trip.channels[ChannelKind.HR][5] == 61.0

    def test_zero_order_hold(self):
        light = RawChannel(ChannelKind.LIGHT, [0, 60000], [300.0, 310.0])
        trip = align_and_resample([light], SamplingSpec(10.0, 120.0))
        # t = 30 s is grid index 300
        assert trip.channels[ChannelKind.LIGHT][300] == 300.0

    def test_gap_mask_between_far_samples(self):
        hr = RawChannel(ChannelKind.HR, [0, 8000], [60.0, 61.0])
        trip = align_and_resample([hr], SamplingSpec(10.0, 5.0))
        mask = trip.gap_mask
        assert not mask[0] and not mask[-1]  # endpoints hit source samples exactly
        assert mask[1:-1].all()

    def test_non_overlapping_channels(self):
        a = RawChannel(ChannelKind.HR, [0, 1000], [1.0, 2.0])
        b = RawChannel(ChannelKind.PPG, [5000, 6000], [1.0, 2.0])
        with pytest.raises(AlignmentError):
            align_and_resample([a, b], SamplingSpec())

    def test_grid_anchored_at_latest_start(self):
        hr = RawChannel(ChannelKind.HR, [0, 2000], [0.0, 20.0])
        ppg = RawChannel(ChannelKind.PPG, [500, 2000], np.array([5.0, 20.0]))
        trip = align_and_resample([hr, ppg], SamplingSpec(10.0, 5.0))
        assert trip.start_ms == 500
        assert trip.n_samples == 16

    def test_already_on_grid_is_bitwise_unchanged(self):
        rng = np.random.default_rng(1)
        ts = np.arange(50) * 100  # exactly 10 Hz
        for kind in (ChannelKind.HR, ChannelKind.LIGHT):  # linear and hold-previous
            vals = rng.normal(0, 5, 50)
            trip = align_and_resample([RawChannel(kind, ts, vals)], SamplingSpec(10.0, 5.0))
            assert np.array_equal(trip.channels[kind], vals)

    def test_linear_output_bounded_by_bracketing_values(self):
        rng = np.random.default_rng(2)
        ts = np.sort(rng.choice(np.arange(0, 10000, 37), 40, replace=False))
        vals = rng.normal(0, 3, 40)
        ch = RawChannel(ChannelKind.PPG, ts, vals)
        trip = align_and_resample([ch], SamplingSpec(10.0, 60.0))
        lo = np.minimum.reduce([vals[:-1], vals[1:]])
        hi = np.maximum.reduce([vals[:-1], vals[1:]])
        out = trip.channels[ChannelKind.PPG]
        grid_ms = trip.start_ms + np.arange(trip.n_samples) * 100.0
        pos = np.searchsorted(ts.astype(float), grid_ms, side="right") - 1
        pos = np.clip(pos, 0, len(ts) - 2)
        assert (out >= lo[pos] - 1e-12).all() and (out <= hi[pos] + 1e-12).all()

    def test_output_length_formula(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(2, 200))
            step = int(rng.integers(1, 500))
            start = int(rng.integers(0, 10_000))
            ts = start + np.arange(n) * step
            ch = RawChannel(ChannelKind.HR, ts, rng.normal(0, 1, n))
            rate = float(rng.choice([1.0, 2.0, 5.0, 10.0, 50.0]))
            trip = align_and_resample([ch], SamplingSpec(rate, 1e6))
            span_s = (ts[-1] - ts[0]) / 1000.0
            assert trip.n_samples == int(np.floor(span_s * rate + 1e-9)) + 1


class TestTripFiles:
    def test_write_then_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(4)
        from drivesense.ingest import UniformTrip

        channels = {
            ChannelKind.ACCEL_X: rng.normal(0, 1, 30),
            ChannelKind.ACCEL_Y: rng.normal(0, 1, 30),
            ChannelKind.ACCEL_Z: rng.normal(0, 1, 30),
            ChannelKind.HR: rng.normal(70, 5, 30),
        }
        trip = UniformTrip("trip9", 1000, 10.0, channels, np.zeros(30, dtype=bool))
        write_trip_csvs(trip, tmp_path)
        assert discover_trips(tmp_path) == ["trip9"]
        loaded = load_trip(
            tmp_path,
            "trip9",
            [ChannelKind.ACCEL_X, ChannelKind.ACCEL_Y, ChannelKind.ACCEL_Z, ChannelKind.HR],
            SamplingSpec(10.0, 5.0),
        )
        assert loaded.start_ms == 1000
        for kind, vals in channels.items():
            assert np.array_equal(loaded.channels[kind], vals), kind

    def test_missing_file_reports_path(self, tmp_path):
        with pytest.raises(FileNotFoundError, match="hr"):
            load_trip(tmp_path, "absent", [ChannelKind.HR], SamplingSpec())

    def test_magnitude_channels_derived_on_load(self, tmp_path):
        p = tmp_path / "t1_accel.csv"
        p.write_text("0,3,4,0\n100,0,0,0\n")
        trip = load_trip(tmp_path, "t1", [ChannelKind.ACCEL_MAG], SamplingSpec(10.0, 5.0))
        assert trip.channels[ChannelKind.ACCEL_MAG].tolist() == [5.0, 0.0]


class TestChannelKind:
    def test_native_rates(self):
        assert ChannelKind.ACCEL_X.native_rate == 10.0
        assert ChannelKind.HR.native_rate == 1.0
        assert ChannelKind.LIGHT.native_rate == pytest.approx(1 / 60)

    def test_interpolation_assignment(self):
        assert ChannelKind.HR.interpolation is Interpolation.LINEAR
        assert ChannelKind.LIGHT.interpolation is Interpolation.HOLD_PREVIOUS
        assert ChannelKind.NOISE.interpolation is Interpolation.HOLD_PREVIOUS

    def test_derived_flags(self):
        assert ChannelKind.ACCEL_MAG.is_derived
        assert not ChannelKind.PPG.is_derived
