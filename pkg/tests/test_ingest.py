from datetime import date, datetime, timedelta

import numpy as np
import pytest

from qrload.errors import (
    DuplicateTimestamp,
    InsufficientHistory,
    MalformedRow,
    NonPositiveLoad,
    OutOfOrderTimestamps,
    UnrepairableGap,
)
from qrload.ingest import (
    ANNUAL_PERIOD_HOURS,
    CSV_HEADER,
    TRAINING_HOURS,
    HourlySeries,
    adjust_with_stats,
    dst_adjust,
    parse_csv,
    polar_transform,
    select_training_window,
    write_csv,
)
from synthdata import synthetic_series


def _write(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def _day_rows(day, zone="Z", load=100.0, skip_hours=(), dup_hours=()):
    rows = []
    for hour in range(24):
        if hour in skip_hours:
            continue
        ts = f"{day} {hour:02d}:00"
        rows.append((ts, zone, load + hour, 40.0 + hour))
        if hour in dup_hours:
            rows.append((ts, zone, load + hour + 10, 40.0 + hour + 4))
    return rows


def test_parse_well_formed_two_days(tmp_path):
    path = tmp_path / "ok.csv"
    _write(path, _day_rows("2016-06-01") + _day_rows("2016-06-02"))
    records = parse_csv(path, "Z")
    assert len(records) == 48
    assert records[0].timestamp == datetime(2016, 6, 1, 0)
    assert records[-1].timestamp == datetime(2016, 6, 2, 23)
    assert records[3].load_mw == 103.0 and records[3].drybulb == 43.0


def test_parse_rejects_zero_load(tmp_path):
    path = tmp_path / "zero.csv"
    rows = _day_rows("2016-06-01")
    rows[5] = ("2016-06-01 05:00", "Z", 0.0, 45.0)
    _write(path, rows)
    with pytest.raises(NonPositiveLoad, match="line 7"):
        parse_csv(path, "Z")


def test_parse_rejects_shuffled_timestamps(tmp_path):
    path = tmp_path / "shuffled.csv"
    rows = _day_rows("2016-06-01")
    rows[2], rows[10] = rows[10], rows[2]
    _write(path, rows)
    with pytest.raises(OutOfOrderTimestamps):
        parse_csv(path, "Z")


def test_parse_rejects_malformed_field(tmp_path):
    path = tmp_path / "bad.csv"
    rows = _day_rows("2016-06-01")
    rows[4] = ("2016-06-01 04:30", "Z", 104.0, 44.0)  # non-zero minutes
    _write(path, rows)
    with pytest.raises(MalformedRow, match="line 6"):
        parse_csv(path, "Z")
    rows[4] = ("2016-06-01 04:00", "Z", "lots", 44.0)
    _write(path, rows)
    with pytest.raises(MalformedRow):
        parse_csv(path, "Z")


def test_parse_rejects_triplicated_timestamp(tmp_path):
    path = tmp_path / "tri.csv"
    rows = _day_rows("2016-11-06", dup_hours=(1,))
    rows.insert(3, ("2016-11-06 01:00", "Z", 55.0, 41.0))
    _write(path, rows)
    with pytest.raises(DuplicateTimestamp):
        parse_csv(path, "Z")


def test_parse_skips_foreign_zones(tmp_path):
    path = tmp_path / "multi.csv"
    rows = []
    for a, b in zip(_day_rows("2016-06-01", zone="A"), _day_rows("2016-06-01", zone="B", load=500.0)):
        rows += [a, b]
    _write(path, rows)
    records = parse_csv(path, "B")
    assert len(records) == 24
    assert all(r.zone == "B" for r in records)


def test_fall_back_hour_averaged(tmp_path):
    path = tmp_path / "fall.csv"
    rows = _day_rows("2016-11-06")
    # doubled 01:00 with loads 10 and 20 -> 15; temps 50 and 60 -> 55
    rows[1:2] = [("2016-11-06 01:00", "Z", 10.0, 50.0),
                 ("2016-11-06 01:00", "Z", 20.0, 60.0)]
    _write(path, rows)
    series, stats = adjust_with_stats(parse_csv(path, "Z"))
    assert series.n_hours == 24
    assert series.load[1] == 15.0
    assert series.temperature[1] == 55.0
    assert stats.averaged == [datetime(2016, 11, 6, 1)]


def test_spring_forward_hour_interpolated(tmp_path):
    path = tmp_path / "spring.csv"
    rows = _day_rows("2016-03-13", skip_hours=(2,))
    rows[1] = ("2016-03-13 01:00", "Z", 3.0, 30.0)
    rows[2] = ("2016-03-13 03:00", "Z", 5.0, 38.0)
    _write(path, rows)
    series, stats = adjust_with_stats(parse_csv(path, "Z"))
    assert series.n_hours == 24
    assert series.load[2] == 4.0
    assert series.temperature[2] == 34.0
    assert stats.interpolated == [datetime(2016, 3, 13, 2)]


def test_outage_is_unrepairable(tmp_path):
    path = tmp_path / "outage.csv"
    _write(path, _day_rows("2016-06-01", skip_hours=(7, 8, 9)))
    with pytest.raises(UnrepairableGap, match="2016-06-01"):
        dst_adjust(parse_csv(path, "Z"))


def test_missing_boundary_hour_is_unrepairable():
    # 00:00 of the first full day missing: no left neighbour to interpolate
    from qrload.ingest import RawRecord

    records = [RawRecord(datetime(2016, 5, 31, 23), "Z", 90.0, 39.0)]
    records += [RawRecord(datetime(2016, 6, 1, h), "Z", 100.0, 40.0) for h in range(1, 24)]
    with pytest.raises(UnrepairableGap):
        dst_adjust(records)


def test_partial_edge_days_dropped(tmp_path):
    path = tmp_path / "edges.csv"
    rows = ([("2016-05-31 22:00", "Z", 90.0, 39.0), ("2016-05-31 23:00", "Z", 91.0, 39.5)]
            + _day_rows("2016-06-01") + [("2016-06-02 00:00", "Z", 92.0, 40.0)])
    _write(path, rows)
    series, stats = adjust_with_stats(parse_csv(path, "Z"))
    assert series.start == datetime(2016, 6, 1, 0)
    assert series.n_days == 1
    assert stats.dropped_leading == 2 and stats.dropped_trailing == 1


def test_every_day_has_24_entries_after_adjustment(tmp_path):
    path = tmp_path / "transitions.csv"
    rows = (_day_rows("2016-03-12") + _day_rows("2016-03-13", skip_hours=(2,))
            + _day_rows("2016-03-14"))
    _write(path, rows)
    series = dst_adjust(parse_csv(path, "Z"))
    assert series.n_days == 3 and series.n_hours == 72
    # the filled hour sits between the rows for 01:00 and 03:00
    assert series.load[24 + 2] == 0.5 * (101.0 + 103.0)

    path2 = tmp_path / "fall2.csv"
    _write(path2, _day_rows("2016-11-05") + _day_rows("2016-11-06", dup_hours=(1,)))
    series = dst_adjust(parse_csv(path2, "Z"))
    assert series.n_days == 2 and series.n_hours == 48


def test_log_load_matches_load():
    series, _ = synthetic_series(n_days=10)
    assert np.allclose(np.exp(series.log_load), series.load, rtol=1e-9)
    assert np.allclose(series.log_load, np.log(series.load))


def test_csv_roundtrip_is_identity(tmp_path):
    series, _ = synthetic_series(n_days=3, start=datetime(2016, 2, 1))
    path = tmp_path / "roundtrip.csv"
    write_csv(series, path)
    back = dst_adjust(parse_csv(path, series.zone))
    assert back.start == series.start and back.zone == series.zone
    assert np.array_equal(back.load, series.load)
    assert np.array_equal(back.log_load, series.log_load)
    assert np.array_equal(back.temperature, series.temperature)


def test_training_window_from_long_history():
    series, _ = synthetic_series(n_days=4400, start=datetime(2005, 1, 1))
    window = select_training_window(series, date(2016, 11, 30))
    assert window.n_hours == TRAINING_HOURS == 89808
    assert window.end == datetime(2016, 11, 30, 23)
    assert window.start == window.end - timedelta(hours=TRAINING_HOURS - 1)


def test_training_window_exact_boundary():
    series, _ = synthetic_series(n_days=3742, start=datetime(2006, 1, 1))
    window = select_training_window(series, series.end.date())
    assert window.n_hours == series.n_hours
    assert np.array_equal(window.load, series.load)


def test_training_window_five_years_insufficient():
    series, _ = synthetic_series(n_days=1826, start=datetime(2011, 1, 1))
    assert series.end.date() == date(2015, 12, 31)
    with pytest.raises(InsufficientHistory) as err:
        select_training_window(series, date(2015, 12, 31))
    assert err.value.available_hours == 43824
    short = select_training_window(series, date(2015, 12, 31), allow_short=True)
    assert short.n_hours == 43824


def test_training_window_missing_recent_data():
    series, _ = synthetic_series(n_days=100, start=datetime(2016, 1, 1))
    with pytest.raises(InsufficientHistory):
        select_training_window(series, date(2016, 12, 31))


def test_polar_transform_epoch_and_norm():
    load = np.full(48, 500.0)
    load[0] = 14000.0
    series = HourlySeries.build("Z", datetime(2016, 1, 1), load, np.full(48, 50.0))
    xy = polar_transform(series)
    assert xy[0, 0] == 14.0 and xy[0, 1] == 0.0
    norms = np.hypot(xy[:, 0], xy[:, 1])
    assert np.allclose(norms, series.load / 1000.0, rtol=1e-9)
    # rows follow the annual angle exactly
    t = series.hours_since_epoch()
    angle = 2 * np.pi * t / ANNUAL_PERIOD_HOURS
    assert np.allclose(xy[:, 0], series.load / 1000 * np.cos(angle))
    assert np.allclose(xy[:, 1], series.load / 1000 * np.sin(angle))


def test_polar_epoch_is_january_first_of_start_year():
    series, _ = synthetic_series(n_days=5, start=datetime(2014, 6, 1))
    assert series.annual_epoch == datetime(2014, 1, 1)
    offset = (datetime(2014, 6, 1) - datetime(2014, 1, 1)).total_seconds() / 3600
    assert series.hours_since_epoch()[0] == offset


def test_series_validation():
    with pytest.raises(ValueError):
        HourlySeries.build("Z", datetime(2016, 1, 1, 5), np.ones(24), np.ones(24))
    with pytest.raises(ValueError):
        HourlySeries.build("Z", datetime(2016, 1, 1), np.ones(23), np.ones(23))
    with pytest.raises(NonPositiveLoad):
        HourlySeries.build("Z", datetime(2016, 1, 1), np.zeros(24), np.ones(24))
    series, _ = synthetic_series(n_days=2)
    with pytest.raises(ValueError):
        series.load[0] = 1.0  # arrays are frozen
