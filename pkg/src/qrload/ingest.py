"""Hourly load/temperature ingestion.

Reads the raw CSV feed (``timestamp,zone,load_mw,drybulb_f``), repairs the
two clock-change artifacts (a doubled hour in autumn, a missing hour in
spring) so that every calendar day carries exactly 24 observations, selects
the trailing training window, and exposes the log-load and polar diagnostic
transforms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from functools import cached_property

import numpy as np

from .errors import (
    DuplicateTimestamp,
    InsufficientHistory,
    MalformedRow,
    NonPositiveLoad,
    OutOfOrderTimestamps,
    UnrepairableGap,
)

HOURS_PER_DAY = 24

#: Mean length of a year, in hours, used for every annual basis.
ANNUAL_PERIOD_HOURS = 365.24 * 24.0

#: Training window: ten years plus one quarter, in whole calendar days.
TRAINING_DAYS = 365 * 10 + 92
TRAINING_HOURS = TRAINING_DAYS * HOURS_PER_DAY

CSV_HEADER = "timestamp,zone,load_mw,drybulb_f"

_TS_RE = re.compile(r"\d{4}-\d{2}-\d{2} \d{2}:00")


def format_timestamp(ts: datetime) -> str:
    return f"{ts.year:04d}-{ts.month:02d}-{ts.day:02d} {ts.hour:02d}:00"


def parse_timestamp(text: str) -> datetime:
    if not _TS_RE.fullmatch(text):
        raise ValueError(f"bad timestamp {text!r}, expected YYYY-MM-DD HH:00")
    return datetime.fromisoformat(text)


@dataclass(frozen=True)
class RawRecord:
    """One raw observation: local civil hour, zone, load (MW), dry-bulb (F)."""

    timestamp: datetime
    zone: str
    load_mw: float
    drybulb: float


@dataclass(frozen=True)
class HourlySeries:
    """Clock-change-adjusted hourly series for one zone.

    Starts at midnight, covers whole calendar days with exactly 24 entries
    each, and is gap-free: entry ``i`` is the hour ``start + i`` hours.
    Arrays are read-only; a series is safe to share across threads.
    """

    zone: str
    start: datetime
    load: np.ndarray
    log_load: np.ndarray
    temperature: np.ndarray

    def __post_init__(self):
        n = len(self.load)
        if n == 0 or n % HOURS_PER_DAY != 0:
            raise ValueError(f"series length {n} is not a whole number of days")
        if len(self.log_load) != n or len(self.temperature) != n:
            raise ValueError("load, log_load and temperature lengths differ")
        if (self.start.hour, self.start.minute, self.start.second) != (0, 0, 0):
            raise ValueError("series must start at midnight")
        if np.any(self.load <= 0):
            raise NonPositiveLoad(f"zone {self.zone}: non-positive load value")

    @classmethod
    def build(cls, zone: str, start: datetime, load, temperature) -> "HourlySeries":
        load = _frozen(np.asarray(load, dtype=float).copy())
        temperature = _frozen(np.asarray(temperature, dtype=float).copy())
        if np.any(load <= 0):
            raise NonPositiveLoad(f"zone {zone}: non-positive load value")
        log_load = _frozen(np.log(load))
        return cls(zone=zone, start=start, load=load, log_load=log_load,
                   temperature=temperature)

    @property
    def n_hours(self) -> int:
        return len(self.load)

    @property
    def n_days(self) -> int:
        return len(self.load) // HOURS_PER_DAY

    @property
    def end(self) -> datetime:
        return self.start + timedelta(hours=self.n_hours - 1)

    @cached_property
    def hour_of_day(self) -> np.ndarray:
        return _frozen(np.arange(self.n_hours) % HOURS_PER_DAY)

    @cached_property
    def day_of_week(self) -> np.ndarray:
        # 0 = Monday, matching datetime.weekday()
        dow = (self.start.weekday() + np.arange(self.n_hours) // HOURS_PER_DAY) % 7
        return _frozen(dow)

    @property
    def annual_epoch(self) -> datetime:
        """Phase origin of all annual bases: Jan 1, 00:00 of the first year."""
        return datetime(self.start.year, 1, 1)

    def hours_since_epoch(self) -> np.ndarray:
        offset = (self.start - self.annual_epoch) / timedelta(hours=1)
        return offset + np.arange(self.n_hours, dtype=float)

    def timestamp_at(self, i: int) -> datetime:
        return self.start + timedelta(hours=int(i))

    def timestamps(self) -> list[datetime]:
        return [self.start + timedelta(hours=i) for i in range(self.n_hours)]

    def index_of(self, ts: datetime) -> int:
        delta = (ts - self.start) / timedelta(hours=1)
        i = int(delta)
        if delta != i or not 0 <= i < self.n_hours:
            raise KeyError(f"{ts} not on the hourly grid of zone {self.zone}")
        return i

    def slice_hours(self, lo: int, hi: int) -> "HourlySeries":
        return HourlySeries(zone=self.zone, start=self.timestamp_at(lo),
                            load=self.load[lo:hi], log_load=self.log_load[lo:hi],
                            temperature=self.temperature[lo:hi])


@dataclass
class AdjustmentStats:
    """What the clock-change repair actually did."""

    averaged: list[datetime] = field(default_factory=list)
    interpolated: list[datetime] = field(default_factory=list)
    dropped_leading: int = 0
    dropped_trailing: int = 0


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def parse_csv(path, zone: str) -> list[RawRecord]:
    """Read the raw CSV and return records for one zone, in timestamp order.

    Rows for other zones are skipped. Raises MalformedRow, NonPositiveLoad,
    OutOfOrderTimestamps, or DuplicateTimestamp (a timestamp seen more than
    twice) with the offending line number.
    """
    records: list[RawRecord] = []
    prev: datetime | None = None
    dup_run = 1
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().strip().lstrip("﻿")
        if header != CSV_HEADER:
            raise MalformedRow(f"line 1: expected header {CSV_HEADER!r}, got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise MalformedRow(f"line {lineno}: expected 4 fields, got {len(parts)}")
            if parts[1] != zone:
                continue
            try:
                ts = parse_timestamp(parts[0])
                load = float(parts[2])
                drybulb = float(parts[3])
            except ValueError as e:
                raise MalformedRow(f"line {lineno}: {e}") from None
            if not np.isfinite(load) or not np.isfinite(drybulb):
                raise MalformedRow(f"line {lineno}: non-finite value")
            if load <= 0:
                raise NonPositiveLoad(f"line {lineno}: load_mw={parts[2]} must be > 0")
            if prev is not None:
                if ts < prev:
                    raise OutOfOrderTimestamps(f"line {lineno}: {ts} after {prev}")
                if ts == prev:
                    dup_run += 1
                    if dup_run > 2:
                        raise DuplicateTimestamp(f"line {lineno}: {ts} occurs {dup_run} times")
                else:
                    dup_run = 1
            prev = ts
            records.append(RawRecord(ts, zone, load, drybulb))
    return records


def write_csv(series: HourlySeries, path) -> None:
    """Write a series back to the raw CSV format (full float precision)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        ts = series.start
        for i in range(series.n_hours):
            fh.write(f"{format_timestamp(ts)},{series.zone},"
                     f"{float(series.load[i])!r},{float(series.temperature[i])!r}\n")
            ts += timedelta(hours=1)


def dst_adjust(records: list[RawRecord]) -> HourlySeries:
    """Repair clock-change artifacts so every day has exactly 24 values.

    A doubled hour is replaced by the arithmetic mean of its two values
    (load and temperature independently); an isolated missing hour is filled
    by linear interpolation between the adjacent hours. Anything else raises
    UnrepairableGap.
    """
    return adjust_with_stats(records)[0]


def adjust_with_stats(records: list[RawRecord]) -> tuple[HourlySeries, AdjustmentStats]:
    """Like :func:`dst_adjust`, additionally reporting the repairs made.

    Leading/trailing partial days are dropped so the result covers whole
    calendar days only.
    """
    if not records:
        raise UnrepairableGap("no records to adjust")
    stats = AdjustmentStats()
    zone = records[0].zone

    first_day = records[0].timestamp.date()
    if records[0].timestamp.hour != 0:
        first_day += timedelta(days=1)
    last_day = records[-1].timestamp.date()
    if records[-1].timestamp.hour != 23:
        last_day -= timedelta(days=1)
    if first_day > last_day:
        raise UnrepairableGap("records do not cover a single full day")

    start = datetime.combine(first_day, time(0))
    n = ((last_day - first_day).days + 1) * HOURS_PER_DAY
    load_sum = np.zeros(n)
    temp_sum = np.zeros(n)
    count = np.zeros(n, dtype=int)

    for rec in records:
        offset = (rec.timestamp - start) / timedelta(hours=1)
        idx = int(offset)
        if offset != idx:
            raise MalformedRow(f"{rec.timestamp} is not on the hour grid")
        if not 0 <= idx < n:
            if idx < 0:
                stats.dropped_leading += 1
            else:
                stats.dropped_trailing += 1
            continue
        load_sum[idx] += rec.load_mw
        temp_sum[idx] += rec.drybulb
        count[idx] += 1

    by_day = count.reshape(-1, HOURS_PER_DAY)
    for d in range(by_day.shape[0]):
        day = first_day + timedelta(days=d)
        if int(np.sum(by_day[d] == 2)) > 1:
            raise UnrepairableGap(f"{day}: more than one doubled hour")
        if int(np.sum(by_day[d] == 0)) > 1:
            raise UnrepairableGap(f"{day}: more than one missing hour")

    observed = count > 0
    load = np.divide(load_sum, count, out=np.zeros(n), where=observed)
    temp = np.divide(temp_sum, count, out=np.zeros(n), where=observed)
    for idx in np.nonzero(count == 2)[0]:
        stats.averaged.append(start + timedelta(hours=int(idx)))

    for idx in np.nonzero(~observed)[0]:
        ts = start + timedelta(hours=int(idx))
        if idx == 0 or idx == n - 1 or not observed[idx - 1] or not observed[idx + 1]:
            raise UnrepairableGap(f"{ts}: missing hour not adjacent to two observed hours")
        load[idx] = 0.5 * (load[idx - 1] + load[idx + 1])
        temp[idx] = 0.5 * (temp[idx - 1] + temp[idx + 1])
        stats.interpolated.append(ts)

    return HourlySeries.build(zone, start, load, temp), stats


def select_training_window(series: HourlySeries, last_in_sample,
                           allow_short: bool = False) -> HourlySeries:
    """Trailing training window of 3742 days ending at ``last_in_sample`` 23:00.

    With ``allow_short`` a shorter history yields all available whole days
    instead of raising InsufficientHistory.
    """
    end_day = last_in_sample.date() if isinstance(last_in_sample, datetime) else last_in_sample
    end_ts = datetime.combine(end_day, time(23))
    if series.end < end_ts or series.start > end_ts:
        raise InsufficientHistory(
            f"zone {series.zone}: history ends {series.end}, needs data through {end_ts}",
            available_hours=series.n_hours)
    end_idx = series.index_of(end_ts)
    lo = end_idx + 1 - TRAINING_HOURS
    if lo < 0:
        if not allow_short:
            raise InsufficientHistory(
                f"zone {series.zone}: {end_idx + 1} hours available, "
                f"{TRAINING_HOURS} required",
                available_hours=end_idx + 1)
        lo = 0
    return series.slice_hours(lo, end_idx + 1)


def polar_transform(series: HourlySeries) -> np.ndarray:
    """Map each hour to (x, y) in GW on the annual circle.

    The angle is the position of the hour within the mean year measured from
    the series' annual phase epoch; the radius is the load. Useful for
    eyeballing how the daily profile deforms over the seasons.
    """
    t = series.hours_since_epoch()
    angle = 2.0 * np.pi * t / ANNUAL_PERIOD_HOURS
    gw = series.load / 1000.0
    return np.column_stack([gw * np.cos(angle), gw * np.sin(angle)])
