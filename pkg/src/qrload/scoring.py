"""Forecast evaluation: pinball scores, relative improvement, benchmark.

Scores are computed on load in MW (not log-load). The benchmark shipped
here is a seasonal-naive forecaster: empirical deciles of same-hour-of-week
loads near the target date in recent training years.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .errors import InsufficientHistory, MissingRealized, NonPositiveBenchmark
from .ingest import HOURS_PER_DAY, HourlySeries
from .pipeline import QuantileForecastGrid, window_timestamps
from .quantreg import QUANTILE_GRID, pinball

BENCHMARK_LABEL = "seasonal-naive (same hour-of-week, +/-21 days, 3 years)"

_BENCH_YEARS = 3
_BENCH_DAY_TOLERANCE = 21


@dataclass(frozen=True)
class ScoreReport:
    """Scores for one (zone, task) cell, in MW, plus relative improvement."""

    zone: str
    task: str
    model_score: float
    benchmark_score: float
    improvement_pct: float


@dataclass(frozen=True)
class Task:
    """One scheduled forecasting exercise."""

    number: int
    due: date
    window_start: date
    window_end: date
    weight: int
    last_in_sample: date


def score_grid(grid: QuantileForecastGrid) -> float:
    """Mean pinball loss over all rows and all quantile levels, in MW."""
    if grid.realized is None:
        raise MissingRealized(f"zone {grid.zone}: no realized values attached")
    taus = np.asarray(grid.taus)
    losses = pinball(grid.realized[:, None], grid.q, taus[None, :])
    return float(np.mean(losses))


def improvement(model_score: float, benchmark_score: float) -> float:
    """Relative improvement over the benchmark, in percent."""
    if benchmark_score <= 0:
        raise NonPositiveBenchmark(f"benchmark score {benchmark_score} must be > 0")
    return 100.0 * (benchmark_score - model_score) / benchmark_score


def _anniversary(day: date, years_back: int) -> date:
    try:
        return day.replace(year=day.year - years_back)
    except ValueError:  # Feb 29
        return day.replace(year=day.year - years_back, day=28)


def seasonal_naive_benchmark(series: HourlySeries, window) -> QuantileForecastGrid:
    """Empirical-decile benchmark from same hour-of-week history.

    For each forecast hour, collect the training loads at the same hour of
    week within +/-21 calendar days of the target date's anniversary in each
    of the three most recent training years, and take their deciles.
    """
    stamps = window_timestamps(window)
    if (stamps[0].date() - series.start.date()).days < 365 * _BENCH_YEARS:
        raise InsufficientHistory(
            f"zone {series.zone}: benchmark needs {_BENCH_YEARS} years of history",
            available_hours=series.n_hours)
    taus = np.asarray(QUANTILE_GRID)
    day0 = series.start.date()
    loads = series.load.reshape(series.n_days, HOURS_PER_DAY)
    q = np.empty((len(stamps), len(taus)))
    for i, ts in enumerate(stamps):
        values = []
        for k in range(1, _BENCH_YEARS + 1):
            anchor = _anniversary(ts.date(), k)
            lo = anchor - timedelta(days=_BENCH_DAY_TOLERANCE)
            hi = anchor + timedelta(days=_BENCH_DAY_TOLERANCE)
            day = lo + timedelta(days=(ts.weekday() - lo.weekday()) % 7)
            while day <= hi:
                d = (day - day0).days
                if 0 <= d < series.n_days:
                    values.append(loads[d, ts.hour])
                day += timedelta(days=7)
        if len(values) < 3:
            raise InsufficientHistory(
                f"zone {series.zone}: only {len(values)} historical matches for {ts}",
                available_hours=series.n_hours)
        q[i] = np.quantile(np.asarray(values), taus)
    return QuantileForecastGrid(zone=series.zone, timestamps=tuple(stamps), q=q,
                                taus=QUANTILE_GRID)


def task_schedule() -> list[Task]:
    """The six scheduled tasks with their due dates and target months.

    ``last_in_sample`` reflects the data-publication cadence: a month's data
    becomes usable from the 15th of the following month, so submissions due
    before the 15th can reach back only one month further. The final task
    counts double in aggregate scoring.
    """
    rows = [
        (1, date(2016, 12, 15), date(2017, 1, 1), date(2017, 1, 31), 1, date(2016, 11, 30)),
        (2, date(2016, 12, 31), date(2017, 2, 1), date(2017, 2, 28), 1, date(2016, 11, 30)),
        (3, date(2017, 1, 15), date(2017, 2, 1), date(2017, 2, 28), 1, date(2016, 12, 31)),
        (4, date(2017, 1, 31), date(2017, 3, 1), date(2017, 3, 31), 1, date(2016, 12, 31)),
        (5, date(2017, 2, 14), date(2017, 3, 1), date(2017, 3, 31), 1, date(2016, 12, 31)),
        (6, date(2017, 2, 28), date(2017, 4, 1), date(2017, 4, 30), 2, date(2017, 1, 31)),
    ]
    return [Task(*row) for row in rows]


REPORT_CSV_HEADER = "zone,task,model_pb_mw,benchmark_pb_mw,improvement_pct"


def write_report_csv(path, reports, comments=()) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(REPORT_CSV_HEADER + "\n")
        for r in reports:
            fh.write(f"{r.zone},{r.task},{r.model_score:.4f},"
                     f"{r.benchmark_score:.4f},{r.improvement_pct:.2f}\n")


def format_report_text(reports, weights=None) -> str:
    """Human-readable score summary; optional per-task weights for the
    weighted average improvement line."""
    lines = [f"benchmark: {BENCHMARK_LABEL}",
             f"{'zone':>8} {'task':>6} {'model_pb':>10} {'bench_pb':>10} {'improV%':>8}"]
    for r in reports:
        lines.append(f"{r.zone:>8} {r.task:>6} {r.model_score:>10.4f} "
                     f"{r.benchmark_score:>10.4f} {r.improvement_pct:>8.2f}")
    if reports:
        if weights is None:
            weights = {r.task: 1 for r in reports}
        total_w = sum(weights.get(r.task, 1) for r in reports)
        avg = sum(r.improvement_pct * weights.get(r.task, 1) for r in reports) / total_w
        better = sum(1 for r in reports if r.model_score < r.benchmark_score)
        lines.append(f"weighted mean improvement: {avg:.2f}%")
        lines.append(f"model beats benchmark in {better} of {len(reports)} cells")
    return "\n".join(lines) + "\n"
