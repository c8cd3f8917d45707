"""Per-zone orchestration: decompose, fit, and assemble quantile forecasts.

Log-load is split into the moving-average trend plus a remainder; the
remainder gets the per-hour quantile regressions. A forecast adds the
remainder quantiles and the trend quantiles at each horizon, exponentiates
back to MW, and (by default) sorts each row to remove quantile crossing.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date, datetime, time, timedelta

import numpy as np

from .errors import QrloadError, WindowBeforeTrainingEnd
from .features import BasisSpec, build_quantreg_design, build_trend_design
from .ingest import HOURS_PER_DAY, HourlySeries, format_timestamp, parse_timestamp
from .quantreg import QUANTILE_GRID, QuantileModelSet, fit_model_set
from .trend import K_DEFAULT, TrendFit, fit_trend, trend_quantiles


@dataclass(frozen=True)
class ZoneModel:
    """Everything needed to forecast one zone."""

    zone: str
    spec: BasisSpec
    trend: TrendFit
    qmodels: QuantileModelSet
    t_last: datetime
    epoch: datetime
    train_start: datetime


@dataclass(frozen=True)
class QuantileForecastGrid:
    """Hourly quantile forecasts in MW, one row per timestamp.

    ``pre_sort_violations`` counts rows whose raw quantiles crossed before
    the monotone rearrangement (0 when rearrangement is disabled or nothing
    crossed).
    """

    zone: str
    timestamps: tuple
    q: np.ndarray
    taus: tuple = QUANTILE_GRID
    realized: np.ndarray | None = None
    pre_sort_violations: int = 0

    @property
    def n_rows(self) -> int:
        return self.q.shape[0]

    def with_realized(self, values) -> "QuantileForecastGrid":
        values = np.asarray(values, dtype=float).reshape(-1)
        if len(values) != self.n_rows:
            raise ValueError(f"{len(values)} realized values for {self.n_rows} rows")
        return replace(self, realized=values)


def normalize_window(window) -> tuple[datetime, datetime]:
    """Accept (start, end) as dates or datetimes; dates span whole days."""
    start, end = window
    if not isinstance(start, datetime):
        start = datetime.combine(start, time(0))
    if not isinstance(end, datetime):
        end = datetime.combine(end, time(23))
    if end < start:
        raise ValueError(f"window end {end} before start {start}")
    return start, end


def window_timestamps(window) -> list[datetime]:
    start, end = normalize_window(window)
    n = int((end - start) / timedelta(hours=1)) + 1
    return [start + timedelta(hours=i) for i in range(n)]


def day_index(day: date, epoch: datetime) -> int:
    """1-based day count from the annual phase epoch (day 1 = epoch date)."""
    return (day - epoch.date()).days + 1


def fit_zone(series: HourlySeries, spec: BasisSpec | None = None,
             K: int = K_DEFAULT) -> ZoneModel:
    """Fit trend and remainder models on an already-selected training window."""
    spec = spec or BasisSpec()
    try:
        design = build_trend_design(series, spec)
        tfit = fit_trend(design, series.log_load, K)
        del design
        remainder = series.log_load - tfit.trend_path
        epoch = series.annual_epoch
        d0 = day_index(series.start.date(), epoch)
        days = np.arange(d0, d0 + series.n_days)
        qmodels = fit_model_set(remainder, days, spec,
                                epoch_weekday=epoch.weekday(), zone=series.zone)
    except QrloadError as e:
        raise type(e)(f"zone {series.zone}: {e}") from e
    return ZoneModel(zone=series.zone, spec=spec, trend=tfit, qmodels=qmodels,
                     t_last=series.end, epoch=epoch, train_start=series.start)


def forecast(model: ZoneModel, window, *, rearrange: bool = True) -> QuantileForecastGrid:
    """Quantile load forecasts (MW) for every hour of the window.

    The window must start after the training data ends. Remainder and trend
    quantiles are added level by level in log space before exponentiating;
    with ``rearrange`` each output row is sorted to enforce monotonicity.
    """
    start, end = normalize_window(window)
    if start <= model.t_last:
        raise WindowBeforeTrainingEnd(
            f"zone {model.zone}: window starts {start}, training ended {model.t_last}")
    stamps = window_timestamps((start, end))
    n = len(stamps)
    taus = model.qmodels.taus

    days = np.array([day_index(ts.date(), model.epoch) for ts in stamps])
    hours = np.array([ts.hour for ts in stamps])
    log_q = np.empty((n, len(taus)))
    for hour in np.unique(hours):
        rows = np.nonzero(hours == hour)[0]
        design = build_quantreg_design(days[rows], int(hour), model.spec,
                                       model.qmodels.epoch_weekday)
        log_q[rows] = design.values @ model.qmodels.coef[int(hour)].T

    h0 = int((start - model.t_last) / timedelta(hours=1))
    tq = trend_quantiles(model.trend, np.arange(h0, h0 + n))
    log_q += tq.values

    q = np.exp(log_q)
    violations = int(np.sum(np.any(np.diff(q, axis=1) < 0, axis=1)))
    if rearrange:
        q = np.sort(q, axis=1)
    else:
        violations = 0
    return QuantileForecastGrid(zone=model.zone, timestamps=tuple(stamps), q=q,
                                taus=taus, pre_sort_violations=violations)


FORECAST_CSV_HEADER = "zone,timestamp," + ",".join(f"q{int(t * 100)}" for t in QUANTILE_GRID)


def write_forecast_csv(path, grids, comments=()) -> None:
    """Write one or more zone grids as CSV (MW, two decimals), zone-sorted."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(FORECAST_CSV_HEADER + "\n")
        for grid in sorted(grids, key=lambda g: g.zone):
            for i, ts in enumerate(grid.timestamps):
                vals = ",".join(f"{v:.2f}" for v in grid.q[i])
                fh.write(f"{grid.zone},{format_timestamp(ts)},{vals}\n")


def read_forecast_csv(path) -> list[QuantileForecastGrid]:
    """Read a forecast CSV back into per-zone grids (realized left unset)."""
    zones: dict[str, tuple[list, list]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("zone,"):
                continue
            parts = line.split(",")
            stamps, rows = zones.setdefault(parts[0], ([], []))
            stamps.append(parse_timestamp(parts[1]))
            rows.append([float(v) for v in parts[2:]])
    return [QuantileForecastGrid(zone=z, timestamps=tuple(stamps), q=np.array(rows))
            for z, (stamps, rows) in sorted(zones.items())]
