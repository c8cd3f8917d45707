"""Deterministic regressor bases and the two design matrices.

All annual bases are periodic in ``ANNUAL_PERIOD_HOURS`` and phase-anchored
at the series' annual epoch (Jan 1, 00:00 of the first in-sample year), so
fits and forecasts evaluate the same curves.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingTemperature
from .ingest import ANNUAL_PERIOD_HOURS, HOURS_PER_DAY, HourlySeries

DUMMY_KINDS = ("hour_of_day", "hour_of_week", "day_of_week")


@dataclass(frozen=True)
class BasisSpec:
    """Shape of the seasonal bases shared by the trend and remainder models."""

    annual_period_hours: float = ANNUAL_PERIOD_HOURS
    fourier_order: int = 2
    bspline_count: int = 12
    bspline_degree: int = 3
    drop_last_bspline: bool = True

    def __post_init__(self):
        if self.fourier_order < 1:
            raise ValueError("fourier_order must be >= 1")
        if self.bspline_count <= self.bspline_degree + 1:
            raise ValueError("bspline_count must exceed bspline_degree + 1")
        if self.annual_period_hours <= 0:
            raise ValueError("annual_period_hours must be positive")

    @property
    def n_fourier(self) -> int:
        return 2 * self.fourier_order

    @property
    def n_bsplines(self) -> int:
        return self.bspline_count - (1 if self.drop_last_bspline else 0)

    @property
    def n_trend_columns(self) -> int:
        return 168 * (1 + self.n_fourier) + 24 * self.n_bsplines + 3 * (1 + self.n_fourier)

    @property
    def n_quantreg_columns(self) -> int:
        return 7 * (1 + self.n_fourier) + self.n_bsplines


@dataclass(frozen=True)
class DesignMatrix:
    """Dense regressor matrix with named, ordered column groups."""

    values: np.ndarray
    column_groups: dict[str, slice] = field(default_factory=dict)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def columns(self) -> int:
        return self.values.shape[1]

    def group(self, name: str) -> np.ndarray:
        return self.values[:, self.column_groups[name]]


def fourier_basis(t, spec: BasisSpec) -> np.ndarray:
    """Annual Fourier columns [sin, cos] per harmonic, lowest harmonic first."""
    t = np.asarray(t, dtype=float).reshape(-1)
    cols = []
    for j in range(1, spec.fourier_order + 1):
        w = 2.0 * np.pi * j / spec.annual_period_hours
        cols.append(np.sin(w * t))
        cols.append(np.cos(w * t))
    return np.column_stack(cols)


def _cardinal_bspline(u: np.ndarray, degree: int) -> np.ndarray:
    # Uniform B-spline bump on [0, degree+1) with unit knot spacing.
    if degree == 0:
        return ((u >= 0.0) & (u < 1.0)).astype(float)
    lower = _cardinal_bspline(u, degree - 1)
    upper = _cardinal_bspline(u - 1.0, degree - 1)
    return (u * lower + (degree + 1.0 - u) * upper) / degree


def periodic_bspline_basis(t, spec: BasisSpec) -> np.ndarray:
    """Periodic B-spline basis on an equidistant knot grid over one year.

    Column k is the bump anchored at knot ``k * P / count``; the full basis
    is a partition of unity. When ``drop_last_bspline`` the final column is
    removed (it is redundant next to a dummy group that spans constants).
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    p = spec.annual_period_hours
    h = p / spec.bspline_count
    offsets = (t[:, None] - h * np.arange(spec.bspline_count)[None, :]) % p
    basis = _cardinal_bspline(offsets / h, spec.bspline_degree)
    if spec.drop_last_bspline:
        basis = basis[:, :-1]
    return basis


def one_hot(index, width: int) -> np.ndarray:
    index = np.asarray(index, dtype=int).reshape(-1)
    if np.any(index < 0) or np.any(index >= width):
        raise ValueError(f"index out of range for width {width}")
    out = np.zeros((len(index), width))
    out[np.arange(len(index)), index] = 1.0
    return out


def dummies(series: HourlySeries, kind: str) -> np.ndarray:
    """One-hot calendar dummies: 24, 168, or 7 columns.

    The hour-of-week index is 24*day_of_week + hour_of_day (Monday 00:00 is
    column 0), which makes each row the column-major vectorization of the
    outer product of its hour-of-day and day-of-week rows.
    """
    if kind == "hour_of_day":
        return one_hot(series.hour_of_day, 24)
    if kind == "day_of_week":
        return one_hot(series.day_of_week, 7)
    if kind == "hour_of_week":
        return one_hot(HOURS_PER_DAY * series.day_of_week + series.hour_of_day, 168)
    raise ValueError(f"unknown dummy kind {kind!r}, expected one of {DUMMY_KINDS}")


def _interact(curves: np.ndarray, block: np.ndarray, out: np.ndarray) -> None:
    # Basis-major: all block columns for curve 0, then curve 1, ...
    w = block.shape[1]
    for j in range(curves.shape[1]):
        out[:, j * w:(j + 1) * w] = curves[:, j:j + 1] * block


def build_trend_design(series: HourlySeries, spec: BasisSpec | None = None) -> DesignMatrix:
    """Design for the trend pre-fit: hour-of-week dummies, their annual
    Fourier interactions, periodic-spline x hour-of-day terms, and a cubic
    polynomial in standardized temperature with annual Fourier interactions.

    1119 columns under the default spec.
    """
    spec = spec or BasisSpec()
    temp = series.temperature
    if not np.all(np.isfinite(temp)):
        raise MissingTemperature(f"zone {series.zone}: non-finite temperature")
    t = series.hours_since_epoch()
    week = dummies(series, "hour_of_week")
    hod = dummies(series, "hour_of_day")
    fb = fourier_basis(t, spec)
    bs = periodic_bspline_basis(t, spec)

    mu = float(temp.mean())
    sd = float(temp.std())
    z = (temp - mu) / (sd if sd > 0 else 1.0)
    tpoly = np.column_stack([z, z ** 2, z ** 3])

    n = series.n_hours
    nf, nb = spec.n_fourier, spec.n_bsplines
    sizes = [168, 168 * nf, 24 * nb, 3, 3 * nf]
    names = ["hour_of_week", f"fb{spec.fourier_order}_x_hour_of_week",
             f"bs{spec.bspline_count}_x_hour_of_day", "temp_poly",
             f"fb{spec.fourier_order}_x_temp_poly"]
    groups, lo = {}, 0
    for name, size in zip(names, sizes):
        groups[name] = slice(lo, lo + size)
        lo += size

    values = np.empty((n, lo))
    values[:, groups[names[0]]] = week
    _interact(fb, week, values[:, groups[names[1]]])
    _interact(bs, hod, values[:, groups[names[2]]])
    values[:, groups[names[3]]] = tpoly
    _interact(fb, tpoly, values[:, groups[names[4]]])
    return DesignMatrix(values=values, column_groups=groups)


def build_quantreg_design(days, hour: int, spec: BasisSpec | None = None,
                          epoch_weekday: int = 0) -> DesignMatrix:
    """Per-hour remainder design: one row per day at the fixed hour.

    ``days`` are 1-based day indices counted from the annual phase epoch
    (day 1 is the epoch date itself), so the annual bases are evaluated at
    t = 24*(d - 1) + hour. ``epoch_weekday`` is the weekday (0 = Monday) of
    day 1. 46 columns under the default spec.
    """
    spec = spec or BasisSpec()
    if not 0 <= hour < HOURS_PER_DAY:
        raise ValueError(f"hour must be in 0..23, got {hour}")
    days = np.asarray(days, dtype=int).reshape(-1)
    t = HOURS_PER_DAY * (days - 1).astype(float) + hour
    dow = (epoch_weekday + days - 1) % 7
    dmat = one_hot(dow, 7)
    fb = fourier_basis(t, spec)
    bs = periodic_bspline_basis(t, spec)

    nf, nb = spec.n_fourier, spec.n_bsplines
    sizes = [7, 7 * nf, nb]
    names = ["day_of_week", f"fb{spec.fourier_order}_x_day_of_week",
             f"bs{spec.bspline_count}_annual"]
    groups, lo = {}, 0
    for name, size in zip(names, sizes):
        groups[name] = slice(lo, lo + size)
        lo += size

    values = np.empty((len(days), lo))
    values[:, groups[names[0]]] = dmat
    _interact(fb, dmat, values[:, groups[names[1]]])
    values[:, groups[names[2]]] = bs
    return DesignMatrix(values=values, column_groups=groups)
