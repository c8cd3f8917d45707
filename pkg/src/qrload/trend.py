"""Long-term trend: OLS pre-fit, annual moving average, uncertainty bands.

The trend is the trailing-year moving average of the OLS residuals of
log-load on the full seasonal/temperature design. Its forecast uncertainty
comes from sample quantiles of in-sample H-hour trend increments, re-anchored
so the median forecast equals the last fitted trend value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDesign,
    DimensionMismatch,
    TooFewSamples,
    WindowTooLong,
)
from .features import DesignMatrix
from .quantreg import QUANTILE_GRID

#: Moving-average window: 52 weeks of hours, a weekly multiple to avoid
#: weekday composition bias.
K_DEFAULT = 52 * 7 * 24

#: Relative singular-value cutoff for the rank-revealing least-squares solve.
SV_CUTOFF = 1e-10

_MEDIAN_IDX = QUANTILE_GRID.index(0.5)


@dataclass(frozen=True)
class TrendFit:
    """OLS coefficients, residuals, and the moving-average trend path."""

    beta: np.ndarray
    residuals: np.ndarray
    trend_path: np.ndarray
    K: int = K_DEFAULT

    @property
    def last_trend(self) -> float:
        return float(self.trend_path[-1])


@dataclass(frozen=True)
class TrendQuantiles:
    """Per-horizon trend quantiles, rows aligned with ``horizons``."""

    horizons: np.ndarray
    values: np.ndarray
    taus: tuple = QUANTILE_GRID

    def for_horizon(self, h: int) -> np.ndarray:
        i = int(np.searchsorted(self.horizons, h))
        if i >= len(self.horizons) or self.horizons[i] != h:
            raise KeyError(f"horizon {h} not computed")
        return self.values[i]


def ols_fit(design, y) -> tuple[np.ndarray, np.ndarray]:
    """Least squares of ``y`` on the design, returning (beta, residuals).

    Rank deficiency is resolved by the minimum-norm solution of an SVD-based
    solve with singular values below ``SV_CUTOFF`` (relative) discarded; the
    big seasonal designs are near-collinear by construction. Accepts a
    DesignMatrix (whose column groups are checked for degeneracy) or a plain
    array.
    """
    named = isinstance(design, DesignMatrix)
    x = design.values if named else np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape[0] != len(y):
        raise DimensionMismatch(f"design has {x.shape[0]} rows, y has {len(y)}")
    if x.shape[0] < x.shape[1]:
        raise DimensionMismatch(f"need rows >= columns, got {x.shape}")
    if named:
        for name in design.column_groups:
            if not np.any(design.group(name)):
                raise DegenerateDesign(f"column group {name!r} is entirely zero")
    beta, _, _, _ = np.linalg.lstsq(x, y, rcond=SV_CUTOFF)
    residuals = y - x @ beta
    return beta, residuals


def moving_average_trend(residuals, K: int = K_DEFAULT) -> np.ndarray:
    """Trailing mean of the K residuals before each position.

    The first K positions, where no full window exists, are held constant at
    the first computable value.
    """
    residuals = np.asarray(residuals, dtype=float).reshape(-1)
    n = len(residuals)
    if K < 1:
        raise WindowTooLong(f"window K={K} must be positive")
    if K >= n:
        raise WindowTooLong(f"window K={K} needs more than K residuals, got {n}")
    csum = np.concatenate([[0.0], np.cumsum(residuals)])
    trend = np.empty(n)
    trend[K:] = (csum[K:n] - csum[:n - K]) / K
    trend[:K] = trend[K]
    return trend


def fit_trend(design: DesignMatrix, y, K: int = K_DEFAULT) -> TrendFit:
    beta, residuals = ols_fit(design, y)
    return TrendFit(beta=beta, residuals=residuals,
                    trend_path=moving_average_trend(residuals, K), K=K)


def trend_quantiles(fit: TrendFit, horizons) -> TrendQuantiles:
    """Trend quantile forecasts for each horizon H (hours past the last fit).

    Sample quantiles of the in-sample increments trend[t] - trend[t-H]
    (skipping the constant head) are shifted so the median equals the last
    trend value. Quantiles interpolate order statistics linearly at position
    (n-1)*tau + 1.
    """
    horizons = np.asarray(horizons, dtype=int).reshape(-1)
    tp = fit.trend_path
    taus = np.asarray(QUANTILE_GRID)
    values = np.empty((len(horizons), len(taus)))
    for i, h in enumerate(horizons):
        if h < 1:
            raise ValueError(f"horizon must be >= 1, got {h}")
        lo = fit.K + h  # earliest t whose lag t-H is past the constant head
        n_samples = len(tp) - lo
        if n_samples < 100:
            raise TooFewSamples(f"horizon {h}: {n_samples} increment samples, need >= 100")
        delta = tp[lo:] - tp[fit.K:len(tp) - h]
        q = np.maximum.accumulate(np.quantile(delta, taus))
        values[i] = fit.last_trend + (q - q[_MEDIAN_IDX])
    return TrendQuantiles(horizons=horizons, values=values, taus=QUANTILE_GRID)
