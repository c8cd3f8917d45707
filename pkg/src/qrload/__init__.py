"""Probabilistic hourly load forecasting with per-hour quantile regressions."""

__version__ = "0.1.0"

from .errors import QrloadError  # noqa: F401
from .features import BasisSpec, DesignMatrix  # noqa: F401
from .ingest import HourlySeries, RawRecord  # noqa: F401
from .pipeline import QuantileForecastGrid, ZoneModel, fit_zone, forecast  # noqa: F401
from .quantreg import QUANTILE_GRID, QuantileModelSet, pinball, qr_fit  # noqa: F401
from .scoring import improvement, score_grid, seasonal_naive_benchmark  # noqa: F401
from .trend import TrendFit, moving_average_trend, ols_fit, trend_quantiles  # noqa: F401
