import numpy as np
import pytest

from qrload.errors import (
    DegenerateDesign,
    DimensionMismatch,
    TooFewSamples,
    WindowTooLong,
)
from qrload.features import build_trend_design
from qrload.trend import (
    K_DEFAULT,
    TrendFit,
    fit_trend,
    moving_average_trend,
    ols_fit,
    trend_quantiles,
)
from oracles import moving_average_double_loop, normal_equations_ols


def test_ols_exact_fit_has_zero_residuals():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((200, 10))
    y = x @ rng.standard_normal(10)
    beta, residuals = ols_fit(x, y)
    assert np.abs(residuals).max() < 1e-8
    assert np.allclose(x @ beta, y)


def test_ols_single_column_projection():
    x = np.linspace(1.0, 2.0, 50).reshape(-1, 1)
    x /= np.linalg.norm(x)
    beta, residuals = ols_fit(x, 5.0 * x[:, 0])
    assert beta[0] == pytest.approx(5.0, rel=1e-12)
    assert np.abs(residuals).max() < 1e-12


def test_ols_matches_normal_equations_oracle():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((500, 46))
    y = rng.standard_normal(500)
    beta, _ = ols_fit(x, y)
    ref = normal_equations_ols(x, y)
    assert np.allclose(beta, ref, rtol=1e-7)


def test_ols_minimum_norm_on_rank_deficient_design():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((100, 4))
    x = np.hstack([x, x[:, :1]])  # duplicated column
    y = rng.standard_normal(100)
    beta, residuals = ols_fit(x, y)
    # fitted values match the unique projection onto the column space
    ref = x[:, :4] @ normal_equations_ols(x[:, :4], y)
    assert np.allclose(x @ beta, ref, rtol=1e-8)
    # minimum-norm solution splits the duplicated coefficient evenly
    assert beta[0] == pytest.approx(beta[4], rel=1e-8)


def test_ols_degenerate_group_and_dimension_errors(small_series):
    series, _ = small_series
    design = build_trend_design(series)
    with pytest.raises(DimensionMismatch):
        ols_fit(design, series.log_load[:-1])
    zeroed = np.ones((10, 20))
    with pytest.raises(DimensionMismatch):
        ols_fit(zeroed, np.ones(10))
    from qrload.features import DesignMatrix

    dm = DesignMatrix(values=np.hstack([np.ones((10, 1)), np.zeros((10, 2))]),
                      column_groups={"ones": slice(0, 1), "dead": slice(1, 3)})
    with pytest.raises(DegenerateDesign, match="dead"):
        ols_fit(dm, np.ones(10))


def test_moving_average_constant_and_default_window():
    assert K_DEFAULT == 52 * 7 * 24 == 8736
    res = np.full(9000, 3.25)
    path = moving_average_trend(res)
    assert np.all(path == 3.25)


def test_moving_average_matches_double_loop_oracle():
    rng = np.random.default_rng(3)
    res = rng.standard_normal(20000)
    path = moving_average_trend(res, K_DEFAULT)
    ref = moving_average_double_loop(res, K_DEFAULT)
    assert np.abs(path - ref).max() < 1e-9
    assert np.all(path[:K_DEFAULT] == path[K_DEFAULT])


def test_moving_average_window_too_long():
    with pytest.raises(WindowTooLong):
        moving_average_trend(np.ones(100), 100)
    with pytest.raises(WindowTooLong):
        moving_average_trend(np.ones(100), 0)


def _constant_fit(n=10000, K=100, value=0.7):
    path = np.full(n, value)
    return TrendFit(beta=np.zeros(1), residuals=np.zeros(n), trend_path=path, K=K)


def test_trend_quantiles_constant_path_collapses():
    fit = _constant_fit()
    tq = trend_quantiles(fit, [1, 24, 744])
    assert np.all(tq.values == fit.last_trend)


def test_trend_quantiles_median_anchored_exactly():
    rng = np.random.default_rng(4)
    path = np.cumsum(rng.standard_normal(12000)) / 100.0
    fit = TrendFit(beta=np.zeros(1), residuals=np.zeros(12000), trend_path=path, K=200)
    tq = trend_quantiles(fit, np.arange(1, 48))
    median_col = list(tq.taus).index(0.5)
    assert np.all(tq.values[:, median_col] == fit.last_trend)
    assert np.all(np.diff(tq.values, axis=1) >= 0.0)


def test_trend_quantiles_linear_path_collapses():
    slope = 1.7e-4
    path = slope * np.arange(20000)
    fit = TrendFit(beta=np.zeros(1), residuals=np.zeros(20000), trend_path=path, K=500)
    tq = trend_quantiles(fit, [1, 10, 100])
    assert np.abs(tq.values - fit.last_trend).max() < 1e-12


def test_trend_quantiles_too_few_samples():
    fit = _constant_fit(n=300, K=100)
    with pytest.raises(TooFewSamples):
        trend_quantiles(fit, [150])
    trend_quantiles(fit, [100])  # 100 samples is just enough


def test_trend_increments_invariant_under_level_shift(small_series):
    series, _ = small_series
    design = build_trend_design(series)
    fit_a = fit_trend(design, series.log_load)
    fit_b = fit_trend(design, series.log_load + 3.7)
    h = 24
    delta_a = fit_a.trend_path[h:] - fit_a.trend_path[:-h]
    delta_b = fit_b.trend_path[h:] - fit_b.trend_path[:-h]
    assert np.abs(delta_a - delta_b).max() < 1e-9
