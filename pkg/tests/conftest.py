import sys
from datetime import datetime
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthdata import synthetic_series  # noqa: E402


@pytest.fixture(scope="session")
def small_series():
    """Task-1-like geometry at reduced scale: ends on a Nov 30."""
    series, components = synthetic_series(n_days=699, start=datetime(2014, 1, 1))
    assert series.end == datetime(2015, 11, 30, 23)
    return series, components


@pytest.fixture(scope="session")
def fitted_model(small_series):
    from qrload.pipeline import fit_zone

    series, _ = small_series
    return fit_zone(series)


@pytest.fixture(scope="session")
def three_year_series():
    """Long enough history for the seasonal-naive benchmark."""
    series, components = synthetic_series(n_days=1158, start=datetime(2013, 12, 1))
    assert series.end == datetime(2017, 1, 31, 23)
    return series, components
