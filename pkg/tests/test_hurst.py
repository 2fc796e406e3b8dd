import datetime as dt
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterra_rates.curves import ConstantTheta, RateModel, RiemannLiouvilleKernel
from volterra_rates.hurst import (
    DegenerateSeriesError,
    InsufficientDataError,
    PanelParseError,
    YieldPanel,
    estimate_hurst,
    export_csv,
    hurst_by_maturity,
    ingest_csv,
    interpolate_curve,
)
from volterra_rates.simulation import SimGrid, hybrid_short_rate


def panel_from_columns(columns, maturities, start=dt.date(2020, 1, 1)):
    columns = np.asarray(columns, dtype=float)
    dates = tuple(start + dt.timedelta(days=i) for i in range(columns.shape[0]))
    return YieldPanel(dates=dates, maturities=np.asarray(maturities, dtype=float), rates=columns)


def test_ingest_small_panel():
    text = "date,maturity,rate\n2020-01-02,1.0,0.01\n2020-01-02,2.0,0.015\n"
    panel = ingest_csv(io.StringIO(text))
    assert panel.shape == (1, 2)
    assert panel.rates.tolist() == [[0.01, 0.015]]
    assert panel.duplicates == 0


def test_ingest_duplicates_keep_last():
    text = "date,maturity,rate\n2020-01-02,1.0,0.01\n2020-01-02,1.0,0.02\n"
    with pytest.warns(UserWarning, match="1 duplicate"):
        panel = ingest_csv(io.StringIO(text))
    assert panel.duplicates == 1 and panel.rates[0, 0] == 0.02


@pytest.mark.parametrize("text, line", [
    ("date,maturity,rate\n2020-01-02,1.0,0.01\n2020-13-02,1.0,0.01\n", 3),
    ("date,maturity,rate\n2020-01-02,abc,0.01\n", 2),
    ("date,maturity,rate\n2020-01-02,1.0\n", 2),
    ("date,tenor,rate\n2020-01-02,1.0,0.01\n", 1),
    ("date,maturity,rate\n2020-01-02,-1.0,0.01\n", 2),
])
def test_ingest_errors_carry_line_numbers(text, line):
    with pytest.raises(PanelParseError) as info:
        ingest_csv(io.StringIO(text))
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_ingest_empty_file():
    with pytest.raises(PanelParseError, match="empty"):
        ingest_csv(io.StringIO(""))
    with pytest.raises(PanelParseError, match="no data"):
        ingest_csv(io.StringIO("date,maturity,rate\n"))


def test_missing_cells_are_nan():
    text = "date,maturity,rate\n2020-01-02,1.0,0.01\n2020-01-03,2.0,0.02\n"
    panel = ingest_csv(io.StringIO(text))
    assert panel.shape == (2, 2)
    assert math.isnan(panel.rates[0, 1]) and math.isnan(panel.rates[1, 0])


def test_round_trip_is_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    n = 3 * 365
    mats = [0.25, 1.0, 2.0, 5.0, 10.0, 30.0]
    rates = 0.02 + np.cumsum(rng.normal(0, 1e-3, (n, len(mats))), axis=0)
    rates[rng.random(rates.shape) < 0.02] = np.nan
    panel = panel_from_columns(rates, mats)
    path = tmp_path / "panel.csv"
    text = export_csv(panel, path)
    again = ingest_csv(path)
    assert again.dates == panel.dates
    assert np.array_equal(again.maturities, panel.maturities)
    assert np.array_equal(again.rates, panel.rates, equal_nan=True)
    assert export_csv(again) == text


def test_interpolate_curve():
    panel = panel_from_columns([[0.01, 0.015, 0.03, 0.035]], [0.25, 1.0, 5.0, 10.0])
    day = panel.dates[0]
    assert interpolate_curve(panel, day, [5.0]) == [0.03]
    assert interpolate_curve(panel, day, [30.0, 0.0]) == [0.035, 0.01]
    mats = np.array([0.5, 1.0, 3.0, 7.0])
    flat = panel_from_columns([0.02 + 0.003 * mats], mats)
    q = np.linspace(0.5, 7.0, 53)
    got = np.array(interpolate_curve(flat, flat.dates[0].isoformat(), q))
    assert np.max(np.abs(got - (0.02 + 0.003 * q))) <= 1e-12
    sparse = panel_from_columns([[0.01, np.nan]], [1.0, 2.0])
    with pytest.raises(InsufficientDataError):
        interpolate_curve(sparse, sparse.dates[0], [1.5])
    with pytest.raises(KeyError):
        interpolate_curve(panel, "1999-01-01", [1.0])


def test_linear_trend_has_unit_exponent():
    est = estimate_hurst(0.01 + 1e-4 * np.arange(200))
    assert est.H == pytest.approx(1.0, abs=1e-10)
    assert est.r_squared == pytest.approx(1.0, abs=1e-12)
    assert est.lags_used == (1, 2, 4, 8, 16) and est.n_obs == 200


def test_constant_series_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        estimate_hurst(np.full(100, 0.03))


def test_estimate_contracts():
    with pytest.raises(InsufficientDataError):
        estimate_hurst(np.arange(17.0))
    with pytest.raises(ValueError):
        estimate_hurst(np.arange(50.0), lags=(1,))
    with pytest.raises(ValueError):
        estimate_hurst(np.arange(50.0), lags=(0, 2))


def test_accepts_dated_pairs_and_skips_missing():
    rng = np.random.default_rng(2)
    x = np.cumsum(rng.normal(size=400))
    pairs = [(dt.date(2020, 1, 1) + dt.timedelta(days=i), v) for i, v in enumerate(x)]
    assert estimate_hurst(pairs).H == estimate_hurst(x).H
    holes = x.copy()
    holes[::37] = np.nan
    est = estimate_hurst(holes)
    assert math.isfinite(est.H) and est.n_obs == x.size - holes[::37].size


def test_brownian_series_gives_one_half():
    rng = np.random.default_rng(7)
    paths = np.cumsum(rng.normal(0, 0.01, (20, 10_000)), axis=1)
    hs = [estimate_hurst(p).H for p in paths]
    assert abs(np.mean(hs) - 0.5) <= 0.05


def test_rough_series_is_recovered():
    model = RateModel(ConstantTheta(0.0), RiemannLiouvilleKernel(hurst=0.2, sigma=0.01))
    paths = hybrid_short_rate(model, SimGrid.uniform(10.0, 5000), 10, seed=3)
    hs = [estimate_hurst(p).H for p in paths]
    assert abs(np.mean(hs) - 0.2) <= 0.05


# values on a 1e-3 lattice so the added offset cannot swamp the increments
series = st.lists(st.integers(-1000, 1000).map(lambda k: k * 1e-3), min_size=40, max_size=120)


@settings(max_examples=60, deadline=None)
@given(series, st.floats(1e-3, 1e3))
def test_scale_and_reversal_invariance(values, scale):
    x = np.asarray(values)
    try:
        base = estimate_hurst(x)
    except DegenerateSeriesError:
        return
    assert estimate_hurst(scale * x + 0.7).H == pytest.approx(base.H, abs=1e-9)
    assert estimate_hurst(x[::-1]).H == pytest.approx(base.H, abs=1e-12)


def test_by_maturity_identical_columns():
    rng = np.random.default_rng(5)
    col = 0.02 + np.cumsum(rng.normal(0, 1e-3, 500))
    panel = panel_from_columns(np.column_stack([col, col, col]), [1.0, 2.0, 5.0])
    res = hurst_by_maturity(panel, [1.0, 2.0, 5.0, 1.5], n_workers=3)
    assert [r.maturity for r in res] == [1.0, 2.0, 5.0, 1.5]
    assert all(r.ok for r in res)
    assert max(abs(r.H - res[0].H) for r in res) <= 1e-12


def test_by_maturity_independent_columns():
    models = [RateModel(ConstantTheta(0.0), RiemannLiouvilleKernel(hurst=h, sigma=0.01)) for h in (0.15, 0.45)]
    grid = SimGrid.uniform(10.0, 4000)
    cols = np.column_stack([hybrid_short_rate(m, grid, 1, seed=11 + i)[0] for i, m in enumerate(models)])
    # place them far apart so the spline reproduces each column at its own knot
    panel = panel_from_columns(cols, [1.0, 10.0])
    res = hurst_by_maturity(panel, [1.0, 10.0])
    assert res[0].H == pytest.approx(0.15, abs=0.07)
    assert res[1].H == pytest.approx(0.45, abs=0.07)


def test_by_maturity_edge_cases():
    panel = panel_from_columns(np.column_stack([np.full(60, 0.01), np.arange(60) * 1e-4]), [1.0, 2.0])
    assert hurst_by_maturity(panel, []) == []
    res = hurst_by_maturity(panel, [0.5, 2.0])
    assert not res[0].ok and math.isnan(res[0].H) and "zero" in res[0].error
    assert res[1].ok and res[1].H == pytest.approx(1.0, abs=1e-9)
