"""Hurst exponents of yield-curve time series.

Pipeline: read a long-format CSV panel (``date,maturity,rate``), interpolate
each day's curve across maturity with a monotone cubic (flat beyond the
observed range), then regress the log mean squared increment on the log lag
for each maturity::

    log m(D) = 2 H log D + c,    m(D) = mean |r_{i+D} - r_i|^2

Lags are counted in observation steps. Missing observations are skipped
pairwise, never imputed.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from os import PathLike
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .numerics import MonotoneSpline, ols_fit

DEFAULT_LAGS = (1, 2, 4, 8, 16)
HEADER = ("date", "maturity", "rate")


class PanelParseError(ValueError):
    """Malformed panel CSV. ``line`` is the 1-based line number, 0 for file-level problems."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class InsufficientDataError(ValueError):
    pass


class DegenerateSeriesError(ArithmeticError):
    """Some lag has zero mean squared increment, so its logarithm is undefined."""


@dataclass(frozen=True)
class YieldPanel:
    """Rates on a ``date x maturity`` grid; missing cells are NaN."""

    dates: tuple
    maturities: np.ndarray
    rates: np.ndarray
    duplicates: int = 0

    def __post_init__(self):
        dates = tuple(self.dates)
        mats = np.asarray(self.maturities, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if rates.shape != (len(dates), mats.size):
            raise ValueError(f"rates shape {rates.shape} does not match "
                             f"{len(dates)} dates x {mats.size} maturities")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise ValueError("dates must be strictly increasing")
        if np.any(np.diff(mats) <= 0):
            raise ValueError("maturities must be strictly increasing")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "maturities", mats)
        object.__setattr__(self, "rates", rates)

    @property
    def shape(self):
        return self.rates.shape

    def row(self, date) -> int:
        try:
            return self.dates.index(_as_date(date))
        except ValueError:
            raise KeyError(f"date {date} not in panel") from None


@dataclass(frozen=True)
class HurstEstimate:
    """Regression result for one maturity.

    When the series is unusable ``error`` holds the reason and the
    numeric fields are NaN.
    """

    maturity: float
    H: float
    intercept: float
    r_squared: float
    lags_used: tuple = ()
    n_obs: int = 0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _as_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value))


def _open_text(source):
    if isinstance(source, (str, PathLike)):
        return open(source, newline=""), True
    return source, False


def ingest_csv(source: Union[str, PathLike, TextIO]) -> YieldPanel:
    """Read a ``date,maturity,rate`` CSV into a :class:`YieldPanel`.

    Repeated ``(date, maturity)`` cells keep the last value; the number of
    overwritten cells is stored in ``duplicates`` and reported as a warning.

    Raises
    ------
    PanelParseError
        On an empty file, a wrong header or a malformed row (with its line number).
    """
    fh, owned = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelParseError("empty file") from None
        if tuple(h.strip().lower() for h in header) != HEADER:
            raise PanelParseError(f"expected header {','.join(HEADER)}, got {','.join(header)}", 1)
        cells = {}
        dupes = 0
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise PanelParseError(f"expected 3 fields, got {len(row)}", line)
            try:
                key = (dt.date.fromisoformat(row[0].strip()), float(row[1]))
                value = float(row[2])
            except ValueError as exc:
                raise PanelParseError(str(exc), line) from None
            if not (math.isfinite(key[1]) and key[1] >= 0):
                raise PanelParseError(f"maturity must be a finite year fraction, got {row[1]!r}", line)
            if key in cells:
                dupes += 1
            cells[key] = value
    finally:
        if owned:
            fh.close()
    if not cells:
        raise PanelParseError("no data rows")
    if dupes:
        warnings.warn(f"{dupes} duplicate (date, maturity) cells; kept the last occurrence",
                      stacklevel=2)
    dates = sorted({d for d, _ in cells})
    mats = sorted({m for _, m in cells})
    d_idx = {d: i for i, d in enumerate(dates)}
    m_idx = {m: j for j, m in enumerate(mats)}
    rates = np.full((len(dates), len(mats)), np.nan)
    for (d, m), v in cells.items():
        rates[d_idx[d], m_idx[m]] = v
    return YieldPanel(dates=tuple(dates), maturities=np.array(mats), rates=rates,
                      duplicates=dupes)


def export_csv(panel: YieldPanel, dest: Union[str, PathLike, TextIO, None] = None) -> str:
    """Write ``panel`` in long format (missing cells omitted) and return the text.

    Floats are written with ``repr`` so a re-read gives identical values.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HEADER)
    for i, d in enumerate(panel.dates):
        for j, m in enumerate(panel.maturities):
            v = panel.rates[i, j]
            if not np.isnan(v):
                writer.writerow((d.isoformat(), repr(float(m)), repr(float(v))))
    text = buf.getvalue()
    if dest is not None:
        if isinstance(dest, (str, PathLike)):
            with open(dest, "w", newline="") as fh:
                fh.write(text)
        else:
            dest.write(text)
    return text


def _row_spline(panel: YieldPanel, i: int) -> MonotoneSpline:
    row = panel.rates[i]
    ok = ~np.isnan(row)
    if ok.sum() < 2:
        raise InsufficientDataError(
            f"{panel.dates[i]}: need at least 2 observed maturities, got {int(ok.sum())}")
    return MonotoneSpline(panel.maturities[ok], row[ok])


def interpolate_curve(panel: YieldPanel, date, target_maturities: Sequence[float]) -> list:
    """Rates at ``target_maturities`` on ``date`` from a monotone cubic, flat outside the data."""
    spline = _row_spline(panel, panel.row(date))
    return [float(v) for v in spline(np.asarray(target_maturities, dtype=float))]


def _values(series) -> np.ndarray:
    arr = list(series)
    if arr and isinstance(arr[0], (tuple, list)):
        arr = [v for _, v in arr]
    return np.asarray(arr, dtype=float)


def increment_moments(values: np.ndarray, lags: Sequence[int]):
    """Mean squared increment and number of usable pairs per lag."""
    out = []
    for lag in lags:
        d = values[lag:] - values[:-lag]
        d = d[~np.isnan(d)]
        out.append((float(np.mean(d * d)) if d.size else math.nan, int(d.size)))
    return out


def estimate_hurst(series: Union[Iterable, np.ndarray], lags: Sequence[int] = DEFAULT_LAGS,
                   maturity: float = math.nan) -> HurstEstimate:
    """Hurst exponent from the slope of ``log m(D)`` against ``log D``.

    ``series`` is a sequence of rates (NaN for missing) or of ``(date, rate)``
    pairs in time order. Lags with no usable pair are dropped; at least two
    must remain.

    Raises
    ------
    ValueError
        Bad lags or fewer than ``max(lags) + 2`` observations.
    DegenerateSeriesError
        If some ``m(D)`` is zero (for instance a constant series).
    """
    lags = tuple(int(l) for l in lags)
    if len(lags) < 2 or len(set(lags)) != len(lags) or min(lags) < 1:
        raise ValueError(f"need at least two distinct lags >= 1, got {lags}")
    values = _values(series)
    n_obs = int(np.count_nonzero(~np.isnan(values)))
    if values.size < max(lags) + 2:
        raise InsufficientDataError(
            f"need at least {max(lags) + 2} observations for lags up to {max(lags)}, "
            f"got {values.size}")
    moments = increment_moments(values, lags)
    used = [(lag, m) for lag, (m, count) in zip(lags, moments) if count > 0]
    if any(m == 0 for _, m in used):
        raise DegenerateSeriesError("zero mean squared increment at some lag")
    if len(used) < 2:
        raise InsufficientDataError("fewer than two lags have usable increments")
    fit = ols_fit(np.log([l for l, _ in used]), np.log([m for _, m in used]))
    return HurstEstimate(maturity=float(maturity), H=0.5 * fit.slope, intercept=fit.intercept,
                         r_squared=min(max(fit.r_squared, 0.0), 1.0),
                         lags_used=tuple(l for l, _ in used), n_obs=n_obs)


def interpolated_series(panel: YieldPanel, maturities: Sequence[float]) -> np.ndarray:
    """``dates x maturities`` matrix of interpolated rates; NaN on dates with < 2 points."""
    mats = np.asarray(maturities, dtype=float)
    out = np.full((len(panel.dates), mats.size), np.nan)
    for i in range(len(panel.dates)):
        try:
            out[i] = _row_spline(panel, i)(mats)
        except InsufficientDataError:
            continue
    return out


def hurst_by_maturity(panel: YieldPanel, maturities: Sequence[float],
                      lags: Sequence[int] = DEFAULT_LAGS, n_workers: int = 1) -> list:
    """One :class:`HurstEstimate` per target maturity, in input order.

    Unusable maturities come back with ``error`` set rather than being dropped.
    """
    mats = [float(m) for m in maturities]
    if not mats:
        return []
    columns = interpolated_series(panel, mats)

    def one(j):
        try:
            return estimate_hurst(columns[:, j], lags, maturity=mats[j])
        except (ArithmeticError, ValueError) as exc:
            nan = math.nan
            n_obs = int(np.count_nonzero(~np.isnan(columns[:, j])))
            return HurstEstimate(maturity=mats[j], H=nan, intercept=nan, r_squared=nan,
                                 lags_used=tuple(lags), n_obs=n_obs, error=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, n_workers)) as pool:
        return list(pool.map(one, range(len(mats))))


__all__ = [
    "DEFAULT_LAGS",
    "DegenerateSeriesError",
    "HurstEstimate",
    "InsufficientDataError",
    "PanelParseError",
    "YieldPanel",
    "estimate_hurst",
    "export_csv",
    "hurst_by_maturity",
    "increment_moments",
    "ingest_csv",
    "interpolate_curve",
    "interpolated_series",
]
