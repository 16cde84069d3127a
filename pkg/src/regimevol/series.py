"""Date-indexed series, CSV ingestion, log returns and mixed-frequency alignment.

Dates are held as ``numpy.datetime64[D]`` arrays. Monthly series are stored
on the first day of each month so that monthly and daily data can be matched
by calendar month.
"""

from __future__ import annotations

import csv
import enum
import math
import os
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DuplicateDate,
    EmptySeries,
    FrequencyMismatch,
    NonPositivePrice,
    NoOverlap,
    ParseError,
    TooShort,
)


class Frequency(str, enum.Enum):
    DAILY = "daily"
    MONTHLY = "monthly"


class Schema(str, enum.Enum):
    DATE_VALUE = "date_value"
    YAHOO_OHLC = "yahoo_ohlc"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def month_ordinal(dates) -> np.ndarray:
    """Months since 1970-01 for each date (int64)."""
    return np.asarray(dates, dtype="datetime64[D]").astype("datetime64[M]").astype(np.int64)


def month_start(dates) -> np.ndarray:
    return np.asarray(dates, dtype="datetime64[D]").astype("datetime64[M]").astype("datetime64[D]")


@dataclass(frozen=True)
class TimeSeries:
    """Immutable date-indexed numeric series.

    Parameters
    ----------
    dates : array_like of datetime64[D]
        Strictly increasing calendar dates.
    values : array_like of float
        One value per date.
    frequency : Frequency
        ``MONTHLY`` series must be dated on the first of each month.
    name : str
        Label used for column names in panels and reports.
    """

    dates: np.ndarray
    values: np.ndarray
    frequency: Frequency = Frequency.DAILY
    name: str = "value"

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        values = np.asarray(self.values, dtype=float)
        if dates.ndim != 1 or values.ndim != 1:
            raise ValueError("dates and values must be one-dimensional")
        if dates.shape != values.shape:
            raise ValueError(
                f"dates ({dates.size}) and values ({values.size}) differ in length"
            )
        if dates.size == 0:
            raise EmptySeries(f"series '{self.name}' is empty")
        steps = np.diff(dates).astype(np.int64)
        if np.any(steps == 0):
            dup = dates[1:][steps == 0][0]
            raise DuplicateDate(f"duplicate date {dup} in series '{self.name}'")
        if np.any(steps < 0):
            raise ValueError("dates must be strictly increasing")
        freq = Frequency(self.frequency)
        if freq is Frequency.MONTHLY:
            if np.any(month_start(dates) != dates):
                raise FrequencyMismatch(
                    f"monthly series '{self.name}' must be dated on the first of the month"
                )
        object.__setattr__(self, "dates", _frozen(dates))
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "frequency", freq)

    def __len__(self) -> int:
        return int(self.values.size)

    def rename(self, name: str) -> "TimeSeries":
        return type(self)(self.dates, self.values, self.frequency, name)

    def between(self, start=None, end=None) -> "TimeSeries":
        """Restrict to ``start <= date <= end`` (either bound may be None)."""
        keep = np.ones(len(self), dtype=bool)
        if start is not None:
            keep &= self.dates >= np.datetime64(start, "D")
        if end is not None:
            keep &= self.dates <= np.datetime64(end, "D")
        return type(self)(self.dates[keep], self.values[keep], self.frequency, self.name)


@dataclass(frozen=True)
class ReturnSeries(TimeSeries):
    """Daily log returns in percent. Values must be finite."""

    def __post_init__(self):
        super().__post_init__()
        if self.frequency is not Frequency.DAILY:
            raise FrequencyMismatch("returns must be daily")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("returns must be finite")

    @property
    def returns(self) -> np.ndarray:
        return self.values


@dataclass(frozen=True)
class AlignedPanel:
    """Daily panel with monthly columns broadcast across their month.

    ``period_index[i]`` is the calendar-month offset of day ``i`` from the
    first month in the panel, so days in the same month share an index.
    """

    daily_dates: np.ndarray
    columns: Mapping[str, np.ndarray]
    period_index: np.ndarray
    frequencies: Mapping[str, Frequency] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.daily_dates)
        cols = {}
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != (n,):
                raise ValueError(f"column '{name}' has length {col.size}, expected {n}")
            cols[name] = _frozen(col)
        pidx = np.asarray(self.period_index, dtype=np.int64)
        if pidx.shape != (n,) or np.any(np.diff(pidx) < 0):
            raise ValueError("period_index must be non-decreasing with one entry per day")
        object.__setattr__(self, "daily_dates", _frozen(np.asarray(self.daily_dates, "datetime64[D]")))
        object.__setattr__(self, "columns", MappingProxyType(cols))
        object.__setattr__(self, "period_index", _frozen(pidx))
        object.__setattr__(self, "frequencies", MappingProxyType(dict(self.frequencies)))

    def __len__(self) -> int:
        return len(self.daily_dates)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def matrix(self, names: Sequence[str] | None = None) -> np.ndarray:
        names = self.names if names is None else list(names)
        if not names:
            return np.empty((len(self), 0))
        return np.column_stack([self.columns[k] for k in names])

    def series(self, name: str) -> TimeSeries:
        return TimeSeries(self.daily_dates, self.columns[name], Frequency.DAILY, name)

    def constituents(self) -> list[TimeSeries]:
        """Each column as a daily series; re-aligning these reproduces the panel."""
        return [self.series(k) for k in self.columns]


# -- CSV ------------------------------------------------------------------

_YAHOO_COLUMNS = ("date", "open", "high", "low", "close", "adj close", "volume")


def _infer_frequency(dates: np.ndarray) -> Frequency:
    if dates.size < 2:
        return Frequency.DAILY
    months = month_ordinal(dates)
    gaps = np.diff(dates).astype(np.int64)
    if np.unique(months).size == months.size and gaps.min() >= 28:
        return Frequency.MONTHLY
    return Frequency.DAILY


def _parse_float(text: str, row: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"cannot parse value {text!r}", row) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text!r}", row)
    return v


def _parse_date(text: str, row: int) -> np.datetime64:
    try:
        return np.datetime64(text.strip()[:10], "D")
    except ValueError:
        raise ParseError(f"cannot parse date {text!r}", row) from None


def load_csv(
    path: str | os.PathLike,
    schema: Schema | str = Schema.DATE_VALUE,
    *,
    name: str | None = None,
    frequency: Frequency | str | None = None,
) -> TimeSeries:
    """Read a series from CSV.

    ``date_value`` files have the header ``date,value``. ``yahoo_ohlc`` files
    are the standard seven-column price export; the adjusted close is used
    and rows whose adjusted close is ``null`` (vendor placeholder for missing
    sessions) are skipped.

    The frequency is inferred from the date spacing unless given. Monthly
    dates are moved to the first of their month.
    """
    schema = Schema(schema)
    if name is None:
        name = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    dates, values = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptySeries(f"{path}: file is empty") from None
        cols = [h.strip().lower() for h in header]
        if schema is Schema.DATE_VALUE:
            if cols[:2] != ["date", "value"]:
                raise ParseError(f"expected header 'date,value', got {','.join(header)!r}", 1)
            vcol = 1
        else:
            if "date" not in cols or "adj close" not in cols:
                raise ParseError(
                    f"expected Yahoo columns {','.join(_YAHOO_COLUMNS)}, got {','.join(header)!r}", 1
                )
            vcol = cols.index("adj close")
        dcol = cols.index("date")
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) <= max(dcol, vcol):
                raise ParseError(f"expected at least {max(dcol, vcol) + 1} fields, got {len(row)}", rowno)
            if schema is Schema.YAHOO_OHLC and row[vcol].strip().lower() == "null":
                continue
            dates.append(_parse_date(row[dcol], rowno))
            values.append(_parse_float(row[vcol], rowno))
    if not dates:
        raise EmptySeries(f"{path}: no observations")
    d = np.array(dates, dtype="datetime64[D]")
    v = np.array(values, dtype=float)
    order = np.argsort(d, kind="stable")
    d, v = d[order], v[order]
    dup = np.flatnonzero(np.diff(d).astype(np.int64) == 0)
    if dup.size:
        raise DuplicateDate(f"{path}: duplicate date {d[dup[0]]}")
    freq = _infer_frequency(d) if frequency is None else Frequency(frequency)
    if freq is Frequency.MONTHLY:
        d = month_start(d)
        if np.any(np.diff(d).astype(np.int64) == 0):
            raise DuplicateDate(f"{path}: two observations fall in the same month")
    return TimeSeries(d, v, freq, name)


def format_value(v: float) -> str:
    return repr(float(v))


def write_csv(series: TimeSeries, path: str | os.PathLike) -> None:
    """Write ``date,value`` rows with shortest round-trip float formatting."""
    with open(path, "w", newline="") as fh:
        fh.write("date,value\n")
        for d, v in zip(series.dates, series.values):
            fh.write(f"{d},{format_value(v)}\n")


# -- transforms -----------------------------------------------------------

def log_returns(prices: TimeSeries) -> ReturnSeries:
    """Percent log returns ``100 * ln(p_i / p_{i-1})`` dated at the later day."""
    p = prices.values
    if p.size < 2:
        raise TooShort("need at least two prices to form a return")
    if np.any(p <= 0):
        raise NonPositivePrice(f"series '{prices.name}' contains non-positive prices")
    r = 100.0 * np.diff(np.log(p))
    return ReturnSeries(prices.dates[1:], r, Frequency.DAILY, prices.name)


def difference(series: TimeSeries, log: bool = False) -> TimeSeries:
    """First difference (of logs when ``log``), dated at the later observation."""
    v = series.values
    if log:
        if np.any(v <= 0):
            raise NonPositivePrice(f"cannot take logs of non-positive values in '{series.name}'")
        v = np.log(v)
    if v.size < 2:
        raise TooShort("need at least two observations to difference")
    return TimeSeries(series.dates[1:], np.diff(v), series.frequency, series.name)


def shift_months(series: TimeSeries, lag_months: int) -> TimeSeries:
    """Re-date a monthly series so that the value for month M is used in month M + lag."""
    if series.frequency is not Frequency.MONTHLY:
        raise FrequencyMismatch("only monthly series can be shifted by months")
    if lag_months == 0:
        return series
    d = (series.dates.astype("datetime64[M]") + lag_months).astype("datetime64[D]")
    return TimeSeries(d, series.values, Frequency.MONTHLY, series.name)


def monthly_mean(series: TimeSeries) -> TimeSeries:
    """Average a daily series within calendar months."""
    if series.frequency is Frequency.MONTHLY:
        return series
    months = month_ordinal(series.dates)
    uniq, inv = np.unique(months, return_inverse=True)
    sums = np.bincount(inv, weights=series.values)
    counts = np.bincount(inv)
    dates = uniq.astype("datetime64[M]").astype("datetime64[D]")
    return TimeSeries(dates, sums / counts, Frequency.MONTHLY, series.name)


def align(
    daily: Iterable[TimeSeries],
    monthly: Iterable[TimeSeries] = (),
    *,
    lag_months: int = 0,
) -> AlignedPanel:
    """Build a daily panel from daily and monthly series.

    Daily series are intersected on their common dates. Monthly values are
    held constant across every retained day of their month (after moving
    them ``lag_months`` months forward), and days whose month is missing
    from any monthly series are dropped.

    Raises
    ------
    FrequencyMismatch
        A series was passed in the wrong list.
    NoOverlap
        No day survives the intersection.
    """
    daily = list(daily)
    monthly = list(monthly)
    if not daily:
        raise ValueError("at least one daily series is required")
    names = [s.name for s in daily + monthly]
    if len(set(names)) != len(names):
        raise ValueError(f"series names must be unique, got {names}")
    for s in daily:
        if s.frequency is not Frequency.DAILY:
            raise FrequencyMismatch(f"'{s.name}' is {s.frequency.value}, expected daily")
    for s in monthly:
        if s.frequency is not Frequency.MONTHLY:
            raise FrequencyMismatch(f"'{s.name}' is {s.frequency.value}, expected monthly")
    monthly = [shift_months(s, lag_months) for s in monthly]

    dates = daily[0].dates
    for s in daily[1:]:
        dates = np.intersect1d(dates, s.dates, assume_unique=True)
    months = month_ordinal(dates)
    for s in monthly:
        keep = np.isin(months, month_ordinal(s.dates))
        dates, months = dates[keep], months[keep]
    if dates.size == 0:
        raise NoOverlap("series share no common dates")

    cols: dict[str, np.ndarray] = {}
    freqs: dict[str, Frequency] = {}
    for s in daily:
        pos = np.searchsorted(s.dates, dates)
        cols[s.name] = s.values[pos]
        freqs[s.name] = Frequency.DAILY
    for s in monthly:
        pos = np.searchsorted(month_ordinal(s.dates), months)
        cols[s.name] = s.values[pos]
        freqs[s.name] = Frequency.MONTHLY
    return AlignedPanel(dates, cols, months - months[0], freqs)
