"""Hourly per-exchange OHLCV bars and the exchange-averaged global series."""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .chain_model import ParseReport
from .timeutil import HOUR, format_ts, parse_ts

OHLC_HEADER = ["hour_start", "exchange", "open", "high", "low", "close", "volume"]
GLOBAL_HEADER = ["hour_start", "open", "high", "low", "close", "volume"]


@dataclass(frozen=True)
class OhlcBar:
    hour_start: int
    exchange: str
    open: float
    high: float
    low: float
    close: float
    volume: float

    def __post_init__(self):
        if self.hour_start % HOUR:
            raise ValueError(f"hour_start {self.hour_start} not aligned to the hour")
        vals = (self.open, self.high, self.low, self.close, self.volume)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("non-finite price or volume")
        if min(self.open, self.high, self.low, self.close) < 0:
            raise ValueError("negative price")
        if self.volume < 0:
            raise ValueError("negative volume")
        if self.low > self.high:
            raise ValueError(f"low {self.low} > high {self.high}")
        if not (self.low <= self.open <= self.high and self.low <= self.close <= self.high):
            raise ValueError("open/close outside [low, high]")


class GlobalBar(NamedTuple):
    hour_start: int
    open: float
    high: float
    low: float
    close: float
    volume: float


@dataclass(frozen=True, eq=False)
class GlobalBarSeries:
    hour_start: np.ndarray  # int64, strictly increasing
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    gaps: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.hour_start)

    def bar(self, i: int) -> GlobalBar:
        return GlobalBar(int(self.hour_start[i]), float(self.open[i]), float(self.high[i]),
                         float(self.low[i]), float(self.close[i]), float(self.volume[i]))

    def bars(self):
        return [self.bar(i) for i in range(len(self))]


def load_ohlc(lines: Iterable[str], source: str = "<ohlc>"):
    """Parse the per-exchange OHLC CSV. Returns ``(bars, report)``.

    Rows violating bar invariants or repeating an (hour, exchange) key are
    reported by line number and dropped.
    """
    report = ParseReport(source)
    bars: list[OhlcBar] = []
    seen: set[tuple[int, str]] = set()
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return bars, report
    if header != OHLC_HEADER:
        report.add_error(1, f"expected header {','.join(OHLC_HEADER)}")
        return bars, report
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != len(OHLC_HEADER):
            report.add_error(lineno, f"expected {len(OHLC_HEADER)} fields, got {len(row)}")
            continue
        try:
            hour = int(row[0])
            bar = OhlcBar(hour, row[1], *(float(x) for x in row[2:]))
        except ValueError as exc:
            report.add_error(lineno, str(exc))
            continue
        if not bar.exchange:
            report.add_error(lineno, "empty exchange name")
            continue
        key = (bar.hour_start, bar.exchange)
        if key in seen:
            report.add_error(lineno, f"duplicate bar for {bar.exchange} at {bar.hour_start}")
            continue
        seen.add(key)
        bars.append(bar)
    report.records = len(bars)
    return bars, report


def _mean(values: Sequence[float], weights: Sequence[float] | None = None) -> float:
    if weights is not None and math.fsum(weights) > 0:
        m = math.fsum(v * w for v, w in zip(values, weights)) / math.fsum(weights)
    else:
        m = math.fsum(values) / len(values)
    # fsum/n can land one ulp outside the data range
    return min(max(m, min(values)), max(values))


def global_average(bars: Iterable[OhlcBar], weighting: str = "mean") -> GlobalBarSeries:
    """Average bars over exchanges per hour; volume is summed.

    ``weighting`` is ``"mean"`` (plain arithmetic mean) or ``"volume"``
    (volume-weighted; hours with zero total volume fall back to the plain
    mean). Missing hours inside the covered range are recorded as gaps.
    """
    if weighting not in ("mean", "volume"):
        raise ValueError(f"unknown weighting {weighting!r}")
    by_hour: dict[int, list[OhlcBar]] = defaultdict(list)
    for b in bars:
        by_hour[b.hour_start].append(b)
    hours = sorted(by_hour)
    n = len(hours)
    cols = {k: np.empty(n) for k in ("open", "high", "low", "close", "volume")}
    for i, h in enumerate(hours):
        group = by_hour[h]
        vols = [b.volume for b in group]
        w = vols if weighting == "volume" else None
        for k in ("open", "high", "low", "close"):
            cols[k][i] = _mean([getattr(b, k) for b in group], w)
        cols["volume"][i] = math.fsum(vols)
    gaps = []
    for a, b in zip(hours, hours[1:]):
        gaps.extend(range(a + HOUR, b, HOUR))
    return GlobalBarSeries(np.array(hours, dtype=np.int64), gaps=tuple(gaps), **cols)


def bucket_index(timestamp: int, series: GlobalBarSeries) -> int | None:
    hour = timestamp - timestamp % HOUR
    i = int(np.searchsorted(series.hour_start, hour))
    if i < len(series) and series.hour_start[i] == hour:
        return i
    return None


def bucket_of(timestamp: int, series: GlobalBarSeries) -> GlobalBar | None:
    """The bar whose hour contains ``timestamp``, or None for gaps/outside."""
    i = bucket_index(timestamp, series)
    return None if i is None else series.bar(i)


def bucket_indices(timestamps: np.ndarray, series: GlobalBarSeries) -> np.ndarray:
    """Vectorised ``bucket_index``; -1 marks timestamps without a bar."""
    ts = np.asarray(timestamps, dtype=np.int64)
    hours = ts - ts % HOUR
    idx = np.searchsorted(series.hour_start, hours)
    ok = idx < len(series)
    ok[ok] = series.hour_start[idx[ok]] == hours[ok]
    return np.where(ok, idx, -1)


def write_ohlc(bars: Iterable[OhlcBar], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(OHLC_HEADER)
    for b in bars:
        w.writerow([b.hour_start, b.exchange, repr(b.open), repr(b.high), repr(b.low),
                    repr(b.close), repr(b.volume)])


def write_global_series(series: GlobalBarSeries, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(GLOBAL_HEADER)
    for b in series.bars():
        w.writerow([format_ts(b.hour_start), repr(b.open), repr(b.high), repr(b.low),
                    repr(b.close), repr(b.volume)])


def read_global_series(lines: Iterable[str]) -> GlobalBarSeries:
    reader = csv.reader(lines)
    if next(reader, None) != GLOBAL_HEADER:
        raise ValueError(f"global series must start with header {','.join(GLOBAL_HEADER)}")
    rows = [r for r in reader if r]
    hours = [int(r[0]) if r[0].isdigit() else parse_ts(r[0]) for r in rows]
    if any(b <= a for a, b in zip(hours, hours[1:])):
        raise ValueError("global series hours must be strictly increasing")
    arr = np.array([[float(x) for x in r[1:]] for r in rows]).reshape(-1, 5)
    gaps = []
    for a, b in zip(hours, hours[1:]):
        gaps.extend(range(a + HOUR, b, HOUR))
    return GlobalBarSeries(np.array(hours, dtype=np.int64), *arr.T.copy(), gaps=tuple(gaps))
