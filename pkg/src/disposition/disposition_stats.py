"""GR/LR classification of sells, per-window tallies and t-tests.

Each sell is joined to the hourly global bar it falls in and labelled by every
selected rule. Tallies count labels per (receiving exchange entity,
sub-bucket); the GR and LR count columns over those rows are the two samples
of the t-test. ``t = (mean LR - mean GR) / SE`` so a negative t means gains
were realised more often than losses, i.e. a disposition effect.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import timeutil
from .indicators import IndicatorConfig, Signal, decide, defined_mask, rule_values
from .market_data import GlobalBarSeries, bucket_indices
from .sell_extraction import SellEvent
from .timeutil import DAY, HOUR, format_ts, parse_ts
from .tstats import p_value, two_sample_t

SUB_BUCKETS = {"hour": HOUR, "day": DAY, "entity": None}
WINDOWINGS = ("full-range", "yearly", "monthly")
REPORT_HEADER = ["window_start", "window_end", "rule_id", "gr", "lr", "neutral",
                 "t_stat", "p_value", "df", "n_gr", "n_lr"]
PLOT_HEADER = ["month", "rule_id", "t_stat", "p_value"]


@dataclass(frozen=True, eq=False)
class ClassifiedSells:
    tx_id: tuple[str, ...]
    timestamp: np.ndarray  # int64 unix seconds
    source_entity: tuple[str, ...]
    target_exchange: tuple[str, ...]
    value: np.ndarray
    in_gap: np.ndarray  # bool, sell hour has no price bar
    signals: dict[str, np.ndarray]  # rule_id -> int8 per sell, catalogue order
    warmup_neutral: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tx_id)

    @property
    def rule_ids(self) -> tuple[str, ...]:
        return tuple(self.signals)

    @property
    def gap_count(self) -> int:
        return int(self.in_gap.sum())

    def subset(self, mask: np.ndarray) -> "ClassifiedSells":
        idx = np.flatnonzero(mask)
        pick = lambda seq: tuple(seq[i] for i in idx)  # noqa: E731
        return ClassifiedSells(pick(self.tx_id), self.timestamp[idx], pick(self.source_entity),
                               pick(self.target_exchange), self.value[idx], self.in_gap[idx],
                               {r: s[idx] for r, s in self.signals.items()})


def classify_sells(sells: Sequence[SellEvent], series: GlobalBarSeries,
                   rules: Sequence[IndicatorConfig]) -> ClassifiedSells:
    """Label every sell under every rule; gap and warm-up hours give Neutral."""
    ts = np.array([s.timestamp for s in sells], dtype=np.int64)
    idx = bucket_indices(ts, series) if len(series) else np.full(len(ts), -1)
    has_bar = idx >= 0
    safe = np.where(has_bar, idx, 0)
    signals, warm = {}, {}
    for cfg in rules:
        values = rule_values(cfg, series)
        hour_sig = decide(cfg, series.open, series.close, values)
        valid = defined_mask(cfg, values, len(series))
        if len(series):
            sig = np.where(has_bar, hour_sig[safe], 0).astype(np.int8)
            warm[cfg.rule_id] = int((has_bar & ~valid[safe]).sum())
        else:
            sig = np.zeros(len(ts), dtype=np.int8)
            warm[cfg.rule_id] = 0
        signals[cfg.rule_id] = sig
    return ClassifiedSells(
        tuple(s.tx_id for s in sells), ts, tuple(s.source_entity for s in sells),
        tuple(s.target_exchange for s in sells), np.array([s.value for s in sells], dtype=np.int64),
        ~has_bar, signals, warm)


@dataclass(frozen=True, eq=False)
class GrLrTally:
    window: tuple[int, int]
    rule_id: str
    entity: tuple[str, ...]
    bucket_start: np.ndarray
    gr: np.ndarray
    lr: np.ndarray
    neutral: np.ndarray

    @property
    def totals(self) -> tuple[int, int, int]:
        return int(self.gr.sum()), int(self.lr.sum()), int(self.neutral.sum())

    def rows(self):
        for i, e in enumerate(self.entity):
            yield e, int(self.bucket_start[i]), int(self.gr[i]), int(self.lr[i]), int(self.neutral[i])

    def __len__(self) -> int:
        return len(self.entity)


@dataclass(frozen=True)
class TTestResult:
    window: tuple[int, int]
    rule_id: str
    t_stat: float | None
    p_value: float | None
    degrees_of_freedom: float | None
    n_gr_samples: int
    n_lr_samples: int

    @property
    def defined(self) -> bool:
        return self.t_stat is not None


def _bucket_keys(ts: np.ndarray, sub_bucket: str, window_start: int) -> np.ndarray:
    if sub_bucket not in SUB_BUCKETS:
        raise ValueError(f"unknown sub_bucket {sub_bucket!r}; use one of {sorted(SUB_BUCKETS)}")
    size = SUB_BUCKETS[sub_bucket]
    if size is None:
        return np.full(len(ts), window_start, dtype=np.int64)
    return ts - ts % size


def tally(classified: ClassifiedSells, sub_bucket: str = "day",
          window: tuple[int, int] | None = None,
          rule_ids: Iterable[str] | None = None) -> dict[str, GrLrTally]:
    """Count GR/LR/Neutral per (exchange entity, sub-bucket) inside ``window``.

    ``window`` is a half-open ``(start, end)`` in unix seconds; None covers all
    sells. Rows without sells do not appear.
    """
    ts = classified.timestamp
    if window is None:
        window = (int(ts.min()), int(ts.max()) + 1) if len(ts) else (0, 0)
    mask = (ts >= window[0]) & (ts < window[1])
    sel = np.flatnonzero(mask)
    targets = np.array([classified.target_exchange[i] for i in sel], dtype=object)
    buckets = _bucket_keys(ts[sel], sub_bucket, window[0])
    if len(sel):
        ent_names, ent_code = np.unique(targets.astype(str), return_inverse=True)
        b_vals, b_code = np.unique(buckets, return_inverse=True)
        combined = ent_code.astype(np.int64) * len(b_vals) + b_code
        keys, row_of = np.unique(combined, return_inverse=True)
        row_entity = tuple(str(ent_names[k // len(b_vals)]) for k in keys)
        row_bucket = b_vals[keys % len(b_vals)]
    else:
        row_of = np.empty(0, dtype=np.int64)
        row_entity, row_bucket, keys = (), np.empty(0, dtype=np.int64), []
    n_rows = len(keys)
    out = {}
    for rule in (rule_ids or classified.rule_ids):
        sig = classified.signals[rule][sel]
        counts = [np.bincount(row_of, weights=(sig == s), minlength=n_rows).astype(np.int64)
                  for s in (Signal.GR, Signal.LR, Signal.NEUTRAL)]
        out[rule] = GrLrTally(window, rule, row_entity, row_bucket, *counts)
    return out


def t_test(tally: GrLrTally, welch: bool = False) -> TTestResult:
    n = len(tally)
    t, df = two_sample_t(tally.gr.tolist(), tally.lr.tolist(), welch=welch)
    if t is None:
        return TTestResult(tally.window, tally.rule_id, None, None, None, n, n)
    return TTestResult(tally.window, tally.rule_id, t, p_value(t, df), df, n, n)


def windows(classified: ClassifiedSells, windowing: str) -> list[tuple[int, int]]:
    """Calendar (UTC) windows covering the sells, oldest first."""
    ts = classified.timestamp
    if not len(ts):
        return []
    lo, hi = int(ts.min()), int(ts.max())
    if windowing in ("full-range", "full"):
        return [(lo, hi + 1)]
    if windowing == "yearly":
        start, step = timeutil.year_start(lo), timeutil.next_year
    elif windowing == "monthly":
        start, step = timeutil.month_start(lo), timeutil.next_month
    else:
        raise ValueError(f"unknown windowing {windowing!r}; use one of {WINDOWINGS}")
    out = []
    while start <= hi:
        end = step(start)
        out.append((start, end))
        start = end
    return out


@dataclass(frozen=True)
class ReportRow:
    tally: GrLrTally
    result: TTestResult

    @property
    def window(self) -> tuple[int, int]:
        return self.tally.window

    @property
    def rule_id(self) -> str:
        return self.tally.rule_id


def windowed_report(classified: ClassifiedSells, windowing: str = "full-range",
                    sub_bucket: str = "day", welch: bool = False,
                    rule_ids: Sequence[str] | None = None) -> list[ReportRow]:
    rows = []
    for win in windows(classified, windowing):
        for rule, tal in tally(classified, sub_bucket, win, rule_ids).items():
            rows.append(ReportRow(tal, t_test(tal, welch)))
    return rows


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def write_report(rows: Iterable[ReportRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for row in rows:
        gr, lr, neutral = row.tally.totals
        res = row.result
        w.writerow([format_ts(row.window[0]), format_ts(row.window[1]), row.rule_id, gr, lr,
                    neutral, _num(res.t_stat), _num(res.p_value), _num(res.degrees_of_freedom),
                    res.n_gr_samples, res.n_lr_samples])


def write_monthly_plot(rows: Iterable[ReportRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(PLOT_HEADER)
    for row in rows:
        w.writerow([timeutil.month_label(row.window[0]), row.rule_id,
                    _num(row.result.t_stat), _num(row.result.p_value)])


CLASSIFIED_FIXED = ["tx_id", "timestamp", "source_entity", "target_exchange", "value_satoshi", "bucket"]


def write_classified(classified: ClassifiedSells, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    rules = list(classified.rule_ids)
    w.writerow(CLASSIFIED_FIXED + rules)
    cols = [classified.signals[r].tolist() for r in rules]
    for i, tx in enumerate(classified.tx_id):
        w.writerow([tx, format_ts(int(classified.timestamp[i])), classified.source_entity[i],
                    classified.target_exchange[i], int(classified.value[i]),
                    "gap" if classified.in_gap[i] else "ok"]
                   + [Signal(c[i]).label for c in cols])


def read_classified(lines: Iterable[str]) -> ClassifiedSells:
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None or header[:len(CLASSIFIED_FIXED)] != CLASSIFIED_FIXED:
        raise ValueError("classified file must start with " + ",".join(CLASSIFIED_FIXED))
    rules = header[len(CLASSIFIED_FIXED):]
    rows = [r for r in reader if r]
    k = len(CLASSIFIED_FIXED)
    signals = {rule: np.array([Signal.from_label(r[k + j]) for r in rows], dtype=np.int8)
               for j, rule in enumerate(rules)}
    return ClassifiedSells(
        tuple(r[0] for r in rows), np.array([parse_ts(r[1]) for r in rows], dtype=np.int64),
        tuple(r[2] for r in rows), tuple(r[3] for r in rows),
        np.array([int(r[4]) for r in rows], dtype=np.int64),
        np.array([r[5] == "gap" for r in rows], dtype=bool), signals)
