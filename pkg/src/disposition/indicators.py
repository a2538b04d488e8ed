"""Technical indicator transforms and the GR/LR trading-rule catalogue.

All transforms take 1-D float sequences and return float64 arrays of the
same length. NaN marks warm-up positions (window not yet full) and undefined
values such as a rate of change against a zero price. Rules never classify a
NaN position: it comes out Neutral.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .timeutil import format_ts


class ConfigError(ValueError):
    pass


class Signal(IntEnum):
    LR = -1
    NEUTRAL = 0
    GR = 1

    @property
    def label(self) -> str:
        return "N" if self is Signal.NEUTRAL else self.name

    @classmethod
    def from_label(cls, text: str) -> "Signal":
        return {"GR": cls.GR, "LR": cls.LR, "N": cls.NEUTRAL}[text]


class MacdSeries(NamedTuple):
    macd: np.ndarray
    signal: np.ndarray
    histogram: np.ndarray


class Bands(NamedTuple):
    lower: np.ndarray
    middle: np.ndarray
    upper: np.ndarray


def _as_array(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _check_period(n: int, name: str = "period") -> None:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigError(f"{name} must be an integer >= 1, got {n!r}")


def sma(x, n: int) -> np.ndarray:
    _check_period(n)
    x = _as_array(x)
    out = np.full(len(x), np.nan)
    if len(x) >= n:
        out[n - 1:] = sliding_window_view(x, n).sum(axis=1) / n
    return out


def ema(x, n: int) -> np.ndarray:
    """Exponential moving average seeded with the first input."""
    _check_period(n)
    x = _as_array(x)
    out = np.empty(len(x))
    if not len(x):
        return out
    a = 2.0 / (n + 1)
    vals = x.tolist()
    prev = vals[0]
    out[0] = prev
    for t in range(1, len(vals)):
        prev = (1 - a) * prev + a * vals[t]
        out[t] = prev
    return out


def macd(x, n: int = 12, m: int = 26, p: int = 9) -> MacdSeries:
    _check_period(n, "short period")
    _check_period(m, "long period")
    _check_period(p, "signal period")
    if n >= m:
        raise ConfigError(f"MACD short period {n} must be below long period {m}")
    line = ema(x, n) - ema(x, m)
    signal = ema(line, p)
    return MacdSeries(line, signal, line - signal)


def roc(x, n: int = 10) -> np.ndarray:
    _check_period(n)
    x = _as_array(x)
    out = np.full(len(x), np.nan)
    if len(x) > n:
        past = x[:-n]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[n:] = np.where(past != 0, (x[n:] - past) / past, np.nan)
    return out


def obv(close, volume, literal: bool = False) -> np.ndarray:
    """On-balance volume starting from 0.

    An unchanged close carries the running total forward. ``literal=True``
    instead resets the total to 0 on an unchanged close.
    """
    close, volume = _as_array(close), _as_array(volume)
    if close.shape != volume.shape:
        raise ConfigError(f"close and volume lengths differ ({len(close)} vs {len(volume)})")
    if not len(close):
        return np.empty(0)
    step = np.sign(np.diff(close))
    if not literal:
        return np.concatenate(([0.0], np.cumsum(step * volume[1:])))
    out = np.empty(len(close))
    out[0] = total = 0.0
    for t, (s, v) in enumerate(zip(step.tolist(), volume[1:].tolist()), start=1):
        total = total + v if s > 0 else total - v if s < 0 else 0.0
        out[t] = total
    return out


def rsi(x, n: int = 14) -> np.ndarray:
    """Wilder-smoothed relative strength index.

    Smoothed gains/losses start at 0. No losses with some gains gives 100;
    neither gains nor losses gives 50.
    """
    _check_period(n)
    x = _as_array(x)
    out = np.empty(len(x))
    if not len(x):
        return out
    keep, new = (n - 1) / n, 1 / n
    sup = sdown = 0.0
    vals = x.tolist()
    out[0] = 50.0
    for t in range(1, len(vals)):
        d = vals[t] - vals[t - 1]
        sup = keep * sup + new * (d if d > 0 else 0.0)
        sdown = keep * sdown + new * (-d if d < 0 else 0.0)
        if sdown == 0:
            out[t] = 100.0 if sup > 0 else 50.0
        else:
            out[t] = 100 - 100 / (1 + sup / sdown)
    return out


def trb(high, low, n: int, literal: bool = False) -> Bands:
    """Trading-range breakout (Donchian) channel.

    Upper is the highest high over the last ``n`` bars, lower the lowest low,
    middle their midpoint. ``literal=True`` uses half the channel width as
    the middle instead.
    """
    _check_period(n)
    high, low = _as_array(high), _as_array(low)
    if high.shape != low.shape:
        raise ConfigError("high and low lengths differ")
    lower = np.full(len(high), np.nan)
    upper = np.full(len(high), np.nan)
    if len(high) >= n:
        upper[n - 1:] = sliding_window_view(high, n).max(axis=1)
        lower[n - 1:] = sliding_window_view(low, n).min(axis=1)
    middle = (upper - lower) / 2 if literal else (upper + lower) / 2
    return Bands(lower, middle, upper)


def bbands(x, n: int = 20, a: float = 2.0) -> Bands:
    _check_period(n)
    if not a > 0:
        raise ConfigError(f"band scale must be > 0, got {a!r}")
    x = _as_array(x)
    middle = sma(x, n)
    offset = np.full(len(x), np.nan)
    if len(x) >= n:
        win = sliding_window_view(x, n)
        dev = win - middle[n - 1:, None]
        offset[n - 1:] = a * np.sqrt((dev * dev).sum(axis=1) / n)
    return Bands(middle - offset, middle, middle + offset)


# --- rule catalogue -------------------------------------------------------

KINDS = ("Odean", "SMA", "TRB", "MACD", "ROC", "OBV", "RSI", "BB")

VALUE_KEYS = {
    "Odean": ("average", "open"),
    "SMA": ("short", "long"),
    "OBV": ("short", "long"),
    "TRB": ("lower", "middle", "upper"),
    "MACD": ("macd", "signal", "histogram"),
    "ROC": ("roc",),
    "RSI": ("rsi",),
    "BB": ("lower", "middle", "upper"),
}


@dataclass(frozen=True)
class IndicatorConfig:
    rule_id: str
    kind: str
    short_period: int = 1
    long_period: int | None = None
    signal_period: int | None = None
    band_scale: float | None = None
    literal: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown indicator kind {self.kind!r}")
        for name in ("short_period", "long_period", "signal_period"):
            v = getattr(self, name)
            if v is not None:
                _check_period(v, name)
        if self.kind in ("SMA", "OBV", "MACD"):
            if self.long_period is None or self.short_period >= self.long_period:
                raise ConfigError(f"{self.rule_id}: short period must be below long period")
        if self.kind == "MACD" and self.signal_period is None:
            raise ConfigError(f"{self.rule_id}: MACD needs a signal period")
        if self.kind == "BB" and not (self.band_scale is not None and self.band_scale > 0):
            raise ConfigError(f"{self.rule_id}: BB needs band scale > 0")


@dataclass(frozen=True)
class IndicatorSettings:
    macd_short: int = 12
    macd_long: int = 26
    macd_signal: int = 9
    roc_period: int = 10
    rsi_period: int = 14
    bb_period: int = 20
    bb_scale: float = 2.0
    obv_literal: bool = False
    trb_literal: bool = False


RULE_IDS = (
    "Odean", "SMA1-50", "SMA1-150", "SMA5-150", "SMA1-200", "SMA2-200",
    "TRB50", "TRB150", "TRB200", "MACD", "ROC",
    "OBV1-50", "OBV1-150", "OBV5-150", "OBV1-200", "OBV2-200", "RSI", "BB",
)


def rule_catalogue(settings: IndicatorSettings | None = None) -> list[IndicatorConfig]:
    s = settings or IndicatorSettings()
    rules = [IndicatorConfig("Odean", "Odean")]
    for short, long in ((1, 50), (1, 150), (5, 150), (1, 200), (2, 200)):
        rules.append(IndicatorConfig(f"SMA{short}-{long}", "SMA", short, long))
    for n in (50, 150, 200):
        rules.append(IndicatorConfig(f"TRB{n}", "TRB", n, literal=s.trb_literal))
    rules.append(IndicatorConfig("MACD", "MACD", s.macd_short, s.macd_long, s.macd_signal))
    rules.append(IndicatorConfig("ROC", "ROC", s.roc_period))
    for short, long in ((1, 50), (1, 150), (5, 150), (1, 200), (2, 200)):
        rules.append(IndicatorConfig(f"OBV{short}-{long}", "OBV", short, long,
                                     literal=s.obv_literal))
    rules.append(IndicatorConfig("RSI", "RSI", s.rsi_period))
    rules.append(IndicatorConfig("BB", "BB", s.bb_period, band_scale=s.bb_scale))
    return rules


def get_rule(rule_id: str, settings: IndicatorSettings | None = None) -> IndicatorConfig:
    for cfg in rule_catalogue(settings):
        if cfg.rule_id == rule_id:
            return cfg
    raise ConfigError(f"unknown rule_id {rule_id!r}")


def select_rules(rule_ids: Sequence[str] | None,
                 settings: IndicatorSettings | None = None) -> list[IndicatorConfig]:
    catalogue = rule_catalogue(settings)
    if rule_ids is None:
        return catalogue
    known = {c.rule_id: c for c in catalogue}
    unknown = [r for r in rule_ids if r not in known]
    if unknown:
        raise ConfigError(f"unknown rule_id(s): {', '.join(unknown)}")
    return [c for c in catalogue if c.rule_id in set(rule_ids)]


def rule_values(cfg: IndicatorConfig, series) -> dict[str, np.ndarray]:
    """Indicator arrays a rule compares, aligned to the series' bars."""
    close = _as_array(series.close)
    if cfg.kind == "Odean":
        op = _as_array(series.open)
        return {"average": (op + close) / 2, "open": op}
    if cfg.kind in ("SMA", "OBV"):
        base = close if cfg.kind == "SMA" else obv(close, series.volume, cfg.literal)
        # a short period of 1 means the raw close price, for OBV as well
        short = close if cfg.short_period == 1 else sma(base, cfg.short_period)
        return {"short": short, "long": sma(base, cfg.long_period)}
    if cfg.kind == "TRB":
        return trb(series.high, series.low, cfg.short_period, cfg.literal)._asdict()
    if cfg.kind == "MACD":
        return macd(close, cfg.short_period, cfg.long_period, cfg.signal_period)._asdict()
    if cfg.kind == "ROC":
        return {"roc": roc(close, cfg.short_period)}
    if cfg.kind == "RSI":
        return {"rsi": rsi(close, cfg.short_period)}
    return bbands(close, cfg.short_period, cfg.band_scale)._asdict()


def _cross(ref: np.ndarray, against) -> np.ndarray:
    return np.where(ref > against, 1, np.where(ref < against, -1, 0)).astype(np.int8)


def decide(cfg: IndicatorConfig, open_, close, values: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorised GR(+1)/LR(-1)/Neutral(0) decision for one rule."""
    open_, close = _as_array(open_), _as_array(close)
    kind = cfg.kind
    if kind == "Odean":
        return _cross((open_ + close) / 2, open_)
    if kind in ("SMA", "OBV"):
        short = close if cfg.short_period == 1 else _as_array(values["short"])
        return _cross(short, _as_array(values["long"]))
    if kind == "TRB":
        return _cross(close, _as_array(values["middle"]))
    if kind == "MACD":
        return _cross(_as_array(values["macd"]), 0.0)
    if kind == "ROC":
        return _cross(_as_array(values["roc"]), 0.0)
    if kind == "RSI":
        r = _as_array(values["rsi"])
        return np.where(r >= 50, 1, np.where(r < 50, -1, 0)).astype(np.int8)
    lower, upper = _as_array(values["lower"]), _as_array(values["upper"])
    return np.where(close < lower, 1, np.where(close > upper, -1, 0)).astype(np.int8)


def _used_keys(cfg: IndicatorConfig) -> tuple[str, ...]:
    keys = {
        "Odean": (), "SMA": ("long",), "OBV": ("long",), "TRB": ("middle",),
        "MACD": ("macd",), "ROC": ("roc",), "RSI": ("rsi",), "BB": ("lower", "upper"),
    }[cfg.kind]
    if cfg.kind in ("SMA", "OBV") and cfg.short_period > 1:
        keys += ("short",)
    return keys


def defined_mask(cfg: IndicatorConfig, values: Mapping[str, np.ndarray], length: int) -> np.ndarray:
    """True where every value the rule compares is defined (past warm-up)."""
    mask = np.ones(length, dtype=bool)
    for key in _used_keys(cfg):
        mask &= ~np.isnan(_as_array(values[key]))
    return mask


def rule_signals(cfg: IndicatorConfig, series) -> np.ndarray:
    return decide(cfg, series.open, series.close, rule_values(cfg, series))


def evaluate_rule(rule, bar, values: Mapping[str, float] | None = None,
                  settings: IndicatorSettings | None = None) -> Signal:
    """Classify one bar under one rule given that hour's indicator values.

    ``rule`` is a rule id or an IndicatorConfig; ``bar`` needs ``open`` and
    ``close``. Missing or NaN values yield Neutral.
    """
    cfg = rule if isinstance(rule, IndicatorConfig) else get_rule(rule, settings)
    values = values or {}
    arrays = {}
    for key in _used_keys(cfg):
        v = values.get(key)
        if v is None or math.isnan(v):
            return Signal.NEUTRAL
        arrays[key] = np.array([v], dtype=np.float64)
    out = decide(cfg, [bar.open], [bar.close], arrays)
    return Signal(int(out[0]))


def write_indicator_dump(series, rules: Sequence[IndicatorConfig], fh) -> None:
    """CSV ``hour_start,rule_id,value_1,value_2,value_3,signal`` in rule order."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["hour_start", "rule_id", "value_1", "value_2", "value_3", "signal"])
    hours = [format_ts(int(h)) for h in series.hour_start]
    for cfg in rules:
        vals = rule_values(cfg, series)
        cols = [vals[k].tolist() for k in VALUE_KEYS[cfg.kind]]
        cols += [[None] * len(hours)] * (3 - len(cols))
        sig = decide(cfg, series.open, series.close, vals).tolist()
        for i, hour in enumerate(hours):
            row = [hour, cfg.rule_id]
            for col in cols:
                v = col[i]
                row.append("" if v is None or math.isnan(v) else repr(v))
            row.append(Signal(sig[i]).label)
            w.writerow(row)
