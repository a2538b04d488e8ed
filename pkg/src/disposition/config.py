"""Flat ``key = value`` run configuration with command-line overrides."""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

from .disposition_stats import SUB_BUCKETS, WINDOWINGS
from .indicators import IndicatorSettings, select_rules
from .pipeline import AnalysisSettings
from .synth import SynthConfig


class ConfigFileError(ValueError):
    pass


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(",") if p.strip())


@dataclass
class PipelineConfig:
    transactions: str | None = None
    tags: str | None = None
    ohlc: str | None = None
    out: str = "."
    report: str | None = None
    strict: bool = False
    # analysis
    rules: tuple[str, ...] | None = None
    windowing: tuple[str, ...] = ("full-range", "yearly", "monthly")
    sub_bucket: str = "day"
    ttest: str = "student"
    weighting: str = "mean"
    min_equal_outputs: int = 2
    obv_literal: bool = False
    trb_literal: bool = False
    bb_period: int = 20
    bb_scale: float = 2.0
    macd_short: int = 12
    macd_long: int = 26
    macd_signal: int = 9
    roc_period: int = 10
    rsi_period: int = 14
    # synthetic data
    seed: int = 0
    n_investors: int = 50
    n_exchanges: int = 3
    n_hours: int = 8760
    price_drift: float = 0.0
    price_vol: float = 0.01
    sell_prob_up: float = 0.5
    sell_prob_down: float = 0.5
    tag_coverage: float = 1.0
    daily_opportunities: int = 1
    start: int = SynthConfig.start
    start_price: float = 1000.0
    exchange_noise: float = 0.002
    n_coinjoins: int = 10
    background_per_day: int = 5

    def set(self, key: str, value: str) -> None:
        key = key.strip().replace("-", "_")
        types = {f.name: f.type for f in fields(self)}
        if key not in types:
            raise ConfigFileError(f"unknown config key {key!r}")
        kind = types[key]
        value = value.strip()
        try:
            if "tuple" in kind:
                parsed = _list(value) or None
            elif "bool" in kind:
                parsed = _bool(value)
            elif kind.startswith("int"):
                parsed = int(value)
            elif kind.startswith("float"):
                parsed = float(value)
            else:
                parsed = value or None if "None" in kind else value
        except ValueError as exc:
            raise ConfigFileError(f"bad value for {key}: {exc}") from None
        setattr(self, key, parsed)

    def validate(self) -> None:
        if self.ttest not in ("student", "welch"):
            raise ConfigFileError("ttest must be 'student' or 'welch'")
        if self.sub_bucket not in SUB_BUCKETS:
            raise ConfigFileError(f"sub_bucket must be one of {', '.join(SUB_BUCKETS)}")
        if self.weighting not in ("mean", "volume"):
            raise ConfigFileError("weighting must be 'mean' or 'volume'")
        if self.min_equal_outputs < 2:
            raise ConfigFileError("min_equal_outputs must be >= 2")
        bad = [w for w in self.windowing if w not in WINDOWINGS]
        if bad or not self.windowing:
            raise ConfigFileError(f"windowing entries must be among {', '.join(WINDOWINGS)}")
        try:
            self.analysis().rules()
        except ValueError as exc:
            raise ConfigFileError(str(exc)) from None

    def indicator_settings(self) -> IndicatorSettings:
        return IndicatorSettings(self.macd_short, self.macd_long, self.macd_signal, self.roc_period,
                                 self.rsi_period, self.bb_period, self.bb_scale,
                                 self.obv_literal, self.trb_literal)

    def analysis(self) -> AnalysisSettings:
        return AnalysisSettings(self.min_equal_outputs, self.weighting, self.indicator_settings(),
                                self.rules, self.windowing, self.sub_bucket, self.ttest == "welch")

    def rule_configs(self):
        return select_rules(self.rules, self.indicator_settings())

    def synth(self) -> SynthConfig:
        names = [f.name for f in fields(SynthConfig)]
        return SynthConfig(**{n: getattr(self, n) for n in names})

    def input_path(self, key: str, default_name: str) -> Path:
        """Configured input path, else ``default_name`` inside the output directory."""
        value = getattr(self, key)
        return Path(value) if value else Path(self.out) / default_name


def parse_lines(lines: Iterable[str], source: str = "<config>") -> list[tuple[str, str]]:
    pairs = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigFileError(f"{source}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    return pairs


def load_config(path: str | None = None, overrides: Iterable[str] = ()) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigFileError(f"config file not found: {p}")
        with open(p, encoding="utf-8") as fh:
            for key, value in parse_lines(fh, str(p)):
                cfg.set(key, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigFileError(f"override {item!r} must look like key=value")
        key, value = item.split("=", 1)
        cfg.set(key, value)
    return cfg
