"""In-memory end-to-end run: chain + tags + bars -> classified sells -> reports."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .chain_model import CoinJoinVerdict, RawTransaction, detect_all
from .disposition_stats import ClassifiedSells, ReportRow, classify_sells, windowed_report
from .entity_resolution import (EntityGraph, TagRecord, attribute_categories, build_entity_graph,
                                cluster_addresses)
from .indicators import IndicatorConfig, IndicatorSettings, select_rules
from .market_data import GlobalBarSeries, OhlcBar, global_average
from .sell_extraction import SellEvent, extract_sells


@dataclass(frozen=True)
class AnalysisSettings:
    min_equal_outputs: int = 2
    weighting: str = "mean"
    indicators: IndicatorSettings = IndicatorSettings()
    rule_ids: tuple[str, ...] | None = None
    windowing: tuple[str, ...] = ("full-range", "yearly", "monthly")
    sub_bucket: str = "day"
    welch: bool = False

    def rules(self) -> list[IndicatorConfig]:
        return select_rules(self.rule_ids, self.indicators)


@dataclass
class ClusterResult:
    verdicts: dict[str, CoinJoinVerdict]
    partition: dict[str, str]
    categories: dict[str, frozenset[str]]
    graph: EntityGraph
    diagnostics: Counter = field(default_factory=Counter)


def resolve_entities(txs: Sequence[RawTransaction], tags: Sequence[TagRecord],
                     min_equal_outputs: int = 2) -> ClusterResult:
    verdicts = detect_all(txs, min_equal_outputs)
    partition = cluster_addresses(txs, verdicts)
    diag = Counter()
    categories = attribute_categories(partition, tags, diag)
    graph = build_entity_graph(txs, partition, categories, verdicts)
    diag["coinjoin"] = sum(v.is_coinjoin for v in verdicts.values())
    diag["coinbase"] = sum(tx.is_coinbase for tx in txs)
    return ClusterResult(verdicts, partition, categories, graph, diag)


@dataclass
class PipelineResult:
    clusters: ClusterResult
    sells: list[SellEvent]
    series: GlobalBarSeries
    classified: ClassifiedSells
    reports: dict[str, list[ReportRow]]


def run_pipeline(txs: Sequence[RawTransaction], tags: Sequence[TagRecord],
                 bars: Sequence[OhlcBar], settings: AnalysisSettings | None = None) -> PipelineResult:
    s = settings or AnalysisSettings()
    clusters = resolve_entities(txs, tags, s.min_equal_outputs)
    sells = extract_sells(clusters.graph, {tx.tx_id: tx for tx in txs})
    series = global_average(bars, s.weighting)
    classified = classify_sells(sells, series, s.rules())
    reports = {w: windowed_report(classified, w, s.sub_bucket, s.welch) for w in s.windowing}
    return PipelineResult(clusters, sells, series, classified, reports)
