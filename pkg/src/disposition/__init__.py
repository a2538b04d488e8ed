"""Disposition-effect measurement on UTXO chains.

Pipeline: parse transactions, drop CoinJoins, cluster addresses into
entities, find sells into exchanges, label each sell GR/LR/Neutral under 18
indicator rules on the hourly global price series, and t-test the per-window
GR and LR counts.
"""

from .chain_model import CoinJoinVerdict, RawTransaction, TxIO, detect_coinjoin, parse_transactions
from .disposition_stats import GrLrTally, TTestResult, classify_sells, t_test, tally, windowed_report
from .entity_resolution import EntityGraph, TagRecord, attribute_categories, build_entity_graph, cluster_addresses
from .indicators import IndicatorConfig, Signal, evaluate_rule, rule_catalogue
from .market_data import GlobalBarSeries, OhlcBar, bucket_of, global_average, load_ohlc
from .sell_extraction import SellEvent, extract_sells
from .tstats import p_value

__version__ = "0.1.0"

__all__ = [
    "CoinJoinVerdict", "RawTransaction", "TxIO", "detect_coinjoin", "parse_transactions",
    "GrLrTally", "TTestResult", "classify_sells", "t_test", "tally", "windowed_report",
    "EntityGraph", "TagRecord", "attribute_categories", "build_entity_graph", "cluster_addresses",
    "IndicatorConfig", "Signal", "evaluate_rule", "rule_catalogue",
    "GlobalBarSeries", "OhlcBar", "bucket_of", "global_average", "load_ohlc",
    "SellEvent", "extract_sells", "p_value",
]
