"""Sell transactions: transfers from non-exchange entities into exchanges."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Mapping

from .chain_model import RawTransaction
from .entity_resolution import EntityGraph
from .timeutil import format_ts, parse_ts

SELL_HEADER = ["tx_id", "timestamp", "source_entity", "target_exchange", "value_satoshi"]


@dataclass(frozen=True)
class SellEvent:
    tx_id: str
    timestamp: int
    source_entity: str
    target_exchange: str
    value: int


def extract_sells(graph: EntityGraph, txs: Mapping[str, RawTransaction]) -> list[SellEvent]:
    """One event per (tx, receiving exchange entity) for non-exchange senders.

    The event value is the amount paid to the exchange entity's addresses;
    change going back to the sender or to third parties is not counted.
    Events are sorted by timestamp, tx id, then target exchange.
    """
    events = []
    for (src, tgt), tx_ids in graph.edges.items():
        if graph.is_exchange(src) or not graph.is_exchange(tgt):
            continue
        addrs = graph.entity_addresses[tgt]
        for tx_id in tx_ids:
            tx = txs[tx_id]
            value = sum(v for a, v in tx.outputs if a in addrs)
            if value > 0:
                events.append(SellEvent(tx_id, tx.timestamp, src, tgt, value))
    events.sort(key=lambda e: (e.timestamp, e.tx_id, e.target_exchange))
    return events


def write_sells(events: Iterable[SellEvent], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SELL_HEADER)
    for e in events:
        w.writerow([e.tx_id, format_ts(e.timestamp), e.source_entity, e.target_exchange, e.value])


def read_sells(lines: Iterable[str]) -> list[SellEvent]:
    reader = csv.reader(lines)
    if next(reader, None) != SELL_HEADER:
        raise ValueError(f"sells file must start with header {','.join(SELL_HEADER)}")
    return [SellEvent(r[0], parse_ts(r[1]), r[2], r[3], int(r[4])) for r in reader if r]
