"""Raw UTXO transaction model, JSONL parsing and CoinJoin flagging."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

TX_FIELDS = ("tx_id", "timestamp", "inputs", "outputs")
IO_FIELDS = ("address", "value")


class TxIO(NamedTuple):
    address: str
    value: int  # satoshis


@dataclass(frozen=True)
class RawTransaction:
    tx_id: str
    timestamp: int
    inputs: tuple[TxIO, ...]
    outputs: tuple[TxIO, ...]

    def __post_init__(self):
        for io in self.inputs + self.outputs:
            if io.value < 0:
                raise ValueError(f"{self.tx_id}: negative value {io.value} at {io.address}")

    @property
    def is_coinbase(self) -> bool:
        return not self.inputs

    def input_addresses(self) -> set[str]:
        return {io.address for io in self.inputs}

    def output_total(self) -> int:
        return sum(io.value for io in self.outputs)


@dataclass(frozen=True)
class CoinJoinVerdict:
    tx_id: str
    is_coinjoin: bool
    matched_output_value: int | None
    equal_output_count: int


@dataclass
class ParseReport:
    """Line-numbered problems found while reading an input file."""

    source: str = "<stream>"
    records: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    @property
    def error_count(self) -> int:
        return len(self.errors)

    def add_error(self, lineno: int, message: str) -> None:
        self.errors.append((lineno, message))

    def summary(self) -> str:
        lines = [f"{self.source}: {self.records} records, {self.error_count} errors"]
        lines += [f"  line {n}: {msg}" for n, msg in self.errors]
        return "\n".join(lines)


class RecordError(ValueError):
    pass


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_ios(raw, what: str) -> tuple[TxIO, ...]:
    if not isinstance(raw, list):
        raise RecordError(f"{what} must be an array")
    out = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or set(item) != set(IO_FIELDS):
            raise RecordError(f"{what}[{i}] must have exactly fields {IO_FIELDS}")
        addr, value = item["address"], item["value"]
        if not isinstance(addr, str) or not addr:
            raise RecordError(f"{what}[{i}].address must be a non-empty string")
        if not _is_int(value):
            raise RecordError(f"{what}[{i}].value must be an integer")
        if value < 0:
            raise RecordError(f"{what}[{i}].value is negative ({value})")
        out.append(TxIO(addr, value))
    return tuple(out)


def parse_record(line: str) -> RawTransaction:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RecordError(f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise RecordError("record must be a JSON object")
    if set(obj) != set(TX_FIELDS):
        missing = sorted(set(TX_FIELDS) - set(obj))
        extra = sorted(set(obj) - set(TX_FIELDS))
        raise RecordError(f"bad fields (missing={missing}, unexpected={extra})")
    tx_id, ts = obj["tx_id"], obj["timestamp"]
    if not isinstance(tx_id, str) or not tx_id:
        raise RecordError("tx_id must be a non-empty string")
    if not _is_int(ts) or ts < 0:
        raise RecordError("timestamp must be a non-negative integer")
    return RawTransaction(tx_id, ts, _parse_ios(obj["inputs"], "inputs"),
                          _parse_ios(obj["outputs"], "outputs"))


def parse_transactions(lines: Iterable[str], source: str = "<stream>"):
    """Parse line-delimited JSON transactions.

    Returns ``(transactions, report)``. Bad lines and duplicate tx ids are
    recorded in the report with their 1-based line number and skipped; blank
    lines are ignored.
    """
    report = ParseReport(source)
    txs: list[RawTransaction] = []
    seen: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            tx = parse_record(line)
        except RecordError as exc:
            report.add_error(lineno, str(exc))
            continue
        if tx.tx_id in seen:
            report.add_error(lineno, f"duplicate tx_id {tx.tx_id!r}")
            continue
        seen.add(tx.tx_id)
        txs.append(tx)
    report.records = len(txs)
    return txs, report


def serialize_transaction(tx: RawTransaction) -> str:
    return json.dumps({
        "tx_id": tx.tx_id,
        "timestamp": tx.timestamp,
        "inputs": [{"address": a, "value": v} for a, v in tx.inputs],
        "outputs": [{"address": a, "value": v} for a, v in tx.outputs],
    }, separators=(",", ":"))


def detect_coinjoin(tx: RawTransaction, min_equal_outputs: int = 2) -> CoinJoinVerdict:
    """Flag transactions that look like several spenders pooling payments.

    A tx is a CoinJoin when its most common output value appears k times with
    k >= min_equal_outputs, it has at least k distinct input addresses, and it
    has no fewer outputs than inputs.
    """
    if min_equal_outputs < 2:
        raise ValueError("min_equal_outputs must be >= 2")
    counts = Counter(io.value for io in tx.outputs)
    if not counts:
        return CoinJoinVerdict(tx.tx_id, False, None, 0)
    k = max(counts.values())
    # ties between values resolved towards the larger denomination
    value = max(v for v, c in counts.items() if c == k)
    is_cj = (
        k >= min_equal_outputs
        and len(tx.input_addresses()) >= k
        and len(tx.outputs) >= len(tx.inputs)
    )
    return CoinJoinVerdict(tx.tx_id, is_cj, value if k >= 2 else None, k)


def detect_all(txs: Iterable[RawTransaction], min_equal_outputs: int = 2) -> dict[str, CoinJoinVerdict]:
    return {tx.tx_id: detect_coinjoin(tx, min_equal_outputs) for tx in txs}
