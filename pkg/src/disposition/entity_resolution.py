"""Multiple-input address clustering and the entity property graph.

Addresses co-spent as inputs of one (non-CoinJoin, non-coinbase) transaction
are merged into one entity. Entities are named after their lexicographically
smallest address so reruns produce identical ids regardless of input order.
"""

from __future__ import annotations

import csv
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .chain_model import CoinJoinVerdict, ParseReport, RawTransaction

CATEGORIES = (
    "Exchange",
    "Wallet Service",
    "Miner",
    "Marketplace",
    "Gambling",
    "Mixing Service",
    "Other",
)
EXCHANGE = "Exchange"
TAG_HEADER = ["address", "label", "category"]


class MissingVerdictError(KeyError):
    pass


class GraphConsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class TagRecord:
    address: str
    label: str
    category: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")


class UnionFind:
    """Disjoint sets over hashable items; path halving plus union by size."""

    def __init__(self):
        self.parent: dict = {}
        self.size: dict = {}

    def add(self, x) -> None:
        if x not in self.parent:
            self.parent[x] = x
            self.size[x] = 1

    def find(self, x):
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra

    def groups(self) -> dict:
        out = defaultdict(list)
        for x in self.parent:
            out[self.find(x)].append(x)
        return out


def _clusterable(tx: RawTransaction, verdicts: Mapping[str, CoinJoinVerdict]) -> bool:
    try:
        verdict = verdicts[tx.tx_id]
    except KeyError:
        raise MissingVerdictError(f"no CoinJoin verdict for tx {tx.tx_id!r}") from None
    return not tx.is_coinbase and not verdict.is_coinjoin


def cluster_addresses(txs: Iterable[RawTransaction],
                      verdicts: Mapping[str, CoinJoinVerdict]) -> dict[str, str]:
    """Map every observed address to its entity id.

    Only regular transactions merge their inputs; addresses seen solely in
    coinbase or CoinJoin transactions (or only as outputs) end up as
    singletons.
    """
    uf = UnionFind()
    for tx in txs:
        merge = _clusterable(tx, verdicts)
        for io in tx.outputs:
            uf.add(io.address)
        first = None
        for io in tx.inputs:
            uf.add(io.address)
            if not merge:
                continue
            if first is None:
                first = io.address
            else:
                uf.union(first, io.address)
    partition = {}
    for members in uf.groups().values():
        entity = min(members)
        for addr in members:
            partition[addr] = entity
    return dict(sorted(partition.items()))


def entity_members(partition: Mapping[str, str]) -> dict[str, frozenset[str]]:
    members = defaultdict(set)
    for addr, entity in partition.items():
        members[entity].add(addr)
    return {e: frozenset(a) for e, a in sorted(members.items())}


def attribute_categories(partition: Mapping[str, str], tags: Iterable[TagRecord],
                         diagnostics: Counter | None = None) -> dict[str, frozenset[str]]:
    """Union of tag categories per entity; every entity gets an entry."""
    cats: dict[str, set[str]] = {e: set() for e in partition.values()}
    unmatched = 0
    for tag in tags:
        entity = partition.get(tag.address)
        if entity is None:
            unmatched += 1
            continue
        cats[entity].add(tag.category)
    if diagnostics is not None:
        diagnostics["unmatched_tags"] += unmatched
    return {e: frozenset(c) for e, c in sorted(cats.items())}


@dataclass(frozen=True)
class EntityGraph:
    entities: frozenset[str]
    entity_addresses: Mapping[str, frozenset[str]]
    entity_categories: Mapping[str, frozenset[str]]
    edges: Mapping[tuple[str, str], frozenset[str]]
    address_entity: Mapping[str, str]

    def is_exchange(self, entity: str) -> bool:
        return EXCHANGE in self.entity_categories.get(entity, ())

    def edge_count(self) -> int:
        return len(self.edges)

    def transactions_between(self, source: str, target: str) -> frozenset[str]:
        return self.edges.get((source, target), frozenset())


def build_entity_graph(txs: Iterable[RawTransaction], partition: Mapping[str, str],
                       categories: Mapping[str, frozenset[str]],
                       verdicts: Mapping[str, CoinJoinVerdict]) -> EntityGraph:
    edges: dict[tuple[str, str], set[str]] = defaultdict(set)
    for tx in txs:
        if not _clusterable(tx, verdicts):
            continue
        try:
            sources = {partition[a] for a in tx.input_addresses()}
            targets = {partition[io.address] for io in tx.outputs}
        except KeyError as exc:
            raise GraphConsistencyError(
                f"tx {tx.tx_id!r}: address {exc.args[0]!r} missing from partition") from None
        if len(sources) != 1:
            raise GraphConsistencyError(
                f"tx {tx.tx_id!r}: inputs span entities {sorted(sources)}")
        (src,) = sources
        for tgt in targets:
            edges[(src, tgt)].add(tx.tx_id)
    members = entity_members(partition)
    cats = {e: frozenset(categories.get(e, ())) for e in members}
    return EntityGraph(
        entities=frozenset(members),
        entity_addresses=members,
        entity_categories=cats,
        edges={k: frozenset(v) for k, v in sorted(edges.items())},
        address_entity=dict(partition),
    )


def load_tags(lines: Iterable[str], source: str = "<tags>"):
    """Read ``address,label,category`` CSV. Returns ``(tags, report)``."""
    report = ParseReport(source)
    tags: list[TagRecord] = []
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return tags, report
    if header != TAG_HEADER:
        report.add_error(1, f"expected header {','.join(TAG_HEADER)}")
        return tags, report
    for row in reader:
        lineno = reader.line_num
        if not row:
            continue
        if len(row) != 3:
            report.add_error(lineno, f"expected 3 fields, got {len(row)}")
            continue
        address, label, category = row
        if not address:
            report.add_error(lineno, "empty address")
            continue
        try:
            tags.append(TagRecord(address, label, category))
        except ValueError as exc:
            report.add_error(lineno, str(exc))
    report.records = len(tags)
    return tags, report


def write_tags(tags: Sequence[TagRecord], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(TAG_HEADER)
    for t in tags:
        w.writerow([t.address, t.label, t.category])


def write_partition(partition: Mapping[str, str], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["address", "entity_id"])
    for addr in sorted(partition):
        w.writerow([addr, partition[addr]])


def read_partition(lines: Iterable[str]) -> dict[str, str]:
    reader = csv.reader(lines)
    if next(reader, None) != ["address", "entity_id"]:
        raise ValueError("partition file must start with header address,entity_id")
    return {row[0]: row[1] for row in reader if row}


def write_categories(categories: Mapping[str, frozenset[str]], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["entity_id", "categories"])
    for entity in sorted(categories):
        w.writerow([entity, ";".join(sorted(categories[entity]))])


def read_categories(lines: Iterable[str]) -> dict[str, frozenset[str]]:
    reader = csv.reader(lines)
    if next(reader, None) != ["entity_id", "categories"]:
        raise ValueError("categories file must start with header entity_id,categories")
    return {row[0]: frozenset(c for c in row[1].split(";") if c) for row in reader if row}
