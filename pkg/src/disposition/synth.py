"""Synthetic chains and price series with a planted disposition bias.

Randomness comes from numpy's PCG64 bit generator seeded with
``SynthConfig.seed``; PCG64 streams are identical across platforms, so a
seed reproduces the same files everywhere.

Market model: one latent geometric random walk (hourly log-returns
``N(price_drift, price_vol)``) is quoted on every exchange with a small
multiplicative per-exchange noise. Prices are rounded to cents.

Investor model: every investor owns 3-10 addresses (co-spent once at setup)
and banks with one home exchange (round-robin). On each UTC day an investor
gets ``daily_opportunities`` chances to sell into a rising hour and as many
into a falling hour of that day, where rising/falling is the Odean signal of
the global average bar. A rising-hour chance converts with probability
``sell_prob_up``, a falling-hour chance with ``sell_prob_down``; the hour is
then drawn uniformly among that day's rising (or falling) hours. Keying the
chances to the day rather than to each hour keeps the planted GR and LR
counts independent of how many hours happened to rise, so equal
probabilities are a true null for the per-day t-test.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain_model import RawTransaction, TxIO, serialize_transaction
from .entity_resolution import TagRecord, write_tags
from .indicators import IndicatorConfig, Signal, rule_signals
from .market_data import GlobalBarSeries, OhlcBar, global_average, write_ohlc
from .timeutil import DAY, HOUR

DEFAULT_START = 1483228800  # 2017-01-01T00:00:00Z


@dataclass(frozen=True)
class SynthConfig:
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
    start: int = DEFAULT_START
    start_price: float = 1000.0
    exchange_noise: float = 0.002
    n_coinjoins: int = 10
    background_per_day: int = 5

    def __post_init__(self):
        for name in ("n_investors", "n_exchanges", "n_hours", "daily_opportunities"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("sell_prob_up", "sell_prob_down", "tag_coverage"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.price_vol < 0 or self.exchange_noise < 0:
            raise ValueError("volatilities must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.start % DAY:
            raise ValueError("start must be aligned to a UTC day")
        if self.start_price <= 0:
            raise ValueError("start_price must be positive")
        if self.n_coinjoins < 0 or self.background_per_day < 0:
            raise ValueError("counts must be >= 0")


@dataclass
class GroundTruth:
    hour_signals: np.ndarray  # Odean signal per global bar
    sell_labels: dict[str, Signal]
    investor_entities: dict[str, frozenset[str]]
    exchange_entities: dict[str, frozenset[str]]
    coinjoin_ids: frozenset[str] = frozenset()

    @property
    def gr_count(self) -> int:
        return sum(1 for s in self.sell_labels.values() if s is Signal.GR)

    @property
    def lr_count(self) -> int:
        return sum(1 for s in self.sell_labels.values() if s is Signal.LR)


@dataclass
class SynthDataset:
    config: SynthConfig
    transactions: list[RawTransaction]
    tags: list[TagRecord]
    bars: list[OhlcBar]
    series: GlobalBarSeries
    truth: GroundTruth
    files: dict[str, Path] = field(default_factory=dict)


ODEAN = IndicatorConfig("Odean", "Odean")


def _price_bars(cfg: SynthConfig, rng: np.random.Generator) -> list[OhlcBar]:
    n = cfg.n_hours
    log_ret = rng.normal(cfg.price_drift, cfg.price_vol, n)
    closes = cfg.start_price * np.exp(np.cumsum(log_ret))
    opens = np.concatenate(([cfg.start_price], closes[:-1]))
    wick = np.abs(rng.normal(0, cfg.price_vol / 2, (2, n)))
    highs = np.maximum(opens, closes) * np.exp(wick[0])
    lows = np.minimum(opens, closes) * np.exp(-wick[1])
    hours = cfg.start + HOUR * np.arange(n)
    bars = []
    for e in range(cfg.n_exchanges):
        f = np.exp(rng.normal(0, cfg.exchange_noise, n))
        vol = np.round(rng.lognormal(math.log(50), 0.5, n), 4)
        cols = [np.round(c * f, 2).tolist() for c in (opens, highs, lows, closes)]
        name = f"exchange{e}"
        for h in range(n):
            bars.append(OhlcBar(int(hours[h]), name, cols[0][h], cols[1][h], cols[2][h],
                                cols[3][h], float(vol[h])))
    return bars


class _Builder:
    """Collects transactions; tx ids are assigned in time order at the end."""

    def __init__(self):
        self.pending: list[tuple[int, int, tuple, tuple, str]] = []

    def add(self, ts: int, inputs, outputs, kind: str = "") -> int:
        key = len(self.pending)
        self.pending.append((ts, key, tuple(TxIO(a, int(v)) for a, v in inputs),
                             tuple(TxIO(a, int(v)) for a, v in outputs), kind))
        return key

    def finish(self):
        self.pending.sort(key=lambda p: (p[0], p[1]))
        width = max(7, len(str(len(self.pending))))
        txs, ids = [], {}
        for i, (ts, key, ins, outs, _) in enumerate(self.pending):
            tx_id = f"tx{i:0{width}d}"
            ids[key] = tx_id
            txs.append(RawTransaction(tx_id, ts, ins, outs))
        return txs, ids


def _distinct_value(rng, lo: int, hi: int, avoid: set[int]) -> int:
    v = int(rng.integers(lo, hi))
    while v in avoid:
        v += 1
    return v


def generate(cfg: SynthConfig) -> SynthDataset:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    width = max(4, len(str(cfg.n_investors)))
    investors = [[f"bc1inv{i:0{width}d}x{j:02d}" for j in range(int(rng.integers(3, 11)))]
                 for i in range(cfg.n_investors)]
    exchanges = [[f"bc1exc{e:03d}x{j:02d}" for j in range(int(rng.integers(3, 7)))]
                 for e in range(cfg.n_exchanges)]

    bars = _price_bars(cfg, rng)
    series = global_average(bars)
    hour_sig = rule_signals(ODEAN, series)

    b = _Builder()
    t_fund, t_setup = cfg.start - 2 * HOUR, cfg.start - HOUR
    for owner in investors + exchanges:
        b.add(t_fund, [], [(a, 100_000_000) for a in owner], "coinbase")
        b.add(t_setup, [(a, 100_000_000) for a in owner], [(owner[0], 100_000_000 * len(owner) - 1000)])

    # sells: one chance per investor, day, regime (rising/falling) and opportunity
    n_days = -(-cfg.n_hours // 24)
    shape = (cfg.n_investors, n_days, 2, cfg.daily_opportunities)
    u_sell, u_hour = rng.random(shape), rng.random(shape)
    sec = rng.integers(0, HOUR, shape)
    n_in = rng.integers(1, 3, shape)
    amount = rng.integers(10_000, 50_000_000, shape)
    change = rng.integers(1_000, 10_000_000, shape)
    pick = rng.random(shape + (3,))
    probs = (cfg.sell_prob_up, cfg.sell_prob_down)
    sell_keys: dict[int, Signal] = {}
    for d in range(n_days):
        day_sig = hour_sig[d * 24:(d + 1) * 24]
        regimes = (np.flatnonzero(day_sig == Signal.GR), np.flatnonzero(day_sig == Signal.LR))
        for i, addrs in enumerate(investors):
            ex = exchanges[i % cfg.n_exchanges]
            for r, hours in enumerate(regimes):
                if not len(hours):
                    continue
                for k in range(cfg.daily_opportunities):
                    if u_sell[i, d, r, k] >= probs[r]:
                        continue
                    hour = d * 24 + int(hours[int(u_hour[i, d, r, k] * len(hours))])
                    ts = cfg.start + hour * HOUR + int(sec[i, d, r, k])
                    p = pick[i, d, r, k]
                    m = int(n_in[i, d, r, k])
                    first = int(p[0] * len(addrs))
                    srcs = [addrs[first]] if m == 1 else [addrs[first], addrs[(first + 1) % len(addrs)]]
                    v, c = int(amount[i, d, r, k]), int(change[i, d, r, k])
                    if c == v:
                        c += 1
                    total = v + c + 500
                    ins = [(srcs[0], total)] if m == 1 else [(srcs[0], total // 2),
                                                             (srcs[1], total - total // 2)]
                    outs = [(ex[int(p[1] * len(ex))], v), (addrs[int(p[2] * len(addrs))], c)]
                    key = b.add(ts, ins, outs, "sell")
                    sell_keys[key] = Signal.GR if r == 0 else Signal.LR

    # background traffic that must not produce sells or merge entities
    span = cfg.n_hours * HOUR
    for _ in range(cfg.background_per_day * n_days):
        kind = int(rng.integers(0, 3))
        ts = cfg.start + int(rng.integers(0, span))
        v = int(rng.integers(10_000, 10_000_000))
        c = _distinct_value(rng, 1_000, 5_000_000, {v})
        if kind == 0 or cfg.n_exchanges == 1 and kind == 1:  # exchange pays out to an investor
            ex = exchanges[int(rng.integers(cfg.n_exchanges))]
            inv = investors[int(rng.integers(cfg.n_investors))]
            b.add(ts, [(ex[int(rng.integers(len(ex)))], v + c + 300)],
                  [(inv[int(rng.integers(len(inv)))], v), (ex[0], c)])
        elif kind == 1:  # exchange to exchange
            e1, e2 = rng.choice(cfg.n_exchanges, 2, replace=False)
            src, dst = exchanges[int(e1)], exchanges[int(e2)]
            b.add(ts, [(src[int(rng.integers(len(src)))], v + c + 300)],
                  [(dst[int(rng.integers(len(dst)))], v), (src[0], c)])
        else:  # investor to investor
            i1 = int(rng.integers(cfg.n_investors))
            i2 = int(rng.integers(cfg.n_investors))
            src, dst = investors[i1], investors[i2]
            b.add(ts, [(src[int(rng.integers(len(src)))], v + c + 300)],
                  [(dst[int(rng.integers(len(dst)))], v), (src[-1], c)])

    cj_keys = []
    if cfg.n_investors >= 2:
        for _ in range(cfg.n_coinjoins):
            k = int(rng.integers(2, min(5, cfg.n_investors + 1)))
            who = rng.choice(cfg.n_investors, k, replace=False)
            denom = int(rng.integers(1_000_000, 10_000_000))
            used = {denom}
            ins, outs = [], []
            for w in who:
                addrs = investors[int(w)]
                ch = _distinct_value(rng, 1_000, 900_000, used)
                used.add(ch)
                ins.append((addrs[0], denom + ch + 200))
                outs += [(addrs[-1], denom), (addrs[len(addrs) // 2], ch)]
            cj_keys.append(b.add(cfg.start + int(rng.integers(0, span)), ins, outs, "coinjoin"))

    txs, ids = b.finish()

    tags = []
    for e, addrs in enumerate(exchanges):
        n_tag = math.ceil(cfg.tag_coverage * len(addrs))
        chosen = sorted(rng.choice(len(addrs), n_tag, replace=False).tolist()) if n_tag else []
        tags += [TagRecord(addrs[j], f"exchange{e}", "Exchange") for j in chosen]
        if e == 0 and n_tag:
            tags.append(TagRecord(addrs[chosen[0]], "exchange0 wallet", "Wallet Service"))

    truth = GroundTruth(
        hour_signals=hour_sig,
        sell_labels={ids[k]: s for k, s in sell_keys.items()},
        investor_entities={min(a): frozenset(a) for a in investors},
        exchange_entities={min(a): frozenset(a) for a in exchanges},
        coinjoin_ids=frozenset(ids[k] for k in cj_keys),
    )
    return SynthDataset(cfg, txs, tags, bars, series, truth)


FILE_NAMES = {
    "transactions": "transactions.jsonl",
    "tags": "tags.csv",
    "ohlc": "ohlc.csv",
    "ground_truth": "ground_truth.csv",
}


def _atomic_write(path: Path, write) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        write(fh)
    os.replace(tmp, path)


def write_dataset(ds: SynthDataset, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {k: out / v for k, v in FILE_NAMES.items()}

    def txs(fh):
        for tx in ds.transactions:
            fh.write(serialize_transaction(tx) + "\n")

    def truth(fh):
        fh.write("tx_id,planted_signal\n")
        for tx_id in sorted(ds.truth.sell_labels):
            fh.write(f"{tx_id},{ds.truth.sell_labels[tx_id].label}\n")

    _atomic_write(paths["transactions"], txs)
    _atomic_write(paths["tags"], lambda fh: write_tags(ds.tags, fh))
    _atomic_write(paths["ohlc"], lambda fh: write_ohlc(ds.bars, fh))
    _atomic_write(paths["ground_truth"], truth)
    ds.files = paths
    return paths
