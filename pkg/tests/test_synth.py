import hashlib
import math

import numpy as np
import pytest

from disposition.chain_model import parse_transactions
from disposition.entity_resolution import load_tags
from disposition.indicators import Signal
from disposition.market_data import global_average, load_ohlc
from disposition.pipeline import AnalysisSettings, run_pipeline
from disposition.synth import FILE_NAMES, SynthConfig, generate, write_dataset

SMALL = dict(n_investors=6, n_exchanges=2, n_hours=24 * 20)


@pytest.fixture(scope="module")
def small():
    return generate(SynthConfig(seed=11, sell_prob_up=0.7, sell_prob_down=0.3, **SMALL))


@pytest.mark.parametrize("kwargs", [
    dict(n_investors=0), dict(n_hours=0), dict(sell_prob_up=1.5), dict(sell_prob_down=-0.1),
    dict(tag_coverage=2), dict(price_vol=-1), dict(seed=-1), dict(start=1483228801),
    dict(daily_opportunities=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def digest_dir(path):
    return {name: hashlib.sha256((path / name).read_bytes()).hexdigest()
            for name in FILE_NAMES.values()}


def test_same_seed_byte_identical(tmp_path):
    cfg = SynthConfig(seed=5, **SMALL)
    write_dataset(generate(cfg), tmp_path / "a")
    write_dataset(generate(cfg), tmp_path / "b")
    write_dataset(generate(SynthConfig(seed=6, **SMALL)), tmp_path / "c")
    a, b, c = (digest_dir(tmp_path / x) for x in "abc")
    assert a == b
    assert a["transactions.jsonl"] != c["transactions.jsonl"]


def test_files_pass_ingest_with_zero_errors(small, tmp_path):
    paths = write_dataset(small, tmp_path)
    with open(paths["transactions"]) as fh:
        txs, r1 = parse_transactions(fh)
    with open(paths["tags"], newline="") as fh:
        tags, r2 = load_tags(fh)
    with open(paths["ohlc"], newline="") as fh:
        bars, r3 = load_ohlc(fh)
    assert r1.error_count == r2.error_count == r3.error_count == 0
    assert txs == small.transactions and tags == small.tags and bars == small.bars
    reread = global_average(bars)
    assert np.array_equal(reread.close, small.series.close)
    assert np.array_equal(reread.open, small.series.open)
    truth = paths["ground_truth"].read_text().splitlines()
    assert truth[0] == "tx_id,planted_signal"
    assert len(truth) - 1 == len(small.truth.sell_labels)


def test_clustering_recovers_planted_entities(small):
    result = run_pipeline(small.transactions, small.tags, small.bars, AnalysisSettings())
    members = {}
    for addr, ent in result.clusters.partition.items():
        members.setdefault(ent, set()).add(addr)
    planted = {**small.truth.investor_entities, **small.truth.exchange_entities}
    assert members == {k: set(v) for k, v in planted.items()}
    flagged = {k for k, v in result.clusters.verdicts.items() if v.is_coinjoin}
    assert flagged == small.truth.coinjoin_ids and len(flagged) == 10


def test_pipeline_finds_exactly_the_planted_sells(small):
    result = run_pipeline(small.transactions, small.tags, small.bars,
                          AnalysisSettings(rule_ids=("Odean",)))
    got = dict(zip(result.classified.tx_id, result.classified.signals["Odean"].tolist()))
    assert got == {k: int(v) for k, v in small.truth.sell_labels.items()}
    exchanges = set(small.truth.exchange_entities)
    assert {s.target_exchange for s in result.sells} == exchanges


def test_sells_land_in_their_labelled_hour(small):
    start = small.config.start
    for tx in small.transactions:
        label = small.truth.sell_labels.get(tx.tx_id)
        if label is not None:
            hour = (tx.timestamp - start) // 3600
            assert small.truth.hour_signals[hour] == label


def test_zero_tag_coverage_means_no_sells():
    ds = generate(SynthConfig(seed=1, tag_coverage=0.0, **SMALL))
    assert ds.tags == []
    result = run_pipeline(ds.transactions, ds.tags, ds.bars, AnalysisSettings(rule_ids=("Odean",)))
    assert result.sells == []


def test_partial_tag_coverage_counts():
    ds = generate(SynthConfig(seed=2, tag_coverage=0.5, **SMALL))
    for ent, addrs in ds.truth.exchange_entities.items():
        tagged = {t.address for t in ds.tags if t.category == "Exchange" and t.address in addrs}
        assert len(tagged) == math.ceil(0.5 * len(addrs))


def test_investors_span_3_to_10_addresses(small):
    sizes = [len(a) for a in small.truth.investor_entities.values()]
    assert min(sizes) >= 3 and max(sizes) <= 10


def test_planted_bias_direction_matches_binomial_oracle():
    stats = pytest.importorskip("scipy.stats")
    cfg = dict(n_investors=5, n_exchanges=2, n_hours=2000, sell_prob_up=0.6, sell_prob_down=0.4)
    # one rising and one falling chance per investor per day
    n = cfg["n_investors"] * math.ceil(cfg["n_hours"] / 24)
    k = np.arange(n + 1)
    gr, lr = stats.binom.pmf(k, n, 0.6), stats.binom.pmf(k, n, 0.4)
    p_gr_wins = float(np.sum(gr * (np.cumsum(lr) - lr)))
    assert p_gr_wins >= 0.99
    truths = [generate(SynthConfig(seed=s, **cfg)).truth for s in range(10)]
    assert all(t.gr_count > t.lr_count for t in truths)


def test_null_has_balanced_counts():
    ds = generate(SynthConfig(seed=4, n_investors=20, n_hours=24 * 60))
    gr, lr = ds.truth.gr_count, ds.truth.lr_count
    assert abs(gr - lr) < 4 * math.sqrt(gr + lr)
    assert set(ds.truth.sell_labels.values()) <= {Signal.GR, Signal.LR}
