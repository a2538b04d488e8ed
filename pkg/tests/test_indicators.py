import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from disposition.indicators import (RULE_IDS, ConfigError, IndicatorConfig, IndicatorSettings,
                                    Signal, bbands, decide, defined_mask, ema, evaluate_rule,
                                    get_rule, macd, obv, roc, rsi, rule_catalogue, rule_signals,
                                    rule_values, select_rules, sma, trb, write_indicator_dump)
from disposition.market_data import GlobalBar, GlobalBarSeries


def nan_eq(a, b):
    return np.array_equal(np.asarray(a, float), np.asarray(b, float), equal_nan=True)


# --- worked examples --------------------------------------------------------------

def test_sma_examples():
    assert nan_eq(sma([5, 5, 5], 3), [math.nan, math.nan, 5])
    assert nan_eq(sma([1, 2, 3, 4], 2), [math.nan, 1.5, 2.5, 3.5])
    assert nan_eq(sma([3, 1, 4], 1), [3, 1, 4])
    assert nan_eq(sma([1, 2], 5), [math.nan, math.nan])


def test_ema_examples():
    assert ema([7, 1, 9], 4)[0] == 7
    assert ema([2.5] * 6, 5).tolist() == [2.5] * 6
    assert ema([2, 4], 3).tolist() == [2, 3]
    assert len(ema([], 3)) == 0


def test_macd_examples():
    line, sig, hist = macd([4.0] * 40)
    assert not line.any() and not sig.any() and not hist.any()
    x = np.random.default_rng(1).normal(100, 5, 50)
    got = macd(x, 12, 26, 9)
    want = oracles.macd(x.tolist(), 12, 26, 9)
    for g, w in zip(got, want):
        np.testing.assert_allclose(g, w, rtol=1e-12, atol=1e-12)
    assert np.array_equal(got.histogram, got.macd - got.signal)
    with pytest.raises(ConfigError):
        macd(x, 26, 12, 9)


def test_roc_examples():
    assert nan_eq(roc([3, 3, 3, 3], 2), [math.nan, math.nan, 0, 0])
    assert roc([100, 110], 1)[1] == pytest.approx(0.1)
    assert math.isnan(roc([0, 5], 1)[1])


def test_obv_examples():
    assert obv([1, 2, 3, 4], [1, 1, 1, 1]).tolist() == [0, 1, 2, 3]
    assert obv([1, 1], [1, 1]).tolist() == [0, 0]
    assert obv([1, 2, 2, 1], [1, 5, 7, 2]).tolist() == [0, 5, 5, 3]
    assert obv([1, 2, 2, 1], [1, 5, 7, 2], literal=True).tolist() == [0, 5, 0, -2]
    with pytest.raises(ConfigError):
        obv([1, 2], [1])


def test_rsi_examples():
    assert rsi(np.arange(1.0, 30.0), 14)[1:].tolist() == [100.0] * 28
    assert rsi([4.0] * 20, 14).tolist() == [50.0] * 20
    x = np.random.default_rng(2).normal(100, 3, 100)
    np.testing.assert_allclose(rsi(x, 14), oracles.rsi(x.tolist(), 14), rtol=1e-9)


def test_trb_examples():
    lc, mc, uc = trb([4.0] * 5, [4.0] * 5, 3)
    assert lc[2:].tolist() == mc[2:].tolist() == uc[2:].tolist() == [4.0] * 3
    lc, mc, uc = trb([1, 3, 2], [0, 2, 1], 3)
    assert (uc[2], lc[2], mc[2]) == (3, 0, 1.5)
    assert trb([1, 3, 2], [0, 2, 1], 3, literal=True).middle[2] == 1.5
    lc, _, uc = trb([5, 6], [1, 2], 1)
    assert uc.tolist() == [5, 6] and lc.tolist() == [1, 2]


def test_bbands_examples():
    lo, mid, up = bbands([3.0] * 4, 2, 2)
    assert lo[1:].tolist() == mid[1:].tolist() == up[1:].tolist() == [3.0] * 3
    lo, mid, up = bbands([1, 3], 2, 2)
    assert (lo[1], mid[1], up[1]) == (0, 2, 4)
    with pytest.raises(ConfigError):
        bbands([1, 2], 2, 0)


@pytest.mark.parametrize("fn", [lambda: sma([1], 0), lambda: ema([1], 0), lambda: roc([1], -1),
                                lambda: rsi([1], 0), lambda: trb([1], [1], 0)])
def test_bad_period(fn):
    with pytest.raises(ConfigError):
        fn()


# --- properties --------------------------------------------------------------------

prices = st.lists(st.floats(1, 1e4, allow_nan=False), min_size=1, max_size=300)


@given(prices, st.integers(1, 30))
def test_transform_properties(xs, n):
    x = np.array(xs)
    r = rsi(x, n)
    assert np.all((r >= 0) & (r <= 100))
    lo, mid, up = bbands(x, n, 2.0)
    ok = ~np.isnan(mid)
    assert np.all(lo[ok] <= mid[ok]) and np.all(mid[ok] <= up[ok])
    lc, mc, uc = trb(x * 1.01, x * 0.99, n)
    ok = ~np.isnan(mc)
    assert np.all(lc[ok] <= mc[ok]) and np.all(mc[ok] <= uc[ok])
    assert np.array_equal(sma(x, 1), x)
    assert np.all(np.isnan(sma(x, n)[:n - 1]))


@given(st.floats(0.5, 1e4), st.integers(1, 50), st.integers(1, 200))
def test_constant_fixed_points(c, n, length):
    x = np.full(length, c)
    assert np.allclose(ema(x, n), c, rtol=1e-12)
    r = roc(x, n)
    assert np.all(r[n:] == 0)


def series_from(close, volume=None, seed=0):
    close = np.asarray(close, dtype=float)
    open_ = np.concatenate(([close[0]], close[:-1]))
    high = np.maximum(open_, close) * 1.001
    low = np.minimum(open_, close) * 0.999
    vol = np.ones_like(close) if volume is None else np.asarray(volume, dtype=float)
    return GlobalBarSeries(np.arange(len(close), dtype=np.int64) * 3600, open_, high, low, close, vol)


def walk(n, seed):
    rng = np.random.default_rng(seed)
    return 1000 * np.exp(np.cumsum(rng.normal(0, 0.01, n)))


@pytest.mark.parametrize("rule_id", RULE_IDS)
def test_warmup_positions_are_neutral(rule_id):
    s = series_from(walk(300, 3), np.full(300, 50.0))
    cfg = get_rule(rule_id)
    vals = rule_values(cfg, s)
    sig = decide(cfg, s.open, s.close, vals)
    mask = defined_mask(cfg, vals, len(s))
    assert np.all(sig[~mask] == 0)
    warm = {"SMA": cfg.long_period, "OBV": cfg.long_period, "TRB": cfg.short_period,
            "BB": cfg.short_period, "ROC": cfg.short_period + 1}.get(cfg.kind, 1) - 1
    assert not mask[:warm].any() and mask[warm:].all()


SCALE_INVARIANT = [r for r in RULE_IDS if not r.startswith("OBV")]


@pytest.mark.parametrize("rule_id", SCALE_INVARIANT)
@pytest.mark.parametrize("lam", [0.25, 8.0])
def test_price_scale_invariance(rule_id, lam):
    close = walk(400, 4)
    a = rule_signals(get_rule(rule_id), series_from(close))
    b = rule_signals(get_rule(rule_id), series_from(close * lam))
    assert np.array_equal(a, b)


def test_obv_price_rules_not_scale_invariant():
    close, vol = 100 + 0.1 * np.arange(400.0), np.full(400, 1.0)
    cfg = get_rule("OBV1-50")
    a = rule_signals(cfg, series_from(close, vol))
    b = rule_signals(cfg, series_from(close * 1e-2, vol))
    assert not np.array_equal(a, b)


# --- catalogue -------------------------------------------------------------------------

def test_catalogue_order_and_periods():
    cat = rule_catalogue()
    assert tuple(c.rule_id for c in cat) == RULE_IDS
    by = {c.rule_id: c for c in cat}
    assert (by["SMA5-150"].short_period, by["SMA5-150"].long_period) == (5, 150)
    assert (by["MACD"].short_period, by["MACD"].long_period, by["MACD"].signal_period) == (12, 26, 9)
    assert by["ROC"].short_period == 10 and by["RSI"].short_period == 14
    assert (by["BB"].short_period, by["BB"].band_scale) == (20, 2.0)


def test_settings_flow_into_catalogue():
    cat = {c.rule_id: c for c in rule_catalogue(IndicatorSettings(bb_scale=3.0, obv_literal=True,
                                                                  trb_literal=True))}
    assert cat["BB"].band_scale == 3.0 and cat["OBV1-50"].literal and cat["TRB50"].literal


def test_select_rules():
    assert [c.rule_id for c in select_rules(["RSI", "Odean"])] == ["Odean", "RSI"]
    with pytest.raises(ConfigError):
        select_rules(["RSI", "Nope"])
    with pytest.raises(ConfigError):
        get_rule("SMA5-50")


@pytest.mark.parametrize("kwargs", [
    dict(rule_id="x", kind="Stoch"),
    dict(rule_id="x", kind="SMA", short_period=5, long_period=5),
    dict(rule_id="x", kind="MACD", short_period=12, long_period=26),
    dict(rule_id="x", kind="BB", short_period=20, band_scale=0),
    dict(rule_id="x", kind="RSI", short_period=0),
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        IndicatorConfig(**kwargs)


def test_evaluate_rule_examples():
    bar = GlobalBar(0, 100.0, 110.0, 100.0, 110.0, 1.0)
    assert evaluate_rule("Odean", bar) is Signal.GR
    assert evaluate_rule("RSI", bar, {"rsi": 50.0}) is Signal.GR
    assert evaluate_rule("BB", bar, {"lower": 90.0, "upper": 120.0}) is Signal.NEUTRAL
    assert evaluate_rule("RSI", bar, {}) is Signal.NEUTRAL
    with pytest.raises(ConfigError):
        evaluate_rule("XYZ", bar)


def test_indicator_dump_layout():
    s = series_from(walk(30, 6))
    buf = io.StringIO()
    write_indicator_dump(s, select_rules(["Odean", "BB", "RSI"]), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "hour_start,rule_id,value_1,value_2,value_3,signal"
    assert len(lines) == 1 + 3 * 30
    assert lines[1].startswith("1970-01-01T00:00:00Z,Odean,")
    # rules appear in catalogue order: Odean, RSI, BB
    rsi_row = lines[31].split(",")
    assert rsi_row[1] == "RSI" and rsi_row[2] == "50.0" and rsi_row[3:5] == ["", ""]
    bb_first = lines[61].split(",")
    assert bb_first[1] == "BB" and bb_first[2:6] == ["", "", "", "N"]
