import io
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from disposition.market_data import (OhlcBar, bucket_index, bucket_indices, bucket_of,
                                     global_average, load_ohlc, read_global_series, write_global_series,
                                     write_ohlc)

HEADER = "hour_start,exchange,open,high,low,close,volume\n"


def test_load_single_bar():
    bars, report = load_ohlc(io.StringIO(HEADER + "3600,kraken,100,110,90,105,2.5\n"))
    assert report.error_count == 0
    assert bars == [OhlcBar(3600, "kraken", 100.0, 110.0, 90.0, 105.0, 2.5)]


@pytest.mark.parametrize("row", [
    "3600,kraken,100,110,120,105,1",  # low > high
    "3601,kraken,100,110,90,105,1",  # misaligned
    "3600,kraken,100,110,90,115,1",  # close above high
    "3600,kraken,100,110,90,105,-1",
    "3600,kraken,100,110,90,nan,1",
    "3600,kraken,100,110,90",
    "3600,,100,110,90,105,1",
])
def test_invalid_rows_rejected(row):
    bars, report = load_ohlc(io.StringIO(HEADER + row + "\n"))
    assert bars == [] and report.errors[0][0] == 2


def test_duplicate_rows_rejected():
    text = HEADER + "3600,k,1,1,1,1,1\n3600,k,2,2,2,2,2\n"
    bars, report = load_ohlc(io.StringIO(text))
    assert len(bars) == 1 and report.errors[0][0] == 3


def test_wrong_header():
    bars, report = load_ohlc(io.StringIO("a,b\n"))
    assert bars == [] and report.error_count == 1


def test_one_exchange_is_identity():
    bars = [OhlcBar(h * 3600, "k", 10 + h, 12 + h, 9 + h, 11 + h, 1.0 + h) for h in range(5)]
    s = global_average(bars)
    assert s.close.tolist() == [b.close for b in bars] and s.gaps == ()


def test_two_exchange_mean_and_volume_sum():
    s = global_average([OhlcBar(0, "a", 100, 120, 90, 100, 1.0),
                        OhlcBar(0, "b", 100, 120, 90, 110, 3.0)])
    assert s.close[0] == 105 and s.volume[0] == 4.0


def test_volume_weighting():
    s = global_average([OhlcBar(0, "a", 100, 120, 90, 100, 1.0),
                        OhlcBar(0, "b", 100, 120, 90, 110, 3.0)], weighting="volume")
    assert s.close[0] == pytest.approx(107.5)
    with pytest.raises(ValueError):
        global_average([], weighting="median")


def test_gap_recorded_not_filled():
    s = global_average([OhlcBar(0, "a", 1, 1, 1, 1, 1), OhlcBar(7200, "a", 2, 2, 2, 2, 1)])
    assert s.hour_start.tolist() == [0, 7200] and s.gaps == (3600,)
    assert bucket_of(3700, s) is None


def test_bucket_of():
    s = global_average([OhlcBar(3600, "a", 1, 2, 1, 2, 1)])
    assert bucket_of(3601, s).hour_start == 3600
    assert bucket_of(7199, s).close == 2
    assert bucket_of(3599, s) is None
    assert bucket_of(7200, s) is None


bar_lists = st.lists(
    st.tuples(st.integers(0, 30), st.sampled_from("abc"),
              st.floats(0.01, 1e6, allow_nan=False), st.floats(0.01, 1e6, allow_nan=False),
              st.floats(0.01, 1e6, allow_nan=False), st.floats(0.01, 1e6, allow_nan=False),
              st.floats(0, 1e9)),
    max_size=40, unique_by=lambda r: (r[0], r[1]))


def to_bars(rows):
    out = []
    for h, ex, a, b, c, d, v in rows:
        lo, o, cl, hi = sorted([a, b, c, d])
        out.append(OhlcBar(h * 3600, ex, o, hi, lo, cl, v))
    return out


@given(bar_lists, st.integers(0, 1000))
def test_average_invariants(rows, seed):
    bars = to_bars(rows)
    s = global_average(bars)
    shuffled = bars[:]
    random.Random(seed).shuffle(shuffled)
    s2 = global_average(shuffled)
    for k in ("hour_start", "open", "high", "low", "close", "volume"):
        assert np.array_equal(getattr(s, k), getattr(s2, k))
    assert np.all(np.diff(s.hour_start) > 0)
    for i, h in enumerate(s.hour_start.tolist()):
        group = [b for b in bars if b.hour_start == h]
        for k in ("open", "high", "low", "close"):
            vals = [getattr(b, k) for b in group]
            assert min(vals) <= getattr(s, k)[i] <= max(vals)
        assert s.low[i] <= s.open[i] <= s.high[i] and s.low[i] <= s.close[i] <= s.high[i]
    populated = set(s.hour_start.tolist())
    if populated:
        full = set(range(min(populated), max(populated) + 1, 3600))
        assert set(s.gaps) == full - populated


@given(bar_lists, st.lists(st.integers(-3600, 40 * 3600), max_size=30))
def test_bucket_contains_timestamp(rows, stamps):
    s = global_average(to_bars(rows))
    vec = bucket_indices(np.array(stamps, dtype=np.int64), s)
    for t, j in zip(stamps, vec.tolist()):
        b = bucket_of(t, s)
        i = bucket_index(t, s)
        assert (b is None) == (i is None) == (j == -1)
        if b is not None:
            assert b.hour_start <= t < b.hour_start + 3600 and i == j


@given(bar_lists)
def test_file_roundtrips(rows):
    bars = to_bars(rows)
    buf = io.StringIO()
    write_ohlc(bars, buf)
    back, report = load_ohlc(io.StringIO(buf.getvalue()))
    assert back == bars and report.error_count == 0
    s = global_average(bars)
    buf = io.StringIO()
    write_global_series(s, buf)
    s2 = read_global_series(io.StringIO(buf.getvalue()))
    for k in ("hour_start", "open", "high", "low", "close", "volume"):
        assert np.array_equal(getattr(s, k), getattr(s2, k))
    assert s2.gaps == s.gaps
