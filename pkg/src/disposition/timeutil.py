"""UTC timestamp helpers. Everything internal is integer unix seconds."""

from datetime import datetime, timezone

HOUR = 3600
DAY = 86400


def format_ts(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(text: str) -> int:
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def month_start(ts: int) -> int:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return int(datetime(d.year, d.month, 1, tzinfo=timezone.utc).timestamp())


def next_month(ts: int) -> int:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    y, m = (d.year + 1, 1) if d.month == 12 else (d.year, d.month + 1)
    return int(datetime(y, m, 1, tzinfo=timezone.utc).timestamp())


def year_start(ts: int) -> int:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return int(datetime(d.year, 1, 1, tzinfo=timezone.utc).timestamp())


def next_year(ts: int) -> int:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return int(datetime(d.year + 1, 1, 1, tzinfo=timezone.utc).timestamp())


def month_label(ts: int) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).strftime("%Y-%m")
