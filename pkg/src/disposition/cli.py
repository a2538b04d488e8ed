"""Command-line entry point: ``disposition <stage> [--config PATH] [--out DIR]``.

Stages and the artifacts they read/write (inside ``--out`` unless an input
path is configured):

  synth          -> transactions.jsonl, tags.csv, ohlc.csv, ground_truth.csv
  cluster        transactions, tags -> coinjoin.csv, partition.csv,
                 entity_categories.csv, edges.csv, cluster_report.txt
  extract-sells  transactions, coinjoin.csv, partition.csv, entity_categories.csv -> sells.csv
  indicators     ohlc -> global_series.csv, indicators.csv
  classify       sells.csv, global_series.csv -> classified.csv
  report         classified.csv -> report.csv, monthly_tstats.csv
  all            cluster, extract-sells, indicators, classify, report
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from collections import Counter
from pathlib import Path

from .chain_model import CoinJoinVerdict, ParseReport, detect_all, parse_transactions
from .config import ConfigFileError, PipelineConfig, load_config
from .disposition_stats import (classify_sells, read_classified, windowed_report, write_classified,
                                write_monthly_plot, write_report)
from .entity_resolution import (attribute_categories, build_entity_graph, cluster_addresses,
                                load_tags, read_categories, read_partition, write_categories,
                                write_partition)
from .indicators import write_indicator_dump
from .market_data import global_average, load_ohlc, read_global_series, write_global_series
from .sell_extraction import extract_sells, read_sells, write_sells
from .synth import FILE_NAMES, generate, write_dataset

STAGES = ("cluster", "extract-sells", "indicators", "classify", "report", "synth", "all")
COINJOIN_HEADER = ["tx_id", "is_coinjoin", "matched_output_value", "equal_output_count"]


class StageError(RuntimeError):
    pass


class Context:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.parse_reports: list[ParseReport] = []

    def path(self, name: str) -> Path:
        return self.out / name

    def require(self, path: Path) -> Path:
        if not path.is_file():
            raise StageError(f"missing input file: {path}")
        return path

    def write(self, name: str, writer) -> None:
        """Write via a temporary file renamed into place only on success."""
        self.out.mkdir(parents=True, exist_ok=True)
        final = self.path(name)
        tmp = final.with_name(f".{final.name}.tmp")
        try:
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                writer(fh)
            os.replace(tmp, final)
        finally:
            if tmp.exists():
                tmp.unlink()

    def check_report(self, report: ParseReport) -> None:
        self.parse_reports.append(report)
        if report.error_count:
            print(report.summary(), file=sys.stderr)
            if self.cfg.strict:
                raise StageError(f"{report.source}: {report.error_count} malformed record(s)")

    def load_transactions(self):
        path = self.require(self.cfg.input_path("transactions", FILE_NAMES["transactions"]))
        with open(path, encoding="utf-8") as fh:
            txs, report = parse_transactions(fh, str(path))
        self.check_report(report)
        return txs

    def load_tags(self):
        path = self.require(self.cfg.input_path("tags", FILE_NAMES["tags"]))
        with open(path, encoding="utf-8", newline="") as fh:
            tags, report = load_tags(fh, str(path))
        self.check_report(report)
        return tags

    def read(self, name: str, reader):
        with open(self.require(self.path(name)), encoding="utf-8", newline="") as fh:
            try:
                return reader(fh)
            except (ValueError, IndexError) as exc:
                raise StageError(f"{self.path(name)}: {exc}") from None

    def finish(self) -> None:
        if self.cfg.report is None:
            return
        text = "\n".join(r.summary() for r in self.parse_reports) + "\n"
        tmp = Path(self.cfg.report + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, self.cfg.report)


def _write_coinjoin(verdicts, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(COINJOIN_HEADER)
    for tx_id in sorted(verdicts):
        v = verdicts[tx_id]
        w.writerow([tx_id, int(v.is_coinjoin),
                    "" if v.matched_output_value is None else v.matched_output_value,
                    v.equal_output_count])


def _read_coinjoin(fh) -> dict[str, CoinJoinVerdict]:
    reader = csv.reader(fh)
    if next(reader, None) != COINJOIN_HEADER:
        raise ValueError("coinjoin file must start with " + ",".join(COINJOIN_HEADER))
    return {r[0]: CoinJoinVerdict(r[0], r[1] == "1", int(r[2]) if r[2] else None, int(r[3]))
            for r in reader if r}


def _write_edges(graph, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["source_entity", "target_entity", "tx_count", "tx_ids"])
    for (src, tgt), ids in graph.edges.items():
        w.writerow([src, tgt, len(ids), ";".join(sorted(ids))])


def stage_cluster(ctx: Context) -> None:
    txs = ctx.load_transactions()
    tags = ctx.load_tags()
    verdicts = detect_all(txs, ctx.cfg.min_equal_outputs)
    partition = cluster_addresses(txs, verdicts)
    diag = Counter()
    categories = attribute_categories(partition, tags, diag)
    graph = build_entity_graph(txs, partition, categories, verdicts)
    n_exchange = sum(graph.is_exchange(e) for e in graph.entities)
    summary = [
        f"transactions: {len(txs)}",
        f"coinbase: {sum(tx.is_coinbase for tx in txs)}",
        f"coinjoin: {sum(v.is_coinjoin for v in verdicts.values())}",
        f"addresses: {len(partition)}",
        f"entities: {len(graph.entities)}",
        f"exchange entities: {n_exchange}",
        f"edges: {graph.edge_count()}",
        f"unmatched tags: {diag['unmatched_tags']}",
    ]
    ctx.write("coinjoin.csv", lambda fh: _write_coinjoin(verdicts, fh))
    ctx.write("partition.csv", lambda fh: write_partition(partition, fh))
    ctx.write("entity_categories.csv", lambda fh: write_categories(categories, fh))
    ctx.write("edges.csv", lambda fh: _write_edges(graph, fh))
    ctx.write("cluster_report.txt", lambda fh: fh.write("\n".join(summary) + "\n"))


def stage_extract(ctx: Context) -> None:
    txs = ctx.load_transactions()
    verdicts = ctx.read("coinjoin.csv", _read_coinjoin)
    partition = ctx.read("partition.csv", read_partition)
    categories = ctx.read("entity_categories.csv", read_categories)
    graph = build_entity_graph(txs, partition, categories, verdicts)
    sells = extract_sells(graph, {tx.tx_id: tx for tx in txs})
    ctx.write("sells.csv", lambda fh: write_sells(sells, fh))


def stage_indicators(ctx: Context) -> None:
    path = ctx.require(ctx.cfg.input_path("ohlc", FILE_NAMES["ohlc"]))
    with open(path, encoding="utf-8", newline="") as fh:
        bars, report = load_ohlc(fh, str(path))
    ctx.check_report(report)
    series = global_average(bars, ctx.cfg.weighting)
    ctx.write("global_series.csv", lambda fh: write_global_series(series, fh))
    ctx.write("indicators.csv", lambda fh: write_indicator_dump(series, ctx.cfg.rule_configs(), fh))


def stage_classify(ctx: Context) -> None:
    sells = ctx.read("sells.csv", read_sells)
    series = ctx.read("global_series.csv", read_global_series)
    classified = classify_sells(sells, series, ctx.cfg.rule_configs())
    ctx.write("classified.csv", lambda fh: write_classified(classified, fh))
    gaps = classified.gap_count
    warm = sum(classified.warmup_neutral.values())
    print(f"classified {len(classified)} sells; {gaps} in price gaps; "
          f"{warm} rule-level warm-up neutrals", file=sys.stderr)


def stage_report(ctx: Context) -> None:
    classified = ctx.read("classified.csv", read_classified)
    cfg = ctx.cfg
    welch = cfg.ttest == "welch"
    rows = []
    for w in cfg.windowing:
        rows += windowed_report(classified, w, cfg.sub_bucket, welch, cfg.rules)
    monthly = windowed_report(classified, "monthly", cfg.sub_bucket, welch, cfg.rules)
    ctx.write("report.csv", lambda fh: write_report(rows, fh))
    ctx.write("monthly_tstats.csv", lambda fh: write_monthly_plot(monthly, fh))


def stage_synth(ctx: Context) -> None:
    ds = generate(ctx.cfg.synth())
    write_dataset(ds, ctx.out)
    print(f"synth: {len(ds.transactions)} transactions, {len(ds.truth.sell_labels)} planted sells "
          f"(GR {ds.truth.gr_count}, LR {ds.truth.lr_count})", file=sys.stderr)


RUNNERS = {
    "cluster": [stage_cluster],
    "extract-sells": [stage_extract],
    "indicators": [stage_indicators],
    "classify": [stage_classify],
    "report": [stage_report],
    "synth": [stage_synth],
    "all": [stage_cluster, stage_extract, stage_indicators, stage_classify, stage_report],
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="disposition", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("stage", choices=STAGES)
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--out", help="output directory (overrides config 'out')")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key; repeatable")
    p.add_argument("--report", help="write the parse report to this path")
    p.add_argument("--obv-literal", action="store_true", help="OBV resets to 0 on unchanged closes")
    p.add_argument("--trb-literal", action="store_true", help="TRB mid-channel as (UC - LC) / 2")
    p.add_argument("--strict", action="store_true", help="fail on any malformed input record")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides)
    if args.out:
        overrides.append(f"out={args.out}")
    if args.report:
        overrides.append(f"report={args.report}")
    for flag in ("obv_literal", "trb_literal", "strict"):
        if getattr(args, flag):
            overrides.append(f"{flag}=true")
    try:
        cfg = load_config(args.config, overrides)
        cfg.validate()
        if args.stage == "synth":
            cfg.synth()
    except (ConfigFileError, ValueError) as exc:
        print(f"disposition: config error: {exc}", file=sys.stderr)
        return 2
    ctx = Context(cfg)
    try:
        for stage in RUNNERS[args.stage]:
            stage(ctx)
        ctx.finish()
    except StageError as exc:
        print(f"disposition {args.stage}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as exc:
        print(f"disposition {args.stage}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
