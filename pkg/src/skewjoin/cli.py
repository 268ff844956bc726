"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error.
Any config key can be passed as ``--dotted.key value`` after the
subcommand's own options.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from collections.abc import Sequence
from pathlib import Path

from skewjoin import config as config_mod
from skewjoin import sfilter
from skewjoin.config import Config, ConfigError
from skewjoin.engine import WorkerError, build_cluster, knn_join, range_join
from skewjoin.geometry import Rect
from skewjoin.workload import (
    DataError,
    gen_knn_workload,
    gen_points,
    gen_workload,
    ingest,
    read_knn_queries,
    read_range_queries,
    write_knn_queries,
    write_points,
    write_range_queries,
)

log = logging.getLogger("skewjoin")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
METRIC_COLUMNS = ("operator", "n_partitions", "filter", "scheduler", "shuffle_count",
                  "makespan", "merge_volume", "fp_rate", "filter_bits", "result_pairs")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config(args, extra: Sequence[str]) -> Config:
    return config_mod.load(args.config, config_mod.parse_overrides(extra))


def _data(cfg: Config):
    if cfg["data.path"]:
        pts, _ = ingest(cfg["data.path"])
        return pts
    return gen_points(cfg.data_spec())


def _range_queries(cfg: Config, boundary: Rect):
    if cfg["workload.path"]:
        return read_range_queries(cfg["workload.path"])
    qs = gen_workload(cfg.workload_spec(), boundary)
    return list(range(len(qs))), qs


def _knn_queries(cfg: Config, boundary: Rect):
    if cfg["workload.path"]:
        return read_knn_queries(cfg["workload.path"])
    return gen_knn_workload(cfg.workload_spec(), boundary)


def metrics_row(operator: str, ecfg, metrics) -> dict:
    row = {"operator": operator, "n_partitions": ecfg.n_partitions,
           "filter": "on" if ecfg.use_filter else "off",
           "scheduler": "on" if ecfg.use_scheduler else "off"}
    row.update(metrics.row())
    return row


def write_metrics(rows: Sequence[dict], out) -> None:
    w = csv.DictWriter(out, fieldnames=METRIC_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)


def _emit(rows, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_metrics(rows, fh)
    else:
        write_metrics(rows, sys.stdout)


# -- subcommands ----------------------------------------------------------


def cmd_ingest(args, cfg: Config) -> int:
    pts, bad = ingest(args.path)
    b = Rect.bounding(pts)
    print(f"points: {len(pts)}  malformed: {bad}")
    print(f"bounds: {b.min_x!r} {b.min_y!r} {b.max_x!r} {b.max_y!r}")
    if args.out:
        write_points(args.out, pts)
    return EXIT_OK


def cmd_gen_workload(args, cfg: Config) -> int:
    data = None
    if cfg["data.path"]:
        data = _data(cfg)
        boundary = Rect.bounding(data)
    else:
        boundary = cfg.boundary()
    if args.points_out:
        write_points(args.points_out, data if data is not None else gen_points(cfg.data_spec()))
    if args.operator == "range":
        write_range_queries(args.out, gen_workload(cfg.workload_spec(), boundary))
    else:
        write_knn_queries(args.out, gen_knn_workload(cfg.workload_spec(), boundary))
    return EXIT_OK


def cmd_index(args, cfg: Config) -> int:
    data = _data(cfg)
    cluster = build_cluster(data, cfg.engine())
    print(f"{'pid':>4} {'points':>8} {'filter_bits':>12}  region")
    for p in cluster.partitions:
        r = p.region
        print(f"{p.partition_id:>4} {len(p.data):>8} {p.filter.space_bits:>12}  "
              f"[{r.min_x:.6g}, {r.min_y:.6g}, {r.max_x:.6g}, {r.max_y:.6g}]")
    if args.filters_out:
        out = Path(args.filters_out)
        out.mkdir(parents=True, exist_ok=True)
        for p in cluster.partitions:
            (out / f"filter_{p.partition_id:04d}.bin").write_bytes(sfilter.serialize(p.filter))
    return EXIT_OK


def cmd_range_join(args, cfg: Config) -> int:
    data = _data(cfg)
    ids, queries = _range_queries(cfg, Rect.bounding(data))
    ecfg = cfg.engine()
    result, metrics = range_join(data, queries, ecfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for qi, pid in result.pairs:
                fh.write(f"{ids[qi]},{pid}\n")
    _emit([metrics_row("range", ecfg, metrics)], args.metrics)
    return EXIT_OK


def cmd_knn_join(args, cfg: Config) -> int:
    data = _data(cfg)
    queries = _knn_queries(cfg, Rect.bounding(data))
    ecfg = cfg.engine()
    k = args.k if args.k is not None else cfg["workload.k"]
    result, metrics = knn_join(data, queries, k, ecfg)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for res in result.knn:
                for rank, (pid, d) in enumerate(res.neighbors, 1):
                    fh.write(f"{res.query_id},{rank},{pid},{d!r}\n")
    _emit([metrics_row("knn", ecfg, metrics)], args.metrics)
    return EXIT_OK


def run_bench(cfg: Config) -> list[dict]:
    """Run the configured grid; one metrics row per cell, in grid order."""
    ops = cfg["bench.operators"]
    for op in ops:
        if op not in ("range", "knn"):
            raise ConfigError(f"bench.operators: unknown operator {op!r}")
    data = _data(cfg)
    boundary = Rect.bounding(data)
    rows = []
    for n in cfg["bench.partitions"]:
        base = cfg.engine(n_partitions=n)
        cluster = build_cluster(data, base)
        for op in ops:
            for use_filter in cfg["bench.filter"]:
                for use_sched in cfg["bench.scheduler"]:
                    ecfg = cfg.engine(n_partitions=n, use_filter=use_filter,
                                      use_scheduler=use_sched)
                    if op == "range":
                        _, queries = _range_queries(cfg, boundary)
                        _, metrics = range_join(data, queries, ecfg, cluster)
                    else:
                        queries = _knn_queries(cfg, boundary)
                        _, metrics = knn_join(data, queries, cfg["workload.k"], ecfg, cluster)
                    rows.append(metrics_row(op, ecfg, metrics))
    return rows


def summarize(rows: Sequence[dict]) -> str:
    """Aligned text summary with paired on/off ratios."""
    out = io.StringIO()
    out.write(f"{'operator':<8} {'N':>4} {'filter':>6} {'sched':>6} {'shuffle':>9} "
              f"{'makespan':>10} {'fp_rate':>9} {'bits':>9} {'pairs':>9}\n")
    index = {}
    for r in rows:
        key = (r["operator"], int(r["n_partitions"]), r["filter"], r["scheduler"])
        index[key] = r
        out.write(f"{r['operator']:<8} {int(r['n_partitions']):>4} {r['filter']:>6} "
                  f"{r['scheduler']:>6} {int(r['shuffle_count']):>9} {int(r['makespan']):>10} "
                  f"{float(r['fp_rate']):>9.4f} {int(r['filter_bits']):>9} "
                  f"{int(r['result_pairs']):>9}\n")
    lines = []
    for (op, n, f, s), r in index.items():
        if s == "on" and (op, n, f, "off") in index:
            off = int(index[(op, n, f, "off")]["makespan"])
            ratio = int(r["makespan"]) / off if off else float("nan")
            lines.append(f"makespan ratio  {op:<5} N={n:<3} filter={f:<3}  "
                         f"sched on/off = {ratio:.4f}")
        if f == "on" and (op, n, "off", s) in index:
            off = int(index[(op, n, "off", s)]["shuffle_count"])
            ratio = int(r["shuffle_count"]) / off if off else float("nan")
            lines.append(f"shuffle ratio   {op:<5} N={n:<3} sched={s:<3}   "
                         f"filter on/off = {ratio:.4f}")
    if lines:
        out.write("\n" + "\n".join(lines) + "\n")
    return out.getvalue()


def cmd_bench(args, cfg: Config) -> int:
    rows = run_bench(cfg)
    out = args.out or cfg["bench.out"]
    _emit(rows, out)
    summary = summarize(rows)
    path = args.summary or cfg["bench.summary"]
    if path:
        Path(path).write_text(summary, encoding="utf-8")
    elif out:
        print(summary, end="")
    return EXIT_OK


def read_metrics(path: str) -> list[dict]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or tuple(reader.fieldnames) != METRIC_COLUMNS:
                raise DataError(f"{path}: not a metrics CSV")
            rows = list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: no metrics rows")
    return rows


def cmd_report(args, cfg: Config) -> int:
    try:
        print(summarize(read_metrics(args.metrics_csv)), end="")
    except (KeyError, ValueError) as exc:
        raise DataError(f"{args.metrics_csv}: {exc}") from exc
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skewjoin", description=__doc__.splitlines()[0])
    p.add_argument("--config", help=f"key=value config file (default: ${config_mod.ENV_VAR})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="validate a point file")
    s.add_argument("path")
    s.add_argument("--out", help="write the parsed points back out")
    s.set_defaults(fn=cmd_ingest)

    s = sub.add_parser("gen-workload", help="generate a query file")
    s.add_argument("--out", required=True)
    s.add_argument("--operator", choices=("range", "knn"), default="range")
    s.add_argument("--points-out", help="also write the synthetic data set")
    s.set_defaults(fn=cmd_gen_workload)

    s = sub.add_parser("index", help="build partitions and filters, print a summary")
    s.add_argument("--filters-out", help="directory for serialized filters")
    s.set_defaults(fn=cmd_index)

    s = sub.add_parser("range-join", help="run a range join")
    s.add_argument("--out", help="write query_id,point_id pairs")
    s.add_argument("--metrics", help="metrics CSV path (default stdout)")
    s.set_defaults(fn=cmd_range_join)

    s = sub.add_parser("knn-join", help="run a kNN join")
    s.add_argument("--k", type=int)
    s.add_argument("--out", help="write query_id,rank,point_id,distance rows")
    s.add_argument("--metrics", help="metrics CSV path (default stdout)")
    s.set_defaults(fn=cmd_knn_join)

    s = sub.add_parser("bench", help="run the configured experiment grid")
    s.add_argument("--out", help="metrics CSV path (default bench.out)")
    s.add_argument("--summary", help="summary text path")
    s.set_defaults(fn=cmd_bench)

    s = sub.add_parser("report", help="summarize a metrics CSV")
    s.add_argument("metrics_csv")
    s.set_defaults(fn=cmd_report)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = _load_config(args, extra)
        return args.fn(args, cfg)
    except (UsageError, ConfigError) as exc:
        print(f"skewjoin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, WorkerError, ValueError, OSError) as exc:
        print(f"skewjoin: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
