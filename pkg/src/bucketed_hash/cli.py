"""``bucketed-hash`` command line.

Subcommands::

    bench         fixed-load cells: insert and query probe means per (table, n, lf)
    probes        probe analysis over a load-factor grid; unreachable loads are skipped
    success-rate  fraction of successful builds per load factor
    sectors       sector-model cost per key for measured (or given) probe means
    validate      one build checked by the oracles

Exit status is 2 for bad flags, 1 when a cell ran out of its failure budget
(or ``validate`` found a violation) and 0 otherwise. The ``ops_per_sec``
column is wall-clock on the local machine and is not a reproducible metric.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from bucketed_hash.core import Kind, make_config
from bucketed_hash.experiments import (
    DEFAULT_BUCKET_SIZE,
    ExperimentResult,
    ExperimentSpec,
    TableSpec,
    parse_lf_grid,
    run_experiment,
    run_probe_analysis,
    run_success_rate,
)
from bucketed_hash.hashing import derive_seed, generate_keys
from bucketed_hash.metrics import Op, SectorModel, predict_sectors
from bucketed_hash.oracle import check_admissibility, check_membership
from bucketed_hash.tables import Mode, build

RATIOS = {"100": 1.0, "50": 0.5, "0": 0.0}
SECTOR_FIELDS = ("kind", "b", "threshold_pct", "n", "realized_lf", "op", "positive_ratio",
                 "mean_probes", "sectors_per_key")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _lf(text: str) -> list[float]:
    try:
        grid = parse_lf_grid(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    if any(not 0 < x <= 1 for x in grid):
        raise argparse.ArgumentTypeError("load factors must lie in (0, 1]")
    return grid


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--table", action="append", choices=[k.value for k in Kind],
                   help="table variant (repeatable; default bcht)")
    p.add_argument("--bucket-size", type=_positive,
                   help="slots per bucket; 1cht always uses 1 "
                        "(defaults: bcht 16, bp2ht 32, iht 32)")
    p.add_argument("--threshold-pct", type=int, action="append",
                   help="iceberg threshold as a percentage of b (repeatable; default 80)")
    p.add_argument("--num-keys", type=_positive, action="append",
                   help="keys per table (repeatable for bench)")
    p.add_argument("--load-factor", type=_lf, action="append",
                   help="load factor, repeatable, or an inclusive range a:b:step")
    p.add_argument("--positive-ratio", action="append", choices=list(RATIOS),
                   help="query share of present keys in percent (repeatable)")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--trials", type=_positive, default=10,
                   help="successful builds averaged per cell")
    p.add_argument("--max-failures", type=int, default=50,
                   help="failed builds tolerated per cell")
    p.add_argument("--success-trials", type=_positive, default=200)
    p.add_argument("--mode", choices=["seq", "par"], default="seq")
    p.add_argument("--workers", type=_positive, default=8)
    p.add_argument("--max-chain", type=_positive, help="cuckoo eviction limit")
    p.add_argument("--iceberg-mode", choices=["fallback", "spill"], default="fallback")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bucketed-hash", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    bench = sub.add_parser("bench", parents=[common], help="fixed-load probe benchmark")
    bench.add_argument("--spec", type=Path, help="experiment description as JSON")
    sub.add_parser("probes", parents=[common], help="probe analysis over a load-factor grid")
    rate = sub.add_parser("success-rate", parents=[common],
                          help="build success fraction per load")
    rate.add_argument("--early-stop", action="store_true",
                      help="abandon a load factor once 99%% success is out of reach")
    sectors = sub.add_parser("sectors", parents=[common], help="sector-model cost per key")
    sectors.add_argument("--probes", type=float, action="append",
                         help="skip measuring and price these probe means directly")
    sectors.add_argument("--op", choices=["find", "insert"], default="find",
                         help="operation priced with --probes")
    sub.add_parser("validate", parents=[common], help="oracle checks on one build")
    return parser


def _tables(args, parser) -> list[TableSpec]:
    kinds = [Kind(k) for k in (args.table or ["bcht"])]
    pcts = args.threshold_pct or [None]
    out = []
    for kind in kinds:
        if kind is Kind.ONE_CHT:
            b = 1
        else:
            b = args.bucket_size or DEFAULT_BUCKET_SIZE[kind]
        for pct in (pcts if kind is Kind.IHT else [None]):
            if pct is not None and not 0 <= pct <= 100:
                parser.error("--threshold-pct must be within 0..100")
            spec = TableSpec(kind, b, pct)
            if spec not in out:
                out.append(spec)
    return out


def _validate(args, parser, tables, n_keys, lfs) -> None:
    if args.max_failures < 0:
        parser.error("--max-failures must be >= 0")
    for t in tables:
        for n in n_keys:
            for lf in lfs:
                try:
                    make_config(t.kind, n, lf, t.bucket_size, t.threshold,
                                max_chain=args.max_chain)
                except ValueError as e:
                    parser.error(f"{t.kind.value}: {e}")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _render(result: ExperimentResult, fmt: str) -> str:
    return result.to_csv() if fmt == "csv" else result.to_json() + "\n"


def _report(result: ExperimentResult) -> int:
    for label in result.exhausted:
        print(f"failure budget exhausted: {label}", file=sys.stderr)
    for label in result.skipped:
        print(f"skipped: {label}", file=sys.stderr)
    return 1 if result.exhausted or result.skipped else 0


def _cmd_bench(args, parser) -> int:
    if args.spec is not None:
        try:
            spec = ExperimentSpec.from_json(args.spec.read_text())
        except (OSError, ValueError, TypeError) as e:
            parser.error(f"--spec: {e}")
    else:
        tables = _tables(args, parser)
        n_keys = args.num_keys or [1_000_000]
        lfs = [x for grid in (args.load_factor or [[0.9]]) for x in grid]
        _validate(args, parser, tables, n_keys, lfs)
        spec = ExperimentSpec("load-factor-sweep", tables, n_keys, lfs,
                              [RATIOS[r] for r in (args.positive_ratio or ["100", "50", "0"])],
                              args.trials, args.max_failures, args.success_trials, args.seed,
                              args.mode, args.workers, args.max_chain, args.iceberg_mode)
    result = run_experiment(spec)
    _emit(_render(result, args.format), args.out)
    return _report(result)


def _probe_result(args, parser) -> ExperimentResult:
    tables = _tables(args, parser)
    n = (args.num_keys or [1_000_000])[0]
    lfs = sorted({x for grid in (args.load_factor or [parse_lf_grid("0.6:0.9:0.05")])
                  for x in grid})
    _validate(args, parser, tables, [n], lfs)
    return run_probe_analysis(tables, lfs, n, args.seed, args.trials, args.max_failures,
                              args.mode, args.workers,
                              [RATIOS[r] for r in (args.positive_ratio or ["100", "50", "0"])],
                              args.max_chain, args.iceberg_mode)


def _cmd_probes(args, parser) -> int:
    result = _probe_result(args, parser)
    _emit(_render(result, args.format), args.out)
    return _report(result)


def _cmd_success_rate(args, parser) -> int:
    tables = _tables(args, parser)
    n = (args.num_keys or [100_000])[0]
    lfs = sorted({x for grid in (args.load_factor or [parse_lf_grid("0.8:1.0:0.01")])
                  for x in grid})
    _validate(args, parser, tables, [n], lfs)
    result = ExperimentResult()
    peaks = {}
    for t in tables:
        sr = run_success_rate(t, lfs, args.success_trials, args.seed, n, args.mode,
                              args.workers, args.max_chain, iceberg_mode=args.iceberg_mode,
                              early_stop=args.early_stop)
        result.records.extend(sr.records)
        label = f"{t.kind.value} b={t.bucket_size}" + \
            (f" t={t.threshold_pct}%" if t.threshold_pct is not None else "")
        peaks[label] = sr.max_lf
        print(f"{label}: max load factor at 99% success = {sr.max_lf}", file=sys.stderr)
    result.extra["max_load_factor"] = peaks
    _emit(_render(result, args.format), args.out)
    return 0


def _sector_rows(args, parser) -> list[dict]:
    model = SectorModel()
    rows = []
    if args.probes:
        op = Op(args.op)
        for t in _tables(args, parser):
            for p in args.probes:
                if p < 1:
                    parser.error("--probes must be >= 1")
                rows.append({"kind": t.kind.value, "b": t.bucket_size,
                             "threshold_pct": t.threshold_pct, "n": None, "realized_lf": None,
                             "op": op.value, "positive_ratio": None, "mean_probes": p,
                             "sectors_per_key": predict_sectors(model, t.kind, t.bucket_size,
                                                                p, op)})
        return rows
    result = _probe_result(args, parser)
    for r in result.records:
        op = Op(r.op)
        rows.append({"kind": r.kind, "b": r.b, "threshold_pct": r.threshold_pct, "n": r.n,
                     "realized_lf": r.realized_lf, "op": r.op,
                     "positive_ratio": r.positive_ratio, "mean_probes": r.mean_probes,
                     "sectors_per_key": predict_sectors(model, Kind(r.kind), r.b,
                                                        r.mean_probes, op)})
    _report(result)
    return rows


def _cmd_sectors(args, parser) -> int:
    rows = _sector_rows(args, parser)
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
        return 0
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SECTOR_FIELDS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        row = dict(row)
        for k in ("threshold_pct", "n", "realized_lf", "positive_ratio"):
            row[k] = "" if row[k] is None else row[k]
        if row["positive_ratio"] != "":
            row["positive_ratio"] = round(row["positive_ratio"] * 100)
        if row["realized_lf"] != "":
            row["realized_lf"] = f"{row['realized_lf']:.6f}"
        row["mean_probes"] = f"{row['mean_probes']:.6f}"
        row["sectors_per_key"] = f"{row['sectors_per_key']:.6f}"
        w.writerow(row)
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_validate(args, parser) -> int:
    tables = _tables(args, parser)
    if len(tables) != 1:
        parser.error("validate takes exactly one table")
    t = tables[0]
    n = (args.num_keys or [1_000_000])[0]
    lfs = args.load_factor or [[0.8]]
    if len(lfs) != 1 or len(lfs[0]) != 1:
        parser.error("validate takes exactly one load factor")
    lf = lfs[0][0]
    _validate(args, parser, tables, [n], [lf])
    keyset = generate_keys(derive_seed(args.seed, "keys"), n)
    config = make_config(t.kind, n, lf, t.bucket_size, t.threshold, seed=args.seed,
                         max_chain=args.max_chain)
    table, outcome = build(keyset, config, Mode.parse(args.mode), args.workers,
                           iceberg_mode=args.iceberg_mode)
    if not outcome.success:
        print(f"build failed after {outcome.inserted} keys (key {outcome.failed_key})",
              file=sys.stderr)
        return 1
    report = check_membership(table, keyset, n_negative=n, seed=args.seed)
    counters = {
        "false_negatives": report.false_negatives,
        "wrong_values": report.wrong_values,
        "false_positives": report.false_positives,
        "admissibility_violations": check_admissibility(table),
    }
    if args.format == "json":
        _emit(json.dumps(counters, indent=2) + "\n", args.out)
    else:
        _emit("".join(f"{k}={v}\n" for k, v in counters.items()), args.out)
    return 1 if any(counters.values()) else 0


COMMANDS = {
    "bench": _cmd_bench,
    "probes": _cmd_probes,
    "success-rate": _cmd_success_rate,
    "sectors": _cmd_sectors,
    "validate": _cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return COMMANDS[args.command](args, parser)


if __name__ == "__main__":
    sys.exit(main())
