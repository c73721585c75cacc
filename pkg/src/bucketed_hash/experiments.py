"""Benchmark scenarios: load-factor and key-count sweeps, query-ratio sweeps,
build success rates and probe analysis.

Every scenario is a grid of cells. A cell fixes one table variant, one key
count and one load factor; its key set is drawn once and reused while fresh
hash constants are drawn for every build attempt. Probe means are averaged
over successful builds only. Throughput is wall-clock and informational.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import time
from decimal import Decimal
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from bucketed_hash.core import Kind, make_config, threshold_from_pct
from bucketed_hash.hashing import derive_seed, generate_keys, generate_queries
from bucketed_hash.tables import Mode, build

CSV_FIELDS = ("kind", "b", "threshold_pct", "n", "realized_lf", "op", "positive_ratio",
              "mean_probes", "ops_per_sec", "successes", "failures", "seed")

DEFAULT_BUCKET_SIZE = {Kind.ONE_CHT: 1, Kind.BCHT: 16, Kind.BP2HT: 32, Kind.IHT: 32}


class Scenario(str, enum.Enum):
    LOAD_FACTOR_SWEEP = "load-factor-sweep"
    KEY_COUNT_SWEEP = "key-count-sweep"
    POSITIVE_RATIO_SWEEP = "positive-ratio-sweep"
    SUCCESS_RATE = "success-rate"
    PROBE_ANALYSIS = "probe-analysis"


class BudgetExhausted(RuntimeError):
    """A cell hit its failure budget before collecting the requested successful builds."""

    def __init__(self, cell: Cell, records: list[Record]):
        super().__init__(f"{cell.label()}: {cell.max_failures} failed builds")
        self.cell = cell
        self.records = records


@dataclass(frozen=True)
class TableSpec:
    kind: Kind
    bucket_size: int
    threshold_pct: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is Kind.IHT and self.threshold_pct is None:
            object.__setattr__(self, "threshold_pct", 80)
        if self.kind is not Kind.IHT:
            object.__setattr__(self, "threshold_pct", None)

    @property
    def threshold(self) -> int | None:
        if self.threshold_pct is None:
            return None
        return threshold_from_pct(self.threshold_pct, self.bucket_size)


@dataclass(frozen=True)
class Cell:
    table: TableSpec
    n: int
    load_factor: float
    positive_ratios: tuple[float, ...] = (1.0, 0.5, 0.0)
    trials: int = 10
    max_failures: int = 50
    seed: int = 0
    mode: Mode = Mode.SEQUENTIAL
    workers: int = 8
    max_chain: int | None = None
    iceberg_mode: str = "fallback"

    def label(self) -> str:
        t = self.table
        extra = f" t={t.threshold_pct}%" if t.threshold_pct is not None else ""
        return f"{t.kind.value} b={t.bucket_size}{extra} n={self.n} lf={self.load_factor}"

    def config(self, attempt: int):
        t = self.table
        return make_config(t.kind, self.n, self.load_factor, t.bucket_size, t.threshold,
                           seed=derive_seed(self.seed, "attempt", attempt),
                           max_chain=self.max_chain)


@dataclass
class Record:
    kind: str
    b: int
    threshold_pct: int | None
    n: int
    realized_lf: float
    op: str
    positive_ratio: float | None
    mean_probes: float
    ops_per_sec: float
    successes: int
    failures: int
    seed: int

    def row(self) -> dict:
        d = asdict(self)
        d["realized_lf"] = f"{self.realized_lf:.6f}"
        d["mean_probes"] = "" if math.isnan(self.mean_probes) else f"{self.mean_probes:.6f}"
        d["ops_per_sec"] = "" if math.isnan(self.ops_per_sec) else f"{self.ops_per_sec:.1f}"
        d["threshold_pct"] = "" if self.threshold_pct is None else self.threshold_pct
        d["positive_ratio"] = "" if self.positive_ratio is None else \
            f"{round(self.positive_ratio * 100)}"
        return d


@dataclass
class ExperimentResult:
    records: list[Record] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    exhausted: list[str] = field(default_factory=list)
    started: float = 0.0
    elapsed_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in self.records:
            w.writerow(r.row())
        return buf.getvalue()

    def to_json(self) -> str:
        def clean(v):
            return None if isinstance(v, float) and math.isnan(v) else v
        return json.dumps({
            "records": [{k: clean(v) for k, v in asdict(r).items()} for r in self.records],
            "skipped": self.skipped,
            "exhausted": self.exhausted,
            "started": self.started,
            "elapsed_s": self.elapsed_s,
            **self.extra,
        }, indent=2)

    def write(self, path, fmt: str = "csv") -> None:
        Path(path).write_text(self.to_csv() if fmt == "csv" else self.to_json())

    def find(self, op: str, positive_ratio=None, **match) -> list[Record]:
        out = []
        for r in self.records:
            if r.op != op or (positive_ratio is not None and r.positive_ratio != positive_ratio):
                continue
            if all(getattr(r, k) == v for k, v in match.items()):
                out.append(r)
        return out


@dataclass
class ExperimentSpec:
    scenario: Scenario
    tables: list[TableSpec]
    n_keys: list[int] = field(default_factory=lambda: [1_000_000])
    load_factors: list[float] = field(default_factory=lambda: [0.8, 0.9])
    positive_ratios: list[float] = field(default_factory=lambda: [1.0, 0.5, 0.0])
    trials: int = 10
    max_failures: int = 50
    success_trials: int = 200
    seed: int = 0
    mode: Mode = Mode.SEQUENTIAL
    workers: int = 8
    max_chain: int | None = None
    iceberg_mode: str = "fallback"

    def __post_init__(self):
        self.scenario = Scenario(self.scenario)
        self.mode = Mode.parse(self.mode)
        self.tables = [t if isinstance(t, TableSpec) else TableSpec(**t) for t in self.tables]
        if not self.tables or not self.n_keys or not self.load_factors:
            raise ValueError("experiment grids must be non-empty")
        if self.trials < 1 or self.success_trials < 1:
            raise ValueError("trials must be >= 1")
        if any(not 0 <= r <= 1 for r in self.positive_ratios):
            raise ValueError("positive ratios must be in [0, 1]")

    @classmethod
    def from_json(cls, text: str) -> ExperimentSpec:
        return cls(**json.loads(text))

    def cells(self) -> list[Cell]:
        return [Cell(t, n, lf, tuple(self.positive_ratios), self.trials, self.max_failures,
                     self.seed, self.mode, self.workers, self.max_chain, self.iceberg_mode)
                for t in self.tables for n in self.n_keys for lf in self.load_factors]


def _build(cell: Cell, keyset, attempt: int):
    t0 = time.perf_counter()
    table, outcome = build(keyset, cell.config(attempt), cell.mode, cell.workers,
                           iceberg_mode=cell.iceberg_mode)
    return table, outcome, time.perf_counter() - t0


def run_trial(cell: Cell, keyset=None) -> list[Record]:
    """Collect ``cell.trials`` successful builds and their query workloads.

    Raises :class:`BudgetExhausted` (carrying the partial records) once
    ``cell.max_failures`` builds have failed.
    """
    keyset = keyset if keyset is not None else generate_keys(derive_seed(cell.seed, "keys"), cell.n)
    insert_probes, insert_time = [], 0.0
    find_probes = {r: [] for r in cell.positive_ratios}
    find_time = {r: 0.0 for r in cell.positive_ratios}
    failures, attempt, realized = 0, 0, float("nan")
    while len(insert_probes) < cell.trials and failures < cell.max_failures:
        table, outcome, dt = _build(cell, keyset, attempt)
        attempt += 1
        realized = len(keyset) / table.config.capacity
        if not outcome.success:
            failures += 1
            continue
        insert_probes.append(outcome.probes.mean_probes)
        insert_time += dt
        for ratio in cell.positive_ratios:
            q = generate_queries(keyset, ratio, cell.n,
                                 derive_seed(cell.seed, "queries", len(insert_probes)))
            t0 = time.perf_counter()
            res = table.find_many(q.keys)
            find_time[ratio] += time.perf_counter() - t0
            find_probes[ratio].append(float(res.probes.mean()))

    t = cell.table
    ok = len(insert_probes)

    def record(op, ratio, probes, seconds):
        return Record(t.kind.value, t.bucket_size, t.threshold_pct, cell.n, realized, op, ratio,
                      float(np.mean(probes)) if probes else float("nan"),
                      cell.n * ok / seconds if seconds > 0 else float("nan"),
                      ok, failures, cell.seed)

    records = [record("insert", None, insert_probes, insert_time)]
    records += [record("find", r, find_probes[r], find_time[r]) for r in cell.positive_ratios]
    if ok < cell.trials:
        raise BudgetExhausted(cell, records)
    return records


def run_cells(cells: list[Cell], result: ExperimentResult | None = None,
              skip_exhausted: bool = False, parallel_cells: int = 1) -> ExperimentResult:
    result = result or ExperimentResult(started=time.time())
    t0 = time.perf_counter()

    def one(cell):
        try:
            return cell, run_trial(cell), None
        except BudgetExhausted as e:
            return cell, e.records, e

    if parallel_cells > 1:
        with ThreadPoolExecutor(parallel_cells) as pool:
            outcomes = list(pool.map(one, cells))
    else:
        outcomes = [one(c) for c in cells]
    for cell, records, err in outcomes:
        if err is None:
            result.records.extend(records)
        elif skip_exhausted:
            result.skipped.append(cell.label())
        else:
            result.exhausted.append(cell.label())
            result.records.extend(records)
    result.elapsed_s += time.perf_counter() - t0
    return result


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    if spec.scenario is Scenario.SUCCESS_RATE:
        result = ExperimentResult(started=time.time())
        for t in spec.tables:
            for n in spec.n_keys:
                sr = run_success_rate(t, spec.load_factors, spec.success_trials, spec.seed, n,
                                      spec.mode, spec.workers, spec.max_chain,
                                      iceberg_mode=spec.iceberg_mode)
                result.records.extend(sr.records)
                result.extra.setdefault("max_load_factor", {})[_table_label(t, n)] = sr.max_lf
        result.elapsed_s = time.time() - result.started
        return result
    if spec.scenario is Scenario.PROBE_ANALYSIS:
        return run_probe_analysis(spec.tables, spec.load_factors, spec.n_keys[0], spec.seed,
                                  spec.trials, spec.max_failures, spec.mode, spec.workers,
                                  max_chain=spec.max_chain, iceberg_mode=spec.iceberg_mode)
    return run_cells(spec.cells())


def _table_label(t: TableSpec, n: int) -> str:
    extra = f"/t{t.threshold_pct}" if t.threshold_pct is not None else ""
    return f"{t.kind.value}/b{t.bucket_size}{extra}/n{n}"


@dataclass
class SuccessRate:
    fractions: dict[float, float]
    max_lf: float | None
    records: list[Record]


def run_success_rate(table: TableSpec, lf_grid, success_trials: int = 200, seed: int = 0,
                     n: int = 100_000, mode=Mode.SEQUENTIAL, workers: int = 8,
                     max_chain: int | None = None, level: float = 0.99,
                     iceberg_mode: str = "fallback", early_stop: bool = False) -> SuccessRate:
    """Build ``success_trials`` tables per load factor from one fixed key set.

    The max load factor is the highest grid point whose success fraction is at
    least ``level``. With ``early_stop`` a load factor is abandoned as soon as
    its failures rule out ``level``; its fraction is then the upper bound
    ``(success_trials - failures) / success_trials``, which keeps every
    pass/fail verdict identical to the full run.
    """
    if success_trials < 1:
        raise ValueError("success_trials must be >= 1")
    keyset = generate_keys(derive_seed(seed, "keys"), n)
    fractions, records = {}, []
    for lf in lf_grid:
        cell = Cell(table, n, lf, (), 1, 0, seed, Mode.parse(mode), workers, max_chain,
                    iceberg_mode)
        allowed = math.floor((1 - level) * success_trials + 1e-9)
        wins, failures, probes, seconds, realized = 0, 0, [], 0.0, float("nan")
        for attempt in range(success_trials):
            tbl, outcome, dt = _build(cell, keyset, attempt)
            realized = n / tbl.config.capacity
            if outcome.success:
                wins += 1
                probes.append(outcome.probes.mean_probes)
                seconds += dt
            else:
                failures += 1
                if early_stop and failures > allowed:
                    break
        fractions[lf] = (success_trials - failures) / success_trials
        records.append(Record(table.kind.value, table.bucket_size, table.threshold_pct, n,
                              realized, "build", None,
                              float(np.mean(probes)) if probes else float("nan"),
                              n * wins / seconds if seconds > 0 else float("nan"),
                              wins, failures, seed))
    passing = [lf for lf, f in fractions.items() if f >= level]
    return SuccessRate(fractions, max(passing) if passing else None, records)


def run_probe_analysis(tables: list[TableSpec], lf_grid, n: int = 1_000_000, seed: int = 0,
                       trials: int = 10, max_failures: int = 50, mode=Mode.SEQUENTIAL,
                       workers: int = 8, ratios=(1.0, 0.5, 0.0), max_chain: int | None = None,
                       iceberg_mode: str = "fallback") -> ExperimentResult:
    """Mean insert and query probes per table and load factor.

    Load factors a table cannot reach within the failure budget are skipped
    and listed in ``result.skipped``; larger load factors for that table are
    not attempted.
    """
    result = ExperimentResult(started=time.time())
    t0 = time.perf_counter()
    for t in tables:
        keyset = generate_keys(derive_seed(seed, "keys"), n)
        for i, lf in enumerate(sorted(lf_grid)):
            cell = Cell(t, n, lf, tuple(ratios), trials, max_failures, seed, Mode.parse(mode),
                        workers, max_chain, iceberg_mode)
            try:
                result.records.extend(run_trial(cell, keyset))
            except BudgetExhausted:
                result.skipped.extend(replace(cell, load_factor=x).label()
                                      for x in sorted(lf_grid)[i:])
                break
    result.elapsed_s = time.perf_counter() - t0
    return result


def parse_lf_grid(text: str) -> list[float]:
    """``"0.9"`` or an inclusive range ``"0.6:0.99:0.01"``."""
    if ":" not in text:
        return [float(text)]
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"bad load factor range {text!r}")
    lo, hi, step = (Decimal(p) for p in parts)
    if step <= 0 or lo > hi:
        raise ValueError(f"bad load factor range {text!r}")
    out, x = [], lo
    while x <= hi:
        out.append(float(x))
        x += step
    return out
