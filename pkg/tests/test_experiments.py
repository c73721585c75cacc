import json
import math

import numpy as np
import pytest

from bucketed_hash import generate_keys, generate_queries
from bucketed_hash.experiments import (
    CSV_FIELDS,
    BudgetExhausted,
    Cell,
    ExperimentSpec,
    Record,
    TableSpec,
    parse_lf_grid,
    run_experiment,
    run_probe_analysis,
    run_success_rate,
    run_trial,
)
from bucketed_hash.tables import build

from conftest import small_config


def test_table_spec_defaults():
    assert TableSpec("iht", 16).threshold_pct == 80
    assert TableSpec("iht", 16).threshold == 12
    assert TableSpec("bcht", 16, 50).threshold_pct is None


def test_trial_far_below_threshold():
    records = run_trial(Cell(TableSpec("bcht", 16), 20_000, 0.1, seed=1))
    assert [(r.op, r.positive_ratio) for r in records] == \
        [("insert", None), ("find", 1.0), ("find", 0.5), ("find", 0.0)]
    assert all(r.successes == 10 and r.failures == 0 for r in records)
    assert records[0].mean_probes == 1.0


def test_trial_budget_exhausted():
    cell = Cell(TableSpec("bp2ht", 8), 5_000, 1.0, (1.0,), trials=2, max_failures=4)
    with pytest.raises(BudgetExhausted) as info:
        run_trial(cell)
    recs = info.value.records
    assert recs[0].successes == 0 and recs[0].failures == 4
    assert math.isnan(recs[0].mean_probes)
    assert recs[0].realized_lf == 1.0


def test_trial_counts_successes():
    recs = run_trial(Cell(TableSpec("iht", 16, 40), 5_000, 0.86, (1.0,), trials=3, seed=4))
    assert recs[0].successes == 3


def test_probe_mean_ignores_query_order():
    keyset = generate_keys(1, 10_000)
    table, _ = build(keyset, small_config("bcht", len(keyset), 0.95))
    q = generate_queries(keyset, 0.5, 10_000, seed=2)
    perm = np.random.default_rng(0).permutation(len(q))
    assert table.find_many(q.keys).probes.mean() == table.find_many(q.keys[perm]).probes.mean()


def test_experiment_deterministic():
    spec = ExperimentSpec("load-factor-sweep", [TableSpec("bcht", 16), TableSpec("iht", 8, 60)],
                          [5_000], [0.7, 0.8], trials=2, seed=9)
    a, b = run_experiment(spec), run_experiment(spec)
    strip = lambda res: [{**r.row(), "ops_per_sec": None} for r in res.records]
    assert strip(a) == strip(b)
    assert len(a.records) == 2 * 2 * 4


def test_spec_validation_and_json():
    with pytest.raises(ValueError):
        ExperimentSpec("load-factor-sweep", [], [10], [0.5])
    with pytest.raises(ValueError):
        ExperimentSpec("load-factor-sweep", [TableSpec("bcht", 16)], [10], [0.5], trials=0)
    spec = ExperimentSpec.from_json(json.dumps({
        "scenario": "positive-ratio-sweep", "tables": [{"kind": "bp2ht", "bucket_size": 16}],
        "n_keys": [1000], "load_factors": [0.5], "positive_ratios": [0.5], "mode": "par"}))
    assert spec.tables[0].kind.value == "bp2ht" and spec.cells()[0].positive_ratios == (0.5,)


def test_record_row_format():
    r = Record("iht", 16, 80, 100, 0.5, "find", 0.5, 1.5, 10.0, 10, 0, 3)
    row = r.row()
    assert list(row) == list(CSV_FIELDS)
    assert row["positive_ratio"] == "50" and row["mean_probes"] == "1.500000"


def test_success_rate_low_load():
    sr = run_success_rate(TableSpec("bcht", 16), [0.01, 0.5], success_trials=100, n=2_000)
    assert sr.fractions == {0.01: 1.0, 0.5: 1.0} and sr.max_lf == 0.5
    assert sr.records[0].successes == 100


def test_success_rate_none_when_impossible():
    sr = run_success_rate(TableSpec("bp2ht", 8), [1.0], success_trials=5, n=2_000)
    assert sr.fractions[1.0] == 0.0 and sr.max_lf is None


def test_success_rate_early_stop_keeps_verdict():
    grid = [0.6, 0.66, 0.7]
    full = run_success_rate(TableSpec("bp2ht", 8), grid, success_trials=100, n=5_000)
    fast = run_success_rate(TableSpec("bp2ht", 8), grid, success_trials=100, n=5_000,
                            early_stop=True)
    assert fast.max_lf == full.max_lf
    for lf in grid:
        assert (fast.fractions[lf] >= 0.99) == (full.fractions[lf] >= 0.99)
        assert fast.fractions[lf] >= full.fractions[lf]


def test_probe_analysis_skips_unreachable_loads():
    res = run_probe_analysis([TableSpec("bp2ht", 8)], [0.5, 1.0, 0.6], n=3_000, trials=2,
                             max_failures=3)
    assert [round(r.realized_lf, 2) for r in res.find("insert")] == [0.5, 0.6]
    assert len(res.records) == 2 * 4
    assert res.skipped == ["bp2ht b=8 n=3000 lf=1.0"]


def test_insert_probes_monotone_in_load():
    grid = [0.6, 0.7, 0.8, 0.9]
    res = run_probe_analysis([TableSpec("bcht", 16), TableSpec("iht", 16, 60),
                              TableSpec("bp2ht", 16), TableSpec("1cht", 1)], grid, n=20_000,
                             trials=2, ratios=())
    for kind in ("bcht", "iht", "1cht"):
        means = [r.mean_probes for r in res.find("insert", kind=kind)]
        assert len(means) == len(grid)
        assert all(b >= a - 0.02 for a, b in zip(means, means[1:]))
    assert {r.mean_probes for r in res.find("insert", kind="bp2ht")} == {2.0}


def test_probe_means_insensitive_to_n():
    cell = lambda n: Cell(TableSpec("bcht", 16), n, 0.95, (1.0, 0.0), trials=3, seed=2)
    small, large = run_trial(cell(10**5)), run_trial(cell(10**6))
    for a, b in zip(small, large):
        assert abs(a.mean_probes - b.mean_probes) <= 0.02 * b.mean_probes


def test_parse_lf_grid():
    g = parse_lf_grid("0.6:0.99:0.01")
    assert len(g) == 40 and g[0] == 0.6 and g[-1] == 0.99
    assert parse_lf_grid("0.9") == [0.9]
    for bad in ("0.9:0.1:0.1", "0.1:0.2", "0.1:0.2:0"):
        with pytest.raises(ValueError):
            parse_lf_grid(bad)
