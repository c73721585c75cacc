import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from bucketed_hash.cli import main

GOLDEN = Path(__file__).parent / "golden" / "results_header.csv"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_probes_csv_header_golden(capsys):
    code, out, _ = run(capsys, "probes", "--table", "bcht", "--bucket-size", "16",
                       "--load-factor", "0.6:0.9:0.1", "--num-keys", "20000", "--seed", "7",
                       "--trials", "2")
    assert code == 0
    assert out.splitlines()[0] + "\n" == GOLDEN.read_text()
    r = rows(out)
    assert len(r) == 4 * 4
    assert {x["seed"] for x in r} == {"7"}
    assert [x["positive_ratio"] for x in r[:4]] == ["", "100", "50", "0"]


def test_seq_runs_identical_except_throughput(capsys):
    argv = ["bench", "--table", "iht", "--table", "bp2ht", "--bucket-size", "16",
            "--load-factor", "0.8", "--num-keys", "10000", "--trials", "2", "--seed", "3"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    strip = lambda text: [{k: v for k, v in r.items() if k != "ops_per_sec"} for r in rows(text)]
    assert strip(a) == strip(b) and len(strip(a)) == 8


def test_validate_all_zero(capsys):
    code, out, _ = run(capsys, "validate", "--table", "iht", "--bucket-size", "32",
                       "--threshold-pct", "80", "--load-factor", "0.9", "--num-keys", "50000")
    assert code == 0
    assert out.splitlines() == ["false_negatives=0", "wrong_values=0", "false_positives=0",
                                "admissibility_violations=0"]


def test_validate_json_parallel(capsys):
    code, out, _ = run(capsys, "validate", "--table", "bcht", "--load-factor", "0.95",
                       "--num-keys", "30000", "--mode", "par", "--workers", "8",
                       "--format", "json")
    assert code == 0 and set(json.loads(out).values()) == {0}


def test_budget_exhausted_exit_1(capsys, tmp_path):
    out = tmp_path / "r.csv"
    code, _, err = run(capsys, "bench", "--table", "bp2ht", "--bucket-size", "8",
                       "--load-factor", "1.0", "--num-keys", "3000", "--max-failures", "2",
                       "--positive-ratio", "100", "--out", str(out))
    assert code == 1 and "exhausted" in err
    r = rows(out.read_text())
    assert r[0]["successes"] == "0" and r[0]["failures"] == "2"


def test_probes_skip_exit_1(capsys):
    code, out, err = run(capsys, "probes", "--table", "bp2ht", "--bucket-size", "8",
                         "--load-factor", "0.5", "--load-factor", "1.0", "--num-keys", "3000",
                         "--max-failures", "2", "--trials", "1")
    assert code == 1 and "skipped" in err
    assert len(rows(out)) == 4


@pytest.mark.parametrize("argv", [
    ["probes", "--table", "foo"],
    ["probes", "--load-factor", "1.5"],
    ["probes", "--load-factor", "0.9:0.1:0.1"],
    ["bench", "--positive-ratio", "75"],
    ["bench", "--bucket-size", "12", "--table", "bcht"],
    ["bench", "--table", "iht", "--threshold-pct", "150"],
    ["validate", "--table", "bcht", "--table", "iht"],
    ["success-rate", "--seed", "-1"],
    ["bench", "--mode", "turbo"],
    ["frobnicate"],
])
def test_flag_errors_exit_2(argv, capsys):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_success_rate_json(capsys):
    code, out, err = run(capsys, "success-rate", "--table", "bcht", "--load-factor", "0.5",
                         "--load-factor", "0.9", "--num-keys", "2000", "--success-trials", "10",
                         "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["max_load_factor"] == {"bcht b=16": 0.9}
    assert [r["op"] for r in d["records"]] == ["build", "build"]


def test_sectors_given_probes(capsys):
    code, out, _ = run(capsys, "sectors", "--table", "bcht", "--bucket-size", "16",
                       "--probes", "1", "--probes", "3")
    assert code == 0
    assert [r["sectors_per_key"] for r in rows(out)] == ["4.000000", "12.000000"]
    _, out, _ = run(capsys, "sectors", "--table", "bcht", "--probes", "1", "--op", "insert")
    assert rows(out)[0]["sectors_per_key"] == "5.000000"


def test_sectors_measured(capsys):
    code, out, _ = run(capsys, "sectors", "--table", "bp2ht", "--bucket-size", "16",
                       "--load-factor", "0.8", "--num-keys", "5000", "--trials", "1",
                       "--positive-ratio", "0")
    r = rows(out)
    assert code == 0 and [x["op"] for x in r] == ["insert", "find"]
    assert r[0]["sectors_per_key"] == "9.000000" and r[1]["sectors_per_key"] == "8.000000"


def test_spec_file(capsys, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"scenario": "key-count-sweep",
                                "tables": [{"kind": "bcht", "bucket_size": 8}],
                                "n_keys": [1000, 2000], "load_factors": [0.5],
                                "positive_ratios": [1.0], "trials": 1}))
    code, out, _ = run(capsys, "bench", "--spec", str(spec))
    assert code == 0 and [r["n"] for r in rows(out)] == ["1000", "1000", "2000", "2000"]
    spec.write_text("{not json")
    with pytest.raises(SystemExit):
        main(["bench", "--spec", str(spec)])


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "bucketed_hash.cli", "sectors", "--probes", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "4.000000" in res.stdout
