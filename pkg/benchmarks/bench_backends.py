"""Compare the compiled and pure-Python probe kernels.

Builds the same table with each available backend, times the build and an
all-positive lookup pass, and checks that both produce the identical store.

    python3 benchmarks/bench_backends.py --num-keys 50000 --table bcht --table iht
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

import numpy as np

from bucketed_hash import available_backends, generate_keys, make_config
from bucketed_hash.experiments import DEFAULT_BUCKET_SIZE
from bucketed_hash.core import Kind, threshold_from_pct
from bucketed_hash.tables import build


def time_backend(backend, keyset, config, repeats):
    best_build = best_find = float("inf")
    store = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        table, outcome = build(keyset, config, backend=backend)
        best_build = min(best_build, time.perf_counter() - t0)
        if not outcome.success:
            raise SystemExit(f"{backend}: build failed, lower --load-factor")
        t0 = time.perf_counter()
        table.find_many(keyset.keys)
        best_find = min(best_find, time.perf_counter() - t0)
        store = table.store
    return best_build, best_find, store


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--table", action="append", choices=[k.value for k in Kind])
    p.add_argument("--num-keys", type=int, default=50_000)
    p.add_argument("--load-factor", type=float, default=0.85)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=1)
    args = p.parse_args(argv)

    backends = available_backends()
    keyset = generate_keys(args.seed, args.num_keys)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["kind", "b", "backend", "build_s", "find_s", "insert_mops", "find_mops",
                "speedup_vs_python", "store_matches"])
    for name in args.table or ["bcht", "bp2ht", "iht"]:
        kind = Kind(name)
        b = DEFAULT_BUCKET_SIZE[kind]
        t = threshold_from_pct(80, b) if kind is Kind.IHT else None
        config = make_config(kind, args.num_keys, args.load_factor, b, t, seed=args.seed)
        rows = {be: time_backend(be, keyset, config, args.repeats) for be in backends}
        ref_store = rows[backends[0]][2]
        python_total = sum(rows["python"][:2]) if "python" in rows else float("nan")
        for be, (tb, tf, store) in rows.items():
            w.writerow([kind.value, b, be, f"{tb:.4f}", f"{tf:.4f}",
                        f"{args.num_keys / tb / 1e6:.3f}", f"{args.num_keys / tf / 1e6:.3f}",
                        f"{python_total / (tb + tf):.1f}", np.array_equal(store, ref_store)])


if __name__ == "__main__":
    main()
