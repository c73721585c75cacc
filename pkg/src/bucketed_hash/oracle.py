"""Brute-force checkers used by the tests and the ``validate`` command.

Nothing here writes to a table. The admissibility scan rehashes with numpy
rather than the probe kernels, so it stays independent of the code it checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bucketed_hash.core import EMPTY_KEY, Kind, TableConfig, default_max_chain
from bucketed_hash.hashing import (
    KeySet,
    derive_seed,
    draw_hash_params,
    generate_keys,
    hash_many,
    sample_absent,
)
from bucketed_hash.tables import HashTable, build


@dataclass
class MembershipReport:
    false_negatives: int = 0
    wrong_values: int = 0
    false_positives: int = 0

    @property
    def ok(self) -> bool:
        return self.false_negatives == self.wrong_values == self.false_positives == 0


class ReferenceMap:
    """Exact key -> value map over a key set, backed by a sorted array."""

    def __init__(self, keyset: KeySet):
        order = np.argsort(keyset.keys, kind="stable")
        self.keys = keyset.keys[order]
        self.values = keyset.values[order]

    def __len__(self):
        return len(self.keys)

    def lookup(self, keys) -> tuple[np.ndarray, np.ndarray]:
        keys = np.asarray(keys, dtype=np.uint32)
        if len(self.keys) == 0:
            return np.zeros(len(keys), bool), np.full(len(keys), EMPTY_KEY, np.uint32)
        idx = np.minimum(np.searchsorted(self.keys, keys), len(self.keys) - 1)
        hit = self.keys[idx] == keys
        return hit, np.where(hit, self.values[idx], np.uint32(EMPTY_KEY)).astype(np.uint32)


def check_membership(table: HashTable, keyset: KeySet, n_negative: int = 0, seed: int = 0,
                     early_exit: bool = True) -> MembershipReport:
    ref = ReferenceMap(keyset)
    report = MembershipReport()
    res = table.find_many(keyset.keys, early_exit)
    _, expected = ref.lookup(keyset.keys)
    report.false_negatives = int(np.count_nonzero(~res.found))
    report.wrong_values = int(np.count_nonzero(res.found & (res.values != expected)))
    if n_negative:
        rng = np.random.default_rng(derive_seed(seed, "negatives"))
        absent = sample_absent(keyset, n_negative, rng)
        assert not ref.lookup(absent)[0].any()
        report.false_positives = int(np.count_nonzero(table.find_many(absent, early_exit).found))
    return report


def admissible_mask(config: TableConfig, keys: np.ndarray, buckets: np.ndarray) -> np.ndarray:
    ok = np.zeros(len(keys), dtype=bool)
    for hp in config.hash_params:
        ok |= hash_many(hp, keys) == buckets
    return ok


def check_admissibility(table: HashTable) -> int:
    """Number of stored pairs sitting outside every bucket their key may use."""
    store = table.store
    keys = (store & np.uint64(0xFFFFFFFF)).astype(np.uint32)
    slots = np.flatnonzero(keys != EMPTY_KEY)
    buckets = (slots // table.bucket_size).astype(np.uint64)
    return int(np.count_nonzero(~admissible_mask(table.config, keys[slots], buckets)))


def _small_config(kind: Kind, m: int, b: int, threshold, n: int, seed: int) -> TableConfig:
    rng = np.random.default_rng(derive_seed(seed, "brute-force"))
    return TableConfig(kind, m, b, m * b, draw_hash_params(rng, kind.num_hashes, m),
                       threshold if kind is Kind.IHT else None,
                       default_max_chain(max(n, 2)) if kind.is_cuckoo else None, seed)


def success_fraction(kind, b: int, threshold, m: int, n: int, trials: int, seed: int = 0) -> float:
    kind = Kind(kind)
    if n == 0:
        return 1.0
    if n > m * b:
        return 0.0
    keyset = generate_keys(seed, n)
    wins = 0
    for trial in range(trials):
        cfg = _small_config(kind, m, b, threshold, n, derive_seed(seed, "trial", trial))
        wins += build(keyset, cfg)[1].success
    return wins / trials


def brute_force_peak_load(kind, b: int, h_or_t, m: int, trials: int, seed: int = 0,
                          level: float = 0.99) -> float:
    """Largest load factor n/(m*b) at which at least ``level`` of random builds succeed.

    ``h_or_t`` is the iceberg threshold for IHT and the number of hash
    functions otherwise (which must match the kind). Binary search assumes
    success is monotone in n.
    """
    kind = Kind(kind)
    if m * b > 10_000:
        raise ValueError("brute force is limited to m*b <= 10^4")
    if kind is not Kind.IHT and h_or_t is not None and h_or_t != kind.num_hashes:
        raise ValueError(f"{kind.value} uses {kind.num_hashes} hash functions")
    lo, hi = 0, m * b
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if success_fraction(kind, b, h_or_t, m, mid, trials, seed) >= level:
            lo = mid
        else:
            hi = mid - 1
    return lo / (m * b)
