"""The four table variants behind one interface.

=========  ===============  ====================================================
kind       hash functions   placement
=========  ===============  ====================================================
1cht       4, b = 1         cuckoo: first function, evict on full
bcht       3                cuckoo: first function, evict a random slot on full
bp2ht      2                less loaded of both buckets (ties go to the first)
iht        3 (p, s0, s1)    primary while its load < t, else less loaded secondary
=========  ===============  ====================================================

Evicted keys continue with the function after the one that placed them; that
function is recovered by rehashing the key and taking the lowest index whose
bucket matches. Cuckoo lookups stop at the first non-full bucket that lacks the
key, which is sound only because tables never delete.
"""

from __future__ import annotations

import enum
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from types import ModuleType

import numpy as np

from bucketed_hash import _backend
from bucketed_hash.bucket import STORE_ALIGNMENT, BucketRef, new_store
from bucketed_hash.core import EMPTY_KEY, Kind, LoadFactor, Pair, TableConfig
from bucketed_hash.hashing import EvictionRng, KeySet, value_for
from bucketed_hash.metrics import Op, ProbeStats

_KIND_CODE = {Kind.ONE_CHT: 0, Kind.BCHT: 0, Kind.BP2HT: 1, Kind.IHT: 2}


class Mode(str, enum.Enum):
    SEQUENTIAL = "seq"
    PARALLEL = "par"

    @classmethod
    def parse(cls, value) -> Mode:
        if isinstance(value, cls):
            return value
        return {"sequential": cls.SEQUENTIAL, "parallel": cls.PARALLEL}.get(value) or cls(value)


@dataclass
class InsertResult:
    inserted: int
    failed_index: int
    lost_pair: int
    probes: np.ndarray

    @property
    def ok(self) -> bool:
        return self.failed_index < 0


@dataclass
class FindResult:
    found: np.ndarray
    values: np.ndarray
    probes: np.ndarray


@dataclass
class BuildOutcome:
    success: bool
    inserted: int
    failed_key: int | None = None
    probes: ProbeStats = field(default_factory=ProbeStats)


class HashTable:
    """Static hash table over a flat store of ``m * b`` 64-bit slots.

    ``iceberg_mode="fallback"`` leaves the primary bucket only when both
    secondaries have room (falling back to the primary otherwise);
    ``"spill"`` takes the less loaded secondary once the primary reaches the
    threshold, unless both secondaries are full. Only meaningful for IHT.
    """

    def __init__(self, config: TableConfig, *, backend: str | ModuleType | None = None,
                 iceberg_mode: str = "fallback"):
        if iceberg_mode not in ("fallback", "spill"):
            raise ValueError("iceberg_mode must be 'fallback' or 'spill'")
        self.config = config
        self.kernels = _resolve(backend)
        self.iceberg_mode = iceberg_mode
        self.store = new_store(config.capacity, max(STORE_ALIGNMENT, 8 * config.bucket_size))
        self.alphas = np.array([hp.alpha for hp in config.hash_params], dtype=np.uint64)
        self.betas = np.array([hp.beta for hp in config.hash_params], dtype=np.uint64)
        self.inserted = 0
        self._count_lock = threading.Lock()

    @property
    def kind(self) -> Kind:
        return self.config.kind

    @property
    def bucket_size(self) -> int:
        return self.config.bucket_size

    @property
    def num_buckets(self) -> int:
        return self.config.num_buckets

    def bucket(self, index: int) -> BucketRef:
        return BucketRef(self.store, index, self.bucket_size, self.kernels)

    def admissible_buckets(self, key: int) -> tuple[int, ...]:
        return tuple(int(x) for x in
                     self.kernels.bucket_indices(self.alphas, self.betas, self.num_buckets, key))

    def insert_many(self, keys, values=None, rng: EvictionRng | None = None,
                    abort: np.ndarray | None = None) -> InsertResult:
        keys = np.ascontiguousarray(keys, dtype=np.uint32)
        values = value_for(keys) if values is None else values
        values = np.ascontiguousarray(values, dtype=np.uint32)
        rng = rng or EvictionRng(self.config.seed)
        abort = np.zeros(1, dtype=np.int32) if abort is None else abort
        probes = np.zeros(len(keys), dtype=np.uint32)
        c = self.config
        done, failed, lost = self.kernels.insert_batch(
            _KIND_CODE[c.kind], self.store, c.bucket_size, c.num_buckets, self.alphas,
            self.betas, c.threshold or 0, c.max_chain or 0, self.iceberg_mode == "fallback",
            keys, values, rng.state, probes, abort)
        with self._count_lock:
            self.inserted += done
        return InsertResult(int(done), int(failed), int(lost), probes)

    def find_many(self, keys, early_exit: bool = True) -> FindResult:
        keys = np.ascontiguousarray(keys, dtype=np.uint32)
        n = len(keys)
        found = np.zeros(n, dtype=np.uint8)
        values = np.empty(n, dtype=np.uint32)
        probes = np.zeros(n, dtype=np.uint32)
        c = self.config
        if n:
            self.kernels.find_batch(_KIND_CODE[c.kind], self.store, c.bucket_size,
                                    c.num_buckets, self.alphas, self.betas, early_exit,
                                    keys, values, found, probes)
        return FindResult(found.astype(bool), values, probes)

    def insert(self, key: int, value: int, rng: EvictionRng | None = None,
               stats: ProbeStats | None = None) -> bool:
        res = self.insert_many(np.array([key], np.uint32), np.array([value], np.uint32), rng)
        if stats is not None:
            stats.record_op()
            stats.record_probe(int(res.probes[0]))
        return res.ok

    def find(self, key: int, stats: ProbeStats | None = None,
             early_exit: bool = True) -> int | None:
        res = self.find_many(np.array([key], np.uint32), early_exit)
        if stats is not None:
            stats.record_op()
            stats.record_probe(int(res.probes[0]))
        return int(res.values[0]) if res.found[0] else None

    def occupancy(self) -> int:
        return int(np.count_nonzero((self.store & np.uint64(0xFFFFFFFF)) != EMPTY_KEY))

    @property
    def load_factor(self) -> LoadFactor:
        return LoadFactor(self.inserted, self.config.capacity)

    def dump(self, path) -> None:
        """Raw store: ``m * b`` little-endian uint64 slots, key in the low half."""
        self.store.astype("<u8").tofile(Path(path))

    def __repr__(self):
        return (f"HashTable({self.kind.value}, m={self.num_buckets}, b={self.bucket_size}, "
                f"inserted={self.inserted})")


def _resolve(backend) -> ModuleType:
    if backend is None:
        return _backend.kernels
    if isinstance(backend, str):
        return _backend.get_backend(backend)
    return backend


def _require(table: HashTable, *kinds: Kind):
    if table.kind not in kinds:
        raise TypeError(f"operation not defined for {table.kind.value} tables")


def _split(pair) -> tuple[int, int]:
    if isinstance(pair, tuple):
        return int(pair[0]), int(pair[1])
    return int(pair) & 0xFFFFFFFF, int(pair) >> 32


def bcht_insert(table: HashTable, pair: Pair, rng: EvictionRng,
                stats: ProbeStats | None = None) -> bool:
    _require(table, Kind.BCHT, Kind.ONE_CHT)
    return table.insert(*_split(pair), rng=rng, stats=stats)


def bcht_find(table: HashTable, key: int, stats: ProbeStats | None = None) -> int | None:
    _require(table, Kind.BCHT, Kind.ONE_CHT)
    return table.find(key, stats)


def bp2ht_insert(table: HashTable, pair: Pair, stats: ProbeStats | None = None) -> bool:
    _require(table, Kind.BP2HT)
    return table.insert(*_split(pair), stats=stats)


def bp2ht_find(table: HashTable, key: int, stats: ProbeStats | None = None) -> int | None:
    _require(table, Kind.BP2HT)
    return table.find(key, stats)


def iht_insert(table: HashTable, pair: Pair, stats: ProbeStats | None = None) -> bool:
    _require(table, Kind.IHT)
    return table.insert(*_split(pair), stats=stats)


def iht_find(table: HashTable, key: int, stats: ProbeStats | None = None) -> int | None:
    _require(table, Kind.IHT)
    return table.find(key, stats)


def build(keyset: KeySet, config: TableConfig, mode="seq", workers: int | None = None, *,
          backend=None, iceberg_mode: str = "fallback") -> tuple[HashTable, BuildOutcome]:
    """Insert every key of ``keyset``; stops at the first failed insertion.

    Sequential mode inserts in keyset order with the eviction RNG of worker 0
    and is bit-reproducible. Parallel mode hands contiguous key ranges to
    ``workers`` threads, each with its own RNG; the compiled kernels release
    the GIL, so threads really do race on the store.
    """
    if len(keyset) > config.capacity:
        raise ValueError(f"{len(keyset)} keys do not fit capacity {config.capacity}")
    mode = Mode.parse(mode)
    table = HashTable(config, backend=backend, iceberg_mode=iceberg_mode)
    keys, values = keyset.keys, keyset.values
    if mode is Mode.SEQUENTIAL or len(keys) == 0:
        results = [(0, table.insert_many(keys, values, EvictionRng(config.seed, 0)))]
    else:
        workers = workers or 8
        abort = np.zeros(1, dtype=np.int32)
        bounds = np.linspace(0, len(keys), workers + 1).astype(np.int64)

        def run(w):
            lo, hi = bounds[w], bounds[w + 1]
            return lo, table.insert_many(keys[lo:hi], values[lo:hi],
                                         EvictionRng(config.seed, w), abort)

        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(workers)))

    stats = ProbeStats(Op.INSERT)
    failed_key = None
    for lo, res in results:
        attempted = res.inserted + (0 if res.ok else 1)
        stats.record_op(attempted)
        stats.record_probe(int(res.probes[:attempted].sum(dtype=np.uint64)))
        if not res.ok and failed_key is None:
            failed_key = int(keys[lo + res.failed_index])
    success = failed_key is None and table.inserted == len(keys)
    return table, BuildOutcome(success, table.inserted, failed_key, stats)
