"""Hash family, eviction RNG, and deterministic key / query generation.

Keys are drawn from ``[0, 2**32 - 2]``; the top value is the empty sentinel.
Key files are raw little-endian ``uint32`` arrays, one key per 4 bytes, no
header. Values are never stored: they are derived from the key with
:func:`value_for`.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from bucketed_hash._constants import EMPTY_KEY, MAX_USER_KEY, PRIME

VALUE_MASK_XOR = 0x5A5A5A5A
_U64 = 0xFFFFFFFFFFFFFFFF


def derive_seed(seed: int, *labels) -> int:
    """Stable 64-bit child seed for ``seed`` and a path of str/int labels."""
    key = tuple(zlib.crc32(x.encode()) if isinstance(x, str) else int(x) for x in labels)
    ss = np.random.SeedSequence(int(seed) & _U64, spawn_key=key)
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class HashParams:
    """One member of ``h(k) = ((alpha*k + beta) mod p) mod range``."""

    alpha: int
    beta: int
    prime: int = PRIME
    range: int = 1

    def __post_init__(self):
        if self.prime != PRIME:
            raise ValueError(f"prime is fixed at {PRIME}")
        if not 1 <= self.alpha < PRIME or not 0 <= self.beta < PRIME:
            raise ValueError("alpha must be in [1, p-1] and beta in [0, p-1]")
        if self.range < 1:
            raise ValueError("range must be positive")

    def __call__(self, key: int) -> int:
        return hash_key(self, key)


def hash_key(params: HashParams, key: int) -> int:
    return ((params.alpha * int(key) + params.beta) % params.prime) % params.range


def hash_many(params: HashParams, keys: np.ndarray) -> np.ndarray:
    """Vectorised :func:`hash_key`. Exact: alpha*key + beta < 2**64 for 32-bit keys."""
    k = np.asarray(keys, dtype=np.uint64)
    return (k * np.uint64(params.alpha) + np.uint64(params.beta)) % np.uint64(PRIME) \
        % np.uint64(params.range)


def draw_hash_params(rng: np.random.Generator, count: int, range_: int) -> tuple[HashParams, ...]:
    if count < 1:
        raise ValueError("count must be >= 1")
    alphas = rng.integers(1, PRIME, size=count)
    betas = rng.integers(0, PRIME, size=count)
    return tuple(HashParams(int(a), int(b), PRIME, range_) for a, b in zip(alphas, betas))


class EvictionRng:
    """Marsaglia xorshift64 with shift triple (13, 7, 17); period 2**64 - 1.

    The whole state is one 64-bit word, held in a length-1 ``uint64`` array so
    the probe kernels can advance it in place. ``next_below(b)`` takes the top
    32 bits and scales them: ``(x >> 32) * b >> 32``.
    """

    def __init__(self, seed: int = 0, worker: int = 0):
        state = derive_seed(seed, "eviction", worker)
        self.state = np.array([state or 0x9E3779B97F4A7C15], dtype=np.uint64)

    def next(self) -> int:
        x = int(self.state[0])
        x ^= (x << 13) & _U64
        x ^= x >> 7
        x ^= (x << 17) & _U64
        self.state[0] = x
        return x

    def next_below(self, bound: int) -> int:
        return ((self.next() >> 32) * bound) >> 32


def value_for(keys):
    """Value paired with each key: ``(key ^ 0x5A5A5A5A) & 0x7FFFFFFF`` (never the sentinel)."""
    if isinstance(keys, np.ndarray):
        return ((keys.astype(np.uint32) ^ np.uint32(VALUE_MASK_XOR)) & np.uint32(0x7FFFFFFF))
    return (int(keys) ^ VALUE_MASK_XOR) & 0x7FFFFFFF


@dataclass
class KeySet:
    keys: np.ndarray
    seed: int = 0
    _sorted: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.keys = np.ascontiguousarray(self.keys, dtype=np.uint32)

    def __len__(self):
        return len(self.keys)

    @property
    def values(self) -> np.ndarray:
        return value_for(self.keys)

    @property
    def sorted_keys(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.keys)
        return self._sorted

    def contains(self, keys: np.ndarray) -> np.ndarray:
        s = self.sorted_keys
        keys = np.asarray(keys, dtype=np.uint32)
        if len(s) == 0:
            return np.zeros(len(keys), dtype=bool)
        idx = np.minimum(np.searchsorted(s, keys), len(s) - 1)
        return s[idx] == keys

    def save(self, path) -> None:
        self.keys.astype("<u4").tofile(Path(path))

    @classmethod
    def load(cls, path, seed: int = 0) -> KeySet:
        return cls(np.fromfile(Path(path), dtype="<u4").astype(np.uint32), seed)


def generate_keys(seed: int, n: int) -> KeySet:
    """``n`` distinct keys, uniform over ``[0, 2**32 - 2]``.

    Duplicates are rejected against the keys already accepted, so the draw
    order of surviving keys is preserved.
    """
    if not 0 <= n <= MAX_USER_KEY + 1:
        raise ValueError("n out of range")
    rng = np.random.default_rng(derive_seed(seed, "keys"))
    keys = np.empty(0, dtype=np.uint32)
    while len(keys) < n:
        need = n - len(keys)
        cand = rng.integers(0, EMPTY_KEY, size=need + need // 64 + 16, dtype=np.uint32)
        merged = np.concatenate([keys, cand])
        _, first = np.unique(merged, return_index=True)
        first.sort()
        keys = merged[first][:n]
    return KeySet(keys, seed)


def sample_absent(keyset: KeySet, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` keys uniform over the key universe minus ``keyset`` (with replacement)."""
    out = np.empty(0, dtype=np.uint32)
    while len(out) < count:
        need = count - len(out)
        cand = rng.integers(0, EMPTY_KEY, size=need + need // 16 + 16, dtype=np.uint32)
        cand = cand[~keyset.contains(cand)]
        out = np.concatenate([out, cand])
    return out[:count]


@dataclass
class QuerySet:
    """Lookup workload. ``values`` holds the expected value, EMPTY_KEY for absent keys."""

    keys: np.ndarray
    present: np.ndarray
    values: np.ndarray

    def __len__(self):
        return len(self.keys)

    def __iter__(self):
        for k, p, v in zip(self.keys.tolist(), self.present.tolist(), self.values.tolist()):
            yield k, (v if p else None)

    @property
    def n_present(self) -> int:
        return int(self.present.sum())


def generate_queries(keyset: KeySet, positive_ratio: float, q: int, seed: int) -> QuerySet:
    if not 0 <= positive_ratio <= 1:
        raise ValueError("positive_ratio must be in [0, 1]")
    n_pos = math.floor(positive_ratio * q + 0.5)
    if n_pos > len(keyset):
        raise ValueError("not enough inserted keys for the requested positive share")
    rng = np.random.default_rng(derive_seed(seed, "queries", q, n_pos))
    pos = keyset.keys[rng.choice(len(keyset), size=n_pos, replace=False)] if n_pos else \
        np.empty(0, dtype=np.uint32)
    neg = sample_absent(keyset, q - n_pos, rng)
    keys = np.concatenate([pos, neg])
    present = np.concatenate([np.ones(n_pos, bool), np.zeros(q - n_pos, bool)])
    order = rng.permutation(q)
    keys, present = keys[order], present[order]
    values = np.where(present, value_for(keys), np.uint32(EMPTY_KEY)).astype(np.uint32)
    return QuerySet(keys, present, values)
