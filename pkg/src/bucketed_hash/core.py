"""Pairs, sentinels and table configuration shared by every table variant."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from bucketed_hash._constants import EMPTY_KEY, EMPTY_PAIR, EMPTY_VALUE, MAX_USER_KEY
from bucketed_hash.hashing import HashParams, derive_seed, draw_hash_params

__all__ = [
    "EMPTY", "EMPTY_KEY", "EMPTY_PAIR", "EMPTY_VALUE", "MAX_USER_KEY", "Kind",
    "LoadFactor", "Pair", "TableConfig", "default_max_chain", "make_config",
    "pack_pair", "threshold_from_pct", "unpack_pair",
]

SUPPORTED_BUCKET_SIZES = (1, 8, 16, 32)


class Pair(NamedTuple):
    key: int
    value: int

    def pack(self) -> int:
        return pack_pair(self.key, self.value)


def pack_pair(key: int, value: int) -> int:
    return (int(value) << 32) | int(key)


def unpack_pair(slot: int) -> Pair:
    slot = int(slot)
    return Pair(slot & 0xFFFFFFFF, slot >> 32)


EMPTY = Pair(EMPTY_KEY, EMPTY_VALUE)


class Kind(str, enum.Enum):
    ONE_CHT = "1cht"
    BCHT = "bcht"
    BP2HT = "bp2ht"
    IHT = "iht"

    @property
    def num_hashes(self) -> int:
        return _NUM_HASHES[self]

    @property
    def is_cuckoo(self) -> bool:
        return self in (Kind.ONE_CHT, Kind.BCHT)


_NUM_HASHES = {Kind.ONE_CHT: 4, Kind.BCHT: 3, Kind.BP2HT: 2, Kind.IHT: 3}


def default_max_chain(n_keys: int) -> int:
    """Cuckoo eviction budget: max(7 * ceil(log2 n), 128)."""
    bits = math.ceil(math.log2(n_keys)) if n_keys > 1 else 0
    return max(7 * bits, 128)


def threshold_from_pct(pct: float, bucket_size: int) -> int:
    """Iceberg threshold in slots for a percentage of the bucket size (floored)."""
    return int(Fraction(str(pct)) * bucket_size // 100)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class LoadFactor:
    inserted: int
    capacity: int

    def __post_init__(self):
        if self.capacity <= 0 or not 0 <= self.inserted <= self.capacity:
            raise ValueError(f"invalid load {self.inserted}/{self.capacity}")

    @property
    def value(self) -> float:
        return self.inserted / self.capacity


@dataclass(frozen=True)
class TableConfig:
    """Immutable description of one table instance.

    ``threshold`` is only meaningful for IHT and ``max_chain`` only for the
    cuckoo kinds; both are ``None`` elsewhere.
    """

    kind: Kind
    num_buckets: int
    bucket_size: int
    capacity: int
    hash_params: tuple[HashParams, ...]
    threshold: int | None = None
    max_chain: int | None = None
    seed: int = 0

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "hash_params", tuple(self.hash_params))
        if self.num_buckets < 1 or self.bucket_size < 1:
            raise ValueError("num_buckets and bucket_size must be positive")
        if self.capacity != self.num_buckets * self.bucket_size:
            raise ValueError("capacity must equal num_buckets * bucket_size")
        if len(self.hash_params) != kind.num_hashes:
            raise ValueError(f"{kind.value} needs {kind.num_hashes} hash functions")
        if any(hp.range != self.num_buckets for hp in self.hash_params):
            raise ValueError("hash range must equal num_buckets")
        if kind is Kind.ONE_CHT and self.bucket_size != 1:
            raise ValueError("1cht requires bucket_size 1")
        if kind is Kind.IHT:
            if self.threshold is None or not 0 < self.threshold <= self.bucket_size:
                raise ValueError("iceberg threshold must satisfy 0 < t <= bucket_size")
        if kind.is_cuckoo and (self.max_chain is None or self.max_chain < 1):
            raise ValueError("cuckoo tables need a positive max_chain")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> TableConfig:
        d = dict(d)
        d["hash_params"] = tuple(HashParams(**hp) for hp in d["hash_params"])
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> TableConfig:
        return cls.from_dict(json.loads(text))

    def with_seed(self, seed: int) -> TableConfig:
        """Same geometry, freshly drawn hash functions."""
        rng = np.random.default_rng(derive_seed(seed, "hash-params"))
        params = draw_hash_params(rng, len(self.hash_params), self.num_buckets)
        return TableConfig(self.kind, self.num_buckets, self.bucket_size, self.capacity,
                           params, self.threshold, self.max_chain, seed)


def make_config(kind, n_keys: int, load_factor, bucket_size: int,
                threshold: int | None = None, seed: int = 0,
                max_chain: int | None = None) -> TableConfig:
    """Size a table so ``n_keys`` land at (at most) the requested load factor.

    ``num_buckets = ceil(n_keys / (load_factor * bucket_size))``.
    """
    kind = Kind(kind)
    lf = _as_fraction(load_factor)
    if not 0 < lf <= 1:
        raise ValueError(f"load factor must be in (0, 1], got {load_factor}")
    if n_keys <= 0:
        raise ValueError("n_keys must be positive")
    if bucket_size < 1 or bucket_size & (bucket_size - 1):
        raise ValueError(f"bucket size must be a power of two, got {bucket_size}")
    if kind is Kind.ONE_CHT and bucket_size != 1:
        raise ValueError("1cht requires bucket_size 1")
    if threshold is not None and threshold > bucket_size:
        raise ValueError("threshold cannot exceed bucket_size")
    if kind is Kind.IHT and threshold is None:
        raise ValueError("iceberg tables need a threshold")

    num_buckets = math.ceil(Fraction(n_keys) / (lf * bucket_size))
    if kind.is_cuckoo and max_chain is None:
        max_chain = default_max_chain(n_keys)
    rng = np.random.default_rng(derive_seed(seed, "hash-params"))
    params = draw_hash_params(rng, kind.num_hashes, num_buckets)
    return TableConfig(
        kind=kind,
        num_buckets=num_buckets,
        bucket_size=bucket_size,
        capacity=num_buckets * bucket_size,
        hash_params=params,
        threshold=threshold if kind is Kind.IHT else None,
        max_chain=max_chain if kind.is_cuckoo else None,
        seed=seed,
    )
