"""Fixed-size bucket view over a shared slot store.

A bucket is ``b`` contiguous 64-bit slots. Reads are per-slot snapshots,
writes are 64-bit CAS / exchange, so a ``BucketRef`` is safe to use from many
threads at once. There is no per-bucket metadata; the load is recounted on
every read.
"""

from __future__ import annotations

import numpy as np

from bucketed_hash._backend import kernels as _default_kernels
from bucketed_hash.core import EMPTY_PAIR, Pair, unpack_pair

# one b=16 bucket of 8-byte pairs is a 128-byte line
STORE_ALIGNMENT = 128


def new_store(num_slots: int, alignment: int = STORE_ALIGNMENT) -> np.ndarray:
    """Zero-copy view of ``num_slots`` EMPTY slots whose first byte is ``alignment``-aligned."""
    raw = np.empty(num_slots * 8 + alignment, dtype=np.uint8)
    offset = (-raw.ctypes.data) % alignment
    store = raw[offset:offset + num_slots * 8].view(np.uint64)
    store.fill(EMPTY_PAIR)
    return store


def _packed(pair) -> int:
    if isinstance(pair, tuple):
        return (int(pair[1]) << 32) | int(pair[0])
    return int(pair)


class BucketRef:
    def __init__(self, store: np.ndarray, index: int, bucket_size: int, kernels=None):
        self.store = store
        self.index = index
        self.bucket_size = bucket_size
        self.base = index * bucket_size
        self._k = kernels or _default_kernels

    def compute_load(self, stats=None) -> int:
        if stats is not None:
            stats.record_probe()
        return self._k.compute_load(self.store, self.base, self.bucket_size)

    def find_key_value(self, key: int, stats=None) -> int | None:
        """Value stored for ``key`` in this bucket, or None."""
        if stats is not None:
            stats.record_probe()
        hit = self._k.find_in_bucket(self.store, self.base, self.bucket_size, key)
        return None if hit == EMPTY_PAIR else hit >> 32

    def cas_at_slot(self, pair, slot: int) -> Pair:
        """Write ``pair`` into ``slot`` only if the slot is empty; returns the prior contents."""
        self._check(slot)
        return unpack_pair(self._k.cas_slot(self.store, self.base + slot, _packed(pair)))

    def exch_at_slot(self, pair, slot: int) -> Pair:
        self._check(slot)
        return unpack_pair(self._k.exch_slot(self.store, self.base + slot, _packed(pair)))

    def claim(self, pairs) -> int:
        """Insert each pair at the current load, retrying lost races; returns how many fit."""
        arr = np.ascontiguousarray([_packed(p) for p in pairs], dtype=np.uint64)
        return self._k.claim_slots(self.store, self.base, self.bucket_size, arr)

    def pairs(self) -> list[Pair]:
        return [unpack_pair(s) for s in self.store[self.base:self.base + self.bucket_size].tolist()]

    def _check(self, slot):
        if not 0 <= slot < self.bucket_size:
            raise IndexError(f"slot {slot} outside bucket of size {self.bucket_size}")

    def __repr__(self):
        return f"BucketRef(index={self.index}, bucket_size={self.bucket_size})"
