"""Probe accounting and the sector-based memory-cost model.

A probe is one read of a whole bucket, whatever its size. The sector model
turns mean probes into a floor on DRAM sectors per key: a sector is 32 bytes
(a quarter of a 128-byte line), a bucket of ``b`` pairs spans
``ceil(8b / 32)`` sectors, and an insertion pays one extra sector for the
atomic write-back. Single-slot buckets are charged two sectors per read
because DRAM hands the cache 64 bytes at a time.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from bucketed_hash.core import Kind


class Op(str, enum.Enum):
    INSERT = "insert"
    FIND = "find"


@dataclass
class ProbeStats:
    op: Op = Op.INSERT
    total_probes: int = 0
    total_ops: int = 0

    @property
    def mean_probes(self) -> float:
        return self.total_probes / self.total_ops if self.total_ops else 0.0

    def record_probe(self, count: int = 1) -> ProbeStats:
        self.total_probes += count
        return self

    def record_op(self, count: int = 1) -> ProbeStats:
        self.total_ops += count
        return self

    def merge(self, other: ProbeStats) -> ProbeStats:
        if Op(other.op) != Op(self.op):
            raise ValueError("cannot merge insert and find statistics")
        return ProbeStats(self.op, self.total_probes + other.total_probes,
                          self.total_ops + other.total_ops)

    __add__ = merge


def record_probe(stats: ProbeStats, count: int = 1) -> ProbeStats:
    return stats.record_probe(count)


@dataclass(frozen=True)
class SectorModel:
    sector_bytes: int = 32
    pair_bytes: int = 8
    write_extra: int = 1
    single_slot_read: int = 2

    def bucket_sectors(self, b: int) -> int:
        return math.ceil(self.pair_bytes * b / self.sector_bytes)

    def read_sectors(self, kind, b: int) -> int:
        if Kind(kind) is Kind.ONE_CHT:
            return self.single_slot_read
        return self.bucket_sectors(b)


def predict_sectors(model: SectorModel, kind, b: int, mean_probes: float, op) -> float:
    """Lower-bound DRAM sectors per key for a workload with the given mean probes."""
    if mean_probes < 1:
        raise ValueError("mean_probes must be >= 1")
    sectors = mean_probes * model.read_sectors(kind, b)
    if Op(op) is Op.INSERT:
        sectors += model.write_extra
    return sectors
