"""Bucketed cuckoo, power-of-two-choices and iceberg hash tables with probe accounting."""

from bucketed_hash._backend import available_backends, get_backend, kernels
from bucketed_hash.bucket import BucketRef
from bucketed_hash.core import (
    EMPTY,
    EMPTY_KEY,
    EMPTY_PAIR,
    EMPTY_VALUE,
    Kind,
    LoadFactor,
    Pair,
    TableConfig,
    make_config,
    pack_pair,
    threshold_from_pct,
    unpack_pair,
)
from bucketed_hash.hashing import (
    EvictionRng,
    HashParams,
    KeySet,
    QuerySet,
    draw_hash_params,
    generate_keys,
    generate_queries,
    hash_key,
)
from bucketed_hash.metrics import Op, ProbeStats, SectorModel, predict_sectors, record_probe
from bucketed_hash.tables import (
    BuildOutcome,
    HashTable,
    Mode,
    bcht_find,
    bcht_insert,
    bp2ht_find,
    bp2ht_insert,
    build,
    iht_find,
    iht_insert,
)

BACKEND = kernels.NAME

__version__ = "0.1.0"
