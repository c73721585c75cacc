import json

import pytest

from bucketed_hash import EMPTY, EMPTY_KEY, EMPTY_PAIR, EMPTY_VALUE, Kind, LoadFactor, Pair
from bucketed_hash.core import (
    TableConfig,
    default_max_chain,
    make_config,
    pack_pair,
    threshold_from_pct,
    unpack_pair,
)


def test_sentinels():
    assert EMPTY_KEY == EMPTY_VALUE == 4294967295
    assert EMPTY_PAIR == 2**64 - 1
    assert EMPTY.pack() == EMPTY_PAIR


def test_pair_layout_key_low():
    assert pack_pair(7, 42) == (42 << 32) | 7
    assert unpack_pair(pack_pair(7, 42)) == Pair(7, 42)
    assert Pair(1, 2).pack() == pack_pair(1, 2)


def test_hash_counts():
    assert [k.num_hashes for k in Kind] == [4, 3, 2, 3]
    assert Kind.BCHT.is_cuckoo and Kind.ONE_CHT.is_cuckoo and not Kind.IHT.is_cuckoo


def test_make_config_exact_division():
    c = make_config("bcht", 16, 1.0, 16)
    assert (c.num_buckets, c.capacity) == (1, 16)


def test_make_config_rounds_buckets_up():
    c = make_config("bp2ht", 1000, 0.8, 32)
    assert (c.num_buckets, c.capacity) == (40, 1280)
    assert 1000 / c.capacity == 0.78125


def test_make_config_decimal_load_factor_is_exact():
    # 0.99 * 16 is not exact in binary; the division must still be exact
    c = make_config("bcht", 1_000_000, 0.99, 16)
    assert c.num_buckets == 63132
    assert 1_000_000 <= c.capacity


@pytest.mark.parametrize("kw", [
    dict(kind="iht", n_keys=0, load_factor=0.5, bucket_size=16, threshold=8),
    dict(kind="bcht", n_keys=10, load_factor=0.0, bucket_size=16),
    dict(kind="bcht", n_keys=10, load_factor=1.01, bucket_size=16),
    dict(kind="bcht", n_keys=10, load_factor=0.5, bucket_size=12),
    dict(kind="1cht", n_keys=10, load_factor=0.5, bucket_size=8),
    dict(kind="iht", n_keys=10, load_factor=0.5, bucket_size=16, threshold=17),
    dict(kind="iht", n_keys=10, load_factor=0.5, bucket_size=16),
])
def test_make_config_rejects(kw):
    with pytest.raises(ValueError):
        make_config(**kw)


def test_config_fields_by_kind():
    assert make_config("1cht", 100, 0.5, 1).max_chain == default_max_chain(100)
    assert make_config("bp2ht", 100, 0.5, 8).max_chain is None
    iht = make_config("iht", 100, 0.5, 16, 12)
    assert iht.threshold == 12 and iht.max_chain is None
    assert make_config("bcht", 100, 0.5, 16, 12).threshold is None


def test_config_json_round_trip():
    c = make_config("iht", 5000, 0.9, 32, 25, seed=99)
    d = json.loads(c.to_json())
    assert set(d) == {"kind", "num_buckets", "bucket_size", "capacity", "hash_params",
                      "threshold", "max_chain", "seed"}
    assert TableConfig.from_json(c.to_json()) == c


def test_config_invariants_checked():
    c = make_config("bcht", 100, 0.5, 16)
    with pytest.raises(ValueError):
        TableConfig(c.kind, c.num_buckets, 16, c.capacity + 1, c.hash_params, None, 128)
    with pytest.raises(ValueError):
        TableConfig(c.kind, c.num_buckets, 16, c.capacity, c.hash_params[:2], None, 128)
    with pytest.raises(ValueError):
        TableConfig(Kind.IHT, c.num_buckets, 16, c.capacity, c.hash_params, 0, None)


def test_with_seed_keeps_geometry():
    c = make_config("bcht", 1000, 0.9, 16, seed=1)
    d = c.with_seed(2)
    assert (d.num_buckets, d.capacity, d.max_chain) == (c.num_buckets, c.capacity, c.max_chain)
    assert d.hash_params != c.hash_params
    assert make_config("bcht", 1000, 0.9, 16, seed=2) == d


def test_default_max_chain():
    assert default_max_chain(1) == 128
    assert default_max_chain(10**6) == 140
    assert default_max_chain(2**40) == 280


def test_threshold_from_pct():
    assert threshold_from_pct(80, 16) == 12
    assert threshold_from_pct(20, 16) == 3
    assert threshold_from_pct(60, 8) == 4
    assert threshold_from_pct(100, 32) == 32


def test_load_factor():
    assert LoadFactor(3, 4).value == 0.75
    with pytest.raises(ValueError):
        LoadFactor(5, 4)
