import numpy as np
import pytest

from bucketed_hash.hashing import (
    PRIME,
    EvictionRng,
    HashParams,
    KeySet,
    derive_seed,
    draw_hash_params,
    generate_keys,
    generate_queries,
    hash_key,
    hash_many,
    value_for,
)
from bucketed_hash._constants import EMPTY_KEY

# upper 0.1% point of chi-square with 63 degrees of freedom
CHI2_63_999 = 103.442


@pytest.mark.parametrize("alpha,beta,L,key,expected", [
    (1, 0, 10, 7, 7),
    (3, 4, 3, 7, 1),
    (2, 0, 5, 4294967290, 4),
])
def test_hash_examples(alpha, beta, L, key, expected):
    hp = HashParams(alpha, beta, PRIME, L)
    assert hash_key(hp, key) == expected
    assert hp(key) == expected
    assert int(hash_many(hp, np.array([key], np.uint32))[0]) == expected


def test_hash_many_matches_python_ints_at_extremes():
    hp = HashParams(PRIME - 1, PRIME - 1, PRIME, 1_000_003)
    keys = np.array([0, 1, 2**31, EMPTY_KEY - 1, EMPTY_KEY], dtype=np.uint32)
    assert hash_many(hp, keys).tolist() == [hash_key(hp, int(k)) for k in keys]


@pytest.mark.parametrize("kw", [dict(alpha=0, beta=0), dict(alpha=1, beta=PRIME),
                                dict(alpha=1, beta=0, prime=7), dict(alpha=1, beta=0, range=0)])
def test_hash_params_validated(kw):
    with pytest.raises(ValueError):
        HashParams(**kw)


def test_hash_chi_square_uniform():
    rng = np.random.default_rng(5)
    hp = draw_hash_params(rng, 1, 64)[0]
    keys = rng.integers(0, EMPTY_KEY, size=10**6, dtype=np.uint32)
    counts = np.bincount(hash_many(hp, keys).astype(np.int64), minlength=64)
    expected = len(keys) / 64
    assert ((counts - expected) ** 2 / expected).sum() < CHI2_63_999


def test_draw_hash_params_deterministic():
    a = draw_hash_params(np.random.default_rng(3), 3, 100)
    b = draw_hash_params(np.random.default_rng(3), 3, 100)
    assert a == b and len(a) == 3
    assert all(1 <= p.alpha < PRIME and 0 <= p.beta < PRIME and p.range == 100 for p in a)
    with pytest.raises(ValueError):
        draw_hash_params(np.random.default_rng(3), 0, 100)


def test_draw_hash_params_differ_across_seeds():
    same = sum(draw_hash_params(np.random.default_rng(s), 3, 10)
               == draw_hash_params(np.random.default_rng(s + 1000), 3, 10) for s in range(100))
    assert same == 0


def test_derive_seed_stable_and_label_sensitive():
    assert derive_seed(1, "a", 2) == derive_seed(1, "a", 2)
    assert len({derive_seed(1, "a"), derive_seed(1, "b"), derive_seed(2, "a"),
                derive_seed(1, "a", 0)}) == 4


def test_xorshift_reference_sequence():
    rng = EvictionRng()
    rng.state[0] = 1
    # xorshift64 (13, 7, 17) from state 1
    assert [rng.next() for _ in range(3)] == [1082269761, 1152992998833853505,
                                              11177516664432764457]


def test_eviction_rng_deterministic_per_worker():
    a, b, c = EvictionRng(9, 0), EvictionRng(9, 0), EvictionRng(9, 1)
    seq_a = [a.next() for _ in range(50)]
    assert seq_a == [b.next() for _ in range(50)]
    assert seq_a != [c.next() for _ in range(50)]


def test_next_below_uniform_within_one_percent():
    rng = EvictionRng(4)
    counts = np.bincount([rng.next_below(16) for _ in range(10**6)], minlength=16)
    assert len(counts) == 16
    assert np.all(np.abs(counts / 10**6 - 1 / 16) < 0.01 / 16)


def test_value_for_avoids_sentinel():
    keys = np.array([0, 0x5A5A5A5A, 0xA5A5A5A5, EMPTY_KEY - 1], dtype=np.uint32)
    vals = value_for(keys)
    assert np.all(vals != EMPTY_KEY)
    assert vals.tolist() == [value_for(int(k)) for k in keys]
    assert value_for(0xA5A5A5A5) == 0x7FFFFFFF


def test_generate_keys_empty():
    assert len(generate_keys(1, 0)) == 0


def test_generate_keys_million_distinct():
    ks = generate_keys(123, 10**6)
    s = np.sort(ks.keys)
    assert len(s) == 10**6
    assert np.all(s[1:] != s[:-1])
    assert s[-1] < EMPTY_KEY


def test_generate_keys_deterministic():
    a, b = generate_keys(5, 1000), generate_keys(5, 1000)
    assert np.array_equal(a.keys, b.keys)
    assert not np.array_equal(a.keys, generate_keys(6, 1000).keys)


def test_keyset_file_round_trip(tmp_path):
    ks = generate_keys(2, 777)
    ks.save(tmp_path / "k.bin")
    assert (tmp_path / "k.bin").stat().st_size == 777 * 4
    assert np.array_equal(KeySet.load(tmp_path / "k.bin").keys, ks.keys)


def test_keyset_contains():
    ks = KeySet(np.array([5, 1, 9], np.uint32))
    assert ks.contains([1, 2, 9]).tolist() == [True, False, True]
    assert KeySet(np.empty(0, np.uint32)).contains([1]).tolist() == [False]


def test_queries_all_positive_is_permutation():
    ks = generate_keys(1, 2000)
    q = generate_queries(ks, 1.0, len(ks), seed=3)
    assert np.array_equal(np.sort(q.keys), ks.sorted_keys)
    assert np.array_equal(q.values, value_for(q.keys))


def test_queries_all_negative_absent():
    ks = generate_keys(1, 2000)
    q = generate_queries(ks, 0.0, 5000, seed=3)
    assert q.n_present == 0
    assert not ks.contains(q.keys).any()
    assert np.all(q.values == EMPTY_KEY)


def test_queries_half():
    ks = generate_keys(1, 2000)
    q = generate_queries(ks, 0.5, 1000, seed=3)
    assert q.n_present == 500
    assert np.array_equal(ks.contains(q.keys), q.present)
    pairs = list(q)
    assert sum(v is not None for _, v in pairs) == 500


def test_queries_deterministic_and_validated():
    ks = generate_keys(1, 100)
    a, b = generate_queries(ks, 0.5, 100, 4), generate_queries(ks, 0.5, 100, 4)
    assert np.array_equal(a.keys, b.keys)
    with pytest.raises(ValueError):
        generate_queries(ks, 1.5, 10, 0)
    with pytest.raises(ValueError):
        generate_queries(ks, 1.0, 101, 0)
