"""Pure-Python probe kernels, used when the compiled extension is unavailable.

Same signatures and results as ``_kernels``. CPython offers no 64-bit
compare-and-swap on a numpy element, so CAS and exchange are emulated with a
small set of striped locks keyed by slot index; plain slot reads are single
element loads, which the GIL already makes indivisible.
"""

from __future__ import annotations

import threading

import numpy as np

NAME = "python"

PRIME = 4294967291
KEY_MASK = 0xFFFFFFFF
EMPTY_KEY = 0xFFFFFFFF
EMPTY_PAIR = 0xFFFFFFFFFFFFFFFF
U64 = 0xFFFFFFFFFFFFFFFF

KIND_CUCKOO = 0
KIND_P2 = 1
KIND_ICEBERG = 2

_STRIPES = 64
_locks = [threading.Lock() for _ in range(_STRIPES)]


def _cas(store, index, pair):
    with _locks[index % _STRIPES]:
        prev = int(store[index])
        if prev == EMPTY_PAIR:
            store[index] = pair
        return prev


def _exch(store, index, pair):
    with _locks[index % _STRIPES]:
        prev = int(store[index])
        store[index] = pair
        return prev


def _xorshift(state):
    x = int(state[0])
    x ^= (x << 13) & U64
    x ^= x >> 7
    x ^= (x << 17) & U64
    state[0] = x
    return x


def _below(state, bound):
    return ((_xorshift(state) >> 32) * bound) >> 32


def _bucket_of(alpha, beta, m, key):
    return ((alpha * key + beta) % PRIME) % m


def _load(store, base, b):
    return sum(1 for p in store[base:base + b].tolist() if (p & KEY_MASK) != EMPTY_KEY)


def _scan(store, base, b, key):
    load = 0
    hit = EMPTY_PAIR
    for p in store[base:base + b].tolist():
        k = p & KEY_MASK
        if k != EMPTY_KEY:
            load += 1
            if k == key and hit == EMPTY_PAIR:
                hit = p
    return load, hit


def _insert_cuckoo(store, b, m, alphas, betas, max_chain, pair, rng):
    h = len(alphas)
    key = pair & KEY_MASK
    bucket = _bucket_of(alphas[0], betas[0], m, key)
    chain = 0
    probes = 0
    while True:
        base = bucket * b
        load = _load(store, base, b)
        probes += 1
        if load == b:
            if chain == max_chain:
                return False, probes, pair
            pair = _exch(store, base + _below(rng, b), pair)
            if pair == EMPTY_PAIR:
                return True, probes, EMPTY_PAIR
            key = pair & KEY_MASK
            prev = bucket
            bucket = _bucket_of(alphas[0], betas[0], m, key)
            for i in range(h):
                if _bucket_of(alphas[i], betas[i], m, key) == prev:
                    j = (i + 1) % h
                    bucket = _bucket_of(alphas[j], betas[j], m, key)
                    break
            chain += 1
        elif _cas(store, base + load, pair) == EMPTY_PAIR:
            return True, probes, EMPTY_PAIR


def _insert_p2(store, b, m, alphas, betas, pair):
    key = pair & KEY_MASK
    b0 = _bucket_of(alphas[0], betas[0], m, key)
    b1 = _bucket_of(alphas[1], betas[1], m, key)
    probes = 0
    while True:
        l0 = _load(store, b0 * b, b)
        l1 = _load(store, b1 * b, b)
        probes += 2
        if l0 == b and l1 == b:
            return False, probes, pair
        target, load = (b0, l0) if l0 <= l1 else (b1, l1)
        if _cas(store, target * b + load, pair) == EMPTY_PAIR:
            return True, probes, EMPTY_PAIR


def _insert_iceberg(store, b, m, alphas, betas, threshold, fallback, pair):
    key = pair & KEY_MASK
    bp = _bucket_of(alphas[0], betas[0], m, key)
    s0 = _bucket_of(alphas[1], betas[1], m, key)
    s1 = _bucket_of(alphas[2], betas[2], m, key)
    probes = 0
    while True:
        target = bp
        load = _load(store, bp * b, b)
        probes += 1
        if load >= threshold:
            l0 = _load(store, s0 * b, b)
            l1 = _load(store, s1 * b, b)
            probes += 2
            if (l0 != b and l1 != b) or (not fallback and l0 + l1 < 2 * b):
                target, load = (s0, l0) if l0 <= l1 else (s1, l1)
        if load == b:
            return False, probes, pair
        if _cas(store, target * b + load, pair) == EMPTY_PAIR:
            return True, probes, EMPTY_PAIR


def insert_batch(kind, store, b, m, alphas, betas, threshold, max_chain, fallback,
                 keys, values, rng_state, probes_out, abort_flag):
    al = [int(a) for a in alphas]
    be = [int(c) for c in betas]
    m = int(m)
    done = 0
    for i, (key, value) in enumerate(zip(keys.tolist(), values.tolist())):
        if abort_flag[0]:
            break
        pair = key | (value << 32)
        if kind == KIND_CUCKOO:
            ok, probes, lost = _insert_cuckoo(store, b, m, al, be, max_chain, pair, rng_state)
        elif kind == KIND_P2:
            ok, probes, lost = _insert_p2(store, b, m, al, be, pair)
        else:
            ok, probes, lost = _insert_iceberg(store, b, m, al, be, threshold, fallback, pair)
        probes_out[i] = probes
        if not ok:
            abort_flag[0] = 1
            return done, i, lost
        done += 1
    return done, -1, EMPTY_PAIR


def find_batch(kind, store, b, m, alphas, betas, early_exit, keys, values_out,
               found_out, probes_out):
    al = [int(a) for a in alphas]
    be = [int(c) for c in betas]
    m = int(m)
    may_exit = early_exit and kind == KIND_CUCKOO
    for i, key in enumerate(keys.tolist()):
        found, value, probes = 0, EMPTY_KEY, 0
        for alpha, beta in zip(al, be):
            load, hit = _scan(store, _bucket_of(alpha, beta, m, key) * b, b, key)
            probes += 1
            if hit != EMPTY_PAIR:
                found, value = 1, hit >> 32
                break
            if may_exit and load != b:
                break
        found_out[i] = found
        values_out[i] = value
        probes_out[i] = probes


def bucket_indices(alphas, betas, m, key):
    return tuple(_bucket_of(int(a), int(c), int(m), int(key)) for a, c in zip(alphas, betas))


def compute_load(store, base, b):
    return _load(store, base, b)


def find_in_bucket(store, base, b, key):
    return _scan(store, base, b, int(key))[1]


def cas_slot(store, index, pair):
    return _cas(store, index, int(pair))


def exch_slot(store, index, pair):
    return _exch(store, index, int(pair))


def claim_slots(store, base, b, pairs):
    won = 0
    for pair in np.asarray(pairs).tolist():
        while True:
            load = _load(store, base, b)
            if load == b:
                break
            if _cas(store, base + load, pair) == EMPTY_PAIR:
                won += 1
                break
    return won


def rng_next(state):
    return _xorshift(state)


def rng_below(state, bound):
    return _below(state, bound)
