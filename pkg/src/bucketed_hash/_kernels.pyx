# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled probe kernels.

Every function here has a twin in ``_pykernels`` with the same signature and
the same results bit for bit; ``_backend`` picks one at import time.

Slot layout: key in the low 32 bits, value in the high 32 bits. A slot equal to
``EMPTY_PAIR`` (all ones) is free. All slot reads and writes go through 64-bit
GCC atomics so the batch kernels can run with the GIL released from several
threads against one store.
"""

from libc.stdint cimport int32_t, int64_t, uint8_t, uint32_t, uint64_t


cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t bh_load(uint64_t *p) {
        return __atomic_load_n(p, __ATOMIC_ACQUIRE);
    }
    static inline uint64_t bh_cas(uint64_t *p, uint64_t expected, uint64_t desired) {
        __atomic_compare_exchange_n(p, &expected, desired, 0,
                                    __ATOMIC_ACQ_REL, __ATOMIC_ACQUIRE);
        return expected;
    }
    static inline uint64_t bh_exch(uint64_t *p, uint64_t v) {
        return __atomic_exchange_n(p, v, __ATOMIC_ACQ_REL);
    }
    static inline int32_t bh_flag_get(int32_t *p) {
        return __atomic_load_n(p, __ATOMIC_ACQUIRE);
    }
    static inline void bh_flag_set(int32_t *p) {
        __atomic_store_n(p, 1, __ATOMIC_RELEASE);
    }
    #define PRIME 4294967291ULL
    #define KEY_MASK 0xFFFFFFFFULL
    #define EMPTY_KEY 0xFFFFFFFFULL
    #define EMPTY_PAIR 0xFFFFFFFFFFFFFFFFULL
    #define KIND_CUCKOO 0
    #define KIND_P2 1
    #define KIND_ICEBERG 2
    """
    const uint64_t PRIME
    const uint64_t KEY_MASK
    const uint64_t EMPTY_KEY
    const uint64_t EMPTY_PAIR
    const int KIND_CUCKOO
    const int KIND_P2
    const int KIND_ICEBERG
    uint64_t bh_load(uint64_t *p) nogil
    uint64_t bh_cas(uint64_t *p, uint64_t expected, uint64_t desired) nogil
    uint64_t bh_exch(uint64_t *p, uint64_t v) nogil
    int32_t bh_flag_get(int32_t *p) nogil
    void bh_flag_set(int32_t *p) nogil


NAME = "cython"


cdef inline uint64_t _bucket_of(uint64_t alpha, uint64_t beta, uint64_t m,
                                uint64_t key) noexcept nogil:
    # alpha, key < 2**32 so alpha*key + beta cannot wrap 64 bits
    return ((alpha * key + beta) % PRIME) % m


cdef inline uint64_t _xorshift(uint64_t *state) noexcept nogil:
    cdef uint64_t x = state[0]
    x ^= x << 13
    x ^= x >> 7
    x ^= x << 17
    state[0] = x
    return x


cdef inline uint64_t _below(uint64_t *state, uint64_t bound) noexcept nogil:
    return ((_xorshift(state) >> 32) * bound) >> 32


cdef inline int _load(uint64_t *bucket, int b) noexcept nogil:
    cdef int i, n = 0
    for i in range(b):
        if (bh_load(bucket + i) & KEY_MASK) != EMPTY_KEY:
            n += 1
    return n


cdef inline int _scan(uint64_t *bucket, int b, uint64_t key,
                      uint64_t *hit) noexcept nogil:
    """One snapshot read: returns the load, stores the first matching pair in hit."""
    cdef int i, n = 0
    cdef uint64_t p, k
    hit[0] = EMPTY_PAIR
    for i in range(b):
        p = bh_load(bucket + i)
        k = p & KEY_MASK
        if k != EMPTY_KEY:
            n += 1
            if k == key and hit[0] == EMPTY_PAIR:
                hit[0] = p
    return n


cdef int _insert_cuckoo(uint64_t *store, int b, uint64_t m, uint64_t *alphas,
                        uint64_t *betas, int h, int64_t max_chain, uint64_t pair,
                        uint64_t *rng, uint32_t *probes, uint64_t *lost) noexcept nogil:
    cdef uint64_t key = pair & KEY_MASK
    cdef uint64_t bucket = _bucket_of(alphas[0], betas[0], m, key)
    cdef uint64_t prev
    cdef uint64_t *base
    cdef int64_t chain = 0
    cdef int load, i
    while True:
        base = store + bucket * b
        load = _load(base, b)
        probes[0] += 1
        if load == b:
            if chain == max_chain:
                lost[0] = pair
                return 0
            pair = bh_exch(base + _below(rng, b), pair)
            if pair == EMPTY_PAIR:
                return 1
            key = pair & KEY_MASK
            prev = bucket
            bucket = _bucket_of(alphas[0], betas[0], m, key)
            for i in range(h):
                if _bucket_of(alphas[i], betas[i], m, key) == prev:
                    bucket = _bucket_of(alphas[(i + 1) % h], betas[(i + 1) % h], m, key)
                    break
            chain += 1
        else:
            if bh_cas(base + load, EMPTY_PAIR, pair) == EMPTY_PAIR:
                return 1


cdef int _insert_p2(uint64_t *store, int b, uint64_t m, uint64_t *alphas,
                    uint64_t *betas, uint64_t pair, uint32_t *probes,
                    uint64_t *lost) noexcept nogil:
    cdef uint64_t key = pair & KEY_MASK
    cdef uint64_t b0 = _bucket_of(alphas[0], betas[0], m, key)
    cdef uint64_t b1 = _bucket_of(alphas[1], betas[1], m, key)
    cdef int l0, l1
    while True:
        l0 = _load(store + b0 * b, b)
        l1 = _load(store + b1 * b, b)
        probes[0] += 2
        if l0 == b and l1 == b:
            lost[0] = pair
            return 0
        if l0 <= l1:
            if bh_cas(store + b0 * b + l0, EMPTY_PAIR, pair) == EMPTY_PAIR:
                return 1
        else:
            if bh_cas(store + b1 * b + l1, EMPTY_PAIR, pair) == EMPTY_PAIR:
                return 1


cdef int _insert_iceberg(uint64_t *store, int b, uint64_t m, uint64_t *alphas,
                         uint64_t *betas, int threshold, int fallback, uint64_t pair,
                         uint32_t *probes, uint64_t *lost) noexcept nogil:
    cdef uint64_t key = pair & KEY_MASK
    cdef uint64_t bp = _bucket_of(alphas[0], betas[0], m, key)
    cdef uint64_t s0 = _bucket_of(alphas[1], betas[1], m, key)
    cdef uint64_t s1 = _bucket_of(alphas[2], betas[2], m, key)
    cdef uint64_t target
    cdef int load, l0, l1
    while True:
        target = bp
        load = _load(store + bp * b, b)
        probes[0] += 1
        if load >= threshold:
            l0 = _load(store + s0 * b, b)
            l1 = _load(store + s1 * b, b)
            probes[0] += 2
            # fallback: leave the primary only if both secondaries have room;
            # spill: less loaded secondary, primary only when both are full
            if (l0 != b and l1 != b) or (not fallback and l0 + l1 < 2 * b):
                if l0 <= l1:
                    target = s0
                    load = l0
                else:
                    target = s1
                    load = l1
        if load == b:
            lost[0] = pair
            return 0
        if bh_cas(store + target * b + load, EMPTY_PAIR, pair) == EMPTY_PAIR:
            return 1


def insert_batch(int kind, uint64_t[::1] store, int b, uint64_t m,
                 uint64_t[::1] alphas, uint64_t[::1] betas, int threshold,
                 int64_t max_chain, bint fallback, uint32_t[::1] keys,
                 uint32_t[::1] values, uint64_t[::1] rng_state,
                 uint32_t[::1] probes_out, int32_t[::1] abort_flag):
    """Insert keys in order; stop at the first failure or when abort_flag is raised.

    Returns ``(n_inserted, failed_index, lost_pair)``; ``failed_index`` is -1
    when no insertion failed in this call.
    """
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t i, done = 0, failed = -1
    cdef int h = alphas.shape[0]
    cdef int ok = 1
    cdef uint64_t pair, lost = EMPTY_PAIR
    cdef uint64_t *st = &store[0]
    cdef uint64_t *al = &alphas[0]
    cdef uint64_t *be = &betas[0]
    cdef uint64_t *rs = &rng_state[0]
    cdef int32_t *flag = &abort_flag[0]
    with nogil:
        for i in range(n):
            if bh_flag_get(flag):
                break
            pair = <uint64_t>keys[i] | (<uint64_t>values[i] << 32)
            probes_out[i] = 0
            if kind == KIND_CUCKOO:
                ok = _insert_cuckoo(st, b, m, al, be, h, max_chain, pair, rs,
                                    &probes_out[i], &lost)
            elif kind == KIND_P2:
                ok = _insert_p2(st, b, m, al, be, pair, &probes_out[i], &lost)
            else:
                ok = _insert_iceberg(st, b, m, al, be, threshold, fallback, pair,
                                     &probes_out[i], &lost)
            if not ok:
                failed = i
                bh_flag_set(flag)
                break
            done += 1
    return done, failed, lost


def find_batch(int kind, uint64_t[::1] store, int b, uint64_t m,
               uint64_t[::1] alphas, uint64_t[::1] betas, bint early_exit,
               uint32_t[::1] keys, uint32_t[::1] values_out,
               uint8_t[::1] found_out, uint32_t[::1] probes_out):
    """Look up every key; early exit applies to the cuckoo kind only."""
    cdef Py_ssize_t n = keys.shape[0]
    cdef Py_ssize_t i
    cdef int j, load, h = alphas.shape[0]
    cdef uint64_t key, hit, bucket
    cdef uint64_t *st = &store[0]
    cdef bint may_exit = early_exit and kind == KIND_CUCKOO
    with nogil:
        for i in range(n):
            key = keys[i]
            found_out[i] = 0
            values_out[i] = EMPTY_KEY
            probes_out[i] = 0
            for j in range(h):
                bucket = _bucket_of(alphas[j], betas[j], m, key)
                load = _scan(st + bucket * b, b, key, &hit)
                probes_out[i] += 1
                if hit != EMPTY_PAIR:
                    found_out[i] = 1
                    values_out[i] = <uint32_t>(hit >> 32)
                    break
                if may_exit and load != b:
                    break


def bucket_indices(uint64_t[::1] alphas, uint64_t[::1] betas, uint64_t m,
                   uint32_t key):
    cdef int j
    out = []
    for j in range(alphas.shape[0]):
        out.append(_bucket_of(alphas[j], betas[j], m, key))
    return tuple(out)


def compute_load(uint64_t[::1] store, Py_ssize_t base, int b):
    return _load(&store[base], b)


def find_in_bucket(uint64_t[::1] store, Py_ssize_t base, int b, uint32_t key):
    """Returns the matched pair or EMPTY_PAIR."""
    cdef uint64_t hit
    _scan(&store[base], b, key, &hit)
    return hit


def cas_slot(uint64_t[::1] store, Py_ssize_t index, uint64_t pair):
    return bh_cas(&store[index], EMPTY_PAIR, pair)


def exch_slot(uint64_t[::1] store, Py_ssize_t index, uint64_t pair):
    return bh_exch(&store[index], pair)


def claim_slots(uint64_t[::1] store, Py_ssize_t base, int b, uint64_t[::1] pairs):
    """Race to place each pair into one bucket; returns how many landed."""
    cdef Py_ssize_t i, won = 0
    cdef int load
    cdef uint64_t *bucket = &store[base]
    with nogil:
        for i in range(pairs.shape[0]):
            while True:
                load = _load(bucket, b)
                if load == b:
                    break
                if bh_cas(bucket + load, EMPTY_PAIR, pairs[i]) == EMPTY_PAIR:
                    won += 1
                    break
    return won


def rng_next(uint64_t[::1] state):
    return _xorshift(&state[0])


def rng_below(uint64_t[::1] state, uint64_t bound):
    return _below(&state[0], bound)
