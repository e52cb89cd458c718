"""Jitted core of the N-stars evolution.

State lives in plain numpy arrays owned by :class:`nstars.simulator.GraphState`:

* ``vw[v] = (w1, w2)`` per vertex,
* two star registries (N-stars with key width N, (N-1)-stars with width N-1),
  each made of ``keys`` (center first, then the sorted peripherals),
  ``weights``, a Fenwick ``tree`` and an open-addressing ``table`` mapping a
  key hash to its row (-1 marks an empty slot),
* ``rng``: xoshiro256** state (4 x uint64),
* ``meta``: counters, indexed by the ``M_*`` constants below.

:func:`advance` runs steps until it is done or some array is about to
overflow; the Python side then grows the arrays and calls it again.
"""

import numpy as np
from numba import njit

from .sampler import fen_add, fen_append, fen_find, fen_prefix

M_NV = 0        # vertices
M_NS = 1        # distinct N-stars
M_NT = 2        # distinct (N-1)-stars
M_STEPS = 3
M_NE = 4        # logged edges
M_S_TOTAL = 5   # total N-star weight
M_T_TOTAL = 6   # total (N-1)-star weight
M_COUNT0 = 7    # branch counters I/1, I/2, II/1, II/2 at 7..10
M_LAST = 11     # kind of the last step
M_SIZE = 12

OK = 0
NEED_GROW = 1
INVARIANT_BROKEN = 2

KIND_I1 = 0
KIND_I2 = 1
KIND_II1 = 2
KIND_II2 = 3

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


# --------------------------------------------------------------------------
# xoshiro256** seeded through splitmix64


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def _splitmix64(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    z = x
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x, z ^ (z >> np.uint64(31))


@njit(cache=True)
def seed_rng(state, seed):
    x = np.uint64(seed)
    for i in range(4):
        x, z = _splitmix64(x)
        state[i] = z


@njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def uniform(s):
    """Double in [0, 1) from the top 53 bits."""
    return np.float64(next_u64(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def randbelow(s, n):
    """Unbiased integer in [0, n) by rejection (n >= 1)."""
    un = np.uint64(n)
    threshold = (np.uint64(0) - un) % un
    while True:
        x = next_u64(s)
        if x >= threshold:
            return np.int64(x % un)


# --------------------------------------------------------------------------
# star registry


@njit(cache=True)
def _hash_key(key, width):
    h = _GOLDEN
    for k in range(width):
        h ^= np.uint64(key[k]) + _GOLDEN + (h << np.uint64(6)) + (h >> np.uint64(2))
    h = (h ^ (h >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    h = (h ^ (h >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return h ^ (h >> np.uint64(31))


@njit(cache=True)
def _same(keys, idx, key, width):
    for k in range(width):
        if keys[idx, k] != key[k]:
            return False
    return True


@njit(cache=True)
def _slot_of(keys, table, key, width):
    """Slot holding ``key`` or the empty slot where it would go."""
    mask = np.uint64(table.shape[0] - 1)
    slot = np.int64(_hash_key(key, width) & mask)
    while True:
        idx = table[slot]
        if idx < 0 or _same(keys, idx, key, width):
            return slot
        slot = (slot + 1) & np.int64(mask)


@njit(cache=True)
def touch(keys, weights, tree, table, meta, count_at, total_at, key, width):
    """Add one activation to ``key``, creating it with weight 1 if absent.

    Returns the row index, negated minus one when the star was newly created.
    """
    slot = _slot_of(keys, table, key, width)
    idx = table[slot]
    n = meta[count_at]
    meta[total_at] += 1
    if idx >= 0:
        weights[idx] += 1
        fen_add(tree, n, idx, 1)
        return idx
    idx = n
    for k in range(width):
        keys[idx, k] = key[k]
    weights[idx] = 1
    fen_append(tree, n, 1)
    table[slot] = idx
    meta[count_at] = n + 1
    return -idx - 1


@njit(cache=True)
def rehash(keys, n, table, width):
    table[:] = -1
    for idx in range(n):
        slot = _slot_of(keys, table, keys[idx], width)
        table[slot] = idx


@njit(cache=True)
def lookup(keys, table, key, width):
    idx = table[_slot_of(keys, table, key, width)]
    return idx


# --------------------------------------------------------------------------
# evolution


@njit(cache=True)
def _sort_small(a, lo, hi):
    for i in range(lo + 1, hi):
        v = a[i]
        j = i - 1
        while j >= lo and a[j] > v:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = v


@njit(cache=True)
def _distinct(rng, nv, m, out, start):
    """Fill ``out[start:start+m]`` with distinct uniform vertices of [0, nv)."""
    for i in range(start, start + m):
        while True:
            v = randbelow(rng, nv)
            fresh = True
            for j in range(start, i):
                if out[j] == v:
                    fresh = False
                    break
            if fresh:
                out[i] = v
                break


@njit(cache=True)
def _activate(N, skey, sub, vw, s_keys, s_w, s_tree, s_table,
              t_keys, t_w, t_tree, t_table, edges, record_edges, meta):
    """Register one interaction of the N-star ``skey`` (center, sorted peripherals).

    Returns the N-star's touch code.
    """
    K = N - 1
    code = touch(s_keys, s_w, s_tree, s_table, meta, M_NS, M_S_TOTAL, skey, N)
    for drop in range(1, N):
        sub[0] = skey[0]
        m = 1
        for k in range(1, N):
            if k != drop:
                sub[m] = skey[k]
                m += 1
        touch(t_keys, t_w, t_tree, t_table, meta, M_NT, M_T_TOTAL, sub, K)
    c = skey[0]
    vw[c, 0] += 1
    for k in range(1, N):
        vw[skey[k], 1] += 1
    if record_edges:
        ne = meta[M_NE]
        for k in range(1, N):
            edges[ne, 0] = skey[k]
            edges[ne, 1] = c
            ne += 1
        meta[M_NE] = ne
    return code


@njit(cache=True)
def _room(N, vw, s_keys, s_table, t_keys, t_table, edges, record_edges, meta):
    K = N - 1
    if meta[M_NV] + 1 > vw.shape[0]:
        return False
    if meta[M_NS] + 1 > s_keys.shape[0] or 2 * (meta[M_NS] + 1) > s_table.shape[0]:
        return False
    if meta[M_NT] + K > t_keys.shape[0] or 2 * (meta[M_NT] + K) > t_table.shape[0]:
        return False
    if record_edges and meta[M_NE] + K > edges.shape[0]:
        return False
    return True


@njit(cache=True)
def conservation_ok(N, vw, s_w, s_tree, t_w, t_tree, meta):
    """Recompute the four conserved totals from scratch and compare."""
    n_act = meta[M_STEPS] + 1
    K = N - 1
    sw1 = 0
    sw2 = 0
    for v in range(meta[M_NV]):
        sw1 += vw[v, 0]
        sw2 += vw[v, 1]
    ss = 0
    for i in range(meta[M_NS]):
        ss += s_w[i]
    st = 0
    for i in range(meta[M_NT]):
        st += t_w[i]
    if sw1 != n_act or sw2 != K * n_act:
        return False
    if ss != n_act or st != K * n_act:
        return False
    if fen_prefix(s_tree, meta[M_NS]) != n_act or fen_prefix(t_tree, meta[M_NT]) != K * n_act:
        return False
    if meta[M_S_TOTAL] != n_act or meta[M_T_TOTAL] != K * n_act:
        return False
    return True


@njit(cache=True)
def advance(N, p, q, r, vw, s_keys, s_w, s_tree, s_table,
            t_keys, t_w, t_tree, t_table, edges, record_edges,
            rng, meta, nsteps, check_every_step):
    """Run up to ``nsteps`` evolution steps.

    Returns ``(status, done)``.  ``status`` is ``NEED_GROW`` when an array
    is full before a step, ``INVARIANT_BROKEN`` when ``check_every_step`` is
    set and a conservation identity fails.
    """
    K = N - 1
    skey = np.empty(N, dtype=np.int32)
    sub = np.empty(K, dtype=np.int32)
    pick = np.empty(N, dtype=np.int64)
    for done in range(nsteps):
        if not _room(N, vw, s_keys, s_table, t_keys, t_table, edges, record_edges, meta):
            return NEED_GROW, done
        nv = meta[M_NV]
        if uniform(rng) < p:
            if uniform(rng) < r:
                kind = KIND_I1
                j = fen_find(t_tree, meta[M_NT], randbelow(rng, meta[M_T_TOTAL]))
                # old (N-1)-star + new peripheral vertex; the new id is the largest
                for k in range(K):
                    skey[k] = t_keys[j, k]
                skey[K] = nv
            else:
                kind = KIND_I2
                _distinct(rng, nv, K, pick, 0)
                skey[0] = nv
                for k in range(K):
                    skey[k + 1] = pick[k]
                _sort_small(skey, 1, N)
            vw[nv, 0] = 0
            vw[nv, 1] = 0
            meta[M_NV] = nv + 1
        else:
            if uniform(rng) < q:
                kind = KIND_II1
                j = fen_find(s_tree, meta[M_NS], randbelow(rng, meta[M_S_TOTAL]))
                for k in range(N):
                    skey[k] = s_keys[j, k]
            else:
                kind = KIND_II2
                _distinct(rng, nv, N, pick, 0)
                ci = randbelow(rng, N)
                skey[0] = pick[ci]
                m = 1
                for k in range(N):
                    if k != ci:
                        skey[m] = pick[k]
                        m += 1
                _sort_small(skey, 1, N)
        code = _activate(N, skey, sub, vw, s_keys, s_w, s_tree, s_table,
                         t_keys, t_w, t_tree, t_table, edges, record_edges, meta)
        if check_every_step and kind <= KIND_I2 and code >= 0:
            return INVARIANT_BROKEN, done
        meta[M_STEPS] += 1
        meta[M_COUNT0 + kind] += 1
        meta[M_LAST] = kind
        if check_every_step and not conservation_ok(N, vw, s_w, s_tree, t_w, t_tree, meta):
            return INVARIANT_BROKEN, done + 1
    return OK, nsteps


@njit(cache=True)
def seed_initial(N, vw, s_keys, s_w, s_tree, s_table, t_keys, t_w, t_tree, t_table,
                 edges, record_edges, meta):
    """The starting N-star: center 0, peripherals 1..N-1, all weights 1."""
    skey = np.empty(N, dtype=np.int32)
    sub = np.empty(N - 1, dtype=np.int32)
    for k in range(N):
        skey[k] = k
        vw[k, 0] = 0
        vw[k, 1] = 0
    meta[M_NV] = N
    _activate(N, skey, sub, vw, s_keys, s_w, s_tree, s_table,
              t_keys, t_w, t_tree, t_table, edges, record_edges, meta)
