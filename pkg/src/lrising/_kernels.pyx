# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backend for the hot loops.

Mirrors _pykernels exactly: same xoshiro256** recurrence, same update order,
so trajectories and reductions agree bitwise with the pure-Python backend.
"""

import math

import numpy as np

cimport numpy as cnp
from cython.parallel cimport parallel, prange
from libc.math cimport exp, log, pow
from libc.stdint cimport int8_t, int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc

cnp.import_array()

BACKEND_NAME = "cython"

cdef int64_t INF64 = (<int64_t>1) << 60


# ---------------------------------------------------------------------------
# RNG: xoshiro256**
# ---------------------------------------------------------------------------

cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _xo_next(uint64_t *s) noexcept nogil:
    cdef uint64_t result = _rotl(s[1] * <uint64_t>5, 7) * <uint64_t>9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


cdef inline double _uniform(uint64_t *s) noexcept nogil:
    return <double>(_xo_next(s) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int64_t _randbelow(uint64_t *s, int64_t n) noexcept nogil:
    return <int64_t>(_uniform(s) * n)


cdef void _seed_state(uint64_t *st, uint64_t seed) noexcept nogil:
    cdef uint64_t x = seed
    cdef uint64_t z
    cdef int i
    cdef int any_set = 0
    for i in range(4):
        x = x + <uint64_t>0x9E3779B97F4A7C15
        z = x
        z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
        st[i] = z ^ (z >> 31)
        if st[i] != 0:
            any_set = 1
    if not any_set:
        st[0] = 1


# ---------------------------------------------------------------------------
# Monte Carlo inner loop
# ---------------------------------------------------------------------------


def mcmc_run(
    cnp.int8_t[::1] spins,
    double[::1] fields,
    double[::1] jsym,
    rng_state,
    n_props,
    double beta,
    int mode,
    s_lo,
    s_hi,
    cnp.int32_t[::1] up_pos,
    cnp.int32_t[::1] dn_pos,
    cnp.int32_t[::1] pos_idx,
    double[::1] scal_f,
    cnp.int64_t[::1] scal_i,
):
    """Run n_props proposals in place; returns (accepted, new rng state).

    See the pure-Python twin for the mode semantics.
    """
    cdef uint64_t st[4]
    rs = np.ascontiguousarray(rng_state, dtype=np.uint64)
    st[0] = <uint64_t>rs[0]; st[1] = <uint64_t>rs[1]
    st[2] = <uint64_t>rs[2]; st[3] = <uint64_t>rs[3]

    cdef int64_t n = spins.shape[0]
    cdef int64_t lo = <int64_t>s_lo
    cdef int64_t hi = <int64_t>s_hi
    cdef int64_t total = <int64_t>n_props
    cdef int64_t accepted = 0
    cdef int64_t p, i, k, nu, nd, iu, idn, ku, kd, last, d, s_new
    cdef int s_old
    cdef double delta, u
    cdef const double *jrow

    with nogil:
        for p in range(total):
            if mode == 2:
                nu = scal_i[1]
                nd = scal_i[2]
                if nu == 0 or nd == 0:
                    continue
                iu = up_pos[_randbelow(st, nu)]
                idn = dn_pos[_randbelow(st, nd)]
                d = iu - idn
                if d < 0:
                    d = -d
                delta = (
                    spins[iu] * fields[iu]
                    + spins[idn] * fields[idn]
                    + 2.0 * jsym[n - 1 + d]
                )
                u = _uniform(st)
                if u < exp(-beta * delta):
                    jrow = &jsym[n - 1 - iu]
                    for k in range(n):
                        fields[k] += (-2.0 * spins[iu]) * jrow[k]
                    jrow = &jsym[n - 1 - idn]
                    for k in range(n):
                        fields[k] += (-2.0 * spins[idn]) * jrow[k]
                    spins[iu] = -1
                    spins[idn] = 1
                    ku = pos_idx[iu]
                    kd = pos_idx[idn]
                    last = up_pos[nu - 1]
                    up_pos[ku] = <int32_t>last
                    pos_idx[last] = <int32_t>ku
                    last = dn_pos[nd - 1]
                    dn_pos[kd] = <int32_t>last
                    pos_idx[last] = <int32_t>kd
                    up_pos[nu - 1] = <int32_t>idn
                    pos_idx[idn] = <int32_t>(nu - 1)
                    dn_pos[nd - 1] = <int32_t>iu
                    pos_idx[iu] = <int32_t>(nd - 1)
                    scal_f[0] += delta
                    accepted += 1
            else:
                i = _randbelow(st, n)
                s_old = spins[i]
                delta = s_old * fields[i]
                if mode == 1:
                    s_new = scal_i[0] - 2 * s_old
                    if s_new < lo or s_new > hi:
                        continue
                u = _uniform(st)
                if u < exp(-beta * delta):
                    jrow = &jsym[n - 1 - i]
                    for k in range(n):
                        fields[k] += (-2.0 * s_old) * jrow[k]
                    spins[i] = <int8_t>(-s_old)
                    scal_f[0] += delta
                    scal_i[0] -= 2 * s_old
                    accepted += 1

    out_state = np.array([st[0], st[1], st[2], st[3]], dtype=np.uint64)
    return accepted, out_state


# ---------------------------------------------------------------------------
# Gray-code exhaustive scan
# ---------------------------------------------------------------------------


def gray_scan_reduce(int n, double beta, double[::1] jsym, double[::1] btab):
    """All 2^n configurations by single flips; see the pure-Python twin."""
    spins_arr = np.ones(n, dtype=np.int8)
    fields_arr = np.zeros(n, dtype=np.float64)
    site_arr = np.zeros(n, dtype=np.float64)
    shist_arr = np.zeros(n + 1, dtype=np.float64)
    cdef cnp.int8_t[::1] spins = spins_arr
    cdef double[::1] fields = fields_arr
    cdef double[::1] site = site_arr
    cdef double[::1] shist = shist_arr

    cdef int64_t i, k, t, total
    cdef int64_t s_sum = n
    cdef double energy = 0.0
    cdef double z = 0.0
    cdef double w, s_old
    cdef const double *jrow

    for i in range(n):
        fields[i] = btab[i]
        for k in range(n):
            fields[i] += jsym[n - 1 - i + k]

    w = 1.0
    z += w
    for i in range(n):
        site[i] += w * spins[i]
    shist[(s_sum + n) // 2] += w

    total = (<int64_t>1) << n
    with nogil:
        for t in range(1, total):
            k = 0
            while not (t >> k) & 1:
                k += 1
            s_old = spins[k]
            energy += s_old * fields[k]
            jrow = &jsym[n - 1 - k]
            for i in range(n):
                fields[i] += (-2.0 * s_old) * jrow[i]
            spins[k] = <int8_t>(-spins[k])
            s_sum += 2 * spins[k]
            w = exp(-beta * energy)
            z += w
            for i in range(n):
                site[i] += w * spins[i]
            shist[(s_sum + n) // 2] += w

    return log(z), site_arr, shist_arr, z


# ---------------------------------------------------------------------------
# Greedy flip pairing (shared by verification and census)
# ---------------------------------------------------------------------------


cdef int _greedy_pairs_ws(int64_t *flips, int m, int64_t *out_a, int64_t *out_b,
                          int32_t *nxt, int32_t *prv, uint8_t *alive,
                          int32_t *ea, int32_t *enext, int32_t *bucket,
                          int32_t *level, int64_t max_gap) noexcept nogil:
    """Minimal-adjacent-gap matching, candidates by increasing (gap, left).

    Initial adjacent pairs are streamed from gap buckets (position-sorted by
    construction).  Adjacencies created when a pair is removed always carry a
    strictly larger gap, so a small heap of those merged with the stream
    reproduces the leftmost-first tie-break exactly.  Workspace: ea 2m,
    enext reused as the heap index array, bucket max_gap+2, level as heap
    keys storage is not needed; bucket is reset here.
    """
    if m == 0:
        return 0
    cdef int k, a, b, left, right, npairs, ne, child, par, hn
    cdef int64_t g, g2, base, key_stream, key_heap, key
    cdef uint64_t hkey[4096]
    cdef int32_t hval[4096]
    cdef uint64_t tk
    cdef int32_t tv, e

    base = flips[0]
    for g in range(max_gap + 2):
        bucket[g] = -1
    for k in range(m):
        nxt[k] = k + 1 if k + 1 < m else -1
        prv[k] = k - 1
        alive[k] = 1
    # prepend right-to-left: each bucket list is position-sorted
    ne = 0
    for k in range(m - 2, -1, -1):
        g = flips[k + 1] - flips[k]
        ea[ne] = k
        enext[ne] = bucket[g]
        bucket[g] = ne
        ne += 1

    npairs = 0
    hn = 0
    g = 1
    e = -1
    while npairs < m // 2:
        # advance the stream to its next live entry
        while e < 0 and g <= max_gap:
            e = bucket[g]
            if e < 0:
                g += 1
        if e >= 0:
            key_stream = (g << 24) | (flips[ea[e]] - base)
        else:
            key_stream = -1
        if hn > 0:
            key_heap = <int64_t>hkey[0]
        else:
            key_heap = -1
        if key_stream < 0 and key_heap < 0:
            break
        if key_heap < 0 or (key_stream >= 0 and key_stream < key_heap):
            a = ea[e]
            key = key_stream
            e = enext[e]
            bucket[g] = e
        else:
            a = hval[0]
            key = key_heap
            hn -= 1
            hkey[0] = hkey[hn]
            hval[0] = hval[hn]
            par = 0
            while True:
                child = 2 * par + 1
                if child >= hn:
                    break
                if child + 1 < hn and hkey[child + 1] < hkey[child]:
                    child += 1
                if hkey[child] < hkey[par]:
                    tk = hkey[par]; hkey[par] = hkey[child]; hkey[child] = tk
                    tv = hval[par]; hval[par] = hval[child]; hval[child] = tv
                    par = child
                else:
                    break
        if not alive[a]:
            continue
        b = nxt[a]
        if b < 0 or not alive[b]:
            continue
        if flips[b] - flips[a] != (key >> 24):
            continue
        out_a[npairs] = flips[a]
        out_b[npairs] = flips[b]
        npairs += 1
        alive[a] = 0
        alive[b] = 0
        left = prv[a]
        right = nxt[b]
        if left >= 0:
            nxt[left] = right
        if right >= 0:
            prv[right] = left
        if left >= 0 and right >= 0 and hn < 4096:
            g2 = flips[right] - flips[left]
            hkey[hn] = <uint64_t>((g2 << 24) | (flips[left] - base))
            hval[hn] = <int32_t>left
            child = hn
            hn += 1
            while child > 0:
                par = (child - 1) >> 1
                if hkey[par] > hkey[child]:
                    tk = hkey[par]; hkey[par] = hkey[child]; hkey[child] = tk
                    tv = hval[par]; hval[par] = hval[child]; hval[child] = tv
                    child = par
                else:
                    break
    return npairs


cdef int _greedy_pairs(int64_t *flips, int m, int64_t *out_a, int64_t *out_b) noexcept nogil:
    """Allocating wrapper over the bucket matcher (small, one-shot uses)."""
    if m == 0:
        return 0
    cdef int64_t max_gap = flips[m - 1] - flips[0] + 1
    cdef int32_t *nxt = <int32_t *>malloc((m + 1) * sizeof(int32_t))
    cdef int32_t *prv = <int32_t *>malloc((m + 1) * sizeof(int32_t))
    cdef uint8_t *alive = <uint8_t *>malloc((m + 1) * sizeof(uint8_t))
    cdef int32_t *ea = <int32_t *>malloc(2 * (m + 1) * sizeof(int32_t))
    cdef int32_t *enext = <int32_t *>malloc(2 * (m + 1) * sizeof(int32_t))
    cdef int32_t *bucket = <int32_t *>malloc((max_gap + 2) * sizeof(int32_t))
    cdef int32_t *level = <int32_t *>malloc((m + 1) * sizeof(int32_t))
    cdef int npairs = _greedy_pairs_ws(
        flips, m, out_a, out_b, nxt, prv, alive, ea, enext, bucket, level, max_gap
    )
    free(nxt); free(prv); free(alive); free(ea); free(enext); free(bucket); free(level)
    return npairs


def greedy_pairs_from_flips(flips):
    """Python-visible wrapper over the C pairing (used in tests)."""
    f = np.asarray(flips, dtype=np.int64)
    cdef cnp.int64_t[::1] fv = f
    cdef int m = fv.shape[0]
    if m > 8000:
        raise ValueError("compiled matcher supports at most 8000 flips")
    if m == 0:
        return []
    oa = np.empty(m // 2, dtype=np.int64)
    ob = np.empty(m // 2, dtype=np.int64)
    cdef cnp.int64_t[::1] oav = oa
    cdef cnp.int64_t[::1] obv = ob
    cdef int npairs = _greedy_pairs(&fv[0], m, &oav[0], &obv[0])
    return [(int(oa[k]), int(ob[k])) for k in range(npairs)]


# ---------------------------------------------------------------------------
# Triangle invariant verification over random batches
# ---------------------------------------------------------------------------


cdef int _verify_one(int8_t *spins, int n,
                     int64_t *flips, int64_t *pa, int64_t *pb,
                     int32_t *order, int32_t *stack_buf, int8_t *rec,
                     int32_t *ws_nxt, int32_t *ws_prv, uint8_t *ws_alive,
                     int32_t *ws_ea, int32_t *ws_enext, int32_t *ws_bucket,
                     int32_t *ws_level) noexcept nogil:
    """Build the triangle family of one configuration and verify the round
    trip plus the family invariants.  Returns a bitmask: 1 = round-trip
    failure, 2 = invariant failure."""
    cdef int i, m, k, prev, npairs, u, v, ok, depth, res
    cdef int64_t iu, ju, iv, jv, mu, mv, gap, g2

    m = 0
    prev = 1
    for i in range(n):
        if spins[i] != prev:
            flips[m] = i - 1
            m += 1
            prev = spins[i]
    if prev != 1:
        flips[m] = n - 1
        m += 1
    if m > 0:
        npairs = _greedy_pairs_ws(
            flips, m, pa, pb, ws_nxt, ws_prv, ws_alive,
            ws_ea, ws_enext, ws_bucket, ws_level,
            flips[m - 1] - flips[0] + 1,
        )
    else:
        npairs = 0

    res = 0
    for i in range(n):
        rec[i] = 1
    for k in range(npairs):
        for i in range(<int>pa[k] + 1, <int>pb[k] + 1):
            rec[i] = -rec[i]
    for i in range(n):
        if rec[i] != spins[i]:
            res |= 1
            break

    # sort pair indices by left flip (pairing emits them unordered)
    for k in range(npairs):
        order[k] = k
    for k in range(1, npairs):
        v = order[k]
        u = k - 1
        while u >= 0 and pa[order[u]] > pa[v]:
            order[u + 1] = order[u]
            u -= 1
        order[u + 1] = v
    ok = 1
    # nesting invariant via an ancestor stack (containers come first)
    depth = 0
    for k in range(npairs):
        iu = pa[order[k]]; ju = pb[order[k]]
        mu = ju - iu
        while depth > 0 and pb[stack_buf[depth - 1]] < iu:
            depth -= 1
        if depth > 0:
            jv = pb[stack_buf[depth - 1]]
            iv = pa[stack_buf[depth - 1]]
            if jv < ju:
                ok = 0  # crossing pairs
                break
            if 3 * mu > jv - iv:
                ok = 0
                break
        stack_buf[depth] = order[k]
        depth += 1
    if ok:
        for k in range(npairs):
            if not ok:
                break
            iu = pa[order[k]]; ju = pb[order[k]]
            mu = ju - iu
            for v in range(k + 1, npairs):
                iv = pa[order[v]]; jv = pb[order[v]]
                if iv > ju and iv - ju >= mu:
                    break
                mv = jv - iv
                gap = iu - iv if iu > iv else iv - iu
                g2 = iu - jv if iu > jv else jv - iu
                if g2 < gap: gap = g2
                g2 = ju - iv if ju > iv else iv - ju
                if g2 < gap: gap = g2
                g2 = ju - jv if ju > jv else jv - ju
                if g2 < gap: gap = g2
                if gap < (mu if mu < mv else mv):
                    ok = 0
                    break
    if not ok:
        res |= 2
    return res


def verify_triangle_batch(int L, n_configs, seed, double p_minus=0.5,
                          int exhaustive=0):
    """Random configurations (or, with exhaustive=1, every configuration of
    the window): build triangles, check round trip + invariants.

    Configurations are generated from per-configuration seeds derived from
    (seed, index), so the batch parallelizes over threads with results
    independent of the thread count.
    """
    cdef int n = 2 * L + 1
    cdef int64_t total = <int64_t>n_configs
    if exhaustive:
        total = (<int64_t>1) << n
    cdef uint64_t base_seed = <uint64_t>seed
    cdef int64_t fail_rt = 0
    cdef int64_t fail_inv = 0
    cdef int64_t c
    cdef int i, res
    cdef uint64_t st[4]
    cdef int8_t *spins
    cdef int64_t *flips
    cdef int64_t *pa
    cdef int64_t *pb
    cdef int32_t *order
    cdef int32_t *stack_buf
    cdef int8_t *rec
    cdef int32_t *ws_nxt
    cdef int32_t *ws_prv
    cdef uint8_t *ws_alive
    cdef int32_t *ws_ea
    cdef int32_t *ws_enext
    cdef int32_t *ws_bucket
    cdef int32_t *ws_level

    with nogil, parallel():
        spins = <int8_t *>malloc(n * sizeof(int8_t))
        flips = <int64_t *>malloc((n + 2) * sizeof(int64_t))
        pa = <int64_t *>malloc((n + 2) * sizeof(int64_t))
        pb = <int64_t *>malloc((n + 2) * sizeof(int64_t))
        order = <int32_t *>malloc((n + 2) * sizeof(int32_t))
        stack_buf = <int32_t *>malloc((n + 2) * sizeof(int32_t))
        rec = <int8_t *>malloc(n * sizeof(int8_t))
        ws_nxt = <int32_t *>malloc((n + 2) * sizeof(int32_t))
        ws_prv = <int32_t *>malloc((n + 2) * sizeof(int32_t))
        ws_alive = <uint8_t *>malloc((n + 2) * sizeof(uint8_t))
        ws_ea = <int32_t *>malloc(2 * (n + 2) * sizeof(int32_t))
        ws_enext = <int32_t *>malloc(2 * (n + 2) * sizeof(int32_t))
        ws_bucket = <int32_t *>malloc((n + 4) * sizeof(int32_t))
        ws_level = <int32_t *>malloc((n + 2) * sizeof(int32_t))
        for c in prange(total, schedule="static"):
            if exhaustive:
                for i in range(n):
                    spins[i] = -1 if (c >> i) & 1 else 1
            else:
                _seed_state(st, base_seed + (<uint64_t>(c + 1)) * <uint64_t>0x9E3779B97F4A7C15)
                for i in range(n):
                    spins[i] = -1 if _uniform(st) < p_minus else 1
            res = _verify_one(
                spins, n, flips, pa, pb, order, stack_buf, rec,
                ws_nxt, ws_prv, ws_alive, ws_ea, ws_enext, ws_bucket, ws_level,
            )
            if res & 1:
                fail_rt += 1
            if res & 2:
                fail_inv += 1
        free(spins); free(flips); free(pa); free(pb); free(order)
        free(stack_buf); free(rec)
        free(ws_nxt); free(ws_prv); free(ws_alive)
        free(ws_ea); free(ws_enext); free(ws_bucket); free(ws_level)

    return {
        "configs": int(total),
        "fail_roundtrip": int(fail_rt),
        "fail_invariants": int(fail_inv),
    }


# ---------------------------------------------------------------------------
# Single-contour census
# ---------------------------------------------------------------------------

cdef struct CensusCtx:
    double C
    double alpha
    double J
    double full_line
    double rate
    int M
    int64_t window
    int64_t total
    double min_slack
    uint64_t pkeys[64]
    int64_t pcounts[64]
    int nkeys
    int want
    int64_t seen
    int64_t *res_buf
    uint64_t *rng
    double *jtab
    double *powtab


cdef inline int64_t _tri_dist(int64_t a0, int64_t a1, int64_t b0, int64_t b1) noexcept nogil:
    cdef int64_t best, d
    best = a0 - b0 if a0 > b0 else b0 - a0
    d = a0 - b1 if a0 > b1 else b1 - a0
    if d < best: best = d
    d = a1 - b0 if a1 > b0 else b0 - a1
    if d < best: best = d
    d = a1 - b1 if a1 > b1 else b1 - a1
    if d < best: best = d
    return best


cdef int _closure(int64_t *ta, int64_t *tb, int k, double C, int32_t *comp) noexcept nogil:
    """Contour decomposition labels into comp[0..k); returns group count."""
    cdef int i, u, v, changed, gi, gj, inter, nested, count
    cdef int64_t mi, mj, dmin, d
    cdef int64_t lo_i, hi_i, lo_j, hi_j
    for i in range(k):
        comp[i] = i
    changed = 1
    while changed:
        changed = 0
        for gi in range(k):
            for gj in range(gi + 1, k):
                mi = 0; mj = 0
                dmin = INF64
                lo_i = INF64; hi_i = -INF64
                lo_j = INF64; hi_j = -INF64
                for u in range(k):
                    if comp[u] == gi:
                        mi += tb[u] - ta[u]
                        if ta[u] < lo_i: lo_i = ta[u]
                        if tb[u] > hi_i: hi_i = tb[u]
                    elif comp[u] == gj:
                        mj += tb[u] - ta[u]
                        if ta[u] < lo_j: lo_j = ta[u]
                        if tb[u] > hi_j: hi_j = tb[u]
                if mi == 0 or mj == 0:
                    continue
                for u in range(k):
                    if comp[u] != gi:
                        continue
                    for v in range(k):
                        if comp[v] != gj:
                            continue
                        d = _tri_dist(ta[u], tb[u], ta[v], tb[v])
                        if d < dmin:
                            dmin = d
                if dmin <= C * pow(<double>(mi if mi < mj else mj), 3.0):
                    pass
                else:
                    inter = 0
                    for u in range(k):
                        if comp[u] != gi:
                            continue
                        for v in range(k):
                            if comp[v] != gj:
                                continue
                            if (ta[u] < ta[v] and tb[v] < tb[u]) or (
                                ta[v] < ta[u] and tb[u] < tb[v]
                            ):
                                inter = 1
                                break
                        if inter:
                            break
                    if not inter:
                        continue
                    nested = 0
                    for v in range(k):
                        if comp[v] == gj and ta[v] < lo_i and hi_i < tb[v]:
                            nested = 1
                            break
                        if comp[v] == gi and ta[v] < lo_j and hi_j < tb[v]:
                            nested = 1
                            break
                    if nested:
                        continue
                for u in range(k):
                    if comp[u] == gj:
                        comp[u] = gi
                changed = 1
    count = 0
    for gi in range(k):
        for u in range(k):
            if comp[u] == gi:
                count += 1
                break
    return count


cdef int _greedy_small(int64_t *flips, int m, int64_t *oa, int64_t *ob) noexcept nogil:
    """Heap-free greedy matching for small flip sets (census leaves)."""
    cdef uint8_t alive[40]
    cdef int i, r, prev, best_a, best_b, npairs
    cdef int64_t gap, best_gap
    for i in range(m):
        alive[i] = 1
    npairs = 0
    for r in range(m // 2):
        best_gap = INF64
        best_a = -1
        best_b = -1
        prev = -1
        for i in range(m):
            if alive[i]:
                if prev >= 0:
                    gap = flips[i] - flips[prev]
                    if gap < best_gap:
                        best_gap = gap
                        best_a = prev
                        best_b = i
                prev = i
        oa[npairs] = flips[best_a]
        ob[npairs] = flips[best_b]
        npairs += 1
        alive[best_a] = 0
        alive[best_b] = 0
    return npairs


cdef void _census_leaf(CensusCtx *ctx, int64_t *ta, int64_t *tb, int k) noexcept nogil:
    cdef int64_t flips[32]
    cdef int64_t oa[16]
    cdef int64_t ob[16]
    cdef int64_t masses[16]
    cdef int64_t sites[16]
    cdef int i, j, m, npairs, found, ns, ridx
    cdef int64_t tmp, a, b, d
    cdef uint64_t key
    cdef double e, norm

    m = 0
    for i in range(k):
        flips[m] = ta[i]; m += 1
        flips[m] = tb[i]; m += 1
    for i in range(1, m):
        tmp = flips[i]
        j = i - 1
        while j >= 0 and flips[j] > tmp:
            flips[j + 1] = flips[j]
            j -= 1
        flips[j + 1] = tmp
    npairs = _greedy_small(flips, m, oa, ob)
    for i in range(k):
        found = 0
        for j in range(npairs):
            if oa[j] == ta[i] and ob[j] == tb[i]:
                found = 1
                break
        if not found:
            return

    for i in range(k):
        masses[i] = tb[i] - ta[i]
    for i in range(1, k):
        tmp = masses[i]
        j = i - 1
        while j >= 0 and masses[j] > tmp:
            masses[j + 1] = masses[j]
            j -= 1
        masses[j + 1] = tmp
    key = 0
    for i in range(k):
        key = (key << 6) | <uint64_t>masses[i]
    found = -1
    for i in range(ctx.nkeys):
        if ctx.pkeys[i] == key:
            found = i
            break
    if found < 0:
        found = ctx.nkeys
        ctx.pkeys[found] = key
        ctx.pcounts[found] = 0
        ctx.nkeys += 1
    ctx.pcounts[found] += 1
    ctx.total += 1

    ns = 0
    for i in range(0, m, 2):
        a = flips[i]
        b = flips[i + 1]
        for d in range(a + 1, b + 1):
            sites[ns] = d
            ns += 1
    e = ctx.full_line * ns
    for i in range(ns):
        for j in range(i + 1, ns):
            e -= 2.0 * ctx.jtab[sites[j] - sites[i]]
    norm = 0.0
    for i in range(k):
        norm += ctx.powtab[tb[i] - ta[i]]
    if e - ctx.rate * norm < ctx.min_slack:
        ctx.min_slack = e - ctx.rate * norm

    if ctx.want > 0:
        ctx.seen += 1
        if ctx.seen <= ctx.want:
            ridx = <int>(ctx.seen - 1)
        else:
            ridx = <int>_randbelow(ctx.rng, ctx.seen)
            if ridx >= ctx.want:
                return
        ctx.res_buf[ridx * 17] = k
        for j in range(k):
            ctx.res_buf[ridx * 17 + 1 + 2 * j] = ta[j]
            ctx.res_buf[ridx * 17 + 2 + 2 * j] = tb[j]


cdef inline int _violates(int64_t *ta, int64_t *tb, int32_t *comp, int n,
                          int ga, int gb, double C) noexcept nogil:
    """Separation condition between the groups labelled ga and gb."""
    cdef int u, v, inter
    cdef int64_t mi = 0, mj = 0, dmin = INF64, d
    cdef int64_t lo_i = INF64, hi_i = -INF64, lo_j = INF64, hi_j = -INF64
    for u in range(n):
        if comp[u] == ga:
            mi += tb[u] - ta[u]
            if ta[u] < lo_i: lo_i = ta[u]
            if tb[u] > hi_i: hi_i = tb[u]
        elif comp[u] == gb:
            mj += tb[u] - ta[u]
            if ta[u] < lo_j: lo_j = ta[u]
            if tb[u] > hi_j: hi_j = tb[u]
    for u in range(n):
        if comp[u] != ga:
            continue
        for v in range(n):
            if comp[v] != gb:
                continue
            d = _tri_dist(ta[u], tb[u], ta[v], tb[v])
            if d < dmin:
                dmin = d
    if dmin <= C * pow(<double>(mi if mi < mj else mj), 3.0):
        return 1
    inter = 0
    for u in range(n):
        if comp[u] != ga:
            continue
        for v in range(n):
            if comp[v] != gb:
                continue
            if (ta[u] < ta[v] and tb[v] < tb[u]) or (
                ta[v] < ta[u] and tb[u] < tb[v]
            ):
                inter = 1
                break
        if inter:
            break
    if not inter:
        return 0
    for v in range(n):
        if comp[v] == gb and ta[v] < lo_i and hi_i < tb[v]:
            return 0
        if comp[v] == ga and ta[v] < lo_j and hi_j < tb[v]:
            return 0
    return 1


cdef void _census_rec(
    CensusCtx *ctx,
    int64_t *ta,
    int64_t *tb,
    uint8_t *used,
    int32_t *comp,
    int k,
    int rem,
    int64_t last_li,
) noexcept nogil:
    """comp[0..k) is the stable contour decomposition of the placed prefix."""
    cdef int32_t newcomp[16]
    cdef uint8_t seen[16]
    cdef int gi, u, v, ok, mass, changed, cur, ngroups
    cdef int64_t li, rj, cap, rf, gm, thr, a, b, gap, d, cont_a, cont_b, dmin

    cap = -INF64
    for gi in range(k):
        # treat gi as a label if some member carries it
        gm = 0
        rf = -INF64
        for u in range(k):
            if comp[u] == gi:
                gm += tb[u] - ta[u]
                if tb[u] > rf:
                    rf = tb[u]
        if gm == 0:
            continue
        thr = <int64_t>(ctx.C * pow(<double>(gm if gm < ctx.M - gm else ctx.M - gm), 3.0))
        if rf + thr > cap:
            cap = rf + thr
        if rf - 1 > cap:
            cap = rf - 1
    if cap > ctx.window:
        cap = ctx.window

    li = last_li + 1
    while li <= cap:
        if used[li]:
            li += 1
            continue
        cont_a = -INF64
        cont_b = INF64
        for u in range(k):
            if ta[u] < li < tb[u] and ta[u] > cont_a:
                cont_a = ta[u]
                cont_b = tb[u]
        for mass in range(1, rem + 1):
            rj = li + mass
            if rj > ctx.window or used[rj]:
                continue
            if cont_b < INF64:
                if rj >= cont_b:
                    continue
                if 3 * mass > cont_b - cont_a:
                    continue
            ok = 1
            for u in range(k):
                a = ta[u]; b = tb[u]
                if a < li < b < rj:
                    ok = 0
                    break
                gap = _tri_dist(li, rj, a, b)
                d = b - a
                if gap < (mass if mass < d else d):
                    ok = 0
                    break
            if not ok:
                continue
            ta[k] = li
            tb[k] = rj
            used[li] = 1
            used[rj] = 1
            # incremental closure: cascade merges into the new group's label
            for u in range(k):
                newcomp[u] = comp[u]
            newcomp[k] = k
            cur = k
            changed = 1
            while changed:
                changed = 0
                for gi in range(k):
                    if gi == cur:
                        continue
                    gm = 0
                    for u in range(k + 1):
                        if newcomp[u] == gi:
                            gm = 1
                            break
                    if not gm:
                        continue
                    if _violates(ta, tb, newcomp, k + 1, cur, gi, ctx.C):
                        for u in range(k + 1):
                            if newcomp[u] == gi:
                                newcomp[u] = cur
                        changed = 1
            ngroups = 0
            for u in range(16):
                seen[u] = 0
            for u in range(k + 1):
                if not seen[newcomp[u]]:
                    seen[newcomp[u]] = 1
                    ngroups += 1
            if rem - mass == 0:
                if ngroups == 1:
                    _census_leaf(ctx, ta, tb, k + 1)
            else:
                # prune: every group must stay connectable to the future
                ok = 1
                for gi in range(k + 1):
                    gm = 0
                    rf = -INF64
                    for u in range(k + 1):
                        if newcomp[u] == gi:
                            gm += tb[u] - ta[u]
                            if tb[u] > rf:
                                rf = tb[u]
                    if gm == 0:
                        continue
                    thr = <int64_t>(
                        ctx.C * pow(<double>(gm if gm < ctx.M - gm else ctx.M - gm), 3.0)
                    )
                    if li + 1 <= rf + thr or li + 1 < rf:
                        continue
                    dmin = INF64
                    for u in range(k + 1):
                        if newcomp[u] != gi:
                            continue
                        for v in range(k + 1):
                            if newcomp[v] == gi:
                                continue
                            d = _tri_dist(ta[u], tb[u], ta[v], tb[v])
                            if d < dmin:
                                dmin = d
                    if dmin > thr:
                        ok = 0
                        break
                if ok:
                    _census_rec(ctx, ta, tb, used, newcomp, k + 1, rem - mass, li)
            used[li] = 0
            used[rj] = 0
        li += 1


def census_contours(int mass_max, double C, double alpha, double J,
                    int want_samples=0, seed=1):
    """Exact census of single contours rooted at 0; see the Python twin."""
    from scipy.special import zeta as _hz

    cdef CensusCtx ctx
    ctx.C = C
    ctx.alpha = alpha
    ctx.J = J
    zeta2 = float(_hz(2.0 - alpha, 1))
    ctx.full_line = 2.0 * (J + zeta2)
    ctx.rate = (1.0 - 2.0 * (pow(2.0, alpha) - 1.0)) / (alpha * (1.0 - alpha))
    ctx.min_slack = float("inf")
    ctx.total = 0
    ctx.want = want_samples
    ctx.seen = 0

    cdef uint64_t st[4]
    _seed_state(st, <uint64_t>seed)
    ctx.rng = st

    cdef int64_t window_max = <int64_t>(C * mass_max**3) + mass_max + 2
    jtab_arr = np.zeros(window_max + 2, dtype=np.float64)
    cdef int64_t dd
    for dd in range(1, window_max + 2):
        jtab_arr[dd] = (J + 1.0) if dd == 1 else float(dd) ** (alpha - 2.0)
    cdef double[::1] jtab = jtab_arr
    ctx.jtab = &jtab[0]
    pow_arr = np.zeros(mass_max + 1, dtype=np.float64)
    for dd in range(1, mass_max + 1):
        pow_arr[dd] = float(dd) ** alpha
    cdef double[::1] powtab = pow_arr
    ctx.powtab = &powtab[0]

    res_arr = np.zeros(max(1, want_samples) * 17, dtype=np.int64)
    cdef cnp.int64_t[::1] res_view = res_arr
    ctx.res_buf = &res_view[0]

    cdef int64_t ta[16]
    cdef int64_t tb[16]
    cdef int32_t comp0[16]
    used_arr = np.zeros(window_max + 4, dtype=np.uint8)
    cdef uint8_t[::1] used = used_arr

    counts_by_mass = {}
    cdef int M, mass
    for M in range(1, mass_max + 1):
        ctx.M = M
        ctx.window = <int64_t>(C * M**3) + M + 2
        ctx.nkeys = 0
        for mass in range(1, M + 1):
            ta[0] = 0
            tb[0] = mass
            used[0] = 1
            used[mass] = 1
            comp0[0] = 0
            if M - mass == 0:
                _census_leaf(&ctx, ta, tb, 1)
            else:
                _census_rec(&ctx, ta, tb, &used[0], comp0, 1, M - mass, 0)
            used[0] = 0
            used[mass] = 0
        cm = {}
        for dd in range(ctx.nkeys):
            key = int(ctx.pkeys[dd])
            parts = []
            while key:
                parts.append(key & 63)
                key >>= 6
            parts.reverse()
            cm[tuple(parts)] = int(ctx.pcounts[dd])
        counts_by_mass[M] = cm

    from ._pykernels import CensusResult
    from .contours import Contour
    from .triangles import Triangle

    res = CensusResult(mass_max=mass_max, C=C, alpha=alpha, J=J)
    res.counts_by_mass = counts_by_mass
    res.total_count = int(ctx.total)
    res.min_peierls_slack = float(ctx.min_slack)
    n_samp = int(min(want_samples, ctx.seen)) if want_samples else 0
    samples = []
    for dd in range(n_samp):
        kk = int(res_arr[dd * 17])
        tris = tuple(
            Triangle(int(res_arr[dd * 17 + 1 + 2 * j]), int(res_arr[dd * 17 + 2 + 2 * j]))
            for j in range(kk)
        )
        samples.append(Contour(tris))
    res.samples = samples
    return res
