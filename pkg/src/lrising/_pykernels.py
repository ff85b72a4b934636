"""Pure-Python backend for the hot loops.

Functionally identical to the compiled module `_kernels` (same RNG, same
update order, byte-for-byte identical trajectories), but orders of magnitude
slower.  Selected automatically when the extension is unavailable, or when
LRISING_BACKEND=python is set.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Xoshiro

BACKEND_NAME = "python"


# ---------------------------------------------------------------------------
# Monte Carlo inner loop
# ---------------------------------------------------------------------------


def mcmc_run(
    spins,
    fields,
    jsym,
    rng_state,
    n_props,
    beta,
    mode,
    s_lo,
    s_hi,
    up_pos,
    dn_pos,
    pos_idx,
    scal_f,
    scal_i,
):
    """Run `n_props` proposals in place; returns (accepted, new rng state).

    mode 0: single flips; mode 1: single flips, proposals leaving the
    spin-sum window [s_lo, s_hi] rejected before the acceptance draw;
    mode 2: opposite-spin pair exchange (spin sum conserved exactly).
    scal_f = [energy]; scal_i = [spin_sum, n_up, n_down].
    """
    n = len(spins)
    rng = Xoshiro.from_state(rng_state)
    accepted = 0

    def row(i):
        return jsym[n - 1 - i : 2 * n - 1 - i]

    for _ in range(int(n_props)):
        if mode == 2:
            nu, nd = int(scal_i[1]), int(scal_i[2])
            if nu == 0 or nd == 0:
                continue
            iu = int(up_pos[rng.randbelow(nu)])
            idn = int(dn_pos[rng.randbelow(nd)])
            d = abs(iu - idn)
            delta = (
                float(spins[iu]) * float(fields[iu])
                + float(spins[idn]) * float(fields[idn])
                + 2.0 * float(jsym[n - 1 + d])
            )
            u = rng.uniform()
            if u < math.exp(-beta * delta):
                fields += (-2.0 * float(spins[iu])) * row(iu)
                fields += (-2.0 * float(spins[idn])) * row(idn)
                spins[iu] = -1
                spins[idn] = 1
                ku, kd = int(pos_idx[iu]), int(pos_idx[idn])
                last_u = int(up_pos[nu - 1])
                up_pos[ku] = last_u
                pos_idx[last_u] = ku
                last_d = int(dn_pos[nd - 1])
                dn_pos[kd] = last_d
                pos_idx[last_d] = kd
                up_pos[nu - 1] = idn
                pos_idx[idn] = nu - 1
                dn_pos[nd - 1] = iu
                pos_idx[iu] = nd - 1
                scal_f[0] += delta
                accepted += 1
        else:
            i = rng.randbelow(n)
            s_old = int(spins[i])
            delta = float(s_old) * float(fields[i])
            if mode == 1:
                s_new = int(scal_i[0]) - 2 * s_old
                if s_new < s_lo or s_new > s_hi:
                    continue
            u = rng.uniform()
            if u < math.exp(-beta * delta):
                fields += (-2.0 * float(s_old)) * row(i)
                spins[i] = -s_old
                scal_f[0] += delta
                scal_i[0] -= 2 * s_old
                accepted += 1
    return accepted, np.array(rng.state(), dtype=np.uint64)


# ---------------------------------------------------------------------------
# Gray-code exhaustive scan
# ---------------------------------------------------------------------------


def gray_scan_reduce(n, beta, jsym, btab):
    """Visit all 2^n configurations by single flips (Gray order) and reduce.

    Returns (logZ, weighted site sums sum_configs w*sigma_i, spin-sum weights
    indexed by (S+n)//2, total weight Z).  Energies are nonnegative with the
    all-plus ground state at zero, so the weights e^{-beta E} never overflow.
    """
    spins = np.ones(n, dtype=np.int8)
    fields = np.empty(n, dtype=np.float64)
    for i in range(n):
        acc = float(btab[i])
        for k in range(n):
            acc += float(jsym[n - 1 - i + k])
        fields[i] = acc

    energy = 0.0
    s_sum = n
    z = 0.0
    site = np.zeros(n, dtype=np.float64)
    shist = np.zeros(n + 1, dtype=np.float64)

    w = 1.0
    z += w
    site += w * spins
    shist[(s_sum + n) // 2] += w

    for t in range(1, 1 << n):
        k = (t & -t).bit_length() - 1
        s_old = float(spins[k])
        energy += s_old * fields[k]
        fields += (-2.0 * s_old) * jsym[n - 1 - k : 2 * n - 1 - k]
        spins[k] = -spins[k]
        s_sum += 2 * int(spins[k])
        w = math.exp(-beta * energy)
        z += w
        site += w * spins
        shist[(s_sum + n) // 2] += w
    return math.log(z), site, shist, z


# ---------------------------------------------------------------------------
# Triangle construction and invariant verification over random batches
# ---------------------------------------------------------------------------


def greedy_pairs_from_flips(flips):
    """Minimal-adjacent-gap matching, leftmost pair first on ties."""
    m = len(flips)
    if m == 0:
        return []
    nxt = list(range(1, m)) + [-1]
    prv = [-1] + list(range(m - 1))
    alive = [True] * m
    heap = [(flips[k + 1] - flips[k], flips[k], k, k + 1) for k in range(m - 1)]
    heapq.heapify(heap)
    pairs = []
    while heap:
        _, _, a, b = heapq.heappop(heap)
        if not (alive[a] and alive[b]) or nxt[a] != b:
            continue
        pairs.append((flips[a], flips[b]))
        alive[a] = alive[b] = False
        left, right = prv[a], nxt[b]
        if left >= 0:
            nxt[left] = right
        if right >= 0:
            prv[right] = left
        if left >= 0 and right >= 0:
            heapq.heappush(
                heap, (flips[right] - flips[left], flips[left], left, right)
            )
    return pairs


def _family_invariants_ok(pairs):
    """Distance and nesting invariants of a matched family.

    pairs must be sorted by (left asc, right desc).  Distance: the minimal
    flip-to-flip separation of two triangles is at least the smaller mass.
    Nesting: a nested triangle has at most a third of its container's mass.
    """
    k = len(pairs)
    stack = []
    for u in range(k):
        iu, ju = pairs[u]
        mu = ju - iu
        while stack and pairs[stack[-1]][1] < ju:
            stack.pop()
        if stack:
            iv, jv = pairs[stack[-1]]
            if 3 * mu > jv - iv:
                return False
        stack.append(u)
        for v in range(u + 1, k):
            iv, jv = pairs[v]
            if iv > ju and iv - ju >= mu:
                break  # subsequent triangles are even farther right
            gap = min(abs(iu - iv), abs(iu - jv), abs(ju - iv), abs(ju - jv))
            if gap < min(mu, jv - iv):
                return False
    return True


def verify_triangle_batch(L, n_configs, seed, p_minus=0.5, exhaustive=0):
    """Random configurations (or every configuration, with exhaustive=1):
    build triangles, check the round trip and the family invariants.
    Per-configuration seeds make the result independent of iteration order."""
    n = 2 * L + 1
    fail_rt = 0
    fail_inv = 0
    total = (1 << n) if exhaustive else int(n_configs)
    golden = 0x9E3779B97F4A7C15
    for c in range(total):
        spins = np.empty(n, dtype=np.int8)
        if exhaustive:
            for i in range(n):
                spins[i] = -1 if (c >> i) & 1 else 1
        else:
            rng = Xoshiro((seed + (c + 1) * golden) & 0xFFFFFFFFFFFFFFFF)
            for i in range(n):
                spins[i] = -1 if rng.uniform() < p_minus else 1
        # flip f sits between array slots f and f+1; boundary is +1
        flips = []
        prev = 1
        for i in range(n):
            if spins[i] != prev:
                flips.append(i - 1)
                prev = int(spins[i])
        if prev != 1:
            flips.append(n - 1)
        pairs = greedy_pairs_from_flips(flips)
        # round trip: parity of the number of covering bases
        cover = np.zeros(n + 1, dtype=np.int64)
        for a, b in pairs:
            cover[a + 1] += 1
            cover[b + 1] -= 1
        parity = np.cumsum(cover[:-1]) % 2
        rec = np.where(parity == 1, -1, 1).astype(np.int8)
        if not np.array_equal(rec, spins):
            fail_rt += 1
        pairs.sort(key=lambda p: (p[0], -p[1]))
        if not _family_invariants_ok(pairs):
            fail_inv += 1
    return {
        "configs": total,
        "fail_roundtrip": fail_rt,
        "fail_invariants": fail_inv,
    }


# ---------------------------------------------------------------------------
# Single-contour census
# ---------------------------------------------------------------------------


@dataclass
class CensusResult:
    mass_max: int
    C: float
    alpha: float
    J: float
    counts_by_mass: dict = field(default_factory=dict)
    total_count: int = 0
    min_peierls_slack: float = math.inf
    samples: list = field(default_factory=list)


def _groups_closure(tris, C):
    """Contour decomposition (index sets) of a list of (li, rj) triangles."""
    groups = [{u} for u in range(len(tris))]

    def gmass(g):
        return sum(tris[u][1] - tris[u][0] for u in g)

    def gdist(ga, gb):
        return min(
            min(abs(tris[u][0] - tris[v][0]), abs(tris[u][0] - tris[v][1]),
                abs(tris[u][1] - tris[v][0]), abs(tris[u][1] - tris[v][1]))
            for u in ga for v in gb
        )

    def overlap_not_nested(ga, gb):
        inter = any(
            (tris[u][0] < tris[v][0] and tris[v][1] < tris[u][1])
            or (tris[v][0] < tris[u][0] and tris[u][1] < tris[v][1])
            for u in ga for v in gb
        )
        if not inter:
            return False
        alo = min(tris[u][0] for u in ga)
        ahi = max(tris[u][1] for u in ga)
        blo = min(tris[v][0] for v in gb)
        bhi = max(tris[v][1] for v in gb)
        for v in gb:
            if tris[v][0] < alo and ahi < tris[v][1]:
                return False
        for u in ga:
            if tris[u][0] < blo and bhi < tris[u][1]:
                return False
        return True

    changed = True
    while changed:
        changed = False
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                ga, gb = groups[a], groups[b]
                bad = gdist(ga, gb) <= C * min(gmass(ga), gmass(gb)) ** 3
                if not bad:
                    bad = overlap_not_nested(ga, gb)
                if bad:
                    groups[a] = ga | gb
                    del groups[b]
                    changed = True
                    break
            if changed:
                break
    return groups


def _canonical(tris):
    flips = sorted(f for t in tris for f in t)
    return set(greedy_pairs_from_flips(flips)) == set(tris)


def _minus_sites(tris):
    flips = sorted(f for t in tris for f in t)
    out = []
    for a, b in zip(flips[0::2], flips[1::2]):
        out.extend(range(a + 1, b + 1))
    return out


def census_contours(mass_max, C, alpha, J, want_samples=0, seed=1):
    """Exact census of single contours with leftmost flip at 0.

    For each total mass M <= mass_max, enumerates every triangle family that
    is the canonical matching of its own configuration and groups into one
    contour at constant C.  Triangles are added in increasing left-flip
    order; branches whose partial contour decomposition can no longer end up
    connected are pruned.  Counts are keyed by the multiset of triangle
    masses; also tracks the minimal slack of the per-contour energy bound
    and keeps reservoir samples for pair tests.
    """
    from scipy.special import zeta as _hz

    rate = (1.0 - 2.0 * (2.0**alpha - 1.0)) / (alpha * (1.0 - alpha))
    zeta2 = float(_hz(2.0 - alpha, 1))
    full_line = 2.0 * (J + zeta2)
    res = CensusResult(mass_max=mass_max, C=C, alpha=alpha, J=J)
    rng = Xoshiro(seed)
    sample_flips: list[tuple] = []
    seen = 0

    def jval(d):
        return J + 1.0 if d == 1 else float(d) ** (alpha - 2.0)

    def energy(tris):
        sites = _minus_sites(tris)
        e = full_line * len(sites)
        for a in range(len(sites)):
            for b in range(a + 1, len(sites)):
                e -= 2.0 * jval(sites[b] - sites[a])
        return e

    for M in range(1, mass_max + 1):
        counts: dict[tuple, int] = {}
        window = int(C * M**3) + M + 2

        def leaf(tris, counts=None, M=M):
            nonlocal seen
            if len(_groups_closure(tris, C)) != 1:
                return
            if not _canonical(tris):
                return
            key = tuple(sorted(t[1] - t[0] for t in tris))
            counts[key] = counts.get(key, 0) + 1
            res.total_count += 1
            norm = sum((t[1] - t[0]) ** alpha for t in tris)
            res.min_peierls_slack = min(
                res.min_peierls_slack, energy(tris) - rate * norm
            )
            if want_samples:
                seen += 1
                if len(sample_flips) < want_samples:
                    sample_flips.append(tuple(tris))
                else:
                    j = rng.randbelow(seen)
                    if j < want_samples:
                        sample_flips[j] = tuple(tris)

        def rec(tris, used, rem, last_li, counts=None, M=M, window=window):
            groups = _groups_closure(tris, C)
            cap = -(10**9)
            for g in groups:
                gm = sum(tris[u][1] - tris[u][0] for u in g)
                rf = max(tris[u][1] for u in g)
                cap = max(cap, rf + int(C * min(gm, M - gm) ** 3), rf - 1)
            cap = min(cap, window)
            li = last_li + 1
            while li <= cap:
                if li in used:
                    li += 1
                    continue
                container = None
                for a, b in tris:
                    if a < li < b and (container is None or a > container[0]):
                        container = (a, b)
                for mass in range(1, rem + 1):
                    rj = li + mass
                    if rj in used:
                        continue
                    if container is not None:
                        if rj >= container[1]:
                            continue
                        if 3 * mass > container[1] - container[0]:
                            continue
                    ok = True
                    for a, b in tris:
                        if a < li < b < rj:  # crossing
                            ok = False
                            break
                        gap = min(abs(li - a), abs(li - b), abs(rj - a), abs(rj - b))
                        if gap < min(mass, b - a):
                            ok = False
                            break
                    if not ok:
                        continue
                    tris.append((li, rj))
                    used.add(li)
                    used.add(rj)
                    if rem - mass == 0:
                        leaf(tris, counts)
                    else:
                        new_groups = _groups_closure(tris, C)
                        ok2 = True
                        for g in new_groups:
                            gm = sum(tris[u][1] - tris[u][0] for u in g)
                            rf = max(tris[u][1] for u in g)
                            thr = C * min(gm, M - gm) ** 3
                            alive = (li + 1) <= rf + thr or (li + 1) < rf
                            if not alive:
                                dmin = math.inf
                                for g2 in new_groups:
                                    if g2 is g:
                                        continue
                                    for u in g:
                                        for v in g2:
                                            dmin = min(
                                                dmin,
                                                abs(tris[u][0] - tris[v][0]),
                                                abs(tris[u][0] - tris[v][1]),
                                                abs(tris[u][1] - tris[v][0]),
                                                abs(tris[u][1] - tris[v][1]),
                                            )
                                    alive = dmin <= thr
                                    if alive:
                                        break
                            if not alive:
                                ok2 = False
                                break
                        if ok2:
                            rec(tris, used, rem - mass, li, counts)
                    used.discard(li)
                    used.discard(rj)
                    tris.pop()
                li += 1

        for mass in range(1, M + 1):
            tris = [(0, mass)]
            used = {0, mass}
            if M - mass == 0:
                leaf(tris, counts)
            else:
                rec(tris, used, M - mass, 0, counts)
        res.counts_by_mass[M] = counts

    from .contours import Contour  # deferred import to avoid a cycle
    from .triangles import Triangle

    res.samples = [
        Contour(tuple(Triangle(a, b) for a, b in tris)) for tris in sample_flips
    ]
    return res
