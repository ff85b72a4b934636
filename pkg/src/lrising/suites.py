"""Named verification suites.

Each suite returns a plain dict with a top-level "passed" flag and a list of
individual checks, so the command-line runner and the test suite share one
implementation.  Default arguments are the sizes used by the acceptance
criteria.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .backend import verify_triangle_batch
from .cluster import (
    conditional_m_leading,
    field_threshold,
    finite_volume_slack,
    logZ_leading,
    m_beta_leading,
    pair_energy_coupling,
    pair_energy_coupling_direct,
    site_activity_spread,
    two_point_leading,
    xi_site,
    xi_site_direct,
    xi_unit,
)
from .contours import contour_counting_check, verify_peierls
from .kernel import Kernel, build_kernel
from .oracle import (
    ev_class_of,
    ev_class_small_fluct,
    gibbs_scan,
    laplace_check,
    log_partition,
    site_magnetizations,
    two_point,
)
from .params import ModelParams
from .rng import Xoshiro
from .spins import interval_family_energy
from .triangles import (
    Triangle,
    build_triangles,
    count_external_families,
    reconstruct_spins,
)


def _check(name, passed, **extra):
    d = {"name": name, "passed": bool(passed)}
    d.update(extra)
    return d


def _suite(name, checks, **extra):
    out = {
        "suite": name,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
    }
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# bijection
# ---------------------------------------------------------------------------


def suite_bijection(L_small=7, L_big=512, n_random=1_000_000, seed=1):
    """Round-trip identity and family invariants: exhaustively on the small
    window (backend kernel, plus the public construction on a sub-window)
    and on random configurations at the large one."""
    t0 = time.time()
    exh = verify_triangle_batch(L_small, 0, seed, exhaustive=1)

    # the same checks through the public construction on a smaller window
    n = 2 * 5 + 1
    bad_api = 0
    for code in range(1 << n):
        spins = np.fromiter(
            ((1 if (code >> b) & 1 == 0 else -1) for b in range(n)),
            dtype=np.int8,
            count=n,
        )
        fam = build_triangles(spins, 5)
        if (
            not np.array_equal(reconstruct_spins(fam, 5), spins)
            or not fam.check_distances()
            or not fam.check_nesting_ratio()
        ):
            bad_api += 1

    batch = verify_triangle_batch(L_big, n_random, seed)
    checks = [
        _check(
            "exhaustive_roundtrip",
            exh["fail_roundtrip"] == 0,
            failures=exh["fail_roundtrip"],
            configs=exh["configs"],
        ),
        _check(
            "exhaustive_invariants",
            exh["fail_invariants"] == 0,
            failures=exh["fail_invariants"],
        ),
        _check("api_exhaustive_L5", bad_api == 0, failures=bad_api, configs=1 << n),
        _check(
            "random_roundtrip",
            batch["fail_roundtrip"] == 0,
            failures=batch["fail_roundtrip"],
            configs=batch["configs"],
        ),
        _check(
            "random_invariants",
            batch["fail_invariants"] == 0,
            failures=batch["fail_invariants"],
        ),
    ]
    return _suite("bijection", checks, seconds=time.time() - t0)


# ---------------------------------------------------------------------------
# peierls
# ---------------------------------------------------------------------------


def suite_peierls(
    alphas=(0.1, 0.3, 0.5),
    L=6,
    J=10.0,
    beta=1.0,
    C=14.0,
    contour_mass_max=6,
    n_pairs=10_000,
    seed=1,
    census=None,
):
    """Energy lower bounds: full-configuration (exhaustive, each alpha, with
    the minimal adequate integer J reported), per-contour on the full census,
    and the inter-contour penalty on sampled compatible pairs."""
    t0 = time.time()
    checks = []
    details = {}
    for k, alpha in enumerate(alphas):
        p = ModelParams(alpha=alpha, beta=beta, L=L, J=J, C=C)
        want_contours = contour_mass_max if k == len(alphas) // 2 else 0
        rep = verify_peierls(
            p,
            L_exhaustive=L,
            contour_mass_max=want_contours,
            n_pairs=n_pairs if want_contours else 0,
            seed=seed,
            census=census if want_contours else None,
        )
        checks.append(
            _check(
                f"config_bound_alpha={alpha}",
                rep.config_bound_ok,
                min_slack=rep.config_bound_min_slack,
                minimal_J=rep.minimal_J,
                configs=rep.n_configs,
            )
        )
        checks.append(
            _check(
                f"minimal_J_found_alpha={alpha}",
                rep.minimal_J is not None and rep.minimal_J <= 30,
                minimal_J=rep.minimal_J,
            )
        )
        if want_contours:
            checks.append(
                _check(
                    f"contour_bound_alpha={alpha}",
                    rep.contour_bound_ok,
                    min_slack=rep.contour_bound_min_slack,
                    contours=rep.n_contours,
                )
            )
            checks.append(
                _check(
                    f"pair_bound_alpha={alpha}",
                    rep.pair_bound_ok,
                    min_slack=rep.pair_bound_min_slack,
                    pairs=rep.n_pairs,
                )
            )
        details[f"alpha={alpha}"] = {
            "minimal_J": rep.minimal_J,
            "config_min_slack": rep.config_bound_min_slack,
        }
    return _suite("peierls", checks, seconds=time.time() - t0, details=details)


# ---------------------------------------------------------------------------
# merge / fragmentation
# ---------------------------------------------------------------------------


def suite_merge(
    n_families=1000,
    L_max=2000,
    mass_max=12,
    window=60,
    alpha=0.3,
    J=10.0,
    seed=1,
):
    """Strict energy decrease under gap shrinking on random interval
    families (exact closed-form energies), and global minimality of the
    single interval among all disjoint-interval families of the same mass.

    The minimality check is rigorous for every gap vector: the energy is
    strictly decreasing in each gap, so families at the all-gaps-one corner
    minimize each length composition, and those corners are enumerated
    exhaustively.
    """
    t0 = time.time()
    kernel = Kernel(alpha, J)
    rng = Xoshiro(seed)
    worst_shrink = math.inf
    merge_fail = 0
    for _ in range(n_families):
        L = 100 + rng.randbelow(L_max - 99)
        k = 2 + rng.randbelow(4)
        lengths = [1 + rng.randbelow(30) for _ in range(k)]
        gaps = [2 + rng.randbelow(40) for _ in range(k - 1)]
        span = sum(lengths) + sum(gaps)
        if span > 2 * L:
            continue
        lo = -L + rng.randbelow(2 * L + 1 - span)
        ivs = []
        x = lo
        for i, ln in enumerate(lengths):
            ivs.append((x, x + ln - 1))
            x += ln + (gaps[i] if i < k - 1 else 0)
        e0 = interval_family_energy(ivs, kernel, L).total
        # shrink one gap by one site
        g = rng.randbelow(k - 1)
        ivs2 = [
            (a - 1, b - 1) if i > g else (a, b) for i, (a, b) in enumerate(ivs)
        ]
        e1 = interval_family_energy(ivs2, kernel, L).total
        if not e1 < e0:
            merge_fail += 1
        worst_shrink = min(worst_shrink, e0 - e1)
    checks = [
        _check(
            "gap_shrink_strictly_decreases",
            merge_fail == 0,
            failures=merge_fail,
            min_decrease=worst_shrink,
        )
    ]

    # single-interval minimality via the all-gaps-one corner
    Lw = window // 2
    min_gap_any = math.inf
    min_gap_fragmented = math.inf
    fail = 0
    for M in range(2, mass_max + 1):
        e_single = kernel.interval_energy(M)
        for k in range(2, M + 1):
            for comp in itertools.combinations(range(1, M), k - 1):
                lengths = np.diff((0,) + comp + (M,))
                ivs = []
                x = -Lw
                for ln in lengths:
                    ivs.append((x, x + int(ln) - 1))
                    x += int(ln) + 1
                if ivs[-1][1] > Lw:
                    continue
                e = interval_family_energy(ivs, kernel, Lw).total
                gap = e - e_single
                if gap <= 0:
                    fail += 1
                min_gap_any = min(min_gap_any, gap)
                if max(lengths) < M - 1:
                    min_gap_fragmented = min(min_gap_fragmented, gap)
    checks.append(
        _check(
            "single_interval_minimal",
            fail == 0,
            failures=fail,
            min_gap=min_gap_any,
            min_gap_no_dominant=min_gap_fragmented,
        )
    )
    return _suite("merge", checks, seconds=time.time() - t0)


# ---------------------------------------------------------------------------
# entropy
# ---------------------------------------------------------------------------


def suite_entropy(sizes=(11, 15, 21), gamma=0.25):
    """Exact external-family counts against e^{(2-gamma) N^gamma log N}."""
    t0 = time.time()
    checks = []
    for n in sizes:
        L = (n - 1) // 2
        eps_s_abs = float(n) ** (1.0 - gamma)
        worst_ratio = 0.0
        total = 0
        for k in range(0, n + 1):
            res = count_external_families(L, k / n, eps_s_abs)
            total += res.count
            if res.count > res.bound:
                checks.append(
                    _check(f"N={n}_k={k}", False, count=res.count, bound=res.bound)
                )
            worst_ratio = max(worst_ratio, res.count / res.bound)
        checks.append(
            _check(
                f"count_within_bound_N={n}",
                worst_ratio <= 1.0,
                worst_ratio=worst_ratio,
                families_total=total,
            )
        )
    return _suite("entropy", checks, seconds=time.time() - t0)


# ---------------------------------------------------------------------------
# laplace
# ---------------------------------------------------------------------------


def suite_laplace(L=5, alpha=0.3, beta=2.0, J=10.0):
    """Conditioned Laplace-transform bound at the two event kinds."""
    t0 = time.time()
    n = 2 * L + 1
    p = ModelParams.with_default_exponents(alpha, beta, L, J=J)
    t0_tri = Triangle(-2, 1)  # droplet of mass 3 centered in the window
    rho = t0_tri.mass / n
    eps_s_abs = 2.0

    checks = []
    t_single = field_threshold("single-droplet", p, rho=rho)
    ev1 = ev_class_of([t0_tri], eps_s_abs)
    for res in laplace_check(
        p, ev1, [t_single / 2, -t_single / 2, t_single / 4, -t_single / 4], t_single
    ):
        checks.append(
            _check(
                f"class_bound_t={res.t:.4g}",
                res.ok and res.admissible,
                lhs=res.lhs,
                rhs=res.rhs,
            )
        )

    gamma_eff = -math.log(eps_s_abs / n) / math.log(n)
    p2 = p.replace(gamma=gamma_eff)
    t_vs = field_threshold("very-small", p2)
    ev2 = ev_class_small_fluct([t0_tri], rho, eps_s_abs, n)
    for res in laplace_check(
        p2, ev2, [t_vs / 2, -t_vs / 2, t_vs / 4, -t_vs / 4], t_vs
    ):
        checks.append(
            _check(
                f"small_fluct_bound_t={res.t:.4g}",
                res.ok and res.admissible,
                lhs=res.lhs,
                rhs=res.rhs,
            )
        )
    return _suite("laplace", checks, seconds=time.time() - t0)


# ---------------------------------------------------------------------------
# cluster (leading order vs oracle)
# ---------------------------------------------------------------------------


def suite_cluster(L=8, alpha=0.3, beta=1.2, J=5.0, C=14.0):
    """Exact small-volume quantities against the leading-order formulas."""
    t0 = time.time()
    p = ModelParams.with_default_exponents(alpha, beta, L, J=J, C=C)
    n = p.n_sites
    xi = xi_unit(p)
    checks = []

    logz = log_partition(p)
    env_z = logZ_leading(p)
    checks.append(
        _check(
            "logZ_leading_10pct",
            abs(logz - env_z.center) <= 0.1 * env_z.center,
            exact=logz,
            center=env_z.center,
            rel_err=abs(logz - env_z.center) / env_z.center,
        )
    )

    m0 = float(site_magnetizations(p)[L])
    env_m = m_beta_leading(p)
    slack = finite_volume_slack(p)
    checks.append(
        _check(
            "m_beta_envelope",
            env_m.contains(m0, extra_slack=slack),
            exact=m0,
            center=env_m.center,
            half_width=env_m.half_width,
            slack=slack,
        )
    )

    # conditional magnetization on a single-droplet class; the smallness
    # threshold admits only unit fluctuations so the class stays close to
    # the leading-order polymer gas
    t0_tri = Triangle(-3, 2)  # mass 5 centered
    rho = t0_tri.mass / n
    eps_s_abs = 1.5
    ev = ev_class_of([t0_tri], eps_s_abs)
    res = gibbs_scan(p, [ev])
    acc = res.accumulators[ev.name]
    m_cond = acc.sum_s / acc.weight / n
    env_c = conditional_m_leading(rho, p)
    checks.append(
        _check(
            "conditional_m_envelope",
            env_c.contains(m_cond, extra_slack=env_c.half_width),
            exact=m_cond,
            center=env_c.center,
            half_width=env_c.half_width,
            class_size=acc.count,
        )
    )

    # activity identities
    kernel = build_kernel(p)
    worst_xi = 0.0
    for x in range(-L, L + 1):
        if min(abs(x - s) for s in t0_tri.frame) < 1:
            continue
        a = xi_site(x, [t0_tri], p, kernel)
        b = xi_site_direct(x, [t0_tri], p, kernel)
        worst_xi = max(worst_xi, abs(a - b) / max(abs(b), 1e-300))
    checks.append(_check("site_activity_identity", worst_xi <= 1e-10, max_rel=worst_xi))
    checks.append(
        _check(
            "uniform_activity_spread",
            site_activity_spread(p) <= 1e-12 * xi,
            spread=site_activity_spread(p),
        )
    )

    # two-point checks use a mass-3 droplet so pairs up to distance 4 fit on
    # one side with every test site at flip-distance >= 2 from the droplet's
    # flips (closer sites can retie the matching and leave the class, pinning
    # the spin there and zeroing the correlation exactly)
    t1_tri = Triangle(-2, 1)
    ev1 = ev_class_of([t1_tri], eps_s_abs)
    pairs = [(4, 6), (4, 7), (4, 8)]

    worst_pair = 0.0
    for (i, j) in pairs:
        worst_pair = max(
            worst_pair,
            abs(
                pair_energy_coupling(i, j, t1_tri, p)
                - pair_energy_coupling_direct(i, j, t1_tri, p)
            ),
        )
    checks.append(_check("pair_energy_identity", worst_pair <= 1e-10, max_abs=worst_pair))

    for (i, j) in pairs:
        exact = two_point(p, i, j, ev1)
        env_t = two_point_leading(i, j, t1_tri, 0.0, p)
        rel = abs(exact - env_t.center) / max(abs(env_t.center), 1e-300)
        checks.append(
            _check(
                f"two_point_d={abs(i - j)}_({i},{j})",
                rel <= 0.20,
                exact=exact,
                center=env_t.center,
                rel_err=rel,
            )
        )
    return _suite("cluster", checks, seconds=time.time() - t0)


# ---------------------------------------------------------------------------
# contour counting
# ---------------------------------------------------------------------------


def suite_counting(mass_max=6, alpha=0.3, C=14.0, J=10.0, b=None, census=None):
    """Census-based check of the rooted-contour geometric bound.

    Scans b on a grid for the smallest value where the bound holds for every
    mass up to mass_max, verifies it there, and confirms the bound fails one
    grid step below.  An explicit b is checked instead when given.
    """
    t0 = time.time()
    rep = contour_counting_check(mass_max, b if b is not None else 1.0, alpha, C=C, J=J, census=census)
    checks = [
        _check("minimal_b_found", rep.b_minimal is not None, b_minimal=rep.b_minimal),
    ]
    if rep.b_minimal is not None:
        checks.append(
            _check(
                "bound_holds_at_found_b",
                rep.holds_at(rep.b_minimal),
                b=rep.b_minimal,
            )
        )
        checks.append(
            _check(
                "bound_fails_below_found_b",
                rep.b_minimal <= 0.05 or not rep.holds_at(rep.b_minimal - 0.05),
                b=rep.b_minimal - 0.05,
            )
        )
    if b is not None:
        checks.append(
            _check(
                "bound_holds_at_requested_b",
                all(s <= rhs for s, rhs in rep.sums_at_requested.values()),
                b=b,
                sums={m: s for m, (s, _) in rep.sums_at_requested.items()},
            )
        )
    return _suite(
        "counting",
        checks,
        seconds=time.time() - t0,
        census_totals=rep.total_contours,
        b_minimal=rep.b_minimal,
    )


SUITES = {
    "bijection": suite_bijection,
    "peierls": suite_peierls,
    "entropy": suite_entropy,
    "merge": suite_merge,
    "laplace": suite_laplace,
    "cluster": suite_cluster,
    "counting": suite_counting,
}
