"""Grouping triangles into contours and the energy bounds attached to them.

A contour family is a partition of a triangle family into groups such that
distinct groups Gamma, Gamma' satisfy
  * dist(Gamma, Gamma') > C * min(|Gamma|^3, |Gamma'|^3), and
  * their bases are either disjoint, or one group lies entirely inside the
    base of a single triangle of the other.
Grouping is an iterated pairwise merge to a fixed point; the fixed point is
independent of merge order because a violating pair stays violating while
masses only grow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kernel import Kernel
from .params import ModelParams
from .spins import minus_set_energy
from .triangles import (
    Triangle,
    TriangleFamily,
    build_triangles,
    roundtrip_ok,
    triangle_dist,
)

SEPARATION_MIN = 4.0 * math.pi**2 / 3.0


def min_separation_constant() -> float:
    """Smallest C with sum_M 4M/(C M^3) <= 1/2, i.e. 8 * zeta(2) = 4 pi^2/3.

    Any admissible C must also exceed pi^2 / 3.
    """
    return SEPARATION_MIN


def separation_sum(C: float) -> float:
    """sum over M >= 1 of 4M / (C M^3) = (4/C) * zeta(2)."""
    return 4.0 * (math.pi**2 / 6.0) / C


def check_separation_constant(C: float) -> bool:
    return separation_sum(C) <= 0.5 and C > math.pi**2 / 3.0


@dataclass(frozen=True)
class Contour:
    """A group of triangles; mass is additive, the alpha-norm is sum |T|^alpha."""

    triangles: tuple[Triangle, ...]

    def __post_init__(self):
        if not self.triangles:
            raise ValueError("a contour is a nonempty group of triangles")
        object.__setattr__(
            self,
            "triangles",
            tuple(sorted(self.triangles, key=lambda t: (t.left_flip, -t.right_flip))),
        )

    @property
    def mass(self) -> int:
        return sum(t.mass for t in self.triangles)

    def norm_alpha(self, alpha: float) -> float:
        return sum(t.mass**alpha for t in self.triangles)

    @property
    def x_minus(self) -> float:
        return min(t.x_minus for t in self.triangles)

    @property
    def left_flip(self) -> int:
        return min(t.left_flip for t in self.triangles)

    @property
    def right_flip(self) -> int:
        return max(t.right_flip for t in self.triangles)

    def frame_sites(self) -> set[int]:
        out: set[int] = set()
        for t in self.triangles:
            out.update(t.frame)
        return out

    def shifted(self, offset: int) -> "Contour":
        return Contour(
            tuple(
                Triangle(t.left_flip + offset, t.right_flip + offset)
                for t in self.triangles
            )
        )


def contour_dist(a: Contour, b: Contour) -> int:
    return min(
        triangle_dist(t, u) for t in a.triangles for u in b.triangles
    )


def _bases_intersect(a: Contour, b: Contour) -> bool:
    # triangles never partially overlap, so intersection means containment
    return any(
        t.contains(u) or u.contains(t) for t in a.triangles for u in b.triangles
    )


def _cleanly_nested(a: Contour, b: Contour) -> bool:
    """One group entirely inside the base of a single triangle of the other."""
    for u in b.triangles:
        if u.left_flip < a.left_flip and a.right_flip < u.right_flip:
            return True
    for t in a.triangles:
        if t.left_flip < b.left_flip and b.right_flip < t.right_flip:
            return True
    return False


def contours_compatible(a: Contour, b: Contour, C: float) -> bool:
    """The two-group separation condition (merge trigger when it fails)."""
    if contour_dist(a, b) <= C * min(a.mass, b.mass) ** 3:
        return False
    if _bases_intersect(a, b) and not _cleanly_nested(a, b):
        return False
    return True


class ContourFamily:
    """The partition of a triangle family into contours for a given C."""

    def __init__(self, contours, C: float, L: int):
        self.contours: tuple[Contour, ...] = tuple(
            sorted(contours, key=lambda g: (g.left_flip, g.right_flip))
        )
        self.C = float(C)
        self.L = int(L)

    def __len__(self):
        return len(self.contours)

    def __iter__(self):
        return iter(self.contours)

    def __eq__(self, other):
        return (
            isinstance(other, ContourFamily)
            and self.contours == other.contours
            and self.C == other.C
        )

    def triangle_multiset(self) -> tuple[Triangle, ...]:
        return tuple(
            sorted(
                (t for g in self.contours for t in g.triangles),
                key=lambda t: (t.left_flip, t.right_flip),
            )
        )

    def check_pairwise(self) -> bool:
        gs = self.contours
        return all(
            contours_compatible(gs[u], gs[v], self.C)
            for u in range(len(gs))
            for v in range(u + 1, len(gs))
        )


def group_contours(family: TriangleFamily, C: float) -> ContourFamily:
    """Merge singleton groups to a fixed point of the separation condition."""
    groups = [Contour((t,)) for t in family]
    changed = True
    while changed:
        changed = False
        for u in range(len(groups)):
            for v in range(u + 1, len(groups)):
                if not contours_compatible(groups[u], groups[v], C):
                    merged = Contour(groups[u].triangles + groups[v].triangles)
                    groups[u] = merged
                    del groups[v]
                    changed = True
                    break
            if changed:
                break
    return ContourFamily(groups, C, family.L)


def contour_minus_sites(contour: Contour) -> list[int]:
    """Minus sites of the configuration realizing the contour alone."""
    flips = sorted(
        f for t in contour.triangles for f in (t.left_flip, t.right_flip)
    )
    sites: list[int] = []
    for a, b in zip(flips[0::2], flips[1::2]):
        sites.extend(range(a + 1, b + 1))
    return sites


def contour_energy(contour: Contour, kernel: Kernel) -> float:
    """Energy of the configuration realizing this contour alone."""
    return minus_set_energy(contour_minus_sites(contour), kernel)


@dataclass(frozen=True)
class PeierlsReport:
    alpha: float
    J_checked: float
    minimal_J: int | None
    config_bound_ok: bool
    config_bound_min_slack: float
    n_configs: int
    contour_bound_ok: bool
    contour_bound_min_slack: float
    n_contours: int
    pair_bound_ok: bool
    pair_bound_min_slack: float
    n_pairs: int

    @property
    def all_ok(self) -> bool:
        return self.config_bound_ok and self.contour_bound_ok and self.pair_bound_ok


def _config_stats(spins, L):
    """(n_minus, n_adjacent_minus_pairs, power_law_pair_sum exponentized later)
    plus the triangle norm; lets the full-configuration bound be rescanned in
    J at no cost since the energy is affine in J."""
    minus = [int(k) - L for k in np.nonzero(np.asarray(spins) < 0)[0]]
    fam = build_triangles(spins, L)
    return minus, fam


def config_energy_terms(minus_sites, alpha):
    """Decompose E = 2(J + zeta)|A| - 2[(J+1) n_adj + P] into pieces that are
    affine in J: returns (n_minus, n_adj, P)."""
    a = sorted(minus_sites)
    n_adj = 0
    p = 0.0
    for u in range(len(a)):
        for v in range(u + 1, len(a)):
            d = a[v] - a[u]
            if d == 1:
                n_adj += 1
            else:
                p += float(d) ** (alpha - 2.0)
    return len(a), n_adj, p


def verify_peierls(
    params: ModelParams,
    L_exhaustive: int = 6,
    contour_mass_max: int = 0,
    n_pairs: int = 0,
    seed: int = 1,
    census=None,
) -> PeierlsReport:
    """Check the three energy lower bounds at the given parameters.

    (a) every configuration: E >= 2 * rate * sum |T|^alpha, exhaustively on
        the window of half-width `L_exhaustive`;
    (b) every enumerable single contour of mass <= contour_mass_max:
        E(Gamma) >= rate * ||Gamma||_alpha;
    (c) sampled compatible pairs (Gamma0, Gamma):
        E(Gamma0 u Gamma) - E(Gamma) >= delta * ||Gamma0||_alpha.
    Also reports the minimal integer J <= 30 making (a) hold, using that the
    energy is affine in J.
    """
    from .backend import census_contours  # local import to avoid cycles
    from .rng import Xoshiro

    alpha = params.alpha
    rate = params.peierls_rate
    kernel = Kernel(alpha, params.J)
    zeta2 = kernel.zeta_2ma

    # (a) exhaustive configuration bound, affine-in-J rescan
    n = 2 * L_exhaustive + 1
    min_slack = math.inf
    j_lower = 0.0
    n_cfg = 0
    for code in range(1, 2**n):
        spins = np.array(
            [1 if (code >> b) & 1 == 0 else -1 for b in range(n)], dtype=np.int8
        )
        minus = [int(k) - L_exhaustive for k in np.nonzero(spins < 0)[0]]
        fam = build_triangles(spins, L_exhaustive)
        norm = float(sum(t.mass**alpha for t in fam))
        n_minus, n_adj, p = config_energy_terms(minus, alpha)
        # E(J) = 2J(n_minus - n_adj) + 2 zeta n_minus - 2 n_adj - 2 p
        coef = 2.0 * (n_minus - n_adj)
        const = 2.0 * zeta2 * n_minus - 2.0 * n_adj - 2.0 * p
        e_here = coef * params.J + const
        min_slack = min(min_slack, e_here - 2.0 * rate * norm)
        need = (2.0 * rate * norm - const) / coef  # coef > 0 for n_minus >= 1
        j_lower = max(j_lower, need)
        n_cfg += 1
    minimal_j = None
    jc = math.ceil(j_lower - 1e-12)
    if jc <= 30:
        minimal_j = max(1, jc)

    # (b) per-contour bound from the census
    cb_ok, cb_slack, n_cont = True, math.inf, 0
    samples = []
    if contour_mass_max > 0:
        if census is None:
            census = census_contours(
                contour_mass_max,
                params.C,
                alpha,
                params.J,
                want_samples=max(64, 2 * n_pairs),
                seed=seed,
            )
        cb_slack = census.min_peierls_slack
        cb_ok = cb_slack >= 0.0
        n_cont = census.total_count
        samples = census.samples

    # (c) sampled compatible pairs
    pb_ok, pb_slack, got_pairs = True, math.inf, 0
    if n_pairs > 0 and samples:
        rng = Xoshiro(seed ^ 0xA5A5)
        delta = params.delta
        attempts = 0
        while got_pairs < n_pairs and attempts < 50 * n_pairs:
            attempts += 1
            g0 = samples[rng.randbelow(len(samples))]
            g1 = samples[rng.randbelow(len(samples))]
            thr = params.C * min(g0.mass, g1.mass) ** 3
            shift = g1.right_flip + int(thr) + 2 + rng.randbelow(64)
            g0s = g0.shifted(shift - g0.left_flip)
            if not contours_compatible(g0s, g1, params.C):
                continue
            tris = g0s.triangles + g1.triangles
            try:
                fam = TriangleFamily(tris, L=g0s.right_flip + 2)
            except ValueError:
                continue
            if not roundtrip_ok(fam):
                continue
            e_union = minus_set_energy(
                contour_minus_sites(Contour(tris)), kernel
            )
            e_alone = minus_set_energy(contour_minus_sites(g1), kernel)
            slack = (e_union - e_alone) - delta * g0s.norm_alpha(alpha)
            pb_slack = min(pb_slack, slack)
            got_pairs += 1
        pb_ok = got_pairs > 0 and pb_slack >= 0.0

    return PeierlsReport(
        alpha=alpha,
        J_checked=params.J,
        minimal_J=minimal_j,
        config_bound_ok=min_slack >= 0.0,
        config_bound_min_slack=min_slack,
        n_configs=n_cfg,
        contour_bound_ok=cb_ok,
        contour_bound_min_slack=cb_slack,
        n_contours=n_cont,
        pair_bound_ok=pb_ok,
        pair_bound_min_slack=pb_slack,
        n_pairs=got_pairs,
    )


@dataclass(frozen=True)
class CountingReport:
    mass_max: int
    alpha: float
    b_requested: float
    b_minimal: float | None
    sums_at_requested: dict
    census_counts: dict
    total_contours: dict

    def holds_at(self, b: float) -> bool:
        for m in range(1, self.mass_max + 1):
            s = 0.0
            for part, cnt in self.census_counts[m].items():
                s += cnt * math.exp(-b * sum(x**self.alpha for x in part))
            if s > 2.0 * math.exp(-b * m**self.alpha):
                return False
        return True


def contour_counting_check(
    mass_max: int,
    b: float,
    alpha: float,
    C: float = 14.0,
    J: float = 10.0,
    b_grid=None,
    census=None,
) -> CountingReport:
    """Exact census of single contours rooted at 0 and the geometric-series
    bound sum_Gamma e^{-b ||Gamma||_alpha} <= 2 e^{-b M^alpha} per mass M.

    The census is keyed by the multiset of triangle masses, so rescanning in
    b is free.  Enumeration cost grows steeply with mass (full support up to
    mass 8, but masses beyond 6 take considerably longer).
    """
    from .backend import census_contours

    if mass_max > 8:
        raise ValueError("contour enumeration supported for mass_max <= 8")
    if census is None:
        census = census_contours(mass_max, C, alpha, J, want_samples=0, seed=1)
    counts = census.counts_by_mass
    totals = {m: sum(v.values()) for m, v in counts.items()}

    def sums(bb):
        out = {}
        for m in range(1, mass_max + 1):
            s = 0.0
            for part, cnt in counts[m].items():
                s += cnt * math.exp(-bb * sum(x**alpha for x in part))
            out[m] = (s, 2.0 * math.exp(-bb * m**alpha))
        return out

    report = CountingReport(
        mass_max=mass_max,
        alpha=alpha,
        b_requested=b,
        b_minimal=None,
        sums_at_requested=sums(b),
        census_counts=counts,
        total_contours=totals,
    )
    if b_grid is None:
        b_grid = [0.05 * k for k in range(1, 401)]
    b_min = None
    for bb in b_grid:
        if all(s <= rhs for s, rhs in sums(bb).values()):
            b_min = bb
            break
    object.__setattr__(report, "b_minimal", b_min)
    return report
