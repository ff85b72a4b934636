"""Triangle encoding of spin configurations.

A spin flip is a pair of consecutive sites with opposite spins; with all-plus
boundary the number of flips is even.  Flips are paired greedily: repeatedly
take the two *adjacent* unpaired flips at minimal distance (leftmost pair on
ties) and match them.  Each matched pair (i, i+1), (j, j+1) with i < j is a
triangle with base Delta(T) = [i+1, j] and mass |T| = j - i.  The matching is
noncrossing, so triangles are pairwise disjoint or strictly nested, and a
site is minus iff it lies in an odd number of bases.

Distances between triangles are measured between their flip locations
(the roots of the construction):
    dist(T, T') = min |a - b|, a in {i, j}, b in {i', j'}.
Every family produced here satisfies dist(T, T') >= min(|T|, |T'|), and a
triangle nested inside T has mass at most |T| / 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._pykernels import greedy_pairs_from_flips as _matcher
from .kernel import Kernel
from .params import ModelParams
from .spins import SpinConfig


@dataclass(frozen=True)
class Triangle:
    """One matched flip pair; base runs over [left_flip+1, right_flip]."""

    left_flip: int
    right_flip: int

    def __post_init__(self):
        if self.left_flip >= self.right_flip:
            raise ValueError("need left_flip < right_flip")

    @property
    def mass(self) -> int:
        return self.right_flip - self.left_flip

    @property
    def base(self) -> range:
        return range(self.left_flip + 1, self.right_flip + 1)

    @property
    def frame(self) -> tuple[int, int, int, int]:
        """The four sites straddling the two flips."""
        return (
            self.left_flip,
            self.left_flip + 1,
            self.right_flip,
            self.right_flip + 1,
        )

    @property
    def x_minus(self) -> float:
        return self.left_flip + 0.5

    @property
    def x_plus(self) -> float:
        return self.right_flip + 0.5

    def contains(self, other: "Triangle") -> bool:
        return self.left_flip < other.left_flip and other.right_flip < self.right_flip


def triangle_dist(a: Triangle, b: Triangle) -> int:
    """Minimal distance between the flip locations of two triangles."""
    return min(
        abs(a.left_flip - b.left_flip),
        abs(a.left_flip - b.right_flip),
        abs(a.right_flip - b.left_flip),
        abs(a.right_flip - b.right_flip),
    )


class TriangleFamily:
    """An ordered collection of triangles with its nesting forest.

    Triangles are stored sorted by (left_flip asc, right_flip desc) so that
    a container precedes its contents; parent[k] is the index of the minimal
    enclosing triangle, or -1 for external triangles.
    """

    def __init__(self, triangles, L: int):
        tris = sorted(triangles, key=lambda t: (t.left_flip, -t.right_flip))
        self.L = int(L)
        self.triangles: tuple[Triangle, ...] = tuple(tris)
        flips = [f for t in tris for f in (t.left_flip, t.right_flip)]
        if len(set(flips)) != len(flips):
            raise ValueError("triangles share a flip location")
        for t in tris:
            if t.left_flip < -L - 1 or t.right_flip > L:
                raise ValueError(f"triangle {t} outside the window")
        self.parent = self._build_forest(tris)

    @staticmethod
    def _build_forest(tris) -> np.ndarray:
        parent = np.full(len(tris), -1, dtype=np.int64)
        stack: list[int] = []
        for k, t in enumerate(tris):
            while stack and tris[stack[-1]].right_flip < t.left_flip:
                stack.pop()
            if stack:
                top = tris[stack[-1]]
                if not top.contains(t):
                    raise ValueError(f"triangles {top} and {t} cross")
                parent[k] = stack[-1]
            stack.append(k)
        return parent

    def __len__(self):
        return len(self.triangles)

    def __iter__(self):
        return iter(self.triangles)

    def __eq__(self, other):
        return (
            isinstance(other, TriangleFamily)
            and self.L == other.L
            and self.triangles == other.triangles
        )

    def __hash__(self):
        return hash((self.L, self.triangles))

    @property
    def masses(self) -> np.ndarray:
        return np.array([t.mass for t in self.triangles], dtype=np.int64)

    @property
    def externals(self) -> tuple[Triangle, ...]:
        return tuple(
            t for k, t in enumerate(self.triangles) if self.parent[k] == -1
        )

    def total_mass(self) -> int:
        return int(self.masses.sum()) if len(self) else 0

    def frame_sites(self) -> set[int]:
        out: set[int] = set()
        for t in self.triangles:
            out.update(t.frame)
        return out

    # -- invariants ----------------------------------------------------------
    def check_distances(self) -> bool:
        """dist(T, T') >= min(|T|, |T'|) for every pair."""
        tris = self.triangles
        for u in range(len(tris)):
            for v in range(u + 1, len(tris)):
                if triangle_dist(tris[u], tris[v]) < min(
                    tris[u].mass, tris[v].mass
                ):
                    return False
        return True

    def check_nesting_ratio(self) -> bool:
        """A nested triangle has at most a third of its container's mass."""
        for k, t in enumerate(self.triangles):
            p = self.parent[k]
            if p >= 0 and 3 * t.mass > self.triangles[p].mass:
                return False
        return True


def _flip_positions(spins: np.ndarray, L: int) -> list[int]:
    padded = np.empty(len(spins) + 2, dtype=np.int8)
    padded[0] = padded[-1] = 1
    padded[1:-1] = spins
    (where,) = np.nonzero(padded[:-1] != padded[1:])
    return [int(w) - L - 1 for w in where]


def _greedy_pair(flips: list[int]) -> list[tuple[int, int]]:
    """Minimal-adjacent-gap matching, leftmost pair first on ties."""
    if len(flips) % 2:
        raise AssertionError("odd number of flips under all-plus boundary")
    return _matcher(flips)


def build_triangles(spins_or_config, L: int | None = None) -> TriangleFamily:
    """Triangle family of a configuration (pure function of the spins)."""
    if isinstance(spins_or_config, SpinConfig):
        spins = spins_or_config.spins
        L = spins_or_config.L
    else:
        spins = np.asarray(spins_or_config, dtype=np.int8)
        if L is None:
            L = (len(spins) - 1) // 2
    if len(spins) != 2 * L + 1:
        raise ValueError("spin sequence must have length 2L+1")
    pairs = _greedy_pair(_flip_positions(spins, L))
    return TriangleFamily([Triangle(i, j) for i, j in pairs], L)


def reconstruct_spins(family: TriangleFamily, L: int | None = None) -> np.ndarray:
    """Spins whose triangle family is `family`: minus iff covered oddly."""
    if L is None:
        L = family.L
    n = 2 * L + 1
    cover = np.zeros(n + 1, dtype=np.int64)
    for t in family:
        lo = t.left_flip + 1 + L
        hi = t.right_flip + 1 + L
        if lo < 0 or hi > n:
            raise ValueError(f"triangle {t} outside window of half-width {L}")
        cover[lo] += 1
        cover[hi] -= 1
    parity = np.cumsum(cover[:-1]) % 2
    return np.where(parity == 1, -1, 1).astype(np.int8)


def roundtrip_ok(family: TriangleFamily, L: int | None = None) -> bool:
    """True iff the family is the canonical matching of its own spins."""
    if L is None:
        L = family.L
    spins = reconstruct_spins(family, L)
    rebuilt = build_triangles(spins, L)
    return set(rebuilt.triangles) == set(family.triangles)


def external_large(family: TriangleFamily, eps_s_abs: float) -> tuple[Triangle, ...]:
    """External triangles with mass strictly above the threshold."""
    return tuple(t for t in family.externals if t.mass > eps_s_abs)


def ground_state_of(externals, L: int, kernel: Kernel | None = None):
    """The configuration that is -1 exactly on the bases of `externals`.

    Within the class of configurations sharing this external family it is
    the strict energy minimum.  Returns a SpinConfig when a kernel is given,
    otherwise the raw spin array.
    """
    tris = sorted(externals, key=lambda t: t.left_flip)
    for a, b in zip(tris, tris[1:]):
        if b.left_flip <= a.right_flip:
            raise ValueError("external triangles must have disjoint bases")
    spins = np.ones(2 * L + 1, dtype=np.int8)
    for t in tris:
        lo, hi = t.left_flip + 1 + L, t.right_flip + 1 + L
        if lo < 0 or hi > 2 * L + 1:
            raise ValueError(f"triangle {t} outside window of half-width {L}")
        spins[lo:hi] = -1
    if kernel is None:
        return spins
    return SpinConfig(spins, kernel, L)


def is_compatible_external_family(externals, eps_s_abs: float, L: int) -> bool:
    """True iff some configuration has exactly this thresholded external
    family; certified by rebuilding from the minimal representative."""
    try:
        spins = ground_state_of(externals, L)
    except ValueError:
        return False
    fam = build_triangles(spins, L)
    return set(external_large(fam, eps_s_abs)) == set(externals)


# -- droplet observables -----------------------------------------------------


def rho_targets(m: float, m_beta: float, n_sites: int) -> tuple[float, float]:
    """Droplet volume fractions for target magnetization m.

    rho_hat = (1 - m/m_beta)/2 and its lattice rounding, the largest
    k/n_sites not exceeding rho_hat.
    """
    if not (0.0 < m_beta <= 1.0):
        raise ValueError("m_beta must lie in (0, 1]")
    if abs(m) >= m_beta:
        raise ValueError("|m| must be smaller than m_beta")
    rho_hat = 0.5 * (1.0 - m / m_beta)
    rho_lat = math.floor(rho_hat * n_sites + 1e-12) / n_sites
    return rho_hat, rho_lat


@dataclass(frozen=True)
class DropletReport:
    """Per-measurement droplet observables.

    external_masses are the masses of the thresholded (mass > eps_s * N)
    external triangles, descending.  n0 counts those within 6*eps_c*N of the
    family's total mass; is_B requires total mass within eps_c of the target
    fraction and n0 == 1.  Block magnetizations are taken over the base of
    the largest external triangle (no threshold) and its complement.
    """

    m_emp: float
    rho_emp: float
    external_masses: tuple[int, ...]
    external_masses_all: tuple[int, ...]
    n0: int
    is_B: bool
    in_S1: bool
    in_window: bool
    largest_fraction: float
    block_inner: float | None
    block_outer: float | None
    eps_s_abs: float
    eps_c_abs: float
    eps0_abs: float

    def to_dict(self) -> dict:
        return {
            "m_emp": self.m_emp,
            "rho_emp": self.rho_emp,
            "external_masses": list(self.external_masses),
            "external_masses_all": list(self.external_masses_all),
            "n0": self.n0,
            "is_B": self.is_B,
            "in_S1": self.in_S1,
            "in_window": self.in_window,
            "largest_fraction": self.largest_fraction,
            "block_inner": self.block_inner,
            "block_outer": self.block_outer,
        }

    def reclassify(self, eps_s_abs: float, eps_c: float, rho_target: float, n_sites: int):
        """Single-droplet classification at a different smallness threshold,
        recomputed from the recorded unthresholded external masses."""
        large = [m for m in self.external_masses_all if m > eps_s_abs]
        total = sum(large)
        rho_emp = total / n_sites
        n0 = sum(1 for m in large if m >= total - 6.0 * eps_c * n_sites)
        is_b = bool(large) and n0 == 1 and abs(rho_emp - rho_target) <= eps_c + 1e-12
        return rho_emp, n0, is_b


def droplet_stats(
    spins,
    params: ModelParams,
    m_target: float = 0.0,
    rho_target: float | None = None,
    m_beta: float = 1.0,
    family: TriangleFamily | None = None,
) -> DropletReport:
    """Classify one configuration against the droplet events.

    Thresholds eps_s, eps_c, eps0 come from `params`; the droplet fraction
    target defaults to the lattice rounding of (1 - m_target/m_beta)/2.
    """
    if isinstance(spins, SpinConfig):
        spins = spins.spins
    spins = np.asarray(spins, dtype=np.int8)
    n = params.n_sites
    if len(spins) != n:
        raise ValueError("configuration length does not match params.L")
    if family is None:
        family = build_triangles(spins, params.L)
    if rho_target is None:
        _, rho_target = rho_targets(m_target, m_beta, n)

    eps_s_abs = params.eps_s * n
    eps_c_abs = params.eps_c * n
    eps0_abs = params.eps0 * m_beta * n

    m_emp = float(spins.sum()) / n
    large = external_large(family, eps_s_abs)
    total = sum(t.mass for t in large)
    rho_emp = total / n
    masses = tuple(sorted((t.mass for t in large), reverse=True))
    masses_all = tuple(
        sorted((t.mass for t in family.externals), reverse=True)
    )
    n0 = sum(1 for t in large if t.mass >= total - 6.0 * eps_c_abs)
    is_b = bool(large) and n0 == 1 and abs(rho_emp - rho_target) <= params.eps_c + 1e-12
    in_s1 = abs(rho_emp - rho_target) <= params.eps_c + 1e-12
    in_window = abs(m_emp - m_target) < params.eps0 * m_beta

    externals = family.externals
    if externals:
        biggest = max(externals, key=lambda t: t.mass)
        lo = biggest.left_flip + 1 + params.L
        hi = biggest.right_flip + 1 + params.L
        inner = spins[lo:hi]
        outer = np.concatenate((spins[:lo], spins[hi:]))
        block_inner = float(inner.mean())
        block_outer = float(outer.mean()) if len(outer) else None
        largest_fraction = biggest.mass / n
    else:
        block_inner = None
        block_outer = float(spins.mean())
        largest_fraction = 0.0

    return DropletReport(
        m_emp=m_emp,
        rho_emp=rho_emp,
        external_masses=masses,
        external_masses_all=masses_all,
        n0=n0,
        is_B=is_b,
        in_S1=in_s1,
        in_window=in_window,
        largest_fraction=largest_fraction,
        block_inner=block_inner,
        block_outer=block_outer,
        eps_s_abs=eps_s_abs,
        eps_c_abs=eps_c_abs,
        eps0_abs=eps0_abs,
    )


# -- exhaustive counting -----------------------------------------------------


@dataclass(frozen=True)
class ExternalFamilyCount:
    count: int
    bound: float
    gamma: float
    total_mass: int
    families: tuple[tuple[tuple[int, int], ...], ...] = field(default=())

    @property
    def within_bound(self) -> bool:
        return self.count <= self.bound


def count_external_families(
    L: int, rho: float, eps_s_abs: float, keep_families: bool = False
) -> ExternalFamilyCount:
    """Exact census of compatible external families with every mass strictly
    above `eps_s_abs` and total mass rho * (2L+1).

    Families are interval placements certified by the round trip through the
    minimal representative.  Feasible only for small windows (|Lambda| <= 24
    is the supported regime); rho must be a lattice fraction k/|Lambda|.
    """
    n = 2 * L + 1
    if n > 63:
        raise ValueError("window too large for exhaustive counting")
    k_total = rho * n
    if abs(k_total - round(k_total)) > 1e-9:
        raise ValueError(f"rho={rho} is not a lattice fraction k/{n}")
    k_total = int(round(k_total))
    if not (0 <= k_total <= n):
        raise ValueError("total mass outside [0, |Lambda|]")
    lmin = int(math.floor(eps_s_abs)) + 1
    gamma = -math.log(max(eps_s_abs, 1e-300) / n) / math.log(n)
    bound = math.exp((2.0 - gamma) * n**gamma * math.log(n))

    found: list[tuple[tuple[int, int], ...]] = []
    count = 0
    if k_total == 0:
        count = 1
        if keep_families:
            found.append(())
    else:
        intervals: list[tuple[int, int]] = []

        def rec(start: int, remaining: int):
            nonlocal count
            if remaining == 0:
                tris = [Triangle(lo - 1, hi) for lo, hi in intervals]
                if is_compatible_external_family(tris, eps_s_abs, L):
                    count += 1
                    if keep_families:
                        found.append(tuple(intervals))
                return
            if remaining < lmin:
                return
            for lo in range(start, L - remaining + 2):
                for length in range(lmin, remaining + 1):
                    hi = lo + length - 1
                    if hi > L:
                        break
                    intervals.append((lo, hi))
                    rec(hi + 2, remaining - length)
                    intervals.pop()

        rec(-L, k_total)

    return ExternalFamilyCount(
        count=count,
        bound=bound,
        gamma=gamma,
        total_mass=k_total,
        families=tuple(found) if keep_families else (),
    )
