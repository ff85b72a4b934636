"""Spin configurations with cached local fields and O(1) flip energetics.

Sites are indexed by lattice coordinates i in [-L, L]; internally arrays use
index i + L.  The boundary outside the window is all-plus and enters the
energy through closed-form tail sums, so the cached energy agrees with the
infinite-volume energy of the extended configuration exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import Kernel


class SpinConfig:
    """A +/-1 configuration on [-L, L] with cached fields and energy.

    The cached field at site i is
        h[i] = sum_{j in Lambda, j != i} J(i-j) sigma_j + b(i)
    with b(i) the all-plus exterior contribution.  A flip at i costs
    sigma_i * h[i]; accepting a flip updates every field in one pass.
    Single-owner mutable state: share only across threads read-only.
    """

    def __init__(self, spins, kernel: Kernel, L: int | None = None):
        spins = np.asarray(spins, dtype=np.int8)
        if L is None:
            L = (len(spins) - 1) // 2
        if len(spins) != 2 * L + 1:
            raise ValueError("spin sequence must have length 2L+1")
        if not np.all(np.abs(spins) == 1):
            raise ValueError("spins must be +1 or -1")
        self.kernel = kernel
        self.L = int(L)
        self.n = 2 * self.L + 1
        self.spins = spins.copy()
        self._jsym = self._symmetric_jtab(kernel, self.n)
        self._btab = kernel.boundary_field(self.L)
        self.fields = self._fresh_fields()
        self.energy = self._energy_from_fields()
        self.spin_sum = int(self.spins.sum())

    # -- constructors --------------------------------------------------------
    @classmethod
    def all_plus(cls, kernel: Kernel, L: int) -> "SpinConfig":
        return cls(np.ones(2 * L + 1, dtype=np.int8), kernel, L)

    @classmethod
    def from_minus_sites(cls, sites, kernel: Kernel, L: int) -> "SpinConfig":
        spins = np.ones(2 * L + 1, dtype=np.int8)
        for s in sites:
            if not (-L <= s <= L):
                raise ValueError(f"site {s} outside [-{L}, {L}]")
            spins[s + L] = -1
        return cls(spins, kernel, L)

    @classmethod
    def from_text(cls, line: str, kernel: Kernel) -> "SpinConfig":
        line = line.strip()
        if len(line) % 2 == 0 or not line:
            raise ValueError("spin line must have odd length 2L+1")
        if set(line) - {"+", "-"}:
            raise ValueError("spin line may contain only '+' and '-'")
        spins = np.fromiter((1 if c == "+" else -1 for c in line), dtype=np.int8)
        return cls(spins, kernel)

    def to_text(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.spins)

    # -- internals -----------------------------------------------------------
    @staticmethod
    def _symmetric_jtab(kernel: Kernel, n: int) -> np.ndarray:
        jt = kernel.j_table(n - 1).copy()
        return np.concatenate((jt[:0:-1], jt))  # J(|d|) for d in [-(n-1), n-1]

    def _fresh_fields(self) -> np.ndarray:
        # h = (J * sigma) convolution + boundary; J(0)=0 so no self term
        s = self.spins.astype(np.float64)
        conv = np.convolve(s, self._jsym, mode="valid")  # length n
        return conv + self._btab

    def _energy_from_fields(self) -> float:
        # h++(sigma) = (J + zeta(2-alpha)) * #minus + 1/2 sum_{minus} h[i]
        minus = self.spins < 0
        k = self.kernel
        return (k.J + k.zeta_2ma) * float(minus.sum()) + 0.5 * float(
            self.fields[minus].sum()
        )

    def _idx(self, site: int) -> int:
        if not (-self.L <= site <= self.L):
            raise ValueError(f"site {site} outside [-{self.L}, {self.L}]")
        return site + self.L

    # -- queries -------------------------------------------------------------
    @property
    def magnetization(self) -> float:
        return self.spin_sum / self.n

    def flip_delta(self, site: int) -> float:
        """Energy change of flipping `site`, from the cached field (O(1))."""
        i = self._idx(site)
        return float(self.spins[i]) * float(self.fields[i])

    def accept_flip(self, site: int) -> float:
        """Flip `site`, update all fields (one pass) and the cached energy."""
        i = self._idx(site)
        s_old = float(self.spins[i])
        delta = s_old * float(self.fields[i])
        self.fields += (-2.0 * s_old) * self._jsym[self.n - 1 - i : 2 * self.n - 1 - i]
        self.spins[i] = -self.spins[i]
        self.energy += delta
        self.spin_sum += 2 * int(self.spins[i])
        return delta

    def recompute(self) -> tuple[np.ndarray, float]:
        """From-scratch fields and energy (validation path)."""
        fields = self._fresh_fields()
        minus = self.spins < 0
        k = self.kernel
        energy = (k.J + k.zeta_2ma) * float(minus.sum()) + 0.5 * float(
            fields[minus].sum()
        )
        return fields, energy

    def cache_error(self) -> float:
        """Relative deviation of the cached energy from a fresh recompute."""
        _, e = self.recompute()
        return abs(self.energy - e) / max(1.0, abs(e))

    def copy(self) -> "SpinConfig":
        out = SpinConfig.__new__(SpinConfig)
        out.kernel = self.kernel
        out.L = self.L
        out.n = self.n
        out.spins = self.spins.copy()
        out._jsym = self._jsym
        out._btab = self._btab
        out.fields = self.fields.copy()
        out.energy = self.energy
        out.spin_sum = self.spin_sum
        return out


def empirical_magnetization(spins) -> float:
    """(1/|Lambda|) sum_i sigma_i of a raw +/-1 sequence."""
    a = np.asarray(spins, dtype=np.float64)
    return float(a.mean())


def hamiltonian(spins, kernel: Kernel, L: int | None = None) -> float:
    """From-scratch energy with all-plus boundary conditions.

    Direct double sum over broken pairs inside the window plus the exterior
    term in closed form.  This is the reference oracle the cached-field path
    is tested against; it is O(n^2).
    """
    spins = np.asarray(spins, dtype=np.int8)
    n = len(spins)
    if L is None:
        L = (n - 1) // 2
    if n != 2 * L + 1:
        raise ValueError("spin sequence must have length 2L+1")
    jt = kernel.j_table(n)
    e = 0.0
    for i in range(n):
        si = spins[i]
        for j in range(i + 1, n):
            if si != spins[j]:
                e += jt[j - i]
    sites = np.arange(-L, L + 1)
    b = kernel.tail_full(L + 1 - sites) + kernel.tail_full(L + 1 + sites)
    e += float(b[spins < 0].sum())
    return e


def minus_set_energy(minus_sites, kernel: Kernel) -> float:
    """Energy of the configuration that is -1 exactly on `minus_sites`.

    Window-independent identity:
        E(A) = 2(J + zeta(2-alpha)) |A| - 2 sum_{{i,j} in A} J(i-j)
    valid whenever A sits inside the window.  Used as an independent oracle.
    """
    a = sorted(int(s) for s in minus_sites)
    if len(set(a)) != len(a):
        raise ValueError("duplicate minus sites")
    e = kernel.full_line_sum * len(a)
    for u in range(len(a)):
        for v in range(u + 1, len(a)):
            e -= 2.0 * kernel.coupling(a[v] - a[u])
    return e


@dataclass(frozen=True)
class IntervalFamilyEnergy:
    """Energy of a disjoint union of minus intervals, with its decomposition
    total = sum(single_energies) - 2 * sum(cross_terms)."""

    total: float
    single_energies: tuple[float, ...]
    cross_terms: tuple[tuple[int, int, float], ...]


def interval_family_energy(intervals, kernel: Kernel, L: int) -> IntervalFamilyEnergy:
    """Energy of the configuration that is -1 on a family of disjoint
    intervals (given as inclusive (lo, hi) site pairs, left to right).

    Exposes the decomposition into single-interval energies minus twice the
    pairwise attraction W(I, I'), where W sums the coupling over all cross
    pairs.  The result equals hamiltonian() of the corresponding spin
    configuration exactly.
    """
    ivs = [(int(lo), int(hi)) for lo, hi in intervals]
    for lo, hi in ivs:
        if lo > hi:
            raise ValueError(f"empty interval ({lo}, {hi})")
        if lo < -L or hi > L:
            raise ValueError(f"interval ({lo}, {hi}) outside [-{L}, {L}]")
    for (lo1, hi1), (lo2, hi2) in zip(ivs, ivs[1:]):
        if lo2 <= hi1:
            raise ValueError("intervals must be disjoint and sorted left to right")
    singles = tuple(kernel.interval_energy(hi - lo + 1) for lo, hi in ivs)
    cross = []
    total = sum(singles)
    for u in range(len(ivs)):
        for v in range(u + 1, len(ivs)):
            lo1, hi1 = ivs[u]
            lo2, hi2 = ivs[v]
            w = kernel.pair_sum(hi1 - lo1 + 1, hi2 - lo2 + 1, lo2 - hi1 - 1)
            cross.append((u, v, w))
            total -= 2.0 * w
    return IntervalFamilyEnergy(total, singles, tuple(cross))


def single_triangle_energy_window(length: int, alpha: float) -> tuple[float, float, float]:
    """Energy of one minus run under the pure power-law kernel (J = 0),
    together with the bracketing pair
        2 n^alpha / (alpha(1-alpha)) - 2/alpha  and
        2 n^alpha / (alpha(1-alpha)) - 2(1 - 1/alpha).

    The bracket only makes sense for the un-enhanced kernel: with a large
    nearest-neighbour bond the two broken J(1) bonds already exceed the
    upper edge.  Returns (energy, lower, upper).
    """
    k = Kernel(alpha, 0.0)
    e = k.interval_energy(length)
    lead = 2.0 * float(length) ** alpha / (alpha * (1.0 - alpha))
    return e, lead - 2.0 / alpha, lead - 2.0 * (1.0 - 1.0 / alpha)
