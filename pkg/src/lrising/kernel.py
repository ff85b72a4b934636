"""Pair interaction and its closed-form tail sums.

J(0) = 0, J(1) = J + 1, J(n) = n^(alpha-2) for n >= 2.  All sums over the
infinite exterior of the window are evaluated through the Hurwitz zeta
function, so energies are exact up to double-precision rounding rather than
truncation: tail(k) = sum_{n>=k} n^(alpha-2) = zeta(2-alpha, k).
"""

from __future__ import annotations

import numpy as np
from scipy.special import zeta as _hurwitz

from .params import ALPHA_PLUS, ModelParams


class Kernel:
    """Memoised couplings and tail sums for one (alpha, J) pair."""

    def __init__(self, alpha: float, J: float):
        if not (0.0 < alpha < ALPHA_PLUS):
            raise ValueError(f"alpha={alpha} outside (0, {ALPHA_PLUS:.10f})")
        if J < 0.0:
            raise ValueError("J must be >= 0")
        self.alpha = float(alpha)
        self.J = float(J)
        self.zeta_2ma = float(_hurwitz(2.0 - alpha, 1))  # Riemann zeta(2-alpha)
        # full-line field of a single spin: sum over all n != 0 of J(n)
        self.full_line_sum = 2.0 * (self.J + self.zeta_2ma)
        self._jtab = self._build_jtab(256)
        self._cum1 = None
        self._cum2 = None
        self._tailsum = None

    def _build_jtab(self, n):
        d = np.arange(n, dtype=np.float64)
        with np.errstate(divide="ignore"):
            tab = d ** (self.alpha - 2.0)
        tab[0] = 0.0
        if n > 1:
            tab[1] = self.J + 1.0
        return tab

    def j_table(self, dmax: int) -> np.ndarray:
        """Couplings J(0..dmax) as an array (read-only view)."""
        if dmax >= len(self._jtab):
            self._jtab = self._build_jtab(max(dmax + 1, 2 * len(self._jtab)))
            self._cum1 = self._cum2 = self._tailsum = None
        return self._jtab[: dmax + 1]

    def coupling(self, n: int) -> float:
        """J(n) for a single (possibly negative) displacement."""
        n = abs(int(n))
        if n == 0:
            return 0.0
        if n == 1:
            return self.J + 1.0
        return float(n) ** (self.alpha - 2.0)

    def tail(self, k) -> float:
        """sum_{n >= k} n^(alpha-2), pure power law (no J enhancement)."""
        return _hurwitz(2.0 - self.alpha, k)

    def tail_full(self, k) -> float:
        """sum_{n >= k} J(n), including the enhanced bond when k == 1."""
        k = np.asarray(k)
        out = _hurwitz(2.0 - self.alpha, k) + np.where(k <= 1, self.J, 0.0)
        return float(out) if out.ndim == 0 else out

    # -- cumulative tables for interval energetics --------------------------
    def _ensure_cums(self, dmax: int):
        self.j_table(dmax)
        if self._cum1 is None or len(self._cum1) <= dmax:
            self._cum1 = np.cumsum(self._jtab)
            self._cum2 = np.cumsum(self._cum1)
        if self._tailsum is None or len(self._tailsum) <= dmax:
            ks = np.arange(1, len(self._jtab) + 1, dtype=np.float64)
            tails = _hurwitz(2.0 - self.alpha, ks)
            self._tailsum = np.concatenate(([0.0], np.cumsum(tails)))

    def interval_energy(self, length: int) -> float:
        """Energy h++ of the configuration with one run of minuses.

        Window-independent: equals 2J + 2*sum_{k=1}^{length} tail(k).
        """
        if length < 1:
            raise ValueError("interval length must be >= 1")
        self._ensure_cums(length + 1)
        return 2.0 * self.J + 2.0 * float(self._tailsum[length])

    def pair_sum(self, p: int, q: int, gap: int) -> float:
        """sum of J(i-j) over i in an interval of length p and j in an
        interval of length q separated by `gap` sites (gap >= 0).

        Uses second differences of the double cumulative sum of J, so the
        cost is O(1) after table construction.
        """
        if p < 1 or q < 1 or gap < 0:
            raise ValueError("need p, q >= 1 and gap >= 0")
        s = gap + 1  # smallest site distance between the two intervals
        dmax = s + p + q - 2
        self._ensure_cums(dmax + 1)

        # sum_{a=0}^{p-1} sum_{b=0}^{q-1} J(s+a+b) via G(n) = sum_{d<=n} cum1(d)
        def G(n):
            return float(self._cum2[n]) if n >= 0 else 0.0

        return G(s + p + q - 2) - G(s + p - 2) - G(s + q - 2) + G(s - 2)

    def boundary_field(self, L: int) -> np.ndarray:
        """Exterior (+1) contribution to the local field at each site of
        [-L, L]: b[i] = tail_full(L+1-i) + tail_full(L+1+i)."""
        sites = np.arange(-L, L + 1)
        return self.tail_full(L + 1 - sites) + self.tail_full(L + 1 + sites)


def build_kernel(params: ModelParams) -> Kernel:
    return Kernel(params.alpha, params.J)
