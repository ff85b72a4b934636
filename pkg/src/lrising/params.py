"""Model parameters for the long-range Ising chain.

The chain lives on Lambda = [-L, L] with all-plus boundary outside, pair
coupling J(n) = n^(alpha-2) for n >= 2 and an enhanced nearest-neighbour
bond J(1) = J + 1.  The decay exponent must satisfy 0 < alpha < alpha_+
with alpha_+ = log3/log2 - 1, which is exactly the condition
zeta_alpha = 1 - 2(2^alpha - 1) > 0 that controls the energy estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

ALPHA_PLUS = math.log(3.0) / math.log(2.0) - 1.0  # ~0.5849625007
MIN_SEPARATION_C = 4.0 * math.pi**2 / 3.0  # smallest admissible contour constant
WEAK_SEPARATION_C = math.pi**2 / 3.0  # hard lower limit for C


def zeta_alpha(alpha: float) -> float:
    """1 - 2(2^alpha - 1); positive iff alpha < alpha_+."""
    return 1.0 - 2.0 * (2.0**alpha - 1.0)


def provisional_exponents(alpha: float) -> tuple[float, float, float]:
    """A concrete (a, gamma, nu) choice that passes the exponent system."""
    nu = alpha * (1.0 - alpha) / 4.0
    gamma = alpha / 4.0
    a = alpha * (1.0 - alpha) / 2.0
    return a, gamma, nu


@dataclass(frozen=True)
class ModelParams:
    """All scalar parameters of the model and the verification harness.

    alpha : decay exponent, in (0, alpha_+)
    J     : nearest-neighbour enhancement (>= 0); the bond is J + 1
    beta  : inverse temperature (> 0)
    L     : half-width of the window, |Lambda| = 2L + 1
    C     : contour separation constant (> pi^2/3, default 14 >= 4pi^2/3)
    a, gamma, nu : exponents for the window/smallness/coarseness scales
        eps0 = N^-a, eps_s = N^-gamma, eps_c = N^-nu.  Only positivity is
        enforced here; the full inequality system is report-only, see
        validate_exponents().
    """

    alpha: float
    beta: float
    L: int
    J: float = 10.0
    C: float = 14.0
    a: float = 0.0
    gamma: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.alpha < ALPHA_PLUS):
            raise ValueError(
                f"alpha={self.alpha} outside (0, {ALPHA_PLUS:.10f})"
            )
        if self.J < 0.0:
            raise ValueError("J must be >= 0")
        if self.beta <= 0.0:
            raise ValueError("beta must be > 0")
        if self.L < 1:
            raise ValueError("L must be a positive integer")
        if self.C <= WEAK_SEPARATION_C:
            raise ValueError(f"C must exceed pi^2/3 = {WEAK_SEPARATION_C:.4f}")
        if self.C < MIN_SEPARATION_C - 1e-12:
            raise ValueError(
                f"C={self.C} below the minimal separation constant "
                f"{MIN_SEPARATION_C:.4f}"
            )
        for name in ("a", "gamma", "nu"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"exponent {name} must be >= 0")

    @classmethod
    def with_default_exponents(cls, alpha, beta, L, **kw) -> "ModelParams":
        a, gamma, nu = provisional_exponents(alpha)
        return cls(alpha=alpha, beta=beta, L=L, a=a, gamma=gamma, nu=nu, **kw)

    def replace(self, **kw) -> "ModelParams":
        return replace(self, **kw)

    # -- derived scales ----------------------------------------------------
    @property
    def n_sites(self) -> int:
        return 2 * self.L + 1

    @property
    def zeta_alpha(self) -> float:
        return zeta_alpha(self.alpha)

    @property
    def eps0(self) -> float:
        return float(self.n_sites) ** (-self.a)

    @property
    def eps_s(self) -> float:
        return float(self.n_sites) ** (-self.gamma)

    @property
    def eps_c(self) -> float:
        return float(self.n_sites) ** (-self.nu)

    @property
    def peierls_rate(self) -> float:
        """zeta_alpha / (alpha(1-alpha)), the per-triangle energy rate."""
        return self.zeta_alpha / (self.alpha * (1.0 - self.alpha))

    @property
    def delta(self) -> float:
        """Inter-contour energy rate 2*pi^2 / (3*alpha*(1-alpha)*C)."""
        return 2.0 * math.pi**2 / (3.0 * self.alpha * (1.0 - self.alpha) * self.C)


@dataclass(frozen=True)
class ExponentCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ExponentReport:
    checks: tuple[ExponentCheck, ...]
    eta_range: tuple[float, float]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def __str__(self):
        lines = [
            f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}"
            for c in self.checks
        ]
        lo, hi = self.eta_range
        lines.append(f"  admissible eta range: [{lo:.6f}, {hi:.6f}]")
        return "\n".join(lines)


def validate_exponents(params: ModelParams) -> ExponentReport:
    """Report-only check of the inequality system tying (a, gamma, nu) to alpha.

    The system is
        0 < gamma < min(alpha - nu, 2/3)
        (gamma + nu*alpha) / (1 - alpha) <= (1 - nu) * alpha
        nu < a
        nu <= gamma * (1 - alpha)
    The second line is equivalent to the existence of an admissible
    intermediate exponent eta.  The last inequality is admitted at equality,
    which the default exponent choice attains for every alpha.
    """
    al, a, g, nu = params.alpha, params.a, params.gamma, params.nu
    gamma_cap = min(al - nu, 2.0 / 3.0)
    eta_lo = (g + nu * al) / (1.0 - al)
    eta_hi = (1.0 - nu) * al
    checks = (
        ExponentCheck(
            "gamma_window",
            0.0 < g < gamma_cap,
            f"0 < {g:.6f} < min(alpha-nu, 2/3) = {gamma_cap:.6f}",
        ),
        ExponentCheck(
            "eta_exists",
            eta_lo <= eta_hi,
            f"(gamma+nu*alpha)/(1-alpha) = {eta_lo:.6f} <= (1-nu)*alpha = {eta_hi:.6f}",
        ),
        ExponentCheck("nu_below_a", nu < a, f"nu = {nu:.6f} < a = {a:.6f}"),
        ExponentCheck(
            "nu_below_gamma_scale",
            nu <= g * (1.0 - al) + 1e-15,
            f"nu = {nu:.6f} <= gamma*(1-alpha) = {g * (1.0 - al):.6f}",
        ),
    )
    return ExponentReport(checks=checks, eta_range=(eta_lo, eta_hi))
