"""Leading-order expansion formulas with explicit error envelopes.

The elementary excitation is the unit triangle, with activity
xi = e^{-2 beta (J + zeta(2-alpha))}.  Because the all-plus exterior enters
the energy through exact tail sums, the cost of flipping any single site of
the all-plus state equals 2(J + zeta(2-alpha)) at every site, so the
finite-volume site activity is exactly xi, uniformly in the window.

Envelope half-widths carry the series bounds e^{-(beta/32)(rate - 3 delta)}
and e^{-(beta/64)(rate - 3 delta)} with rate = zeta_alpha/(alpha(1-alpha))
and delta the inter-contour rate.  At moderate C the exponent is negative
and the envelope, while still computed, is flagged uninformative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .kernel import Kernel, build_kernel
from .params import ModelParams
from .spins import SpinConfig
from .triangles import Triangle, ground_state_of


@dataclass(frozen=True)
class Envelope:
    """center +/- half_width with a tag for how the width was derived."""

    center: float
    half_width: float
    kind: str
    uninformative: bool = False

    def __post_init__(self):
        if self.half_width < 0.0:
            raise ValueError("half_width must be >= 0")

    def contains(self, value: float, extra_slack: float = 0.0) -> bool:
        return abs(value - self.center) <= self.half_width + extra_slack

    def __add__(self, other: "Envelope") -> "Envelope":
        return Envelope(
            self.center + other.center,
            self.half_width + other.half_width,
            kind=f"{self.kind}+{other.kind}",
            uninformative=self.uninformative or other.uninformative,
        )


def xi_unit(params: ModelParams) -> float:
    """Activity of a unit triangle: e^{-2 beta (zeta(2-alpha) + J)}."""
    k = Kernel(params.alpha, params.J)
    return math.exp(-2.0 * params.beta * (k.zeta_2ma + params.J))


def series_bound(params: ModelParams, divisor: float = 32.0) -> tuple[float, bool]:
    """e^{-(beta/divisor)(rate - 3 delta)}; flagged when the exponent is
    nonnegative (bound >= 1, no decay)."""
    expo = params.peierls_rate - 3.0 * params.delta
    val = math.exp(-(params.beta / divisor) * expo)
    return val, expo <= 0.0


def m_beta_leading(params: ModelParams) -> Envelope:
    """Leading spontaneous magnetization 1 - 2 xi with the series half-width."""
    xi = xi_unit(params)
    bnd, flat = series_bound(params, 32.0)
    center = 1.0 - 2.0 * xi
    hw = 2.0 * xi * bnd
    return Envelope(center, hw, kind="series32", uninformative=flat or hw >= center)


def finite_volume_slack(params: ModelParams) -> float:
    """The finite-size correction 10 xi N^(alpha-1) / (alpha(1-alpha))."""
    xi = xi_unit(params)
    n = params.n_sites
    return 10.0 * xi * n ** (params.alpha - 1.0) / (params.alpha * (1.0 - params.alpha))


def xi_site(x: int, externals, params: ModelParams, kernel: Kernel | None = None) -> float:
    """Activity of flipping site x on the minimal configuration of an
    external family: exp(-beta * flip cost), in closed form.

    Inside the droplet bases the cost is reduced by the interaction with the
    exterior, outside by the interaction with the bases; both sums run over
    the whole line via tail sums, making this the exact finite-volume flip
    weight.  Requires x at distance >= 1 from every frame site.
    """
    kernel = kernel or build_kernel(params)
    beta = params.beta
    externals = list(externals)
    frame = set()
    for t in externals:
        frame.update(t.frame)
    if any(abs(x - s) < 1 for s in frame):
        raise ValueError(f"site {x} is within distance 0 of a frame site")
    xi = math.exp(-2.0 * beta * (kernel.zeta_2ma + params.J))
    inside = any(t.left_flip < x <= t.right_flip for t in externals)
    # sum of J(x - y) over the droplet bases
    base_sum = 0.0
    for t in externals:
        for y in t.base:
            if y != x:
                base_sum += kernel.coupling(x - y)
    if inside:
        q = kernel.full_line_sum - base_sum
    else:
        q = base_sum
    return xi * math.exp(2.0 * beta * q)


def xi_site_direct(x: int, externals, params: ModelParams, kernel: Kernel | None = None) -> float:
    """Same activity through the cached-field energy difference (identity
    check path)."""
    kernel = kernel or build_kernel(params)
    sc = ground_state_of(externals, params.L, kernel)
    return math.exp(-params.beta * sc.flip_delta(x))


def conditional_m_leading(rho: float, params: ModelParams) -> Envelope:
    """Leading conditional magnetization (1-2 rho)(1-2 xi) given a droplet
    family of total fraction rho, with the finite-volume half-width."""
    if not (0.0 <= rho <= 1.0):
        raise ValueError("rho must lie in [0, 1]")
    xi = xi_unit(params)
    center = (1.0 - 2.0 * rho) * (1.0 - 2.0 * xi)
    return Envelope(center, finite_volume_slack(params), kind="finite-volume")


def logZ_leading(params: ModelParams) -> Envelope:
    """Leading log partition function: the sum of site activities N * xi.

    The per-site flip weight is exactly xi at every site (the exterior tails
    restore translation invariance), so both the uniform-activity and the
    finite-volume-activity conventions coincide here.
    """
    xi = xi_unit(params)
    center = params.n_sites * xi
    bnd, flat = series_bound(params, 32.0)
    return Envelope(center, center * bnd, kind="series32", uninformative=flat)


def site_activity_spread(params: ModelParams) -> float:
    """Max |per-site flip weight - xi| over the window on all-plus; zero up
    to rounding, reported to document the convention question."""
    kernel = build_kernel(params)
    sc = SpinConfig.all_plus(kernel, params.L)
    xi = xi_unit(params)
    worst = 0.0
    for x in range(-params.L, params.L + 1):
        w = math.exp(-params.beta * sc.flip_delta(x))
        worst = max(worst, abs(w - xi))
    return worst


def pair_energy_coupling(i: int, j: int, t0: Triangle, params: ModelParams) -> float:
    """The exact excess coupling of two single-site flips on the droplet
    configuration: flipping both costs the sum of the single costs minus
    2 sigma_i sigma_j J(i-j).  Returns that identity's right-hand side."""
    kernel = build_kernel(params)
    sc = ground_state_of([t0], params.L, kernel)
    si, sj = float(sc.spins[i + params.L]), float(sc.spins[j + params.L])
    return -2.0 * si * sj * kernel.coupling(i - j)


def pair_energy_coupling_direct(i: int, j: int, t0: Triangle, params: ModelParams) -> float:
    """Same excess through explicit energy differences (identity check)."""
    kernel = build_kernel(params)
    base = ground_state_of([t0], params.L, kernel)
    e0 = base.energy
    both = base.copy()
    both.accept_flip(i)
    both.accept_flip(j)
    only_i = base.copy()
    only_i.accept_flip(i)
    only_j = base.copy()
    only_j.accept_flip(j)
    return (both.energy - e0) - (only_i.energy - e0) - (only_j.energy - e0)


def two_point_leading(
    i: int, j: int, t0: Triangle, field_r: float, params: ModelParams
) -> Envelope:
    """Leading truncated correlation of sigma_i, sigma_j conditioned on the
    single-droplet class of t0 under a tilting field r.

    On a frame site the spin is deterministic and the correlation vanishes
    exactly (zero envelope).  Requires |i - j| >= 2.
    """
    if abs(i - j) < 2:
        raise ValueError("need |i - j| >= 2")
    if i in t0.frame or j in t0.frame:
        return Envelope(0.0, 0.0, kind="frame-pinned")
    kernel = build_kernel(params)
    beta = params.beta
    sc = ground_state_of([t0], params.L, kernel)
    si = float(sc.spins[i + params.L])
    sj = float(sc.spins[j + params.L])
    xi_i = xi_site(i, [t0], params, kernel)
    xi_j = xi_site(j, [t0], params, kernel)
    coupling = math.exp(2.0 * si * sj * beta / abs(i - j) ** (2.0 - params.alpha)) - 1.0
    center = (
        xi_i
        * xi_j
        * math.exp(-2.0 * beta * field_r * si)
        * math.exp(-2.0 * beta * field_r * sj)
        * 4.0
        * si
        * sj
        * coupling
    )
    bnd, flat = series_bound(params, 64.0)
    return Envelope(center, abs(center) * bnd, kind="series64", uninformative=flat)


def field_threshold(kind: str, params: ModelParams, rho: float | None = None) -> float:
    """Largest admissible tilting field for the expansion to control.

    kind "very-small": fluctuations capped at eps_s N; kind
    "single-droplet": fluctuations inside a droplet of fraction rho are
    capped at a third of its mass.
    """
    za = params.zeta_alpha
    al = params.alpha
    n = params.n_sites
    denom = 4.0 * al * (1.0 - al)
    if kind == "very-small":
        return za / (denom * (params.eps_s * n) ** (1.0 - al))
    if kind == "single-droplet":
        if rho is None:
            raise ValueError("single-droplet threshold needs rho")
        return za * 3.0 ** (1.0 - al) / (denom * (rho * n) ** (1.0 - al))
    raise ValueError(f"unknown threshold kind {kind!r}")
