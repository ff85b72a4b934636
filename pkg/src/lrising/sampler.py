"""Markov-chain Monte Carlo for the plus-boundary measure and its
magnetization-conditioned variants.

Three dynamics share one inner loop:
  free-glauber      single site, flip accepted with min(1, e^{-beta dE});
  window-restricted same, but proposals leaving the spin-sum window are
                    rejected before the acceptance draw (this samples the
                    measure conditioned on the window exactly);
  fixed-exchange    a uniform opposite-spin pair is swapped under the same
                    acceptance rule, conserving the spin sum exactly.
Trajectories are deterministic functions of (seed, spec, params) and
identical across backends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .backend import mcmc_run
from .kernel import Kernel, build_kernel
from .params import ModelParams
from .rng import Xoshiro, replica_seed
from .spins import SpinConfig
from .triangles import DropletReport, droplet_stats, rho_targets

DYNAMICS = ("free-glauber", "window-restricted", "fixed-exchange")
_MODE = {"free-glauber": 0, "window-restricted": 1, "fixed-exchange": 2}


@dataclass(frozen=True)
class EnsembleSpec:
    """What to sample: dynamics, magnetization target and schedule.

    epsilon0_abs is the half-width of the spin-sum window in spin units
    (only used by window-restricted dynamics).  Irreducibility of the
    restricted chain needs at least two magnetization steps of play, i.e.
    four spins of slack.
    """

    dynamics: str = "free-glauber"
    m: float = 0.0
    epsilon0_abs: float = 0.0
    sweeps: int = 1000
    burn_in: int | None = None
    thin: int = 1
    seed: int = 1

    def __post_init__(self):
        if self.dynamics not in DYNAMICS:
            raise ValueError(f"unknown dynamics {self.dynamics!r}")
        if self.dynamics == "window-restricted" and self.epsilon0_abs < 2.0:
            raise ValueError(
                "window-restricted dynamics needs a window of >= 4 spins "
                "(epsilon0_abs >= 2) for irreducibility"
            )

    def window_bounds(self, n_sites: int) -> tuple[int, int]:
        center = self.m * n_sites
        lo = math.ceil(center - self.epsilon0_abs)
        hi = math.floor(center + self.epsilon0_abs)
        return lo, hi


class ChainState:
    """One chain: spins, cached fields, RNG state and counters."""

    def __init__(self, params: ModelParams, spec: EnsembleSpec, start: SpinConfig | None = None):
        self.params = params
        self.spec = spec
        self.kernel = build_kernel(params)
        n = params.n_sites
        if start is None:
            start = SpinConfig.all_plus(self.kernel, params.L)
        if start.n != n:
            raise ValueError("start configuration does not match params.L")
        self.config = start.copy()
        self.rng_state = np.array(Xoshiro(spec.seed).state(), dtype=np.uint64)
        self.sweep = 0
        self.proposed = 0
        self.accepted = 0
        self._jsym = self.config._jsym
        self._scal_f = np.array([self.config.energy], dtype=np.float64)
        self._scal_i = np.array([self.config.spin_sum, 0, 0], dtype=np.int64)
        self._up = np.zeros(n, dtype=np.int32)
        self._dn = np.zeros(n, dtype=np.int32)
        self._pos = np.zeros(n, dtype=np.int32)
        self._mode = _MODE[spec.dynamics]
        if self._mode == 1:
            lo, hi = spec.window_bounds(n)
            if not (lo <= self.config.spin_sum <= hi):
                raise ValueError("start configuration outside the spin-sum window")
            self._lo, self._hi = lo, hi
        else:
            self._lo, self._hi = -n - 1, n + 1
        self._rebuild_lists()

    def _rebuild_lists(self):
        spins = self.config.spins
        up = np.nonzero(spins > 0)[0]
        dn = np.nonzero(spins < 0)[0]
        self._up[: len(up)] = up
        self._dn[: len(dn)] = dn
        for k, s in enumerate(up):
            self._pos[s] = k
        for k, s in enumerate(dn):
            self._pos[s] = k
        self._scal_i[1] = len(up)
        self._scal_i[2] = len(dn)

    @property
    def energy(self) -> float:
        return float(self._scal_f[0])

    @property
    def spin_sum(self) -> int:
        return int(self._scal_i[0])

    @property
    def magnetization(self) -> float:
        return self.spin_sum / self.params.n_sites

    def run(self, n_proposals: int) -> int:
        """Advance the chain by `n_proposals`; returns accepted count."""
        acc, self.rng_state = mcmc_run(
            self.config.spins,
            self.config.fields,
            self._jsym,
            self.rng_state,
            int(n_proposals),
            self.params.beta,
            self._mode,
            self._lo,
            self._hi,
            self._up,
            self._dn,
            self._pos,
            self._scal_f,
            self._scal_i,
        )
        self.proposed += int(n_proposals)
        self.accepted += int(acc)
        return int(acc)

    def run_sweeps(self, n_sweeps: int) -> int:
        acc = self.run(n_sweeps * self.params.n_sites)
        self.sweep += n_sweeps
        return acc

    def sync_config(self):
        """Push the kernel-side scalars back into the SpinConfig cache."""
        self.config.energy = float(self._scal_f[0])
        self.config.spin_sum = int(self._scal_i[0])

    def cache_error(self) -> float:
        self.sync_config()
        return self.config.cache_error()


def flip_acceptance(beta: float, delta: float) -> float:
    """min(1, e^{-beta delta}), the acceptance probability of one proposal."""
    return min(1.0, math.exp(-beta * delta))


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    stderr: float
    replica_means: tuple[float, ...]

    def agrees_with(self, value: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - value) <= n_sigma * max(self.stderr, 1e-15)


def estimate_m_beta(
    params: ModelParams,
    sweeps: int = 2000,
    replicas: int = 8,
    burn_in: int | None = None,
    seed: int = 1,
) -> MeanEstimate:
    """Time-and-replica average of sigma_0 under the unconditioned measure,
    with the standard error taken from the replica spread."""
    if burn_in is None:
        burn_in = max(10, sweeps // 10)
    n = params.n_sites
    mid = params.L
    means = []
    for r in range(replicas):
        spec = EnsembleSpec(
            dynamics="free-glauber", sweeps=sweeps, seed=replica_seed(seed, r)
        )
        chain = ChainState(params, spec)
        chain.run_sweeps(burn_in)
        total = 0.0
        for _ in range(sweeps):
            chain.run_sweeps(1)
            total += float(chain.config.spins[mid])
        means.append(total / sweeps)
    mean = float(np.mean(means))
    stderr = float(np.std(means, ddof=1) / math.sqrt(len(means))) if replicas > 1 else 0.0
    return MeanEstimate(mean=mean, stderr=stderr, replica_means=tuple(means))


# ---------------------------------------------------------------------------
# Phase-separation experiment
# ---------------------------------------------------------------------------


def _start_config(kind: str, kernel: Kernel, params: ModelParams, k_sum: int, seed: int) -> SpinConfig:
    """A configuration with spin sum exactly k_sum.

    kind "droplet": one contiguous minus run centered in the window;
    kind "dispersed": the same number of minuses spread pseudo-uniformly.
    """
    n = params.n_sites
    n_minus = (n - k_sum) // 2
    if (n - k_sum) % 2:
        raise ValueError("k_sum has the wrong parity for this window")
    spins = np.ones(n, dtype=np.int8)
    if kind == "droplet":
        lo = (n - n_minus) // 2
        spins[lo : lo + n_minus] = -1
    elif kind == "dispersed":
        rng = Xoshiro(seed)
        chosen: set[int] = set()
        while len(chosen) < n_minus:
            chosen.add(rng.randbelow(n))
        for c in chosen:
            spins[c] = -1
    else:
        raise ValueError(f"unknown start kind {kind!r}")
    return SpinConfig(spins, kernel, params.L)


@dataclass(frozen=True)
class ReplicaSummary:
    replica: int
    start: str
    seed: int
    n_measurements: int
    freq_single_droplet: float
    freq_total_fraction: float
    mean_largest_fraction: float
    median_largest_fraction: float
    mean_block_inner: float
    mean_block_outer: float
    acceptance_rate: float
    final_cache_error: float


@dataclass
class ExperimentReport:
    params: ModelParams
    m_target: float
    m_beta: float
    rho_hat: float
    rho_target: float
    dynamics: str
    exponents_valid: bool
    replicas: list[ReplicaSummary] = field(default_factory=list)
    reports: list[list[DropletReport]] = field(default_factory=list)

    @property
    def freq_single_droplet(self) -> float:
        tot = sum(r.n_measurements for r in self.replicas)
        hits = sum(r.freq_single_droplet * r.n_measurements for r in self.replicas)
        return hits / tot if tot else 0.0

    @property
    def freq_total_fraction(self) -> float:
        tot = sum(r.n_measurements for r in self.replicas)
        hits = sum(r.freq_total_fraction * r.n_measurements for r in self.replicas)
        return hits / tot if tot else 0.0

    def largest_fractions(self) -> np.ndarray:
        return np.array(
            [d.largest_fraction for reps in self.reports for d in reps]
        )

    def median_largest_fraction(self) -> float:
        return float(np.median(self.largest_fractions()))

    def block_means(self) -> tuple[float, float]:
        inner = [
            d.block_inner
            for reps in self.reports
            for d in reps
            if d.block_inner is not None
        ]
        outer = [
            d.block_outer
            for reps in self.reports
            for d in reps
            if d.block_outer is not None
        ]
        return (
            float(np.mean(inner)) if inner else math.nan,
            float(np.mean(outer)) if outer else math.nan,
        )

    def start_groups_agree(self, n_sigma: float = 3.0) -> tuple[bool, float, float]:
        """Compare mean largest-droplet fraction between start kinds."""
        groups = {}
        for r in self.replicas:
            groups.setdefault(r.start, []).append(r.mean_largest_fraction)
        kinds = sorted(groups)
        if len(kinds) < 2:
            return True, 0.0, 0.0
        a, b = (np.array(groups[k]) for k in kinds)
        se = math.sqrt(
            np.var(a, ddof=1) / len(a) + np.var(b, ddof=1) / len(b)
        )
        gap = abs(float(a.mean() - b.mean()))
        return gap <= n_sigma * max(se, 1e-12), gap, se


def _run_replica(job) -> tuple[ReplicaSummary, list[DropletReport]]:
    """One replica, a pure function of its job tuple (worker-pool safe)."""
    (params, dynamics, m, rho_target, m_beta, sweeps, burn_in, thin,
     r, start_kind, rseed, epsilon0_abs) = job
    n = params.n_sites
    kernel = build_kernel(params)
    start = _start_config(start_kind, kernel, params, _target_spin_sum(m, n), rseed ^ 0x51A7)
    if dynamics == "window-restricted":
        w = epsilon0_abs if epsilon0_abs is not None else params.eps0 * m_beta * n
        spec = EnsembleSpec(dynamics=dynamics, m=m, epsilon0_abs=max(w, 2.0), seed=rseed)
    else:
        spec = EnsembleSpec(dynamics=dynamics, m=m, seed=rseed)
    chain = ChainState(params, spec, start=start)
    chain.run_sweeps(burn_in)
    drops: list[DropletReport] = []
    remaining = sweeps
    while remaining > 0:
        step = min(thin, remaining)
        chain.run_sweeps(step)
        remaining -= step
        drops.append(
            droplet_stats(
                chain.config.spins,
                params,
                m_target=m,
                rho_target=rho_target,
                m_beta=m_beta,
            )
        )
    frac = np.array([d.largest_fraction for d in drops])
    inner = [d.block_inner for d in drops if d.block_inner is not None]
    outer = [d.block_outer for d in drops if d.block_outer is not None]
    summary = ReplicaSummary(
        replica=r,
        start=start_kind,
        seed=rseed,
        n_measurements=len(drops),
        freq_single_droplet=float(np.mean([d.is_B for d in drops])),
        freq_total_fraction=float(np.mean([d.in_S1 for d in drops])),
        mean_largest_fraction=float(frac.mean()),
        median_largest_fraction=float(np.median(frac)),
        mean_block_inner=float(np.mean(inner)) if inner else math.nan,
        mean_block_outer=float(np.mean(outer)) if outer else math.nan,
        acceptance_rate=chain.accepted / max(chain.proposed, 1),
        final_cache_error=chain.cache_error(),
    )
    return summary, drops


def _target_spin_sum(m: float, n: int) -> int:
    k_sum = int(round(m * n))
    if (n - k_sum) % 2:
        k_sum += 1
    return k_sum


def phase_separation_experiment(
    params: ModelParams,
    m: float,
    replicas: int = 20,
    sweeps: int = 10000,
    dynamics: str = "fixed-exchange",
    burn_in: int | None = None,
    thin: int = 10,
    seed: int = 1,
    m_beta: float | None = None,
    epsilon0_abs: float | None = None,
    keep_reports: bool = True,
    n_workers: int = 1,
) -> ExperimentReport:
    """Sample the magnetization-conditioned ensemble and record droplet
    observables per measurement.

    Half the replicas start from a centered droplet, half from dispersed
    minuses, all at spin sum closest to m*N (for fixed-exchange the sum is
    conserved exactly; window-restricted uses epsilon0_abs around m*N).
    The spontaneous-magnetization stand-in is estimated from a free chain
    unless given.  Exponent validity is reported, not enforced.  Replicas
    are independent chains with derived seeds; with n_workers > 1 they run
    in a process pool and are reduced in replica order, so the report is
    identical to the serial one.
    """
    from .params import validate_exponents

    n = params.n_sites
    if m_beta is None:
        m_beta = estimate_m_beta(params, sweeps=200, replicas=4, seed=seed ^ 0xBEEF).mean
        m_beta = min(max(abs(m_beta), 1e-6), 1.0)
    rho_hat, rho_target = rho_targets(m, m_beta, n)
    if burn_in is None:
        burn_in = 10 * n

    report = ExperimentReport(
        params=params,
        m_target=m,
        m_beta=m_beta,
        rho_hat=rho_hat,
        rho_target=rho_target,
        dynamics=dynamics,
        exponents_valid=validate_exponents(params).all_pass,
    )
    jobs = [
        (
            params, dynamics, m, rho_target, m_beta, sweeps, burn_in, thin,
            r, "droplet" if r % 2 == 0 else "dispersed", replica_seed(seed, r),
            epsilon0_abs,
        )
        for r in range(replicas)
    ]
    if n_workers > 1:
        import multiprocessing

        with multiprocessing.Pool(n_workers) as pool:
            results = pool.map(_run_replica, jobs)
    else:
        results = [_run_replica(job) for job in jobs]
    for summary, drops in results:
        report.replicas.append(summary)
        report.reports.append(drops if keep_reports else [])
    return report
