"""Acceptance gate: one test per criterion (clauses split where useful).

Each test prints a single PASS/FAIL line (run with `pytest -s` to stream
them).  Criterion 9's single-droplet-frequency clause is asserted exactly as
pinned; see its docstring for the size analysis of why it cannot hold at
this volume, and the companion diagnostic it prints.
"""

import time

import numpy as np
import pytest

from lrising.backend import backend_name
from lrising.oracle import ev_all, gibbs_scan
from lrising.params import ModelParams, validate_exponents
from lrising.sampler import ChainState, EnsembleSpec, phase_separation_experiment
from lrising.suites import (
    suite_bijection,
    suite_cluster,
    suite_counting,
    suite_entropy,
    suite_laplace,
    suite_merge,
    suite_peierls,
)


def _report(criterion, name, passed, detail=""):
    line = f"ACCEPTANCE {criterion:>2} {name}: {'PASS' if passed else 'FAIL'}"
    if detail:
        line += f"  ({detail})"
    print(line, flush=True)
    return passed


# -- 1: triangle bijection -----------------------------------------------------


def test_c1_bijection_suite():
    rep = suite_bijection(L_small=7, L_big=512, n_random=1_000_000, seed=1)
    ok = rep["passed"] and rep["seconds"] < 60.0
    assert _report(
        1, "bijection", ok, f"{rep['seconds']:.0f}s, backend={backend_name()}"
    )


# -- 2: energy lower bounds ------------------------------------------------------


def test_c2_peierls_suite(census_m6):
    rep = suite_peierls(
        alphas=(0.1, 0.3, 0.5),
        L=6,
        J=10.0,
        contour_mass_max=6,
        n_pairs=10_000,
        seed=1,
        census=census_m6,
    )
    js = {k: v["minimal_J"] for k, v in rep["details"].items()}
    ok = rep["passed"] and rep["seconds"] < 300.0
    assert _report(2, "peierls", ok, f"minimal J per alpha: {js}")


# -- 3: merging / fragmentation ---------------------------------------------------


def test_c3_merge_suite():
    rep = suite_merge(n_families=1000, L_max=2000, mass_max=12, window=60, seed=1)
    ok = rep["passed"] and rep["seconds"] < 120.0
    gaps = {c["name"]: c.get("min_gap", c.get("min_decrease")) for c in rep["checks"]}
    assert _report(3, "merge", ok, f"{gaps}")


# -- 4: entropy bound ------------------------------------------------------------


def test_c4_entropy_suite():
    rep = suite_entropy(sizes=(11, 15, 21), gamma=0.25)
    ok = rep["passed"] and rep["seconds"] < 120.0
    assert _report(4, "entropy", ok)


# -- 5: contour counting ----------------------------------------------------------


def test_c5_counting_suite(census_m6):
    rep = suite_counting(mass_max=6, alpha=0.3, census=census_m6)
    ok = rep["passed"] and rep["seconds"] < 300.0
    assert _report(
        5,
        "counting",
        ok,
        f"b_min={rep['b_minimal']}, census={rep['census_totals']}",
    )


# -- 6: oracle vs leading order ---------------------------------------------------


def test_c6_cluster_suite():
    rep = suite_cluster(L=8, alpha=0.3, beta=1.2, J=5.0)
    ok = rep["passed"] and rep["seconds"] < 600.0
    worst = max(
        (c.get("rel_err", 0.0) for c in rep["checks"]), default=0.0
    )
    assert _report(6, "cluster", ok, f"worst rel err {worst:.3f}")


# -- 7: conditioned Laplace bound ---------------------------------------------------


def test_c7_laplace_suite():
    rep = suite_laplace(L=5, alpha=0.3, beta=2.0, J=10.0)
    ok = rep["passed"] and rep["seconds"] < 120.0
    assert _report(7, "laplace", ok)


# -- 8: sampler against the oracle -------------------------------------------------


def test_c8_sampler_vs_oracle():
    t0 = time.time()
    p = ModelParams(alpha=0.3, beta=1.5, L=5, J=5.0)
    n = p.n_sites
    pairs = [(0, j) for j in range(-p.L, p.L + 1) if j != 0]
    res = gibbs_scan(p, [ev_all()], pair_sites=pairs)
    dist = res.distribution_m("all")
    acc = res.accumulators["all"]
    exact_pair = {j: acc.sum_pair[(0, j)] / acc.weight for _, j in pairs}

    chain = ChainState(p, EnsembleSpec(dynamics="free-glauber", seed=2024))
    chain.run_sweeps(500)
    counts: dict[int, int] = {}
    pair_sums = np.zeros(n)
    sweeps = 1_000_000
    for _ in range(sweeps):
        chain.run_sweeps(1)
        s = chain.spin_sum
        counts[s] = counts.get(s, 0) + 1
        pair_sums += float(chain.config.spins[p.L]) * chain.config.spins
    tv = 0.5 * sum(
        abs(counts.get(s, 0) / sweeps - pr) for s, pr in dist.items()
    )
    worst_pair = max(
        abs(pair_sums[j + p.L] / sweeps - exact_pair[j]) for _, j in pairs
    )
    dt = time.time() - t0
    ok = tv < 0.02 and worst_pair < 0.01 and dt < 120.0
    assert _report(
        8, "sampler-vs-oracle", ok, f"TV={tv:.4f}, worst pair err={worst_pair:.4f}, {dt:.0f}s"
    )


# -- 9: phase separation at desk scale ----------------------------------------------

C9 = {}


@pytest.fixture(scope="module")
def experiment9():
    if "report" not in C9:
        t0 = time.time()
        p = ModelParams.with_default_exponents(0.3, 2.0, 512, J=10.0)
        assert validate_exponents(p).all_pass
        C9["params"] = p
        C9["report"] = phase_separation_experiment(
            p, m=0.0, replicas=20, sweeps=100_000, thin=10, seed=2025,
            dynamics="fixed-exchange",
        )
        C9["seconds"] = time.time() - t0
    return C9["report"]


def test_c9_runtime_and_setup(experiment9):
    rep = experiment9
    ok = C9["seconds"] < 1800.0 and len(rep.replicas) == 20
    assert _report(
        9,
        "experiment-setup",
        ok,
        f"{C9['seconds']:.0f}s, m_beta={rep.m_beta:.6f}, rho_target={rep.rho_target:.4f}",
    )


def test_c9_median_droplet_fraction(experiment9):
    med = experiment9.median_largest_fraction()
    ok = abs(med - 0.5) <= 0.05
    assert _report(9, "median-droplet-fraction", ok, f"median={med:.4f}")


def test_c9_block_magnetizations(experiment9):
    inner, outer = experiment9.block_means()
    m_b = experiment9.m_beta
    ok = abs(inner - (-m_b)) <= 0.1 and abs(outer - m_b) <= 0.1
    assert _report(
        9, "block-magnetizations", ok, f"inner={inner:.3f}, outer={outer:.3f}, m_beta={m_b:.4f}"
    )


def test_c9_start_agreement(experiment9):
    agree, gap, se = experiment9.start_groups_agree(n_sigma=3.0)
    assert _report(9, "start-agreement", agree, f"gap={gap:.4f}, se={se:.4f}")


def test_c9_single_droplet_frequency_as_pinned(experiment9):
    """Frequency of the single-dominant-droplet event at the pinned exponent
    choice (gamma = alpha/4), asserted at >= 0.9 as stated.

    At this volume the criterion is unattainable: the smallness scale is
    eps_s * N = N^(1 - alpha/4) = 1025^0.925 ~ 609 sites, while the
    magnetization constraint m ~ 0 pins the minus mass at ~512 sites and the
    deep quench suppresses interior plus islands, so no external triangle
    can exceed the threshold and the event has probability ~ 0 in
    equilibrium.  A companion classification at gamma = 0.18 (which also
    satisfies the exponent system and whose scale eps_s * N ~ 295 is below
    the droplet mass) is printed to show the single-droplet phenomenon
    itself holds; the pinned assertion is kept and left to fail honestly.
    """
    rep = experiment9
    p = C9["params"]
    n = p.n_sites
    freq_pinned = rep.freq_single_droplet

    gamma_alt = 0.18
    p_alt = p.replace(gamma=gamma_alt)
    assert validate_exponents(p_alt).all_pass
    eps_s_abs_alt = p_alt.eps_s * n
    hits = total = 0
    for drops in rep.reports:
        for d in drops:
            _, _, isb = d.reclassify(eps_s_abs_alt, p.eps_c, rep.rho_target, n)
            hits += isb
            total += 1
    freq_alt = hits / total
    _report(
        9,
        "single-droplet-frequency",
        freq_pinned >= 0.9,
        f"pinned gamma={p.gamma:.4f} (eps_s*N={p.eps_s * n:.0f}): freq={freq_pinned:.3f}; "
        f"alternative gamma={gamma_alt} (eps_s*N={eps_s_abs_alt:.0f}): freq={freq_alt:.3f}",
    )
    assert freq_alt >= 0.9, "single-droplet phenomenon absent even at the desk-scale threshold"
    assert freq_pinned >= 0.9, (
        "unattainable as pinned: the smallness scale exceeds the droplet mass "
        f"(eps_s*N = {p.eps_s * n:.0f} > {n // 2} ~ droplet mass); "
        f"measured frequency {freq_pinned:.3f}, desk-scale-threshold frequency {freq_alt:.3f}"
    )


# -- 10: performance ------------------------------------------------------------------


def test_c10_throughput():
    p = ModelParams(alpha=0.3, beta=2.0, L=2048, J=10.0)
    chain = ChainState(p, EnsembleSpec(dynamics="free-glauber", seed=77))
    chain.run(100_000)  # warm-up
    t0 = time.perf_counter()
    n_props = 2_000_000
    chain.run(n_props)
    rate = n_props / (time.perf_counter() - t0)
    ok = rate >= 1e5
    assert _report(10, "throughput", ok, f"{rate/1e6:.1f}M proposals/s at N=4097")


def test_c10_cache_drift():
    # high acceptance so a million accepted updates accumulate quickly
    p = ModelParams(alpha=0.3, beta=0.05, L=2048, J=1.0)
    chain = ChainState(p, EnsembleSpec(dynamics="free-glauber", seed=11))
    accepted = 0
    while accepted < 1_000_000:
        accepted += chain.run(500_000)
    err = chain.cache_error()
    ok = err < 1e-9
    assert _report(10, "cache-drift", ok, f"rel err {err:.2e} after {accepted} accepted")
