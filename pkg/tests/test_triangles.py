import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrising.kernel import Kernel
from lrising.params import ModelParams
from lrising.spins import hamiltonian
from lrising.triangles import (
    Triangle,
    TriangleFamily,
    build_triangles,
    count_external_families,
    droplet_stats,
    external_large,
    ground_state_of,
    is_compatible_external_family,
    reconstruct_spins,
    rho_targets,
    roundtrip_ok,
    triangle_dist,
)


def spins_of(text):
    return np.fromiter((1 if c == "+" else -1 for c in text), dtype=np.int8)


def test_all_plus_empty_family():
    fam = build_triangles(spins_of("+++++"), 2)
    assert len(fam) == 0


def test_single_minus_unit_triangle():
    fam = build_triangles(spins_of("++-++"), 2)
    assert [(t.left_flip, t.right_flip) for t in fam] == [(-1, 0)]
    assert fam.triangles[0].mass == 1
    assert list(fam.triangles[0].base) == [0]


def test_two_block_example():
    # minuses at {-2,-1} and {2} inside a window with L=3
    spins = spins_of("+--++-+")
    fam = build_triangles(spins, 3)
    masses = sorted(t.mass for t in fam)
    assert masses == [1, 2]
    t1, t2 = fam.triangles
    assert triangle_dist(t1, t2) >= min(t1.mass, t2.mass)
    assert all(fam.parent == -1)


def test_alternating_configuration_valid():
    fam = build_triangles(spins_of("+-+-+"), 2)
    assert fam.check_distances()
    assert fam.check_nesting_ratio()
    assert roundtrip_ok(fam)


def test_nested_family():
    # an interior plus gap produces a nested triangle over the gap
    spins = spins_of("+---+-+")
    fam = build_triangles(spins, 3)
    masses = sorted(t.mass for t in fam)
    assert masses == [1, 5]
    assert int((fam.parent >= 0).sum()) == 1
    assert fam.check_distances() and fam.check_nesting_ratio()
    assert np.array_equal(reconstruct_spins(fam, 3), spins)


def test_frame_and_roots():
    t = Triangle(2, 7)
    assert t.mass == 5
    assert list(t.base) == [3, 4, 5, 6, 7]
    assert t.frame == (2, 3, 7, 8)
    assert t.x_minus == 2.5 and t.x_plus == 7.5


def test_exhaustive_roundtrip_L6():
    L = 6
    n = 2 * L + 1
    for code in range(1 << n):
        spins = np.fromiter(
            ((-1 if (code >> b) & 1 else 1) for b in range(n)), dtype=np.int8, count=n
        )
        fam = build_triangles(spins, L)
        assert np.array_equal(reconstruct_spins(fam, L), spins)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([-1, 1]), min_size=9, max_size=41))
def test_roundtrip_property(spins_list):
    if len(spins_list) % 2 == 0:
        spins_list.append(1)
    spins = np.array(spins_list, dtype=np.int8)
    L = (len(spins) - 1) // 2
    fam = build_triangles(spins, L)
    assert np.array_equal(reconstruct_spins(fam, L), spins)
    assert fam.check_distances()
    assert fam.check_nesting_ratio()


def test_family_rejects_shared_flip():
    with pytest.raises(ValueError):
        TriangleFamily([Triangle(0, 3), Triangle(3, 5)], L=8)


def test_family_rejects_crossing():
    with pytest.raises(ValueError):
        TriangleFamily([Triangle(0, 4), Triangle(2, 6)], L=8)


def test_external_large_threshold():
    fam = TriangleFamily([Triangle(0, 9), Triangle(3, 4)], L=12)
    # nested unit is not external
    big = external_large(fam, 2.5)
    assert [t.mass for t in big] == [9]
    assert external_large(fam, 9.0) == ()
    small_only = TriangleFamily([Triangle(0, 2), Triangle(8, 9)], L=12)
    assert external_large(small_only, 2.5) == ()


def test_ground_state_of():
    k = Kernel(0.3, 5.0)
    sc = ground_state_of([Triangle(-1, 2)], 4, k)
    assert sc.to_text() == "++++---++"[: 2 * 4 + 1]
    assert ground_state_of([], 3, k).to_text() == "+++++++"


def test_ground_state_minimal_in_class():
    # among configurations sharing the thresholded external family, the
    # minus-on-bases configuration is the strict minimum
    k = Kernel(0.3, 5.0)
    L = 5
    t0 = Triangle(-2, 1)  # mass 3
    eps_abs = 1.5
    base = ground_state_of([t0], L, k)
    e0 = base.energy
    n = 2 * L + 1
    count = 0
    for code in range(1 << n):
        spins = np.fromiter(
            ((-1 if (code >> b) & 1 else 1) for b in range(n)), dtype=np.int8, count=n
        )
        fam = build_triangles(spins, L)
        if set(external_large(fam, eps_abs)) == {t0}:
            count += 1
            if not np.array_equal(spins, base.spins):
                assert hamiltonian(spins, k, L) > e0
    assert count > 1  # the class has nontrivial members


def test_compatibility_certificate():
    assert is_compatible_external_family([Triangle(-2, 1)], 1.5, 5)
    # two large blocks separated by less than the smaller mass merge into a
    # single triangle and are not a compatible external pair
    assert not is_compatible_external_family(
        [Triangle(-5, -1), Triangle(0, 4)], 1.5, 6
    )


def test_rho_targets():
    assert rho_targets(0.0, 0.8, 11)[0] == pytest.approx(0.5)
    assert rho_targets(0.8 - 1e-12, 0.8, 11)[0] == pytest.approx(0.0, abs=1e-9)
    assert rho_targets(-0.4, 0.8, 11)[0] == pytest.approx(0.75)
    rho_hat, rho_lat = rho_targets(0.0, 1.0, 11)
    assert rho_lat == pytest.approx(5 / 11)
    assert 0.0 <= rho_hat - rho_lat <= 1.0 / 11
    with pytest.raises(ValueError):
        rho_targets(0.9, 0.8, 11)


def test_droplet_stats_single_triangle():
    p = ModelParams(alpha=0.3, beta=1.0, L=10, a=0.2, gamma=0.45, nu=0.3)
    n = p.n_sites
    # eps_s * N = 21^0.55 ~ 5.3: a mass-10 droplet is large
    t0 = Triangle(-5, 5)
    spins = ground_state_of([t0], p.L)
    rep = droplet_stats(spins, p, m_target=0.0, rho_target=10 / n, m_beta=1.0)
    assert rep.external_masses == (10,)
    assert rep.n0 == 1
    assert rep.is_B
    assert rep.rho_emp == pytest.approx(10 / n)
    assert rep.block_inner == -1.0
    assert rep.block_outer == 1.0
    assert rep.largest_fraction == pytest.approx(10 / n)


def test_droplet_stats_all_plus():
    p = ModelParams(alpha=0.3, beta=1.0, L=10, a=0.2, gamma=0.45, nu=0.3)
    rep = droplet_stats(np.ones(p.n_sites, dtype=np.int8), p, rho_target=0.5)
    assert rep.rho_emp == 0.0
    assert not rep.is_B
    assert rep.m_emp == 1.0
    assert rep.n0 == 0


def test_droplet_stats_two_equal_blocks():
    # two large external triangles of equal mass: no single dominant one
    p = ModelParams(alpha=0.3, beta=1.0, L=12, a=0.2, gamma=0.45, nu=0.45)
    n = p.n_sites
    tris = [Triangle(-11, -4), Triangle(3, 10)]  # masses 7 and 7
    spins = ground_state_of(tris, p.L)
    rep = droplet_stats(spins, p, rho_target=14 / n, m_beta=1.0)
    assert rep.external_masses == (7, 7)
    assert not rep.is_B


def test_reclassify_roundtrip():
    p = ModelParams(alpha=0.3, beta=1.0, L=10, a=0.2, gamma=0.45, nu=0.3)
    t0 = Triangle(-5, 5)
    spins = ground_state_of([t0], p.L)
    rep = droplet_stats(spins, p, rho_target=10 / p.n_sites, m_beta=1.0)
    rho2, n02, isb2 = rep.reclassify(
        p.eps_s * p.n_sites, p.eps_c, 10 / p.n_sites, p.n_sites
    )
    assert (rho2, n02, isb2) == (rep.rho_emp, rep.n0, rep.is_B)


# -- counting -----------------------------------------------------------------


def test_count_single_mass_three():
    res = count_external_families(2, 3 / 5, 2.5)
    assert res.count == 3


def test_count_empty_family():
    res = count_external_families(3, 0.0, 2.5)
    assert res.count == 1


def test_count_within_bound_various():
    for n, k in [(11, 7), (15, 9), (21, 12)]:
        L = (n - 1) // 2
        res = count_external_families(L, k / n, n**0.75)
        assert res.count <= res.bound


def test_count_infeasible_rho():
    with pytest.raises(ValueError):
        count_external_families(5, 0.123, 2.0)


def test_count_matches_brute_force_classification():
    # cross-check the interval enumeration against classifying all spin
    # configurations of the window
    L, eps_abs = 4, 1.5
    n = 2 * L + 1
    seen = set()
    for code in range(1 << n):
        spins = np.fromiter(
            ((-1 if (code >> b) & 1 else 1) for b in range(n)), dtype=np.int8, count=n
        )
        fam = build_triangles(spins, L)
        ext = frozenset(external_large(fam, eps_abs))
        if ext:
            seen.add(ext)
    by_mass = {}
    for ext in seen:
        total = sum(t.mass for t in ext)
        by_mass[total] = by_mass.get(total, 0) + 1
    for k_total, expect in by_mass.items():
        res = count_external_families(L, k_total / n, eps_abs)
        assert res.count == expect, (k_total, res.count, expect)
