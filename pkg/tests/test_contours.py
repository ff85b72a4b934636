import math

import numpy as np
import pytest

from lrising.contours import (
    Contour,
    check_separation_constant,
    contour_minus_sites,
    contours_compatible,
    group_contours,
    min_separation_constant,
    separation_sum,
    verify_peierls,
)
from lrising.kernel import Kernel
from lrising.params import ModelParams
from lrising.rng import Xoshiro
from lrising.spins import minus_set_energy
from lrising.triangles import Triangle, TriangleFamily, build_triangles


def test_min_separation_constant():
    c = min_separation_constant()
    assert c == pytest.approx(4.0 * math.pi**2 / 3.0, rel=1e-14)
    assert c == pytest.approx(13.1595, abs=1e-4)
    assert not check_separation_constant(13.0)
    assert check_separation_constant(14.0)
    assert separation_sum(14.0) <= 0.5


def test_delta_consistency():
    p = ModelParams(alpha=0.3, beta=1.0, L=8)
    assert p.delta == pytest.approx(
        2.0 * math.pi**2 / (3.0 * 0.3 * 0.7 * 14.0), rel=1e-14
    )


def test_group_two_units_close_and_far():
    near = TriangleFamily([Triangle(0, 1), Triangle(3, 4)], L=40)
    cf = group_contours(near, 14.0)
    assert len(cf) == 1  # distance 2 <= 14
    far = TriangleFamily([Triangle(0, 1), Triangle(20, 21)], L=40)
    cf2 = group_contours(far, 14.0)
    assert len(cf2) == 2  # distance 19 > 14
    assert cf2.check_pairwise()


def test_single_triangle_contour_norm():
    fam = TriangleFamily([Triangle(0, 5)], L=10)
    cf = group_contours(fam, 14.0)
    assert len(cf) == 1
    assert cf.contours[0].norm_alpha(0.3) == pytest.approx(5**0.3)
    assert cf.contours[0].mass == 5


def test_partition_property():
    rng = Xoshiro(4)
    for _ in range(50):
        L = 16
        spins = np.array(
            [1 if rng.uniform() < 0.6 else -1 for _ in range(2 * L + 1)],
            dtype=np.int8,
        )
        fam = build_triangles(spins, L)
        cf = group_contours(fam, 14.0)
        assert cf.triangle_multiset() == tuple(
            sorted(fam.triangles, key=lambda t: (t.left_flip, t.right_flip))
        )
        assert cf.check_pairwise()


def test_merge_order_independence():
    # shuffle the input family order; the fixed point must not change
    rng = Xoshiro(9)
    for _ in range(60):
        L = 24
        spins = np.array(
            [1 if rng.uniform() < 0.5 else -1 for _ in range(2 * L + 1)],
            dtype=np.int8,
        )
        fam = build_triangles(spins, L)
        ref = group_contours(fam, 14.0)
        tris = list(fam.triangles)
        for _ in range(4):
            # deterministic shuffle
            perm = sorted(range(len(tris)), key=lambda k: rng.next_u64())
            shuffled = TriangleFamily([tris[k] for k in perm], L)
            assert group_contours(shuffled, 14.0) == ref


def test_locality_of_grouping():
    # far-separated families group independently
    left = [Triangle(0, 1), Triangle(4, 5)]
    total_mass = 4
    gap = int(14.0 * total_mass**3) + 10
    right = [Triangle(gap, gap + 1), Triangle(gap + 4, gap + 5)]
    fam_l = TriangleFamily(left, L=2 * gap)
    fam_r = TriangleFamily(right, L=2 * gap)
    fam = TriangleFamily(left + right, L=2 * gap)
    gl = group_contours(fam_l, 14.0)
    gr = group_contours(fam_r, 14.0)
    combined = group_contours(fam, 14.0)

    def key(g):
        return [(t.left_flip, t.right_flip) for t in g]

    expect = sorted([key(g.triangles) for g in gl] + [key(g.triangles) for g in gr])
    assert sorted(key(g.triangles) for g in combined) == expect


def test_contour_minus_sites():
    g = Contour((Triangle(0, 3), Triangle(10, 11)))
    assert contour_minus_sites(g) == [1, 2, 3, 11]


def test_compatibility_requires_distance():
    a = Contour((Triangle(0, 1),))
    b = Contour((Triangle(10, 11),))
    assert not contours_compatible(a, b, 14.0)  # dist 9 <= 14
    c = Contour((Triangle(30, 31),))
    assert contours_compatible(a, c, 14.0)


def test_peierls_unit_triangle_numbers():
    # the energy of a unit triangle vs the per-triangle rate at alpha=0.3
    k = Kernel(0.3, 10.0)
    e = minus_set_energy([0], k)
    assert e == pytest.approx(2 * 10 + 2 * k.zeta_2ma, rel=1e-13)
    p = ModelParams(alpha=0.3, beta=1.0, L=4, J=10.0)
    assert 2.0 * p.peierls_rate == pytest.approx(5.121, abs=2e-3)
    assert e >= 2.0 * p.peierls_rate


def test_verify_peierls_small(census_m4):
    p = ModelParams(alpha=0.3, beta=1.0, L=4, J=10.0)
    rep = verify_peierls(
        p, L_exhaustive=4, contour_mass_max=4, n_pairs=300, seed=3, census=census_m4
    )
    assert rep.config_bound_ok
    assert rep.contour_bound_ok
    assert rep.pair_bound_ok
    assert rep.minimal_J is not None and 1 <= rep.minimal_J <= 30


def test_census_counts_small(census_m4):
    cm = census_m4.counts_by_mass
    assert cm[1] == {(1,): 1}
    assert cm[2] == {(1, 1): 14, (2,): 1}
    assert cm[3] == {(1, 1, 1): 196, (1, 2): 27, (3,): 1}
    # all census samples are genuine single contours of their own family
    for g in census_m4.samples[:50]:
        fam = TriangleFamily(g.triangles, L=g.right_flip + 2)
        assert len(group_contours(fam, 14.0)) == 1
