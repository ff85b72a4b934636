#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python backend.

The two backends are bit-for-bit equivalent (same RNG, same update order);
this script reports the speed ratio for each hot loop.  Sizes are scaled so
the Python side finishes in seconds.

Usage: python benchmarks/bench_backends.py
"""

import time

import numpy as np

from lrising import _kernels as compiled
from lrising import _pykernels as pure
from lrising.kernel import Kernel
from lrising.rng import Xoshiro
from lrising.spins import SpinConfig


def timeit(fn, *args, repeat=1, **kw):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args, **kw)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_mcmc():
    kernel = Kernel(0.3, 5.0)
    L = 256
    n = 2 * L + 1
    n_props = 50_000
    rows = []
    for name, mod in (("cython", compiled), ("python", pure)):
        sc = SpinConfig.from_minus_sites(range(-50, 50), kernel, L)
        scal_f = np.array([sc.energy])
        scal_i = np.array([sc.spin_sum, 0, 0], dtype=np.int64)
        up = np.zeros(n, dtype=np.int32)
        dn = np.zeros(n, dtype=np.int32)
        pos = np.zeros(n, dtype=np.int32)
        st = np.array(Xoshiro(9).state(), dtype=np.uint64)
        dt, (acc, _) = timeit(
            mod.mcmc_run, sc.spins, sc.fields, sc._jsym, st, n_props, 1.0, 0,
            -n, n, up, dn, pos, scal_f, scal_i,
        )
        rows.append((name, n_props / dt, sc.energy, acc))
    assert rows[0][2] == rows[1][2] and rows[0][3] == rows[1][3]
    return "mcmc_run(N=513)", rows


def bench_gray():
    kernel = Kernel(0.3, 4.0)
    L = 7
    n = 2 * L + 1
    jt = kernel.j_table(n - 1).copy()
    jsym = np.concatenate((jt[:0:-1], jt))
    btab = kernel.boundary_field(L)
    rows = []
    ref = None
    for name, mod in (("cython", compiled), ("python", pure)):
        dt, out = timeit(mod.gray_scan_reduce, n, 1.2, jsym, btab)
        if ref is None:
            ref = out[0]
        assert out[0] == ref
        rows.append((name, (1 << n) / dt, out[0], None))
    return "gray_scan(L=7)", rows


def bench_verify():
    rows = []
    ref = None
    for name, mod in (("cython", compiled), ("python", pure)):
        n_cfg = 20_000 if name == "cython" else 400
        dt, out = timeit(mod.verify_triangle_batch, 128, n_cfg, 3)
        assert out["fail_roundtrip"] == 0 and out["fail_invariants"] == 0
        rows.append((name, n_cfg / dt, None, None))
    return "verify_batch(L=128)", rows


def bench_census():
    rows = []
    ref = None
    for name, mod in (("cython", compiled), ("python", pure)):
        mass = 4 if name == "cython" else 4
        dt, out = timeit(mod.census_contours, mass, 14.0, 0.3, 10.0)
        if ref is None:
            ref = out.counts_by_mass
        assert out.counts_by_mass == ref
        rows.append((name, out.total_count / dt, None, None))
    return "census(mass<=4)", rows


def main():
    print(f"{'kernel':24} {'backend':8} {'rate':>14}")
    for bench in (bench_mcmc, bench_gray, bench_verify, bench_census):
        title, rows = bench()
        base = None
        for name, rate, _, _ in rows:
            extra = ""
            if name == "cython":
                base = rate
            elif base:
                extra = f"   (compiled is {base / rate:.0f}x faster)"
            print(f"{title:24} {name:8} {rate:>12.0f}/s{extra}")


if __name__ == "__main__":
    main()
