"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import conftest  # noqa: E402
import svgcheck  # noqa: E402
from bandmimic import correlation as C  # noqa: E402
from bandmimic import kernels as K  # noqa: E402
from bandmimic import mimicry as M  # noqa: E402
from bandmimic import obstruction as O  # noqa: E402
from bandmimic import testfn as T  # noqa: E402
from bandmimic.plotting import emit_region_svg  # noqa: E402
from bandmimic.samplers import RngState, SamplerSpec, sample_discrete_sine  # noqa: E402

DATA = Path(__file__).parent / "data"
RNG = np.random.default_rng(20240601)


def record(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_phi_table():
    t0 = time.perf_counter()
    grid = np.linspace(0.05, 2.0, 40)
    printed = {
        1: lambda a: 2 * a,
        2: lambda a: 2 * a * a if a <= 0.5 else 0.5 - 2 * a + 4 * a * a,
        3: lambda a: 0.0 if a <= 0.5 else (2 * a - 1) ** 3,
        4: lambda a: 0.0 if a <= 0.5 else ((a - 0.5) ** 2 * (1 - 20 * a + 12 * a * a) if a <= 1
                                          else 17 / 4 - 22 * a + 48 * a ** 2 - 48 * a ** 3 + 16 * a ** 4),
    }
    formula_err = route_err = 0.0
    for n in range(1, 5):
        for a in grid:
            closed = O.phi(n, a).value
            formula_err = max(formula_err, abs(closed - printed[n](a)))
            route_err = max(route_err, abs(closed - O.phi(n, a, route="cycle-index").value))
    dt = time.perf_counter() - t0
    ok = formula_err <= 1e-12 and route_err <= 1e-10 and dt < 1.0
    record(1, ok, f"Phi_1..4 at 40 points: formula gap {formula_err:.1e}, route gap {route_err:.1e} "
                  f"(tol 1e-10), {dt:.2f}s (< 1s)")


def test_criterion_02_branch_continuity():
    worst = 0.0
    for n in (2, 3, 4):
        for a in (0.5, 1.0):
            left = O.phi(n, a).value  # closed intervals on the right end: (0,1/2], (1/2,1]
            right = O.phi(n, math.nextafter(a, 2.0)).value
            worst = max(worst, abs(left - right))
    hi_branch = 17 / 4 - 22 + 48 - 48 + 16
    mid_branch = 0.25 * (1 - 20 + 12)
    ok = worst <= 1e-12 and hi_branch == mid_branch == -1.75
    record(2, ok, f"Phi_2..4 one-sided limits at a=1/2, 1 differ by <= {worst:.1e} (tol 1e-12); "
                  f"Phi_4(1) = {mid_branch} / {hi_branch}")


def test_criterion_03_fnu_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    ratios = {}
    for nu in (2, 3, 4):
        for r in (0.3, 0.5, 0.75, 1.2):
            exact = O.f_nu(nu, r)
            errs = [abs(O.f_nu(nu, r, "numeric", m) - exact) for m in (2001, 4001, 8001)]
            worst = max(worst, errs[-1])
            ratios[nu, r] = [e0 / e1 if e1 > 0 else math.inf for e0, e1 in zip(errs, errs[1:])]
    dt = time.perf_counter() - t0
    # first order (ratio about 2 per halving) where the error is generic; r = 0.5 lands on a grid-aligned
    # breakpoint (faster) and r >= 1 is exact, both of which are at least first order
    first_order = all(1.5 <= q <= 3.0 for (nu, r), qs in ratios.items() if r in (0.3, 0.75) for q in qs)
    at_least_first = all(q >= 1.5 for qs in ratios.values() for q in qs)
    ok = worst <= 1e-3 and first_order and at_least_first and dt < 10
    r03 = ratios[2, 0.3]
    record(3, ok, f"f_nu numeric vs closed at grid 8001: max err {worst:.1e} (tol 1e-3); "
                  f"halving ratios e.g. nu=2,r=0.3: {r03[0]:.3f}, {r03[1]:.3f}; {dt:.2f}s (< 10s)")


def test_criterion_04_raw_moments():
    polys = {1: lambda a: 2 * a, 2: lambda a: 0.5 + 4 * a * a, 3: lambda a: 0.5 + 2 * a + 8 * a ** 3,
             4: lambda a: 7 / 4 + 2 * a + 4 * a * a + 16 * a ** 4}
    worst = 0.0
    checked = 0
    for a in (0.6, 0.8, 1.5, 2.0):
        m = O.raw_moments(a)
        for r in range(1, 5):
            if a > O.MOMENT_DOMAIN[r]:
                worst = max(worst, abs(m[r] - polys[r](a)))
                checked += 1
    ok = worst <= 1e-12 and checked == 14
    record(4, ok, f"raw moments vs printed polynomials, {checked} in-domain entries: max gap {worst:.1e} (tol 1e-12)")


def test_criterion_05_hamburger():
    worst = max(abs(O.hamburger_det(O.raw_moments(a)) - (0.5 - a * a)) for a in (1.1, 1.5, 2.0, 3.0))
    samples = 1.0 + 2.0 * (1.0 - RNG.random(50))  # (1, 3]
    dets = [O.hamburger_det(O.raw_moments(a)) for a in samples]
    ok = worst <= 1e-10 and max(dets) < 0
    record(5, ok, f"Hankel det vs 1/2 - a^2: max gap {worst:.1e} (tol 1e-10); max over 50 a in (1,3]: {max(dets):.3f} < 0")


def test_criterion_06_factorial_obstruction():
    samples = 0.5 + 0.5 * (1.0 - RNG.random(50))  # (1/2, 1]
    vals = [O.phi(4, a).value for a in samples]
    ok = max(vals) < 0
    record(6, ok, f"Phi_4 at 50 a in (1/2, 1]: max {max(vals):.3e} < 0")


def test_criterion_07_poisson_summation():
    t0 = time.perf_counter()
    battery = [T.Fejer(1.0), T.Fejer(0.5), T.Fejer(0.2, 0.7), T.Gaussian(1.0), T.Fejer(0.25, 0.5)]
    gaps = [C.poisson_summation_check(f, a).gap for f in battery for a in (0.5, 1.0, 2.0)]
    dt = time.perf_counter() - t0
    ok = max(gaps) <= 1e-8 and dt < 5
    record(7, ok, f"Poisson summation, 5 functions x 3 spacings: max gap {max(gaps):.1e} (tol 1e-8), {dt:.2f}s (< 5s)")


def _windowed_poisson_lattice(eta, a, lam, window):
    """Exact expectation of the windowed statistic for the lattice Poisson process (product test functions)."""
    k = np.arange(math.ceil(window[0] / a - 1e-9), math.floor(window[1] / a + 1e-9) + 1) * a
    return math.prod(a * lam * math.fsum(f(k)) for f in eta.factors)


def test_criterion_08_poisson_mimicry():
    t0 = time.perf_counter()
    window = (-20.0, 20.0)
    spec = SamplerSpec("discrete_poisson", window, lam=1.0, a=1.0)
    v = M.mimicry_test(K.poisson(1.0), spec, 1.0, levels=2, replicas=10_000, seed=7)
    dt = time.perf_counter() - t0
    z = [r.discrepancy / r.stderr for r in v.results]
    within = sum(q <= 3 for q in z)
    # diagnostic only: the same estimates against the exact expectation of the windowed statistic
    battery = [eta for n in (1, 2) for eta in M.default_battery(1.0, n)]
    z_win = [abs(r.value_b - _windowed_poisson_lattice(eta, 1.0, 1.0, window)) / r.stderr
             for r, eta in zip(v.results, battery)]
    lam = 1.0
    eta = T.product_test([T.make_fejer(1.3, 0.2, 1.0)])
    cx = M.mimicry_test(K.poisson(lam), K.poisson_lattice(1.0, lam), 1.3, levels=1, battery=[eta])
    disc = cx.results[0].discrepancy
    ok = within == len(z) and dt < 60 and cx.label == M.COUNTEREXAMPLE and abs(disc - 2 * lam) <= 1e-8
    record(8, ok, f"MC mimicry at (a,B)=(1,1), window [-20,20], 1e4 replicas: {within}/{len(z)} members within "
                  f"3 SE (worst {max(z):.2f} SE); verdict with window-truncation allowance: {v.label}; "
                  f"against the windowed expectation worst {max(z_win):.2f} SE; {dt:.1f}s (< 60s); "
                  f"B=1.3 counterexample discrepancy {disc:.10f} (2*lam = 2)")


def test_criterion_09_discrete_sine_statistics():
    a = 0.5
    spec = SamplerSpec("discrete_sine", (0.0, 199.5), a=a)
    configs = C.sample_replicas(spec, 2000, RngState(9))
    counts = np.array([c.count for c in configs], dtype=float)
    mean, se = counts.mean(), counts.std(ddof=1) / math.sqrt(counts.size)
    sites = int(round((spec.window[1] - spec.window[0]) / a)) + 1
    target = a * sites
    hist = C.empirical_pair_correlation(configs, a, 1.0)
    rate, rse = hist.at(0.5)
    want = 0.25 * (1 - 4 / math.pi ** 2)
    full = all(np.array_equal(sample_discrete_sine(1.0, 50, RngState(1, r)).indices, np.arange(50))
               for r in range(20))
    ok = sites == 400 and abs(mean - target) <= 3 * se and abs(rate - want) <= 3 * rse and full
    record(9, ok, f"discrete sine a=1/2, 400 sites, 2000 replicas: mean count {mean:.3f} +- {se:.3f} "
                  f"(target {target:.0f}); pair rate at 1/2 {rate:.5f} +- {rse:.5f} (target {want:.6f}); "
                  f"a=1 full lattice: {full}")


def test_criterion_10_nyquist_reconstruction():
    worst = halving = 0.0
    lam = 1.5
    for a in (0.5, 1.0):
        B = 1.0 / a
        eps = T.choose_epsilon(a, B)
        for n in (1, 2):
            for k in ([0.0, a], [3 * a, -2 * a], [4 * a, 4 * a]):
                v = M.nyquist_reconstruct(K.poisson(lam), a, n, k[:n], B, eps)
                worst = max(worst, abs(v - (a * lam) ** n))
                halving = max(halving, abs(v - M.nyquist_reconstruct(K.poisson(lam), a, n, k[:n], B, eps / 2)))
    # the sine process is mimicked at a = 1/2 only up to B = 1 = 1/(2a); reconstruct just above it
    a, B = 0.5, 1.0 + 1e-3
    eps = T.choose_epsilon(a, B)
    for gap in (0.5, 1.0, 1.5):
        v = M.nyquist_reconstruct(K.sine(), a, 2, [0.0, gap], B, eps)
        worst = max(worst, abs(v - a * a * (1 - K.sinc(gap) ** 2)))
        halving = max(halving, abs(v - M.nyquist_reconstruct(K.sine(), a, 2, [0.0, gap], B, eps / 2)))
    ok = worst <= 1e-6 and halving < 1e-6
    record(10, ok, f"reconstruction: max err {worst:.1e} (tol 1e-6), eps-halving change {halving:.1e} (< 1e-6); "
                   f"sine at B = 1.001")


def test_criterion_11_nonuniqueness():
    lam = 1.0
    one, two = K.poisson_lattice(1.0, lam), K.poisson_lattice(2.0, lam)
    passes = [M.mimicry_test(K.poisson(lam), s, 0.5, levels=2).passed for s in (one, two)]
    odd = [(K.atom_mass(one, [float(k)]), K.atom_mass(two, [float(k)])) for k in range(-7, 8, 2)]
    even = [(K.atom_mass(one, [float(k)]), K.atom_mass(two, [float(k)])) for k in range(-8, 9, 2)]
    ok = all(passes) and all(x == (lam, 0.0) for x in odd) and all(x == (lam, 2 * lam) for x in even)
    record(11, ok, f"PoissonLattice(1) and PoissonLattice(2) pass at B=1/2: {passes}; "
                   f"odd-site atoms {odd[0]}, even-site atoms {even[0]}")


def test_criterion_12_region_figure(tmp_path):
    table = [(("poisson", 1.0, 1.0), M.MIMICABLE), (("sine", 0.5, 1.01), M.NOT_MIMICABLE),
             (("sine", 0.8, 0.3), M.UNKNOWN), (("sine", 0.6, 0.9), M.NOT_MIMICABLE)]
    spots = all(M.classify_region(*args).verdict == want for args, want in table)
    pts = M.region_grid("sine", 0.05)
    band = all((p.verdict == M.UNKNOWN) == (p.a > 0.5 and (1 - p.a) / p.a < p.B < 0.5 / p.a) for p in pts)
    first, second = tmp_path / "a.svg", tmp_path / "b.svg"
    emit_region_svg(pts, first, "sine")
    emit_region_svg(pts, second, "sine")
    stable = first.read_bytes() == second.read_bytes()
    golden = first.read_bytes() == (DATA / "region_sine_005.svg").read_bytes()
    bad, checked = svgcheck.pixel_mismatches(first.read_text(), "sine", 0.05)
    ok = spots and band and stable and golden and bad == 0 and svgcheck.has_colour(first.read_text(), M.UNKNOWN)
    record(12, ok, f"spot checks {spots}; white band exactly at 1/2<a, (1-a)/a<B<1/(2a): {band}; "
                   f"SVG pixels off-classifier {bad}/{checked}; byte-stable {stable}; golden match {golden}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
