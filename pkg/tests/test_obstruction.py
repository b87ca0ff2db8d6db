import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bandmimic import obstruction as O
from bandmimic.errors import (DomainViolation, InvalidR, InvalidSpacing, OrderTooLarge, UnsupportedOrder)

A_GRID = np.linspace(0.05, 2.0, 40)


def test_f_nu_examples():
    assert O.f_nu(2, 0.5) == 0.75
    assert O.f_nu(3, 1.5) == 1.0
    assert O.f_nu(4, 0.5) == pytest.approx(0.375, abs=1e-15)
    assert O.f_nu(1, 0.2) == 1.0
    with pytest.raises(UnsupportedOrder):
        O.f_nu(5, 0.3)
    with pytest.raises(InvalidR):
        O.f_nu(2, 0.0)


def test_f4_branches_meet_at_half():
    lo = (16 * 0.5 ** 3 - 14 * 0.5 ** 4) / 3
    hi = (1 - 8 * 0.5 + 24 * 0.5 ** 2 - 16 * 0.5 ** 3 + 2 * 0.5 ** 4) / 3
    assert lo == pytest.approx(hi, abs=1e-15) == 0.375


def test_f_nu_numeric_close_to_closed():
    for nu in (2, 3, 4):
        for r in (0.3, 0.5, 0.75, 1.2):
            assert abs(O.f_nu(nu, r, "numeric", 8001) - O.f_nu(nu, r)) <= 1e-3


@pytest.mark.parametrize("nu", [2, 3, 4])
@pytest.mark.parametrize("r", [0.3, 0.75, 1.2])
def test_f_nu_first_order_convergence(nu, r):
    errs = [abs(O.f_nu(nu, r, "numeric", m) - O.f_nu(nu, r)) for m in (2001, 4001, 8001)]
    if errs[0] < 1e-13:
        # for r >= 1 the discretised kernel is all ones and the trace is exact
        assert max(errs) < 1e-13
        return
    # grids m -> 2m - 1 keep the node set nested; the step halves exactly
    for e0, e1 in zip(errs, errs[1:]):
        assert 1.5 <= e0 / e1 <= 3.0


def test_f_nu_numeric_high_order_monotone():
    # f_nu is decreasing in nu for r < 1 (more constraints) and all values lie in (0, 1]
    vals = [O.f_nu(nu, 0.4, "numeric", 2001) for nu in range(1, 8)]
    assert all(0 < v <= 1 for v in vals)
    assert all(x >= y for x, y in zip(vals, vals[1:]))


def test_cycle_index_examples():
    assert O.cycle_index(1, [2.5]) == 2.5
    assert O.cycle_index(2, [3.0, 5.0]) == pytest.approx((9 + 5) / 2)
    for n in range(1, 9):
        assert O.cycle_index(n, [1.0] * n) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(OrderTooLarge):
        O.cycle_index(9, [1.0] * 9)


def test_cycle_index_counts_fixed_points():
    # Z(S_n; x, 1, 1, ...) is the generating function of fixed points; at x = 0 it gives derangements / n!
    for n in range(1, 9):
        der = round(math.factorial(n) * sum((-1) ** k / math.factorial(k) for k in range(n + 1)))
        assert O.cycle_index(n, [0.0] + [1.0] * (n - 1)) == pytest.approx(der / math.factorial(n), abs=1e-12)


def test_partition_counts():
    assert [len(list(O.integer_partitions(n))) for n in range(1, 9)] == [1, 2, 3, 5, 7, 11, 15, 22]


def test_phi_examples():
    for a in (0.1, 0.7, 1.9):
        assert O.phi(1, a).value == 2 * a
    assert O.phi(3, 0.75).value == pytest.approx(0.125, abs=1e-15)
    assert O.phi(4, 0.75).value == pytest.approx(-0.453125, abs=1e-15)
    assert O.phi(2, 0.5).value == 0.5
    with pytest.raises(UnsupportedOrder):
        O.phi(5, 0.7)
    with pytest.raises(InvalidSpacing):
        O.phi(2, 0.0)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_phi_route_agreement(n):
    for a in A_GRID:
        closed = O.phi(n, a).value
        cyc = O.phi(n, a, route="cycle-index").value
        assert abs(closed - cyc) <= 1e-10


def test_phi_higher_orders_via_cycle_index():
    # at a <= 1/2 (r >= 1) every f_nu is 1 and Phi_n = (-1)^n n! a^n Z(S_n; -2, ..., -2) vanishes for n >= 3
    for n in range(3, 9):
        assert abs(O.phi(n, 0.4, route="cycle-index").value) < 1e-12
    with pytest.raises(OrderTooLarge):
        O.phi(9, 0.4, route="cycle-index")


def _branches(n, a):
    lo = {2: 2 * a * a, 3: 0.0, 4: 0.0}
    mid = {2: 0.5 - 2 * a + 4 * a * a, 3: (2 * a - 1) ** 3, 4: (a - 0.5) ** 2 * (1 - 20 * a + 12 * a * a)}
    hi = {2: mid[2], 3: mid[3], 4: 17 / 4 - 22 * a + 48 * a ** 2 - 48 * a ** 3 + 16 * a ** 4}
    return lo[n], mid[n], hi[n]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_phi_branch_continuity(n):
    lo, mid, _ = _branches(n, 0.5)
    assert abs(lo - mid) <= 1e-12
    _, mid, hi = _branches(n, 1.0)
    assert abs(mid - hi) <= 1e-12
    for a in (0.5, 1.0):
        assert abs(O.phi(n, a).value - O.phi(n, a + 1e-13).value) <= 1e-11
    assert _branches(4, 1.0)[1] == -1.75 == _branches(4, 1.0)[2]


def test_stirling_numbers():
    assert [O.stirling2(4, k) for k in range(5)] == [0, 1, 7, 6, 1]
    assert O.stirling2(0, 0) == 1


def test_raw_moments_examples():
    assert O.raw_moments(1.5)[2] == pytest.approx(9.5, abs=1e-12)
    assert O.raw_moments(2.0)[4] == pytest.approx(277.75, abs=1e-12)
    assert O.raw_moments(1.2)[3] == pytest.approx(16.724, abs=1e-12)
    assert O.raw_moments(0.8)[0] == 1.0


@given(st.floats(0.501, 5.0))
def test_raw_moments_match_polynomials(a):
    m = O.raw_moments(a, override=a <= 1.0)
    assert m[1] == pytest.approx(2 * a, abs=1e-12)
    assert m[2] == pytest.approx(0.5 + 4 * a * a, abs=1e-12 * (1 + a * a))
    assert m[3] == pytest.approx(0.5 + 2 * a + 8 * a ** 3, abs=1e-12 * (1 + a ** 3))
    if a > 1:
        assert m[4] == pytest.approx(7 / 4 + 2 * a + 4 * a * a + 16 * a ** 4, abs=1e-12 * (1 + a ** 4))


def test_moment_domain():
    m = O.raw_moments(0.8)
    assert m[3] == pytest.approx(0.5 + 1.6 + 8 * 0.512)
    with pytest.raises(DomainViolation):
        m[4]
    with pytest.raises(DomainViolation):
        O.raw_moments(0.4)[2]
    forced = O.raw_moments(0.8, override=True)
    assert forced.tainted
    assert np.isfinite(forced[4])
    assert not O.raw_moments(1.5).tainted


def test_hamburger_examples():
    c = 1.7
    assert O.hamburger_det([c ** r for r in range(5)]) == pytest.approx(0.0, abs=1e-10)
    assert O.hamburger_det(O.raw_moments(2.0)) == pytest.approx(-3.5, abs=1e-10)
    assert O.hamburger_det(O.raw_moments(1.01)) == pytest.approx(-0.5201, abs=1e-10)
    # Poisson(1) moments 1, 1, 2, 5, 15: determinant 1!*2! = 2
    assert O.hamburger_det([1, 1, 2, 5, 15]) == pytest.approx(2.0)


def test_negativity_of_obstruction_witnesses():
    rng = np.random.default_rng(0)
    for a in rng.uniform(0.5, 1.0, 50) + 1e-9:
        assert O.phi(4, a).value < 0
    for a in rng.uniform(1.0, 3.0, 50) + 1e-9:
        assert O.hamburger_det(O.raw_moments(a)) < 0


def test_obstruction_report_examples():
    r = O.obstruction_report(0.75)
    assert r.kind == "factorial" and r.witness == pytest.approx(-0.453125)
    r = O.obstruction_report(2.0)
    assert r.kind == "hamburger" and r.witness == pytest.approx(-3.5, abs=1e-10)
    r = O.obstruction_report(0.4)
    assert r.kind == "none" and not r.obstructed
    assert O.obstruction_report(1.0).kind == "factorial"
    with pytest.raises(InvalidSpacing):
        O.obstruction_report(-1.0)


def test_monte_carlo_bridge():
    a = 0.4
    limits = {1: O.phi(1, a).value, 2: O.phi(2, a).value}
    for odd in (1, 5, 51):
        for est in O.two_site_factorial_moments(a, odd, 10_000, seed=odd):
            assert abs(est.estimate - est.exact) <= 3 * est.stderr
            assert est.limit == limits[est.order]
    # finite-l exact values approach the limit as l grows through odd multiples of a
    # with the envelope 2 a^2 S(l)^2 <= 2 a^2 / (pi l)^2
    for odd in (1, 5, 51, 501):
        ell = odd * a
        gap = abs(O.two_site_factorial_moments(a, odd, 2)[1].exact - limits[2])
        assert gap <= 2 * a * a / (math.pi * ell) ** 2 + 1e-15
