"""Mimicry checks, above-Nyquist reconstruction and the (a, B) region map.

A lattice process mimics a continuous one at bandwidth B when their
correlation measures agree against every test function whose transform
lives in [-B, B]^n.  Here that is checked against a finite battery, so a
pass is evidence and an analytic failure is a certified counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from . import correlation
from .errors import BandwidthViolation, BelowNyquist, InvalidEpsilon, InvalidParameter, InvalidParameters, SlowConvergence
from .kernels import CorrelationStructure, Kind, LatticeSpec, sinc
from .samplers import RngState, SamplerSpec
from .testfn import BumpTransformFactor, Fejer, TestFunction, choose_epsilon, make_bump, product_test

EVIDENCE = "EVIDENCE"
COUNTEREXAMPLE = "COUNTEREXAMPLE"
FAIL = "FAIL"  # statistical rejection, not certified
ANALYTIC_MATCH_TOL = 1e-6
BAND_SLACK = 1e-12


# --------------------------------------------------------------------------
# battery


def default_battery(B: float, n: int) -> List[TestFunction]:
    """Six Fejer-type products of dimension n with bandwidth <= B.

    Three unmodulated scales B, B/2, B/4 and three modulated members that
    push spectral mass toward the band edge.
    """
    if not B > 0:
        raise InvalidParameter("bandwidth must be positive")
    if n < 1:
        raise InvalidParameter("level must be at least 1")
    out = [product_test([Fejer(s)] * n) for s in (B, B / 2, B / 4)]
    out.append(product_test([Fejer(B / 4, 3 * B / 4)] + [Fejer(B / 2)] * (n - 1)))
    out.append(product_test([Fejer(B / 2, B / 2)] + [Fejer(B / 4)] * (n - 1)))
    out.append(product_test([Fejer(B / 8, 7 * B / 8)] * n))
    return out


def _group_battery(battery, levels: int, B: float) -> Dict[int, List[TestFunction]]:
    if battery is None:
        return {n: default_battery(B, n) for n in range(1, levels + 1)}
    if isinstance(battery, Mapping):
        groups = {int(k): list(v) for k, v in battery.items()}
    else:
        groups = {}
        for eta in battery:
            groups.setdefault(eta.dim, []).append(eta)
    return {n: groups.get(n, []) for n in range(1, levels + 1)}


# --------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class TestResult:
    level: int
    test: str
    value_a: float
    value_b: float
    discrepancy: float
    stderr: Optional[float]
    allowance: float
    passed: bool

    def as_dict(self):
        return {"level": self.level, "test": self.test, "value_a": self.value_a, "value_b": self.value_b,
                "discrepancy": self.discrepancy, "stderr": self.stderr, "allowance": self.allowance,
                "pass": self.passed}


@dataclass(frozen=True)
class MimicryVerdict:
    B: float
    side_a: str
    side_b: str
    statistical: bool
    results: List[TestResult] = field(default_factory=list)

    @property
    def levels(self) -> Dict[int, bool]:
        out: Dict[int, bool] = {}
        for r in self.results:
            out[r.level] = out.get(r.level, True) and r.passed
        return out

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def label(self) -> str:
        if self.passed:
            return EVIDENCE
        return FAIL if self.statistical else COUNTEREXAMPLE

    def as_dict(self):
        return {"B": self.B, "A": self.side_a, "B_side": self.side_b, "statistical": self.statistical,
                "verdict": self.label, "pass": self.passed,
                "levels": {str(k): v for k, v in self.levels.items()},
                "results": [r.as_dict() for r in self.results]}


def _describe(side) -> str:
    if isinstance(side, SamplerSpec):
        return f"sampler:{side.process}(a={side.a:g}, lam={side.lam:g}, window={list(side.window)})"
    return side.describe()


def mimicry_test(A: CorrelationStructure, Bside: Union[CorrelationStructure, SamplerSpec], B: float,
                 levels: int = 2, battery=None, replicas: int = 10_000, seed: int = 0) -> MimicryVerdict:
    """Compare ``integral eta d rho_n`` between two sides for every battery member.

    ``Bside`` may be a correlation structure (analytic comparison, tolerance
    ``ANALYTIC_MATCH_TOL``) or a sampler (Monte Carlo; a member passes when
    the discrepancy is within 3 standard errors plus the window bound).
    """
    if not B > 0:
        raise InvalidParameter("bandwidth must be positive")
    if not 1 <= levels <= 4:
        raise InvalidParameter("levels must be between 1 and 4")
    groups = _group_battery(battery, levels, B)
    for tests in groups.values():
        for eta in tests:
            if any(b > B * (1 + BAND_SLACK) for b in eta.bandwidths):
                raise BandwidthViolation(f"{eta.describe()} has bandwidth {max(eta.bandwidths)} > {B}")
    statistical = isinstance(Bside, SamplerSpec)
    results: List[TestResult] = []
    configs = None
    if statistical:
        configs = correlation.sample_replicas(Bside, replicas, RngState(seed))
    for n, tests in groups.items():
        if not tests:
            continue
        if statistical:
            reports = correlation.estimate_expectations(Bside, tests, replicas, RngState(seed), configs=configs)
        for i, eta in enumerate(tests):
            va = correlation.analytic_expectation(A, eta, n)
            if statistical:
                rep = reports[i]
                vb, se = rep.estimate, rep.stderr
                allowance = 3.0 * se + rep.truncation_bound
            else:
                vb, se = correlation.analytic_expectation(Bside, eta, n), None
                allowance = ANALYTIC_MATCH_TOL
            disc = abs(va - vb)
            results.append(TestResult(n, eta.describe(), va, vb, disc, se, allowance, disc <= allowance))
    return MimicryVerdict(B, _describe(A), _describe(Bside), statistical, results)


# --------------------------------------------------------------------------
# reconstruction


def nyquist_reconstruct(rho: CorrelationStructure, a: float, n: int, k: Sequence[float], B: float,
                        eps: Optional[float] = None) -> float:
    """Atom at ``k`` of the unique lattice measure mimicking ``rho`` at bandwidth B.

    Integrates ``prod_i bhat_eps((x_i - k_i)/a)`` against ``rho_n``; requires
    ``B > 1/(2a)``.
    """
    if rho.is_lattice:
        raise InvalidParameter("reconstruction starts from a continuous structure")
    lat = LatticeSpec(a)
    if not a * B > 0.5:
        raise BelowNyquist(f"B={B} is not above the Nyquist bandwidth {0.5 / a}")
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    if ks.size != n:
        raise InvalidParameter(f"need {n} lattice points, got {ks.size}")
    idx = lat.indices(ks)
    if eps is None:
        eps = choose_epsilon(a, B)
    if (0.5 + eps) / a > B * (1 + BAND_SLACK):
        raise InvalidEpsilon(f"eps={eps} puts the bump outside [-B, B]")
    bump = make_bump(eps)
    eta = product_test([BumpTransformFactor(bump, a, a * float(i)) for i in idx])
    return correlation.analytic_expectation(rho, eta, n)


def _sinc_integral(a: float) -> float:
    """``integral S(x/a) dx`` as an oscillatory integral (QAWF on the tail)."""
    head, err_h = integrate.quad(lambda u: sinc(u), 0.0, 1.0, epsabs=1e-12)
    tail, err_t = integrate.quad(lambda u: 1.0 / (np.pi * u), 1.0, np.inf, weight="sin", wvar=np.pi,
                                 epsabs=1e-10, limlst=200)
    if err_h + err_t > 1e-7:
        raise SlowConvergence("sinc integral did not settle")
    return 2.0 * a * (head + tail)


def _sine_pair_sinc_integral(a: float, d: float, tol: float) -> float:
    """``a * integral S(w/a) S(w + d)^2 dw`` summed over unit panels until the tail is negligible."""
    f = lambda w: sinc(w / a) * sinc(w + d) ** 2
    L = max(50.0, math.sqrt(a / (math.pi ** 3 * tol / 10.0)) + abs(d))
    if L > 1e5:
        raise SlowConvergence("tail bound needs an impractically long range")
    edges = np.arange(-math.ceil(L), math.ceil(L) + 1, 1.0) - d
    total, err = 0.0, 0.0
    for x0, x1 in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(f, x0, x1, epsabs=tol / edges.size)
        total += v
        err += e
    if err > tol:
        raise SlowConvergence(f"panel quadrature error {err:.2e}")
    return a * total


def sinc_interpolate_measure(rho: CorrelationStructure, a: float, n: int, k: Sequence[float],
                             tol: float = 1e-5) -> float:
    """``integral prod_i S((x_i - k_i)/a) d rho_n(x)`` for n <= 2.

    Convolving two copies of ``S(./a)`` returns ``a S(./a)``, which reduces
    the sine two-level integral to a single absolutely convergent integral.
    """
    LatticeSpec(a)
    ks = np.atleast_1d(np.asarray(k, dtype=float))
    if ks.size != n:
        raise InvalidParameter(f"need {n} points, got {ks.size}")
    if n > 2 or rho.kind not in (Kind.POISSON_CONTINUOUS, Kind.SINE_CONTINUOUS):
        raise SlowConvergence("sinc-interpolated integrals are only evaluated for n <= 2 and the named continuous structures")
    one = _sinc_integral(a)
    if rho.kind is Kind.POISSON_CONTINUOUS:
        return (rho.lam * one) ** n
    if n == 1:
        return one
    return one * one - _sine_pair_sinc_integral(a, ks[0] - ks[1], tol / 10)


# --------------------------------------------------------------------------
# region map

MIMICABLE = "Mimicable"
NOT_MIMICABLE = "NotMimicable"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class RegionPoint:
    process: str
    a: float
    B: float
    verdict: str
    rule: str

    def row(self):
        return (self.a, self.B, self.verdict, self.rule)


def classify_region(process: str, a: float, B: float) -> RegionPoint:
    """Known mimicry status of the continuous process by a lattice process on aZ at bandwidth B."""
    if process not in ("poisson", "sine"):
        raise InvalidParameters(f"unknown process {process!r}")
    if not (a > 0 and B > 0 and math.isfinite(a) and math.isfinite(B)):
        raise InvalidParameters(f"need a > 0 and B > 0, got a={a}, B={B}")
    if process == "poisson":
        if B <= 1.0 / a:
            return RegionPoint(process, a, B, MIMICABLE, "poisson: B <= 1/a")
        return RegionPoint(process, a, B, NOT_MIMICABLE, "poisson: B > 1/a")
    if a <= 1.0 and B <= (1.0 - a) / a:
        return RegionPoint(process, a, B, MIMICABLE, "sine: a <= 1 and B <= (1-a)/a")
    if a <= 0.5 and B > (1.0 - a) / a:
        return RegionPoint(process, a, B, NOT_MIMICABLE, "sine: a <= 1/2 and B > (1-a)/a")
    if a > 0.5 and B >= 0.5 / a:
        return RegionPoint(process, a, B, NOT_MIMICABLE, "sine: a > 1/2 and B >= 1/(2a)")
    return RegionPoint(process, a, B, UNKNOWN, "sine: no result covers this point")


def region_grid(process: str, step: float = 0.01, a_max: float = 2.0, B_max: float = 3.0) -> List[RegionPoint]:
    """Classify the grid ``a = step, 2 step, ..., a_max`` by ``B = step, ..., B_max``."""
    if not step > 0:
        raise InvalidParameters("grid step must be positive")
    na = int(round(a_max / step))
    nb = int(round(B_max / step))
    return [classify_region(process, step * i, step * j) for i in range(1, na + 1) for j in range(1, nb + 1)]
