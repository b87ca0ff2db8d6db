"""Distinct-tuple statistics, Monte Carlo and analytic expectations.

The central identity is

    E sum_{j_1..j_n distinct} eta(u_{j_1}, ..., u_{j_n}) = integral eta d rho_n

whose left side is estimated from sampled configurations and whose right
side is evaluated from the analytic correlation structure.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .errors import DimensionMismatch, InvalidParameter, QuadratureFailure, TruncationFailure
from .kernels import CorrelationStructure, Kind, sinc
from .samplers import Configuration, RngState, SamplerSpec
from .testfn import Factor, TestFunction

ANALYTIC_TOL = 1e-8
MAX_LATTICE_TERMS = 50_000_000
NYSTROM_NODES = 40  # Gauss-Legendre panels of 20 nodes on [-1/2, 1/2]


# --------------------------------------------------------------------------
# distinct-tuple statistics


@lru_cache(maxsize=None)
def set_partitions(n: int) -> Tuple[Tuple[Tuple[int, ...], ...], ...]:
    """All set partitions of ``range(n)`` (restricted growth strings, no recursion)."""
    out = []
    if n == 0:
        return ((),)
    rgs = [0] * n
    while True:
        blocks = {}
        for i, b in enumerate(rgs):
            blocks.setdefault(b, []).append(i)
        out.append(tuple(tuple(v) for _, v in sorted(blocks.items())))
        # next restricted growth string
        i = n - 1
        while i > 0:
            if rgs[i] <= max(rgs[:i]):
                rgs[i] += 1
                for j in range(i + 1, n):
                    rgs[j] = 0
                break
            i -= 1
        else:
            return tuple(out)


def _mobius(partition) -> int:
    return math.prod((-1) ** (len(b) - 1) * math.factorial(len(b) - 1) for b in partition)


def _product_statistic(values: np.ndarray, mult: np.ndarray) -> float:
    """Distinct-index sum for a product function from per-point factor values.

    ``values[i, j]`` is factor ``i`` evaluated at distinct position ``j``;
    a position of multiplicity m stands for m indices.  Inclusion-exclusion
    over set partitions of the n slots removes coincident indices.
    """
    n = values.shape[0]
    total = 0.0
    block_sums = {}
    for part in set_partitions(n):
        term = float(_mobius(part))
        for block in part:
            s = block_sums.get(block)
            if s is None:
                s = float(np.dot(mult, np.prod(values[list(block)], axis=0)))
                block_sums[block] = s
            term *= s
        total += term
    return total


def distinct_tuple_statistic(config: Configuration, eta, n: int) -> float:
    """``sum eta(u_{j_1}, ..., u_{j_n})`` over ordered tuples of distinct indices.

    ``eta`` is a product :class:`TestFunction` or any callable on n-vectors
    (the latter is enumerated directly and is only meant for small counts).
    """
    if isinstance(eta, TestFunction):
        if eta.dim != n:
            raise DimensionMismatch(f"test function has dimension {eta.dim}, level is {n}")
        if config.count < n:
            return 0.0
        vals = np.array([np.atleast_1d(f(config.positions)) for f in eta.factors], dtype=float)
        return _product_statistic(vals, config.multiplicities.astype(float))
    pts = config.expanded()
    if pts.size < n:
        return 0.0
    total = 0.0
    for combo in itertools.combinations(range(pts.size), n):
        for perm in itertools.permutations(combo):
            total += float(eta(pts[list(perm)]))
    return total


# --------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class EstimatorReport:
    estimate: float
    stderr: float
    replicas: int
    truncation_bound: float

    def __post_init__(self):
        if self.stderr < 0:
            raise InvalidParameter("standard error must be nonnegative")
        if self.replicas < 2:
            raise InvalidParameter("need at least two replicas")

    def as_dict(self):
        return {"estimate": self.estimate, "stderr": self.stderr, "replicas": self.replicas,
                "truncation_bound": self.truncation_bound}


def worker_count() -> int:
    env = os.environ.get("MIMICRY_THREADS")
    if env:
        return max(1, int(env))
    return 1


def _outside_mass(f: Factor, lo: float, hi: float, lattice: Optional[float], reach: float = 2000.0) -> Tuple[float, float]:
    """``(inside, outside)`` mass of ``|f|`` for the window, outside part bounded above.

    The outside part is summed (or integrated) numerically out to ``reach``
    beyond each edge, and the decay envelope covers the rest.
    """
    if lattice is not None:
        a = lattice
        m_lo, m_hi = math.ceil(lo / a - 1e-12), math.floor(hi / a + 1e-12)
        span = int(math.ceil(reach / a))
        inside = float(np.abs(f(a * np.arange(m_lo, m_hi + 1, dtype=float))).sum()) if m_hi >= m_lo else 0.0
        left = np.abs(f(a * np.arange(m_lo - span, m_lo, dtype=float))).sum()
        right = np.abs(f(a * np.arange(m_hi + 1, m_hi + 1 + span, dtype=float))).sum()
        far = a * span + min(-a * m_lo, a * m_hi)
        return inside, float(left + right) + f.tail_sum_bound(a, far)

    def mass(x0, x1):
        pts = np.arange(math.ceil(x0), math.floor(x1) + 1, dtype=float)
        edges = np.concatenate(([x0], pts[(pts > x0) & (pts < x1)], [x1]))
        xs, ws = np.polynomial.legendre.leggauss(16)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes = mid[:, None] + half[:, None] * xs[None, :]
        return float(np.sum(np.abs(f(nodes)) * ws[None, :] * half[:, None]))

    inside = mass(lo, hi) if hi > lo else 0.0
    outside = mass(lo - reach, lo) + mass(hi, hi + reach)
    far = reach + min(-lo, hi)
    return inside, outside + f.tail_integral_bound(far)


def window_truncation_bound(spec: SamplerSpec, eta: TestFunction) -> float:
    """Bound on ``|integral eta d rho_n - integral_{window^n} eta d rho_n|``.

    Uses ``|rho_n| <= rho_max`` together with the mass of each ``|f_i|``
    inside and outside the window.
    """
    lo, hi = spec.window
    n = eta.dim
    rho_max = spec.structure().density_bound(n)
    lattice = spec.a if spec.is_lattice else None
    parts = [_outside_mass(f, lo, hi, lattice) for f in eta.factors]
    full = math.prod(i + o for i, o in parts)
    inner = math.prod(i for i, _ in parts)
    return rho_max * (full - inner)


def sample_replicas(spec: SamplerSpec, replicas: int, rng: RngState, workers: Optional[int] = None) -> List[Configuration]:
    """Draw replica ``r`` from stream ``r`` of ``rng.seed``; order is independent of ``workers``."""
    workers = workers or worker_count()
    streams = [rng.child(r) for r in range(replicas)]
    if workers <= 1:
        return [spec.sample(s) for s in streams]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(spec.sample, streams))


def estimate_expectations(spec: SamplerSpec, tests: Sequence[TestFunction], replicas: int, rng: RngState,
                          configs: Optional[Sequence[Configuration]] = None) -> List[EstimatorReport]:
    """Estimate several test functions from one shared set of replicas."""
    if replicas < 2:
        raise InvalidParameter("need at least two replicas")
    if configs is None:
        configs = sample_replicas(spec, replicas, rng)
    stats = np.zeros((len(tests), len(configs)))
    for r, cfg in enumerate(configs):
        for i, eta in enumerate(tests):
            stats[i, r] = distinct_tuple_statistic(cfg, eta, eta.dim)
    reports = []
    for i, eta in enumerate(tests):
        col = stats[i]
        se = float(np.std(col, ddof=1) / math.sqrt(col.size))
        reports.append(EstimatorReport(float(col.mean()), se, col.size, window_truncation_bound(spec, eta)))
    return reports


def estimate_expectation(spec: SamplerSpec, eta: TestFunction, n: int, replicas: int, rng: RngState) -> EstimatorReport:
    if eta.dim != n:
        raise DimensionMismatch(f"test function has dimension {eta.dim}, level is {n}")
    return estimate_expectations(spec, [eta], replicas, rng)[0]


# --------------------------------------------------------------------------
# lattice sums with certified tails


def _cosine_tail_terms(tail, a: float):
    """Split ``sum_{m != 0} f(am)`` far field into exact and oscillating pieces."""
    exact, osc = [], []
    for c, w in tail:
        theta = 2.0 * math.pi * w * a
        frac = (w * a) % 1.0
        if min(frac, 1.0 - frac) < 1e-13:
            exact.append(c)
        else:
            osc.append((c, abs(math.sin(theta / 2.0))))
    return exact, osc


def _direct_sum(f: Callable, a: float, K: int) -> float:
    total = 0.0
    chunk = 1 << 20
    for start in range(-K, K + 1, chunk):
        m = np.arange(start, min(start + chunk, K + 1), dtype=float)
        total += math.fsum(np.asarray(f(a * m), dtype=float))
    return total


def lattice_sum(factor: Factor, a: float, tol: float = ANALYTIC_TOL) -> Tuple[float, float]:
    """``sum_{m in Z} f(a m)`` with a certified bound on the dropped tail.

    Returns ``(value, bound)``.  For factors with an exact ``cos/x^2`` far
    field the non-oscillating part of the tail is added in closed form (a
    Hurwitz zeta tail) and the oscillating part is bounded by Abel
    summation; otherwise the quadratic decay envelope bounds the tail.
    """
    exact_finite = getattr(factor, "exact_lattice_sum", None)
    if exact_finite is not None:
        val = exact_finite(a)
        if val is not None:
            return val, 0.0
    tail = factor.cosine_tail
    if tail is not None:
        exact, osc = _cosine_tail_terms(tail, a)
        osc_const = sum(2.0 * abs(c) / (a * a * s) for c, s in osc)
        K = 1024
        if osc_const > 0:
            K = max(K, int(math.ceil(math.sqrt(osc_const / (tol / 2.0)))))
        if 2 * K + 1 > MAX_LATTICE_TERMS:
            raise TruncationFailure(f"{factor.name}: oscillating tail needs {K} terms on {a}Z")
        head = _direct_sum(factor, a, K)
        zeta_tail = 2.0 * sum(exact) / (a * a) * float(special.zeta(2.0, K + 1))
        bound = osc_const / (K + 1) ** 2
        return head + zeta_tail, bound
    K = 1024
    while factor.tail_sum_bound(a, a * K) > tol / 2.0:
        K *= 2
        if 2 * K + 1 > MAX_LATTICE_TERMS:
            raise TruncationFailure(f"{factor.name}: decay envelope cannot reach tolerance {tol} on {a}Z")
    return _direct_sum(factor, a, K), factor.tail_sum_bound(a, a * K)


def _frequency_sum(factor: Factor, a: float, tol: float) -> float:
    """``sum_{j in Z/a} fhat(j)``; finite for band-limited factors."""
    if math.isfinite(factor.bandwidth):
        J = int(math.floor(factor.bandwidth * a + 1e-12))
        j = np.arange(-J, J + 1, dtype=float) / a
        return float(np.real(np.sum(factor.ft(j))))
    bound_fn = getattr(factor, "spectral_tail_bound", None)
    if bound_fn is None:
        raise TruncationFailure(f"{factor.name}: no spectral tail bound")
    J = 8
    while a * bound_fn(J / a) > tol / 2.0:
        J *= 2
        if J > MAX_LATTICE_TERMS:
            raise TruncationFailure(f"{factor.name}: spectral tail too slow")
    j = np.arange(-J, J + 1, dtype=float) / a
    return float(np.real(math.fsum(np.asarray(factor.ft(j)).real)))


@dataclass(frozen=True)
class PoissonSummation:
    lhs: float
    rhs: float
    gap: float
    bound: float = 0.0

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.gap))


def poisson_summation_check(phi, a: float, tol: float = ANALYTIC_TOL) -> PoissonSummation:
    """Compare ``a^n sum_{(aZ)^n} phi`` with ``sum_{(Z/a)^n} phihat``."""
    factors = phi.factors if isinstance(phi, TestFunction) else (phi,)
    n = len(factors)
    lhs_parts, bounds, rhs_parts = [], [], []
    for f in factors:
        v, b = lattice_sum(f, a, tol / (2 * n))
        lhs_parts.append(a * v)
        bounds.append(a * b)
        rhs_parts.append(_frequency_sum(f, a, tol / (2 * n)))
    lhs = math.prod(lhs_parts)
    rhs = math.prod(rhs_parts)
    bound = math.prod(abs(p) + b for p, b in zip(lhs_parts, bounds)) - math.prod(abs(p) for p in lhs_parts)
    return PoissonSummation(lhs, rhs, abs(lhs - rhs), bound)


# --------------------------------------------------------------------------
# analytic expectations


def _cycles(perm: Sequence[int]) -> List[Tuple[int, ...]]:
    seen, out = set(), []
    for start in range(len(perm)):
        if start in seen:
            continue
        cyc, i = [], start
        while i not in seen:
            seen.add(i)
            cyc.append(i)
            i = perm[i]
        out.append(tuple(cyc))
    return out


def _perm_sign(perm) -> int:
    return (-1) ** sum(len(c) - 1 for c in _cycles(perm))


def _canonical(cycle: Tuple[int, ...]) -> Tuple[int, ...]:
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def _quad_points(a: float, b: float, pts: Iterable[float]):
    inner = sorted({p for p in pts if a < p < b})
    return inner or None


def _pair_cycle_integral(fi: Factor, fj: Factor, tol: float) -> complex:
    """``integral fhat_i(-d) fhat_j(d) (1 - |d|)_+ dd``: a 2-cycle of the sine kernel."""
    pts = {0.0}
    pts.update(-p for p in fi.breakpoints)
    pts.update(fj.breakpoints)
    lim = min(1.0, fi.bandwidth, fj.bandwidth)
    breaks = _quad_points(-lim, lim, pts)

    def integrand(d, part):
        v = complex(fi.ft(-d)) * complex(fj.ft(d)) * (1.0 - abs(d))
        return v.real if part == 0 else v.imag

    out = []
    for part in (0, 1):
        val, err = integrate.quad(integrand, -lim, lim, args=(part,), points=breaks, epsabs=tol / 4,
                                  epsrel=0.0, limit=1000)
        if err > tol:
            raise QuadratureFailure(f"2-cycle integral error estimate {err:.2e}")
        out.append(val)
    return complex(out[0], out[1])


@lru_cache(maxsize=4)
def _nystrom_grid(panels: int):
    x, w = np.polynomial.legendre.leggauss(20)
    edges = np.linspace(-0.5, 0.5, panels + 1)
    half = 0.5 * (edges[1] - edges[0])
    nodes = (edges[:-1, None] + half * (x + 1.0)).ravel()
    weights = np.tile(w * half, panels)
    return nodes, weights


def _long_cycle_integral(factors: Sequence[Factor]) -> complex:
    """``integral_{E^L} prod_t fhat_{t+1}(xi_t - xi_{t+1})`` for L >= 4: trace of a product of
    integral operators on E = [-1/2, 1/2], discretised by Nystrom.

    The transforms have kinks, so accuracy is algebraic (about 1e-6 for
    the default grid) rather than at the analytic tolerance.
    """
    nodes, weights = _nystrom_grid(NYSTROM_NODES)
    diff = nodes[:, None] - nodes[None, :]
    L = len(factors)
    prod = None
    for t in range(L):
        mat = np.asarray(factors[(t + 1) % L].ft(diff), dtype=complex) * weights[None, :]
        prod = mat if prod is None else prod @ mat
    return complex(np.trace(prod))


def _triple_cycle_integral(f0: Factor, f1: Factor, f2: Factor, tol: float) -> complex:
    """3-cycle on E^3 in gap variables ``d1 = xi0 - xi1``, ``d2 = xi1 - xi2``.

    The integrand is ``f1hat(d1) f2hat(d2) f0hat(-(d1 + d2))`` times the
    length of ``{xi0 in E : xi0 - d1 in E, xi0 - d1 - d2 in E}``.
    """
    bp0 = set(f0.breakpoints) | {-p for p in f0.breakpoints}
    base = {0.0, 1.0, -1.0} | set(f1.breakpoints) | set(f2.breakpoints) | bp0
    outer_pts = sorted({x + y for x in base for y in base} | {x - y for x in base for y in base})

    def weight(d1, d2):
        lo = min(0.0, d1, d1 + d2)
        hi = max(0.0, d1, d1 + d2)
        return max(0.0, 1.0 - (hi - lo))

    def make(part):
        def inner(d1):
            g1 = complex(f1.ft(d1))
            if g1 == 0:
                return 0.0
            pts = {0.0, -d1, 1.0 - d1, -1.0 - d1, 1.0, -1.0}
            pts.update(f2.breakpoints)
            pts.update(-d1 - p for p in f0.breakpoints)

            def g(d2):
                v = g1 * complex(f2.ft(d2)) * complex(f0.ft(-(d1 + d2))) * weight(d1, d2)
                return v.real if part == 0 else v.imag

            val, _ = integrate.quad(g, -1.0, 1.0, points=_quad_points(-1.0, 1.0, pts),
                                    epsabs=tol / 8, epsrel=0.0, limit=200)
            return val

        val, err = integrate.quad(inner, -1.0, 1.0, points=_quad_points(-1.0, 1.0, outer_pts),
                                  epsabs=tol / 4, epsrel=0.0, limit=400)
        if err > tol:
            raise QuadratureFailure(f"3-cycle integral error estimate {err:.2e}")
        return val

    re = make(0)
    im = 0.0 if all(f.real_spectrum for f in (f0, f1, f2)) else make(1)
    return complex(re, im)


def _sine_cycle_value(factors: Sequence[Factor], tol: float) -> complex:
    L = len(factors)
    if L == 1:
        return complex(factors[0].ft(0.0))
    if L == 2:
        return _pair_cycle_integral(factors[0], factors[1], tol)
    if L == 3:
        return _triple_cycle_integral(factors[0], factors[1], factors[2], tol)
    return _long_cycle_integral(factors)


def _permutation_expand(n: int, cycle_value: Callable[[Tuple[int, ...]], complex]) -> complex:
    cache = {}
    total = 0j
    for perm in itertools.permutations(range(n)):
        term = complex(_perm_sign(perm))
        for cyc in _cycles(perm):
            key = _canonical(cyc)
            if key not in cache:
                cache[key] = cycle_value(key)
            term *= cache[key]
            if term == 0:
                break
        total += term
    return total


def _sine_continuous_expectation(eta: TestFunction, tol: float) -> float:
    fs = eta.factors
    n = len(fs)
    val = _permutation_expand(n, lambda cyc: _sine_cycle_value([fs[i] for i in cyc], tol / 4))
    return val.real


def _lattice_cycle_radius(a: float, L: int) -> int:
    return int(math.ceil((2000 if L == 2 else 300) / min(a, 1.0)))


def _sine_lattice_expectation(eta: TestFunction, a: float, tol: float) -> float:
    fs = eta.factors
    n = len(fs)
    singles = {}

    def cycle_value(cyc):
        if len(cyc) == 1:
            i = cyc[0]
            if i not in singles:
                singles[i] = lattice_sum(fs[i], a, tol / (4 * n))[0]
            return complex(singles[i])
        return complex(_lattice_chain(tuple(fs[i] for i in cyc), a, tol / (4 * n)))

    return a ** n * _permutation_expand(n, cycle_value).real


def _lattice_chain(factors: Tuple[Factor, ...], a: float, tol: float) -> float:
    """``sum_k prod_t f_t(k_t) S(k_t - k_{t+1})`` over (aZ)^L, truncated with a doubling check."""
    L = len(factors)

    def at(K):
        m = np.arange(-K, K + 1, dtype=float)
        vals = [np.asarray(f(a * m), dtype=float) for f in factors]
        if L == 2:
            gaps = np.arange(-2 * K, 2 * K + 1, dtype=float)
            s2 = sinc(a * gaps) ** 2
            # sum_{p,q} v0[p] v1[q] S(a(p-q))^2 as a correlation
            conv = np.convolve(vals[0], vals[1][::-1])
            return float(np.dot(conv, s2))
        M = sinc(a * (m[:, None] - m[None, :]))
        prod = vals[0][:, None] * M
        for v in vals[1:]:
            prod = prod @ (v[:, None] * M)
        return float(np.trace(prod))

    K = _lattice_cycle_radius(a, L)
    prev = at(K)
    for _ in range(4):
        nxt = at(2 * K)
        if abs(nxt - prev) < tol:
            return nxt
        K, prev = 2 * K, nxt
    raise TruncationFailure(f"lattice {L}-cycle did not settle below {tol}")


def _custom_expectation(structure: CorrelationStructure, eta: TestFunction, tol: float) -> float:
    n = eta.dim
    if structure.atoms is not None:
        a = structure.a
        total = 0.0
        for key, mass in structure.atoms.items():
            if len(key) == n:
                total += mass * float(eta(a * np.asarray(key, dtype=float)))
        return total
    R = 200.0
    val, err = integrate.nquad(lambda *x: float(eta(np.array(x))) * float(structure.density(np.array(x))),
                               [[-R, R]] * n, opts={"epsabs": tol, "limit": 400})
    return val


def analytic_expectation(structure: CorrelationStructure, eta: TestFunction, n: int,
                         tol: float = ANALYTIC_TOL) -> float:
    """``integral eta d rho_n`` for the named structures.

    Continuous structures are evaluated on the frequency side (the sine
    determinant expands over permutations into cycle integrals of the
    factor transforms); lattice structures by truncated lattice sums with
    certified tails.
    """
    if eta.dim != n:
        raise DimensionMismatch(f"test function has dimension {eta.dim}, level is {n}")
    kind = structure.kind
    if kind is Kind.POISSON_CONTINUOUS:
        return structure.lam ** n * math.prod(float(np.real(f.ft(0.0))) for f in eta.factors)
    if kind is Kind.SINE_CONTINUOUS:
        return _sine_continuous_expectation(eta, tol)
    if kind is Kind.POISSON_LATTICE:
        a = structure.a
        sums = [lattice_sum(f, a, tol / (2 * n))[0] for f in eta.factors]
        return (a * structure.lam) ** n * math.prod(sums)
    if kind is Kind.SINE_LATTICE:
        return _sine_lattice_expectation(eta, structure.a, tol)
    return _custom_expectation(structure, eta, tol)


# --------------------------------------------------------------------------
# pair correlation


@dataclass(frozen=True)
class PairCorrelation:
    centers: np.ndarray
    rate: np.ndarray
    stderr: np.ndarray
    lattice: bool

    def rows(self):
        return list(zip(self.centers.tolist(), self.rate.tolist(), self.stderr.tolist()))

    def at(self, separation: float) -> Tuple[float, float]:
        i = int(np.argmin(np.abs(self.centers - separation)))
        return float(self.rate[i]), float(self.stderr[i])


def empirical_pair_correlation(configs: Sequence[Configuration], bin_width: float, max_sep: float = 5.0,
                               buffer: Optional[float] = None) -> PairCorrelation:
    """Binned rate of ordered pairs of distinct indices by signed separation.

    Only pairs whose first point lies at least ``buffer`` inside the window
    are counted, so separations up to ``buffer`` see the full neighbourhood.
    Continuous configurations give a density (per unit length squared);
    lattice configurations give the atom mass per site pair.
    """
    if not bin_width > 0:
        raise InvalidParameter("bin width must be positive")
    nb = int(math.floor(max_sep / bin_width + 0.5))
    centers = bin_width * np.arange(-nb, nb + 1)
    if not configs:
        z = np.zeros(centers.size)
        return PairCorrelation(centers, z, z.copy(), False)
    lattice = configs[0].a is not None
    if buffer is None:
        buffer = 10.0 * configs[0].a if lattice else 10.0
    per = np.zeros((len(configs), centers.size))
    for r, cfg in enumerate(configs):
        lo, hi = cfg.window[0] + buffer, cfg.window[1] - buffer
        if lattice:
            sites = np.arange(math.ceil(lo / cfg.a - 1e-9), math.floor(hi / cfg.a + 1e-9) + 1)
            norm = max(sites.size, 1)
        else:
            norm = max(hi - lo, 0.0) * bin_width
        x, m = cfg.positions, cfg.multiplicities.astype(float)
        inner = (x >= lo - 1e-12) & (x <= hi + 1e-12)
        if not inner.any() or norm == 0:
            continue
        d = x[None, :] - x[inner][:, None]
        w = m[inner][:, None] * m[None, :]
        same = np.isclose(d, 0.0, atol=1e-12)
        w = np.where(same, m[inner][:, None] * (m[inner][:, None] - 1.0), w)
        idx = np.rint(d / bin_width).astype(np.int64) + nb
        ok = (idx >= 0) & (idx < centers.size)
        np.add.at(per[r], idx[ok], w[ok])
        per[r] /= norm
    rate = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / math.sqrt(len(configs)) if len(configs) > 1 else np.zeros(centers.size)
    return PairCorrelation(centers, rate, se, lattice)
