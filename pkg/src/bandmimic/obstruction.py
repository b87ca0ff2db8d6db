"""Limiting factorial moments of two-site counts and the moment obstructions.

For the sine process viewed through the interpolating functions h_{a,l},
the count X_l at the two sites {0, l} has limiting factorial moments
Phi_n(a) as l runs to infinity through odd multiples of a.  When a > 1/2
these limits cannot be the factorial moments of a nonnegative integer
random variable, which rules out a lattice process mimicking the sine
process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import (DomainViolation, InvalidParameter, InvalidR, InvalidSpacing, OrderTooLarge,
                     UnsupportedOrder)
from .kernels import sinc
from .samplers import RngState, SpectralDPP

DEFAULT_GRID = 4001
MAX_CYCLE_ORDER = 8


# --------------------------------------------------------------------------
# f_nu


def _f_closed(nu: int, r: float) -> float:
    if nu == 1 or r >= 1.0:
        return 1.0
    if nu == 2:
        return 2.0 * r - r * r
    if nu == 3:
        return 3.0 * r ** 2 - 2.0 * r ** 3
    if nu == 4:
        if r < 0.5:
            return (16.0 * r ** 3 - 14.0 * r ** 4) / 3.0
        return (1.0 - 8.0 * r + 24.0 * r ** 2 - 16.0 * r ** 3 + 2.0 * r ** 4) / 3.0
    raise UnsupportedOrder(f"no closed form for nu = {nu}; use the numeric mode")


def _band_halfwidth(r: float, m: int) -> int:
    # midpoint nodes are 1/m apart, so |xi_p - xi_q| <= r  <=>  |p - q| <= r m
    return int(math.floor(r * m + 1e-9))


def _overlap_diagonal(m: int, K: int, d: int) -> np.ndarray:
    """Entries ``(A^2)_{p, p+d}`` of the squared band matrix, ``p = 0..m-1-d``."""
    p = np.arange(m - d, dtype=np.int64)
    v = np.minimum(p + K, m - 1) - np.maximum(p + d - K, 0) + 1
    return np.maximum(v, 0)


def _band_trace(nu: int, m: int, K: int) -> int:
    """``trace(A^nu)`` for the 0/1 band matrix ``A_pq = [|p - q| <= K]``, nu <= 4, exactly."""
    if K >= m - 1:
        return m ** nu
    if nu == 1:
        return m
    if nu == 2:
        return m + 2 * sum(m - d for d in range(1, K + 1))
    total = 0
    if nu == 3:
        for d in range(0, K + 1):
            s = int(_overlap_diagonal(m, K, d).sum())
            total += s if d == 0 else 2 * s
        return total
    for d in range(0, min(2 * K, m - 1) + 1):
        v = _overlap_diagonal(m, K, d)
        s = int(np.dot(v, v))
        total += s if d == 0 else 2 * s
    return total


@lru_cache(maxsize=8)
def _band_eigenvalues(m: int, K: int) -> np.ndarray:
    idx = np.arange(m)
    A = (np.abs(idx[:, None] - idx[None, :]) <= K).astype(float) / m
    return np.linalg.eigvalsh(A)


def f_nu(nu: int, r: float, mode: str = "closed", m: int = DEFAULT_GRID) -> float:
    """``f_nu(r) = integral_{E^nu} prod 1{|xi_i - xi_{i+1}| <= r}`` (cyclically), E = [-1/2, 1/2].

    ``mode="closed"`` uses the piecewise polynomials (nu <= 4);
    ``mode="numeric"`` returns ``trace(T^nu)`` for the midpoint discretisation
    of the indicator kernel on ``m`` nodes.
    """
    if not isinstance(nu, (int, np.integer)) or nu < 1:
        raise InvalidParameter(f"nu must be a positive integer, got {nu}")
    if not (r > 0 and math.isfinite(r)):
        raise InvalidR(f"r must be positive, got {r}")
    if mode == "closed":
        return _f_closed(int(nu), float(r))
    if mode != "numeric":
        raise InvalidParameter(f"unknown mode {mode!r}")
    if m < 1:
        raise InvalidParameter("grid size must be positive")
    K = _band_halfwidth(r, m)
    if nu <= 4:
        return _band_trace(int(nu), m, K) / float(m) ** nu
    if K >= m - 1:
        return 1.0
    return float(np.sum(_band_eigenvalues(m, K) ** nu))


# --------------------------------------------------------------------------
# cycle index


def integer_partitions(n: int):
    """Partitions of n as non-increasing lists, generated iteratively."""
    if n == 0:
        yield []
        return
    part = [n]
    while True:
        yield list(part)
        # rightmost part that can be decreased
        ones = 0
        while part and part[-1] == 1:
            part.pop()
            ones += 1
        if not part:
            return
        k = part.pop() - 1
        remaining = ones + 1
        part.append(k)
        while remaining > 0:
            take = min(k, remaining)
            part.append(take)
            remaining -= take


def cycle_index(n: int, values: Sequence[float]) -> float:
    """``Z(S_n; t_1, ..., t_n) = sum_lambda prod_j t_j^{m_j} / (j^{m_j} m_j!)``."""
    if n < 1:
        raise InvalidParameter("n must be at least 1")
    if n > MAX_CYCLE_ORDER:
        raise OrderTooLarge(f"cycle index limited to n <= {MAX_CYCLE_ORDER}")
    t = list(values)
    if len(t) < n:
        raise InvalidParameter(f"need {n} values, got {len(t)}")
    total = 0.0
    for lam in integer_partitions(n):
        counts: Dict[int, int] = {}
        for j in lam:
            counts[j] = counts.get(j, 0) + 1
        denom = 1
        term = 1.0
        for j, mj in counts.items():
            denom *= j ** mj * math.factorial(mj)
            term *= t[j - 1] ** mj
        total += term / denom
    return total


# --------------------------------------------------------------------------
# Phi_n


@dataclass(frozen=True)
class PhiTable:
    n: int
    a: float
    value: float
    route: str


def _phi_closed(n: int, a: float) -> float:
    if n == 1:
        return 2.0 * a
    if n == 2:
        return 2.0 * a * a if a <= 0.5 else 0.5 - 2.0 * a + 4.0 * a * a
    if n == 3:
        return 0.0 if a <= 0.5 else (2.0 * a - 1.0) ** 3
    if n == 4:
        if a <= 0.5:
            return 0.0
        if a <= 1.0:
            return (a - 0.5) ** 2 * (1.0 - 20.0 * a + 12.0 * a * a)
        return 17.0 / 4 - 22.0 * a + 48.0 * a ** 2 - 48.0 * a ** 3 + 16.0 * a ** 4
    raise UnsupportedOrder(f"no closed form for Phi_{n}; use the cycle-index route")


def phi(n: int, a: float, route: str = "closed", m: int = DEFAULT_GRID) -> PhiTable:
    """Limiting n-th factorial moment ``Phi_n(a)``.

    The cycle-index route evaluates
    ``(-1)^n n! a^n Z(S_n; -2 f_1(r), ..., -2 f_n(r))`` with ``r = 1/(2a)``,
    using closed-form ``f_nu`` for nu <= 4 and the numeric trace beyond.
    """
    if not (a > 0 and math.isfinite(a)):
        raise InvalidSpacing(f"spacing must be positive, got {a}")
    if route == "closed":
        return PhiTable(n, a, _phi_closed(n, a), route)
    if route != "cycle-index":
        raise InvalidParameter(f"unknown route {route!r}")
    if n > MAX_CYCLE_ORDER:
        raise OrderTooLarge(f"cycle-index route limited to n <= {MAX_CYCLE_ORDER}")
    r = 0.5 / a
    t = [-2.0 * f_nu(nu, r, "closed" if nu <= 4 else "numeric", m) for nu in range(1, n + 1)]
    val = (-1) ** n * math.factorial(n) * a ** n * cycle_index(n, t)
    return PhiTable(n, a, val, route)


# --------------------------------------------------------------------------
# raw moments and the Hamburger determinant

# first a at which the limiting r-th raw moment is established
MOMENT_DOMAIN = {0: 0.0, 1: 0.0, 2: 0.5, 3: 0.5, 4: 1.0}


def stirling2(r: int, k: int) -> int:
    """Stirling numbers of the second kind."""
    return sum((-1) ** (k - j) * math.comb(k, j) * j ** r for j in range(k + 1)) // math.factorial(k)


@dataclass(frozen=True)
class MomentVector:
    a: float
    values: Tuple[float, float, float, float, float]
    valid: Tuple[bool, bool, bool, bool, bool]
    override: bool = False

    @property
    def tainted(self) -> bool:
        return self.override and not all(self.valid)

    def __getitem__(self, r: int) -> float:
        if not self.valid[r] and not self.override:
            raise DomainViolation(f"m^{r} is only established for a > {MOMENT_DOMAIN[r]}, got a = {self.a}")
        return self.values[r]

    def as_list(self) -> List[float]:
        return [self[r] for r in range(5)]


def raw_moments(a: float, override: bool = False) -> MomentVector:
    """Limiting raw moments ``m^r = sum_k S(r, k) Phi_k(a)``, r = 0..4."""
    if not (a > 0 and math.isfinite(a)):
        raise InvalidSpacing(f"spacing must be positive, got {a}")
    ph = [1.0] + [_phi_closed(k, a) for k in range(1, 5)]
    vals = [1.0]
    for r in range(1, 5):
        vals.append(math.fsum(stirling2(r, k) * ph[k] for k in range(1, r + 1)))
    valid = tuple(a > MOMENT_DOMAIN[r] or MOMENT_DOMAIN[r] == 0.0 for r in range(5))
    return MomentVector(a, tuple(vals), valid, override)


def hamburger_det(m) -> float:
    """``det [[m0, m1, m2], [m1, m2, m3], [m2, m3, m4]]``."""
    v = m.as_list() if isinstance(m, MomentVector) else [float(x) for x in m]
    if len(v) != 5:
        raise InvalidParameter("need five moments m^0..m^4")
    m0, m1, m2, m3, m4 = v
    # cofactor expansion; avoids pivoting noise for the polynomial identities
    return (m0 * (m2 * m4 - m3 * m3) - m1 * (m1 * m4 - m3 * m2) + m2 * (m1 * m3 - m2 * m2))


# --------------------------------------------------------------------------
# report


@dataclass(frozen=True)
class ObstructionReport:
    a: float
    kind: str  # "none", "factorial", "hamburger"
    witness: float
    detail: str
    values: Dict[str, float] = field(default_factory=dict)

    @property
    def obstructed(self) -> bool:
        return self.kind != "none"

    def as_dict(self):
        return {"a": self.a, "kind": self.kind, "witness": self.witness, "detail": self.detail,
                "values": dict(self.values)}


def obstruction_report(a: float) -> ObstructionReport:
    if not (a > 0 and math.isfinite(a)):
        raise InvalidSpacing(f"spacing must be positive, got {a}")
    phis = {f"Phi{n}": _phi_closed(n, a) for n in range(1, 5)}
    if a <= 0.5:
        return ObstructionReport(a, "none", 0.0, "limits are consistent with a counting variable", phis)
    if a <= 1.0:
        w = phis["Phi4"]
        return ObstructionReport(a, "factorial", w, "4th factorial moment limit is negative", phis)
    m = raw_moments(a)
    w = hamburger_det(m)
    vals = dict(phis)
    vals.update({f"m{r}": m[r] for r in range(5)})
    return ObstructionReport(a, "hamburger", w, "Hankel determinant of limiting moments is negative", vals)


# --------------------------------------------------------------------------
# finite-l Monte Carlo


@dataclass(frozen=True)
class FactorialMomentEstimate:
    order: int
    estimate: float
    stderr: float
    exact: float
    limit: float


def two_site_factorial_moments(a: float, odd: int, replicas: int, seed: int = 0,
                               orders: Sequence[int] = (1, 2)) -> List[FactorialMomentEstimate]:
    """Sample ``X_l = #{0, l}`` under the discrete sine process, ``l = odd * a``.

    Restricting the process to two sites gives the 2x2 kernel
    ``[[a, a S(l)], [a S(l), a]]``.  Returns factorial-moment estimates with
    their finite-l exact values and the l -> infinity limits Phi_n(a).
    """
    if odd < 1 or odd % 2 == 0:
        raise InvalidParameter("odd must be a positive odd integer")
    ell = odd * a
    s = sinc(ell)
    K = np.array([[a, a * s], [a * s, a]])
    sampler = SpectralDPP(K)
    counts = np.array([sampler.sample(RngState(seed, r)).size for r in range(replicas)], dtype=float)
    out = []
    exact = {1: 2.0 * a, 2: 2.0 * a * a * (1.0 - s * s)}
    for n in orders:
        ff = np.ones_like(counts)
        for i in range(n):
            ff *= counts - i
        out.append(FactorialMomentEstimate(n, float(ff.mean()), float(ff.std(ddof=1) / math.sqrt(replicas)),
                                           exact.get(n, 0.0), _phi_closed(n, a)))
    return out
