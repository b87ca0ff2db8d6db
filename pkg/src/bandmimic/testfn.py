"""Band-limited test functions evaluable in position and frequency domains.

Fourier convention: ``fhat(xi) = integral f(x) exp(-2 pi i x xi) dx``.

Every one-dimensional :class:`Factor` carries a certified bandwidth ``b``
(``fhat`` vanishes outside ``[-b, b]``) and a decay constant ``C`` with
``|f(x)| <= C / (1 + x**2)``.  Products of factors give the n-dimensional
:class:`TestFunction` used by the estimators and the mimicry verifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .errors import BandwidthExceeded, BelowNyquist, DimensionMismatch, InvalidEpsilon, InvalidParameter, NotOddMultiple, QuadratureFailure
from .kernels import LATTICE_SNAP, LatticeSpec, sinc

_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_MOLLIFIER_PANELS = 4


def _mollifier(s):
    """exp(-1/(1-t^2)) mapped onto (0, 1) and centred at 1/2."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (4.0 * si * (1.0 - si)))
    return out


def _mollifier_integral(t):
    """integral_0^t of the mollifier, composite Gauss-Legendre, t in [0, 1/2]."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    total = np.zeros_like(t)
    for k in range(_MOLLIFIER_PANELS):
        lo = t * k / _MOLLIFIER_PANELS
        half = 0.5 * t / _MOLLIFIER_PANELS
        nodes = lo[:, None] + half[:, None] * (_GL_X + 1.0)
        total += half * (_mollifier(nodes) @ _GL_W)
    return total


_MOLLIFIER_MASS = 2.0 * float(_mollifier_integral(0.5)[0])


def _transition(t):
    """Smooth step F on [0, 1] with F(t) + F(1 - t) = 1 exactly."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    low = t <= 0.5
    out = np.empty_like(t)
    if low.any():
        out[low] = _mollifier_integral(t[low]) / _MOLLIFIER_MASS
    if (~low).any():
        out[~low] = 1.0 - _mollifier_integral(1.0 - t[~low]) / _MOLLIFIER_MASS
    return out


class BumpFamily:
    """Smooth even bump ``beta_eps``: 1 on ``|xi| <= 1/2 - eps``, 0 beyond ``1/2 + eps``.

    Integer translates form a partition of unity, so the transform vanishes
    at every nonzero integer.
    """

    def __init__(self, eps: float):
        if not (0.0 < eps < 0.5):
            raise InvalidEpsilon(f"eps must lie in (0, 1/2), got {eps}")
        self.eps = float(eps)

    def __repr__(self):
        return f"BumpFamily(eps={self.eps!r})"

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        t = (self.eps - (np.abs(xi) - 0.5)) / (2.0 * self.eps)
        out = _transition(t.ravel()).reshape(xi.shape)
        return float(out) if out.ndim == 0 else out

    @property
    def support(self) -> float:
        return 0.5 + self.eps

    def _odd_part(self, u):
        # g(u) = 1/2 - beta(1/2 + u) for u in [0, eps]
        return 0.5 - _mollifier_integral((self.eps - u) / (2.0 * self.eps)) / _MOLLIFIER_MASS

    @cached_property
    def decay_constant(self) -> float:
        # |beta_hat(y)| (1 + y^2) <= ||beta||_1 + ||beta''||_1 / (4 pi^2)
        f2_l1 = 2.0 * math.exp(-1.0) / _MOLLIFIER_MASS
        return 1.0 + f2_l1 / self.eps / (4.0 * math.pi ** 2)

    def transform(self, x):
        """Vectorised ``beta_hat(x)``, real and even.

        Uses the odd symmetry of ``beta`` about 1/2, which factors out
        ``sin(pi x)``; the remaining integral over ``[0, eps]`` is done by
        composite Gauss-Legendre with panel count scaled to the oscillation.
        """
        x = np.asarray(x, dtype=float)
        flat = np.abs(x.ravel())
        out = np.empty_like(flat)
        eps = self.eps
        for start in range(0, flat.size, 4096):
            xs = flat[start:start + 4096]
            panels = max(4, int(math.ceil(4.0 * eps * (xs.max(initial=0.0) + 1.0))))
            edges = np.linspace(0.0, eps, panels + 1)
            half = 0.5 * (edges[1] - edges[0])
            nodes = (edges[:-1, None] + half * (_GL16_X + 1.0)).ravel()
            weights = np.tile(_GL16_W * half, panels)
            g = self._odd_part(nodes) * weights
            inner = np.sin(2.0 * np.pi * np.outer(xs, nodes)) @ g
            with np.errstate(divide="ignore", invalid="ignore"):
                head = np.cos(2.0 * np.pi * eps * xs) / (np.pi * xs)
                s = sinc(xs) * np.pi * xs  # sin(pi x) with exact integer zeros
                val = s * (head + 4.0 * inner)
            val[xs == 0.0] = 1.0
            out[start:start + 4096] = val
        out = out.reshape(x.shape)
        return float(out) if out.ndim == 0 else out


def make_bump(eps: float) -> BumpFamily:
    return BumpFamily(eps)


def bump_transform(b: BumpFamily, x: float, tol: float = 1e-10) -> float:
    """``beta_hat(x)`` by adaptive oscillatory quadrature of the bump itself."""
    x = abs(float(x))
    omega = 2.0 * np.pi * x
    flat_end = 0.5 - b.eps
    if x == 0.0:
        flat = flat_end
    else:
        flat = math.sin(omega * flat_end) / omega
    val, err = integrate.quad(b, flat_end, b.support, weight="cos", wvar=omega, epsabs=tol / 10, epsrel=0.0, limit=2000)
    if not err <= tol:
        raise QuadratureFailure(f"bump transform at x={x}: error estimate {err:.2e}")
    return 2.0 * (flat + val)


def choose_epsilon(a: float, B: float) -> float:
    """Largest safe bump width for reconstruction at spacing ``a``, bandwidth ``B``."""
    if not a * B > 0.5:
        raise BelowNyquist(f"B={B} is not above the Nyquist bandwidth 1/(2a)={0.5 / a}")
    return min(0.25, (a * B - 0.5) / 2.0) * (1.0 - 1e-6)


class Factor:
    """A certified one-dimensional factor.

    Parameters
    ----------
    position, frequency : callable
        Vectorised evaluators of ``f`` and ``fhat``.
    bandwidth : float
        ``fhat`` vanishes outside ``[-bandwidth, bandwidth]`` (``inf`` if not
        band-limited).
    decay : float
        ``|f(x)| <= decay / (1 + x**2)``.
    """

    name = "factor"

    def __init__(self, position: Callable, frequency: Callable, bandwidth: float, decay: float,
                 breakpoints: Sequence[float] = (), name: Optional[str] = None):
        self._position = position
        self._frequency = frequency
        self.bandwidth = float(bandwidth)
        self.decay = float(decay)
        self.breakpoints = tuple(sorted(set(float(p) for p in breakpoints)))
        if name:
            self.name = name

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"

    def __call__(self, x):
        return self._position(x)

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        val = np.asarray(self._frequency(xi))
        if np.isfinite(self.bandwidth):
            val = np.where(np.abs(xi) > self.bandwidth, 0.0, val)
        return val.item() if val.ndim == 0 else val

    @property
    def cosine_tail(self):
        """Exact far-field form ``sum_j c_j cos(2 pi w_j x) / x**2``, or None."""
        return None

    @property
    def real_spectrum(self) -> bool:
        return True

    def tail_integral_bound(self, X: float) -> float:
        """Bound on ``integral_{|x| > X} |f|``."""
        return 2.0 * self.decay * (math.pi / 2 - math.atan(max(X, 0.0)))

    def tail_sum_bound(self, a: float, X: float) -> float:
        """Bound on ``sum_{|am| > X} |f(am)|``."""
        X = max(X - a, 0.0)
        return 2.0 * self.decay / a * (math.pi / 2 - math.atan(X))

    def total_mass_bound(self) -> float:
        return math.pi * self.decay

    def total_sum_bound(self, a: float) -> float:
        return self.decay * (1.0 + math.pi / a)


class Fejer(Factor):
    """``s S(s x)^2``, optionally modulated by ``2 cos(2 pi c x)``.

    Transform: triangle ``(1 - |xi|/s)_+`` (or two triangles centred at
    ``+-c``).  Certified bandwidth ``c + s``.
    """

    def __init__(self, s: float, c: float = 0.0):
        if not s > 0:
            raise InvalidParameter(f"Fejer scale must be positive, got {s}")
        if c < 0:
            raise InvalidParameter(f"modulation must be nonnegative, got {c}")
        self.s = float(s)
        self.c = float(c)
        self.bandwidth = self.c + self.s
        base = self.s + 1.0 / (math.pi ** 2 * self.s)
        self.decay = base if self.c == 0 else 2.0 * base
        if self.c == 0:
            pts = (-self.s, 0.0, self.s)
        else:
            pts = (-self.c - self.s, -self.c, -self.c + self.s, self.c - self.s, self.c, self.c + self.s)
        self.breakpoints = tuple(sorted(set(pts)))
        self.name = f"fejer(s={self.s:g}, c={self.c:g})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = self.s * sinc(self.s * x) ** 2
        if self.c:
            val = 2.0 * np.cos(2.0 * np.pi * self.c * x) * val
        return float(val) if np.ndim(val) == 0 else val

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        tri = lambda u: np.maximum(1.0 - np.abs(u) / self.s, 0.0)
        val = tri(xi) if self.c == 0 else tri(xi - self.c) + tri(xi + self.c)
        return float(val) if val.ndim == 0 else val

    @property
    def cosine_tail(self):
        k = 1.0 / (2.0 * math.pi ** 2 * self.s)
        if self.c == 0:
            return ((k, 0.0), (-k, self.s))
        return ((2.0 * k, self.c), (-k, self.c + self.s), (-k, abs(self.c - self.s)))


def make_fejer(B: float, s: float, c: float = 0.0) -> Fejer:
    """Fejer factor of scale ``s`` and modulation ``c``, checked against bandwidth ``B``."""
    if not 0 < s:
        raise InvalidParameter(f"Fejer scale must be positive, got {s}")
    if c + s > B * (1 + 1e-12):
        raise BandwidthExceeded(f"c + s = {c + s} exceeds bandwidth {B}")
    return Fejer(s, c)


class HFactor(Factor):
    """``h_{a,l}(x) = S(x/a) + S((x - l)/a)`` with ``l`` an odd multiple of ``a``.

    Vanishes on aZ except at 0 and ``l`` where it equals 1.
    """

    def __init__(self, a: float, ell: float):
        LatticeSpec(a)
        q = ell / a
        j = round(q)
        if abs(q - j) > LATTICE_SNAP * max(1.0, abs(q)) or j < 1 or j % 2 == 0:
            raise NotOddMultiple(f"l={ell} is not a positive odd multiple of a={a}")
        self.a = float(a)
        self.odd = int(j)
        self.ell = self.odd * self.a
        self.bandwidth = 0.5 / self.a
        self.breakpoints = (-self.bandwidth, self.bandwidth)
        L = self.ell
        self.decay = max(2.0 * (1.0 + 4.0 * L * L), 2.0 * L * self.a * (1.0 + 1.0 / (4.0 * L * L)) / math.pi ** 2)
        self.name = f"h(a={self.a:g}, l={self.ell:g})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = sinc(x / self.a) + sinc((x - self.ell) / self.a)
        return float(val) if np.ndim(val) == 0 else val

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        val = self.a * (1.0 + np.exp(-2j * np.pi * self.ell * xi))
        val = np.where(np.abs(xi) <= self.bandwidth, val, 0.0)
        return complex(val) if val.ndim == 0 else val

    @property
    def real_spectrum(self) -> bool:
        return False

    def exact_lattice_sum(self, b: float):
        """``sum_m h(b m)`` when bZ is inside aZ (only the sites 0 and l survive)."""
        q = b / self.a
        if abs(q - round(q)) > LATTICE_SNAP * max(1.0, q) or round(q) < 1:
            return None
        return 1.0 + (1.0 if self.odd % round(q) == 0 else 0.0)


def make_h_al(a: float, ell: float) -> HFactor:
    return HFactor(a, ell)


class Zero(Factor):
    """The identically zero factor."""

    def __init__(self):
        super().__init__(lambda x: np.zeros(np.shape(x)) if np.ndim(x) else 0.0,
                         lambda xi: np.zeros(np.shape(xi)) if np.ndim(xi) else 0.0, 0.0, 0.0, name="zero")

    @property
    def cosine_tail(self):
        return ()

    def exact_lattice_sum(self, b: float):
        return 0.0


class Gaussian(Factor):
    """``exp(-pi (x/t)^2)``; rapidly decaying but not band-limited."""

    def __init__(self, t: float = 1.0):
        if not t > 0:
            raise InvalidParameter("Gaussian width must be positive")
        self.t = float(t)
        self.bandwidth = math.inf
        u = self.t ** 2 / math.pi
        self.decay = u * math.exp(-1.0 + 1.0 / u) if u > 1.0 else 1.0
        self.breakpoints = ()
        self.name = f"gaussian(t={self.t:g})"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = np.exp(-np.pi * (x / self.t) ** 2)
        return float(val) if val.ndim == 0 else val

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        val = self.t * np.exp(-np.pi * (self.t * xi) ** 2)
        return float(val) if val.ndim == 0 else val

    def tail_integral_bound(self, X):
        return self.t * float(special.erfc(math.sqrt(math.pi) * max(X, 0.0) / self.t))

    def tail_sum_bound(self, a, X):
        return self.tail_integral_bound(max(X - a, 0.0)) / a

    def spectral_tail_bound(self, X: float) -> float:
        """Bound on ``integral_{|xi| > X} |fhat|``."""
        return float(special.erfc(math.sqrt(math.pi) * self.t * max(X, 0.0)))


class BumpTransformFactor(Factor):
    """``beta_hat((x - k)/a)``: the lattice-site indicator used for reconstruction."""

    def __init__(self, bump: BumpFamily, a: float, k: float = 0.0):
        self.bump = bump
        self.a = float(a)
        self.k = float(k)
        self.bandwidth = bump.support / self.a
        e = bump.eps
        self.breakpoints = tuple(sorted({s * (0.5 + d * e) / self.a for s in (-1, 1) for d in (-1, 1)}))
        self.decay = 2.0 * (1.0 + self.k ** 2) * max(1.0, self.a ** 2) * bump.decay_constant
        self.name = f"bump_hat(eps={e:g}, a={self.a:g}, k={self.k:g})"

    def __call__(self, x):
        return self.bump.transform((np.asarray(x, dtype=float) - self.k) / self.a)

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        val = self.a * np.exp(-2j * np.pi * self.k * xi) * self.bump(self.a * xi)
        return complex(val) if val.ndim == 0 else val

    @property
    def real_spectrum(self) -> bool:
        return self.k == 0.0


@dataclass(frozen=True)
class TestFunction:
    """Product ``eta(x) = f_1(x_1) ... f_n(x_n)`` of certified factors."""

    __test__ = False  # not a pytest class

    factors: tuple

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def bandwidths(self) -> tuple:
        return tuple(f.bandwidth for f in self.factors)

    @property
    def decay(self) -> float:
        return math.prod(f.decay for f in self.factors)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} coordinates, got {x.shape[-1]}")
        out = np.ones(x.shape[:-1])
        for i, f in enumerate(self.factors):
            out = out * f(x[..., i])
        return float(out) if out.ndim == 0 else out

    def ft(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dim:
            raise DimensionMismatch(f"expected {self.dim} frequencies, got {xi.shape[-1]}")
        out = np.ones(xi.shape[:-1], dtype=complex)
        for i, f in enumerate(self.factors):
            out = out * f.ft(xi[..., i])
        if all(f.real_spectrum for f in self.factors):
            out = out.real
        return out.item() if out.ndim == 0 else out

    def describe(self) -> str:
        return " x ".join(f.name for f in self.factors)


def product_test(factors: Sequence[Factor]) -> TestFunction:
    if len(factors) < 1:
        raise DimensionMismatch("a test function needs at least one factor")
    return TestFunction(tuple(factors))


def interpolation_radius(decay: float, a: float, tol: float = 1e-8) -> float:
    """Table radius whose dropped samples contribute less than ``tol``."""
    # sum_{|k| > R} C/(1 + k^2) <= 2C/R for lattice spacing >= 1; scale by 1/a otherwise
    return max(a, 2.0 * decay * max(1.0, 1.0 / a) / tol)


def sample_table(f: Callable, a: float, radius: float) -> dict:
    m = int(math.floor(radius / a))
    ks = a * np.arange(-m, m + 1)
    return dict(zip(ks.tolist(), np.asarray(f(ks), dtype=float).tolist()))


def shannon_interpolate(samples: Mapping[float, float], a: float, x) -> float:
    """Whittaker-Shannon sum ``sum_k samples[k] S((x - k)/a)`` over the table."""
    LatticeSpec(a)
    if not samples:
        return 0.0 if np.ndim(x) == 0 else np.zeros(np.shape(x))
    ks = np.fromiter(samples.keys(), dtype=float)
    vs = np.fromiter(samples.values(), dtype=float)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty(flat.size)
    for i, xv in enumerate(flat):
        out[i] = float(np.dot(vs, sinc((xv - ks) / a)))
    return float(out[0]) if x.ndim == 0 else out.reshape(x.shape)
