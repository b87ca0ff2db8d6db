"""Sinc function, sine-kernel determinants and analytic correlation densities.

Four named processes are supported, plus a user supplied table:

* ``PoissonContinuous(lam)``  -- rho_n = lam**n dx
* ``SineContinuous``          -- rho_n = det[S(x_i - x_j)] dx
* ``PoissonLattice(a, lam)``  -- atoms (a*lam)**n on (aZ)^n
* ``SineLattice(a)``          -- atoms a**n det[S(k_i - k_j)] on (aZ)^n, 0 < a <= 1
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidIntensity, InvalidParameter, InvalidSpacing, OffLattice, SpacingOutOfRange

LATTICE_SNAP = 1e-12
_TAYLOR_CUTOFF = 1e-4


def sinc(x):
    """Normalized sinc, ``sin(pi x) / (pi x)`` with ``sinc(0) == 1``.

    Accepts scalars or arrays.  The argument is reduced modulo 1 before the
    sine is taken so that the zeros at nonzero integers are exact.
    """
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if np.isnan(arr).any():
        raise InvalidParameter("sinc received NaN")
    n = np.rint(arr)
    frac = arr - n
    sign = np.where(np.fmod(n, 2.0) == 0.0, 1.0, -1.0)
    small = np.abs(arr) < _TAYLOR_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(sign * np.sin(np.pi * frac) / (np.pi * arr), dtype=float)
    if small.any():
        z = (np.pi * arr[small]) ** 2
        out[small] = 1.0 - z / 6.0 * (1.0 - z / 20.0 * (1.0 - z / 42.0))
    if np.ndim(x) == 0:
        return float(out[0])
    return out.reshape(np.shape(x))


def sine_matrix(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float).ravel()
    return sinc(pts[:, None] - pts[None, :])


def sine_det(points) -> float:
    """``det[S(x_i - x_j)]`` for the given points (1 for a single point)."""
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise DimensionMismatch("sine_det needs at least one point")
    if pts.size == 1:
        return 1.0
    return float(np.linalg.det(sine_matrix(pts)))


class Kind(enum.Enum):
    POISSON_CONTINUOUS = "PoissonContinuous"
    SINE_CONTINUOUS = "SineContinuous"
    POISSON_LATTICE = "PoissonLattice"
    SINE_LATTICE = "SineLattice"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class LatticeSpec:
    a: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise InvalidSpacing(f"lattice spacing must be positive, got {self.a}")

    def index(self, x: float) -> int:
        """Integer index of ``x`` on aZ, or OffLattice."""
        i = round(x / self.a)
        if abs(x - self.a * i) > LATTICE_SNAP * self.a:
            raise OffLattice(f"{x!r} is not a point of {self.a}Z")
        return int(i)

    def indices(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        idx = np.rint(xs / self.a)
        if np.any(np.abs(xs - self.a * idx) > LATTICE_SNAP * self.a):
            raise OffLattice(f"points are not on {self.a}Z")
        return idx.astype(np.int64)


@dataclass(frozen=True)
class CorrelationStructure:
    """An analytic family of n-level correlation measures.

    Build instances with the module-level constructors (:func:`poisson`,
    :func:`sine`, :func:`poisson_lattice`, :func:`sine_lattice`,
    :func:`custom_density`, :func:`custom_atoms`).
    """

    kind: Kind
    lam: float = 1.0
    a: Optional[float] = None
    density: Optional[Callable[[np.ndarray], float]] = field(default=None, compare=False)
    atoms: Optional[Mapping[tuple, float]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind in (Kind.POISSON_CONTINUOUS, Kind.POISSON_LATTICE):
            if not (self.lam > 0 and math.isfinite(self.lam)):
                raise InvalidIntensity(f"intensity must be positive, got {self.lam}")
        if self.is_lattice:
            LatticeSpec(self.a)
        if self.kind is Kind.SINE_LATTICE and self.a > 1:
            raise SpacingOutOfRange("the discrete sine process needs 0 < a <= 1")
        if self.kind is Kind.CUSTOM and (self.density is None) == (self.atoms is None):
            raise InvalidParameter("custom structure needs exactly one of density or atoms")

    @property
    def is_lattice(self) -> bool:
        if self.kind is Kind.CUSTOM:
            return self.atoms is not None
        return self.kind in (Kind.POISSON_LATTICE, Kind.SINE_LATTICE)

    @property
    def lattice(self) -> LatticeSpec:
        if not self.is_lattice:
            raise InvalidParameter(f"{self.kind.value} is not a lattice structure")
        return LatticeSpec(self.a)

    def density_bound(self, n: int) -> float:
        """Upper bound on the density (or atom mass) of rho_n."""
        if self.kind is Kind.POISSON_CONTINUOUS:
            return self.lam ** n
        if self.kind is Kind.SINE_CONTINUOUS:
            return 1.0
        if self.kind is Kind.POISSON_LATTICE:
            return (self.a * self.lam) ** n
        if self.kind is Kind.SINE_LATTICE:
            return self.a ** n
        if self.atoms is not None:
            return max((abs(v) for k, v in self.atoms.items() if len(k) == n), default=0.0)
        return math.inf

    def describe(self) -> str:
        if self.kind is Kind.POISSON_CONTINUOUS:
            return f"PoissonContinuous(lam={self.lam:g})"
        if self.kind is Kind.SINE_CONTINUOUS:
            return "SineContinuous"
        if self.kind is Kind.POISSON_LATTICE:
            return f"PoissonLattice(a={self.a:g}, lam={self.lam:g})"
        if self.kind is Kind.SINE_LATTICE:
            return f"SineLattice(a={self.a:g})"
        return "Custom"


def poisson(lam: float = 1.0) -> CorrelationStructure:
    return CorrelationStructure(Kind.POISSON_CONTINUOUS, lam=lam)


def sine() -> CorrelationStructure:
    return CorrelationStructure(Kind.SINE_CONTINUOUS)


def poisson_lattice(a: float, lam: float = 1.0) -> CorrelationStructure:
    return CorrelationStructure(Kind.POISSON_LATTICE, lam=lam, a=a)


def sine_lattice(a: float) -> CorrelationStructure:
    return CorrelationStructure(Kind.SINE_LATTICE, a=a)


def custom_density(density: Callable[[np.ndarray], float]) -> CorrelationStructure:
    return CorrelationStructure(Kind.CUSTOM, density=density)


def custom_atoms(a: float, atoms: Mapping[Sequence[int], float]) -> CorrelationStructure:
    """Atom table keyed by tuples of integer site indices (position = a * index)."""
    table = {tuple(int(i) for i in k): float(v) for k, v in atoms.items()}
    return CorrelationStructure(Kind.CUSTOM, a=a, atoms=table)


def correlation_value(structure: CorrelationStructure, points) -> float:
    """Density (continuous) or atom mass (lattice) of rho_n at ``points``."""
    pts = np.asarray(points, dtype=float).ravel()
    n = pts.size
    if n == 0:
        raise DimensionMismatch("correlation_value needs at least one point")
    kind = structure.kind
    if kind is Kind.POISSON_CONTINUOUS:
        return structure.lam ** n
    if kind is Kind.SINE_CONTINUOUS:
        return sine_det(pts)
    if kind is Kind.CUSTOM and structure.density is not None:
        return float(structure.density(pts))

    idx = structure.lattice.indices(pts)
    a = structure.a
    if kind is Kind.POISSON_LATTICE:
        return (a * structure.lam) ** n
    if kind is Kind.SINE_LATTICE:
        if n == 1:
            return a
        # kernel entries from integer gaps, not from the float positions
        gaps = a * (idx[:, None] - idx[None, :]).astype(float)
        return a ** n * float(np.linalg.det(sinc(gaps)))
    return structure.atoms.get(tuple(int(i) for i in idx), 0.0)


def atom_mass(structure: CorrelationStructure, points) -> float:
    """Atom mass of a lattice structure at ``points``; 0 off the lattice."""
    if not structure.is_lattice:
        raise InvalidParameter(f"{structure.describe()} has no atoms")
    try:
        return correlation_value(structure, points)
    except OffLattice:
        return 0.0
