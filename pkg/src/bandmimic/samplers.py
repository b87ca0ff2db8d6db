"""Random configurations for the four named point processes.

Every sampler is a pure function of its parameters and an :class:`RngState`;
replica ``r`` of a run seeded with ``seed`` always uses ``RngState(seed, r)``,
so serial and parallel runs produce identical output.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .errors import (InvalidIntensity, InvalidParameter, InvalidSpacing, NotAKernel, ResolutionTooCoarse,
                     SpacingOutOfRange, WindowTooLarge)
from .kernels import LATTICE_SNAP, sinc

log = logging.getLogger(__name__)

EIGEN_TOL = 1e-9
MAX_CONTINUOUS_SITES = 10_000


@dataclass(frozen=True)
class RngState:
    seed: int = 0
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngState":
        return RngState(self.seed, stream)


@dataclass(frozen=True, eq=False)
class Configuration:
    """Finite multiset of points observed in ``window``.

    ``positions`` are sorted and distinct; ``multiplicities`` holds the
    count at each.  Lattice configurations also carry integer ``indices``
    with ``positions == a * indices``.
    """

    window: Tuple[float, float]
    positions: np.ndarray
    multiplicities: np.ndarray
    a: Optional[float] = None
    indices: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        lo, hi = self.window
        if self.positions.size and (self.positions[0] < lo - 1e-12 or self.positions[-1] > hi + 1e-12):
            raise InvalidParameter("configuration has points outside its window")
        if self.multiplicities.size and self.multiplicities.min() < 1:
            raise InvalidParameter("multiplicities must be >= 1")

    @classmethod
    def empty(cls, window, a=None):
        idx = np.zeros(0, dtype=np.int64) if a is not None else None
        return cls(tuple(window), np.zeros(0), np.zeros(0, dtype=np.int64), a, idx)

    @classmethod
    def from_points(cls, points, window=None, a=None):
        pts = np.sort(np.asarray(points, dtype=float).ravel())
        if window is None:
            window = (float(pts[0]), float(pts[-1])) if pts.size else (0.0, 0.0)
        if a is not None:
            idx = kernels.LatticeSpec(a).indices(pts)
            uniq, counts = np.unique(idx, return_counts=True)
            return cls(tuple(window), a * uniq.astype(float), counts.astype(np.int64), a, uniq)
        uniq, counts = np.unique(pts, return_counts=True)
        return cls(tuple(window), uniq, counts.astype(np.int64))

    @property
    def count(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def measure(self) -> float:
        return self.window[1] - self.window[0]

    def expanded(self) -> np.ndarray:
        """Positions repeated by multiplicity."""
        return np.repeat(self.positions, self.multiplicities)

    def count_in(self, points) -> int:
        """``#_V(u)`` for a finite set ``V`` of positions."""
        pts = np.asarray(points, dtype=float)
        hit = np.isin(np.round(self.positions, 12), np.round(pts, 12))
        return int(self.multiplicities[hit].sum())

    def to_rows(self):
        return list(zip(self.positions.tolist(), self.multiplicities.tolist()))


def _check_window(window) -> Tuple[float, float]:
    lo, hi = (float(w) for w in window)
    if not hi >= lo:
        raise InvalidParameter(f"window [{lo}, {hi}] is reversed")
    return lo, hi


def _lattice_range(a: float, lo: float, hi: float) -> np.ndarray:
    first = math.ceil(lo / a - LATTICE_SNAP)
    last = math.floor(hi / a + LATTICE_SNAP)
    return np.arange(first, last + 1, dtype=np.int64)


def sample_poisson(lam: float, window, rng: RngState) -> Configuration:
    if not lam > 0:
        raise InvalidIntensity(f"intensity must be positive, got {lam}")
    lo, hi = _check_window(window)
    if hi == lo:
        return Configuration.empty((lo, hi))
    g = rng.generator()
    n = g.poisson(lam * (hi - lo))
    pts = np.sort(g.uniform(lo, hi, size=n))
    return Configuration((lo, hi), pts, np.ones(n, dtype=np.int64))


def sample_discrete_poisson(a: float, lam: float, window, rng: RngState) -> Configuration:
    """Independent Poisson(a*lam) multiplicities at each site of aZ in the window."""
    if not a > 0:
        raise InvalidSpacing(f"spacing must be positive, got {a}")
    if not lam > 0:
        raise InvalidIntensity(f"intensity must be positive, got {lam}")
    lo, hi = _check_window(window)
    sites = _lattice_range(a, lo, hi)
    counts = rng.generator().poisson(a * lam, size=sites.size)
    keep = counts > 0
    idx = sites[keep]
    return Configuration((lo, hi), a * idx.astype(float), counts[keep].astype(np.int64), a, idx)


class SpectralDPP:
    """Determinantal sampler for a fixed symmetric kernel.

    The eigendecomposition is computed once; each draw keeps eigenvector
    ``i`` with probability ``lambda_i`` and then samples the resulting
    projection process point by point (Gram-Schmidt form of the chain rule,
    O(N k^2) per draw).
    """

    def __init__(self, K):
        K = np.asarray(K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise NotAKernel("kernel must be a square matrix")
        if not np.allclose(K, K.T, atol=1e-12):
            raise NotAKernel("kernel must be symmetric")
        self.size = K.shape[0]
        if self.size == 0:
            self.eigvals = np.zeros(0)
            self.eigvecs = np.zeros((0, 0))
            return
        vals, vecs = np.linalg.eigh(K)
        if vals.min() < -EIGEN_TOL or vals.max() > 1.0 + EIGEN_TOL:
            raise NotAKernel(f"eigenvalues outside [0, 1]: [{vals.min():.3g}, {vals.max():.3g}]")
        clipped = np.clip(vals, 0.0, 1.0)
        if np.any(clipped != vals):
            log.debug("clipped %d eigenvalues by at most %.2e", int(np.sum(clipped != vals)),
                      float(np.max(np.abs(clipped - vals))))
        self.eigvals = clipped
        self.eigvecs = vecs

    def sample(self, rng: RngState) -> np.ndarray:
        if self.size == 0:
            return np.zeros(0, dtype=np.int64)
        g = rng.generator()
        keep = g.random(self.eigvals.size) < self.eigvals
        return self._sample_projection(self.eigvecs[:, keep], g)

    @staticmethod
    def _sample_projection(V: np.ndarray, g: np.random.Generator) -> np.ndarray:
        n, k = V.shape
        if k == 0:
            return np.zeros(0, dtype=np.int64)
        resid = np.einsum("ij,ij->i", V, V)
        chol = np.zeros((n, k))
        chosen = np.empty(k, dtype=np.int64)
        for i in range(k):
            p = np.maximum(resid, 0.0)
            j = int(np.searchsorted(np.cumsum(p), g.random() * p.sum(), side="right"))
            j = min(j, n - 1)
            chosen[i] = j
            col = V @ V[j] - chol[:, :i] @ chol[j, :i]
            col /= math.sqrt(max(resid[j], 1e-300))
            chol[:, i] = col
            resid = resid - col * col
            resid[j] = 0.0
        return np.sort(chosen)


def sample_dpp(K, rng: RngState) -> np.ndarray:
    """Index set drawn from the determinantal process with kernel ``K``."""
    return SpectralDPP(K).sample(rng)


def discrete_sine_kernel(a: float, n_sites: int) -> np.ndarray:
    i = np.arange(n_sites)
    return a * sinc(a * (i[:, None] - i[None, :]).astype(float))


@lru_cache(maxsize=32)
def _discrete_sine_sampler(a: float, n_sites: int) -> SpectralDPP:
    return SpectralDPP(discrete_sine_kernel(a, n_sites))


def sample_discrete_sine(a: float, sites: int, rng: RngState, first: int = 0) -> Configuration:
    """Discrete sine process restricted to sites ``first .. first + sites - 1`` of aZ.

    Restricting a determinantal process to a finite set gives the
    determinantal process of the restricted kernel, so the draw is exact.
    """
    if not a > 0:
        raise InvalidSpacing(f"spacing must be positive, got {a}")
    if a > 1:
        raise SpacingOutOfRange("no point process has the discrete sine correlations for a > 1")
    if sites < 1:
        raise InvalidParameter("need at least one site")
    chosen = _discrete_sine_sampler(float(a), int(sites)).sample(rng)
    idx = chosen + first
    window = (a * first, a * (first + sites - 1))
    return Configuration(window, a * idx.astype(float), np.ones(idx.size, dtype=np.int64), a, idx)


@lru_cache(maxsize=8)
def _continuous_sine_sampler(n_sites: int, delta: float) -> SpectralDPP:
    i = np.arange(n_sites)
    K = delta * sinc(delta * (i[:, None] - i[None, :]).astype(float))
    return SpectralDPP(K)


def sample_continuous_sine(window, delta: float, rng: RngState) -> Configuration:
    """Approximate sine-process draw on a grid of spacing ``delta``.

    The grid kernel ``delta * S(x_i - x_j)`` is the discrete sine process on
    ``delta Z``; its correlations agree with the sine process against test
    functions of bandwidth up to ``(1 - delta)/delta``.
    """
    if not 0 < delta <= 0.25:
        raise ResolutionTooCoarse(f"resolution must be in (0, 0.25], got {delta}")
    lo, hi = _check_window(window)
    n_sites = int(math.floor((hi - lo) / delta + 1e-9))
    if n_sites > MAX_CONTINUOUS_SITES:
        raise WindowTooLarge(f"{n_sites} grid sites exceeds {MAX_CONTINUOUS_SITES}")
    if n_sites == 0:
        return Configuration.empty((lo, hi))
    chosen = _continuous_sine_sampler(n_sites, float(delta)).sample(rng)
    pts = lo + delta * (chosen + 0.5)
    return Configuration((lo, hi), pts, np.ones(pts.size, dtype=np.int64))


@dataclass(frozen=True)
class SamplerSpec:
    """Which process to draw, with parameters and observation window.

    ``process`` is one of ``poisson``, ``discrete_poisson``, ``discrete_sine``,
    ``continuous_sine``.
    """

    process: str
    window: Tuple[float, float] = (-20.0, 20.0)
    lam: float = 1.0
    a: float = 1.0
    delta: float = 0.1

    def __post_init__(self):
        if self.process not in ("poisson", "discrete_poisson", "discrete_sine", "continuous_sine"):
            raise InvalidParameter(f"unknown process {self.process!r}")
        _check_window(self.window)

    def sample(self, rng: RngState) -> Configuration:
        lo, hi = self.window
        if self.process == "poisson":
            return sample_poisson(self.lam, self.window, rng)
        if self.process == "discrete_poisson":
            return sample_discrete_poisson(self.a, self.lam, self.window, rng)
        if self.process == "discrete_sine":
            sites = _lattice_range(self.a, lo, hi)
            if sites.size == 0:
                return Configuration.empty(self.window, self.a)
            cfg = sample_discrete_sine(self.a, int(sites.size), rng, first=int(sites[0]))
            return Configuration(self.window, cfg.positions, cfg.multiplicities, self.a, cfg.indices)
        return sample_continuous_sine(self.window, self.delta, rng)

    def structure(self) -> kernels.CorrelationStructure:
        """The correlation structure this sampler realises (exactly, or up to grid effects)."""
        if self.process == "poisson":
            return kernels.poisson(self.lam)
        if self.process == "discrete_poisson":
            return kernels.poisson_lattice(self.a, self.lam)
        if self.process == "discrete_sine":
            return kernels.sine_lattice(self.a)
        return kernels.sine()

    @property
    def is_lattice(self) -> bool:
        return self.process in ("discrete_poisson", "discrete_sine")
