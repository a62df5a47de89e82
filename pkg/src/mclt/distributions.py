"""Degree distributions for rateless encoding.

Provides the ideal and robust soliton distributions plus the two-piece split
of the robust soliton used by the multiple-configurations scheme: the
*starter* (robust soliton with its spike removed, renormalized) and the
*closer* (a point mass at the spike degree). All constructors return an
immutable :class:`DegreeDistribution` with a precomputed cdf so that sampling
is an O(log k) binary search.

Notation, for code length k, constant c > 0 and failure parameter
0 < delta < 1:

    rho(1) = 1/k,  rho(d) = 1/(d(d-1))            for d = 2..k
    R      = c * ln(k/delta) * sqrt(k)
    tau(d) = R/(d k)        for d = 1..d*-1
           = R ln(R/delta)/k  at the spike d*
           = 0               for d > d*
    beta   = sum(rho + tau),   mu(d) = (rho(d) + tau(d)) / beta
    gamma  = beta - tau(d*)
    starter(d) = (rho(d) + tau(d))/gamma below the spike, rho(d)/gamma from
                 the spike up; closer = point mass at d*.

k/R is generally not an integer; the spike degree d* is round(k/R) with ties
rounding up, and the tau branches use d* as their boundary. The chosen d* is
recorded on the returned distribution so downstream runs are reproducible.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class SolitonParams:
    """Parameters (k, c, delta) of the robust soliton family."""

    k: int
    c: float
    delta: float

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Probability mass over degrees 1..k with inverse-transform sampling.

    ``pmf[i]`` is the probability of degree ``i+1``. ``spike`` carries the
    spike degree d* for soliton-derived kinds, None otherwise.
    """

    k: int
    pmf: np.ndarray
    cdf: np.ndarray = field(repr=False)
    kind: str = "custom"
    spike: int | None = None

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.shape != (self.k,):
            raise ValueError(f"pmf must have length k={self.k}, got {pmf.shape}")
        if np.any(pmf < 0):
            raise ValueError("pmf entries must be nonnegative")
        if abs(float(pmf.sum()) - 1.0) > _SUM_TOL:
            raise ValueError(f"pmf must sum to 1 within {_SUM_TOL}, got {pmf.sum()!r}")
        cdf = np.asarray(self.cdf, dtype=np.float64)
        if cdf.shape != (self.k,) or np.any(np.diff(cdf) < 0) or abs(float(cdf[-1]) - 1.0) > _SUM_TOL:
            raise ValueError("cdf must be nondecreasing of length k with last entry 1")
        pmf.flags.writeable = False
        cdf.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)
        object.__setattr__(self, "cdf", cdf)
        # cached list view: bisect on a list is faster than ndarray indexing
        object.__setattr__(self, "_cdf_list", cdf.tolist())

    def probability(self, d: int) -> float:
        """Probability of degree d (1-based)."""
        if not 1 <= d <= self.k:
            raise ValueError(f"degree must be in 1..{self.k}, got {d}")
        return float(self.pmf[d - 1])

    def sample(self, rand: float) -> int:
        """Smallest degree d with cdf(d) > rand, for rand in [0, 1)."""
        return bisect_right(self._cdf_list, rand) + 1

    def mean_degree(self) -> float:
        return float(np.dot(self.pmf, np.arange(1, self.k + 1)))


def sample_degree(dist: DegreeDistribution, rand: float) -> int:
    """Inverse-transform sample; deterministic given rand."""
    return dist.sample(rand)


def from_pmf(k: int, pmf, kind: str = "custom", spike: int | None = None,
             normalize: bool = False) -> DegreeDistribution:
    """Build a distribution from raw masses, optionally renormalizing."""
    arr = np.asarray(pmf, dtype=np.float64).copy()
    if normalize:
        total = arr.sum()
        if total <= 0:
            raise ValueError("cannot normalize: masses sum to zero")
        arr /= total
    cdf = np.cumsum(arr)
    cdf[-1] = 1.0 if abs(cdf[-1] - 1.0) <= _SUM_TOL else cdf[-1]
    return DegreeDistribution(k=k, pmf=arr, cdf=cdf, kind=kind, spike=spike)


def point_mass(k: int, d: int, kind: str = "point") -> DegreeDistribution:
    """Degenerate distribution concentrated on degree d."""
    if not 1 <= d <= k:
        raise ValueError(f"point-mass degree must be in 1..{k}, got {d}")
    pmf = np.zeros(k)
    pmf[d - 1] = 1.0
    return from_pmf(k, pmf, kind=kind, spike=d)


def _rho(k: int) -> np.ndarray:
    rho = np.zeros(k)
    rho[0] = 1.0 / k
    if k > 1:
        d = np.arange(2, k + 1, dtype=np.float64)
        rho[1:] = 1.0 / (d * (d - 1.0))
    return rho


def compute_R(params: SolitonParams) -> float:
    """Expected ripple-size constant R = c * ln(k/delta) * sqrt(k)."""
    return params.c * math.log(params.k / params.delta) * math.sqrt(params.k)


def spike_degree(params: SolitonParams) -> int:
    """Spike location d* = round(k/R), ties rounding up."""
    return int(math.floor(params.k / compute_R(params) + 0.5))


class SolitonStructure(NamedTuple):
    """Raw components shared by the robust soliton and its starter/closer split."""

    R: float
    spike: int
    rho: np.ndarray
    tau: np.ndarray
    beta: float
    gamma: float


def soliton_structure(params: SolitonParams) -> SolitonStructure:
    k = params.k
    R = compute_R(params)
    spike = spike_degree(params)
    if not 1 <= spike <= k:
        raise ValueError(
            f"spike degree round(k/R)={spike} outside 1..{k}; "
            f"parameters c={params.c}, delta={params.delta} are pathological for k={k}"
        )
    rho = _rho(k)
    tau = np.zeros(k)
    if spike > 1:
        d = np.arange(1, spike, dtype=np.float64)
        tau[: spike - 1] = R / (d * k)
    tau[spike - 1] = R * math.log(R / params.delta) / k
    beta = float(rho.sum() + tau.sum())
    gamma = beta - float(tau[spike - 1])
    return SolitonStructure(R=R, spike=spike, rho=rho, tau=tau, beta=beta, gamma=gamma)


def ideal_soliton(k: int) -> DegreeDistribution:
    """rho(1) = 1/k, rho(d) = 1/(d(d-1)); already normalized."""
    if k < 1:
        raise ValueError(f"k must be a positive integer, got {k}")
    return from_pmf(k, _rho(k), kind="ideal", normalize=True)


def robust_soliton(params: SolitonParams) -> DegreeDistribution:
    """mu(d) = (rho(d) + tau(d)) / beta."""
    s = soliton_structure(params)
    return from_pmf(params.k, (s.rho + s.tau) / s.beta, kind="robust",
                    spike=s.spike, normalize=True)


def starter(params: SolitonParams) -> DegreeDistribution:
    """Robust soliton with the spike mass removed, renormalized by gamma."""
    s = soliton_structure(params)
    masses = s.rho.copy()
    masses[: s.spike - 1] += s.tau[: s.spike - 1]
    return from_pmf(params.k, masses / s.gamma, kind="starter",
                    spike=s.spike, normalize=True)


def closer(params: SolitonParams) -> DegreeDistribution:
    """Point mass at the spike degree d*."""
    s = soliton_structure(params)
    return point_mass(params.k, s.spike, kind="closer")
