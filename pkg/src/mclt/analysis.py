"""Closed-form decoding analytics.

Covers the receiver-side quantities that motivate configuration switching:

* utility degree: with u of k input symbols still unsolved, the number i of
  still-useful neighbors of an incoming degree-d output symbol is
  hypergeometric,

      D(d, i, u) = C(u, i) C(k-u, d-i) / C(k, d),
      max(0, d-k+u) <= i <= min(d, u);

* domination: degree d+1 dominates degree d (pointwise larger utility-degree
  mass for every i > 0) exactly when u <= (k+1)/(d+1), with i = 1 binding;

* release probability q(d, L): the chance that a degree-d output symbol is
  released (reduced to degree one) exactly when L input symbols remain
  unsolved, in the uniform-processing-order decoding model,

      q(1, k) = 1,
      q(d, L) = L * C(k-L-1, d-2) / C(k, d)   for d >= 2, L <= k-d+1,

  and the aggregate r(L) = sum_d pmf(d) q(d, L);

* the phase-one identity linking the starter to the robust soliton: with the
  spike contribution excluded, (gamma/beta) K r_starter(L) = K r_robust(L)
  term by term, so the two-configuration scheme keeps the robust release
  behavior until the switch point ceil(R).

Binomial coefficients are evaluated in log space (log-gamma) so k up to 1e4
stays in range; the brute-force oracles use exact integer/rational
arithmetic instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .distributions import (
    DegreeDistribution,
    SolitonParams,
    compute_R,
    soliton_structure,
)


def log_comb(n: int, r: int) -> float:
    """ln C(n, r); -inf outside 0 <= r <= n."""
    if r < 0 or r > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(r + 1) - math.lgamma(n - r + 1)


def utility_support(d: int, u: int, k: int) -> range:
    return range(max(0, d - k + u), min(d, u) + 1)


@dataclass(frozen=True, eq=False)
class UtilityDegreePmf:
    """Distribution of the utility degree i of a degree-d symbol at u unsolved."""

    d: int
    u: int
    k: int
    support: range
    pmf: np.ndarray

    def probability(self, i: int) -> float:
        if i in self.support:
            return float(self.pmf[i - self.support.start])
        return 0.0

    def mean(self) -> float:
        return float(np.dot(self.pmf, np.arange(self.support.start, self.support.stop)))


def utility_degree_pmf(d: int, u: int, k: int) -> UtilityDegreePmf:
    """Hypergeometric D(d, i, u) over the feasible utility degrees i."""
    if not 1 <= d <= k:
        raise ValueError(f"degree d must be in 1..{k}, got {d}")
    if not 0 <= u <= k:
        raise ValueError(f"unsolved count u must be in 0..{k}, got {u}")
    support = utility_support(d, u, k)
    log_denom = log_comb(k, d)
    pmf = np.array(
        [math.exp(log_comb(u, i) + log_comb(k - u, d - i) - log_denom) for i in support]
    )
    return UtilityDegreePmf(d=d, u=u, k=k, support=support, pmf=pmf)


def expected_utility_degree(d: int, u: int, k: int) -> float:
    """Hypergeometric mean d*u/k: decays as decoding progresses."""
    return d * u / k


def domination_threshold(d: int, k: int) -> float:
    """Largest u at which degree d+1 dominates degree d: (k+1)/(d+1)."""
    return (k + 1) / (d + 1)


def dominates(d: int, u: int, k: int) -> bool:
    """Does degree d+1 dominate degree d at u unsolved symbols?

    Exact integer form of u <= (k+1)/(d+1), the i = 1 worst case of the
    pointwise condition; for larger i the bound u <= i(k+1)/(d+1) is looser.
    """
    if not 1 <= d < k:
        raise ValueError(f"d must satisfy 1 <= d < k, got d={d}, k={k}")
    if not 0 <= u <= k:
        raise ValueError(f"u must be in 0..{k}, got {u}")
    return u * (d + 1) <= k + 1


def _exact_utility_pmf(d: int, u: int, k: int) -> dict[int, Fraction]:
    denom = math.comb(k, d)
    return {
        i: Fraction(math.comb(u, i) * math.comb(k - u, d - i), denom)
        for i in utility_support(d, u, k)
    }


def verify_domination(d: int, u: int, k: int, d2: int | None = None) -> bool:
    """Brute-force domination check in exact rational arithmetic.

    Evaluates D(d2, i, u) >= D(d, i, u) for every i > 0 (d2 defaults to
    d+1). Oracle for :func:`dominates`; also answers non-consecutive pairs,
    which the constant-time predicate does not cover.
    """
    if d2 is None:
        d2 = d + 1
    if not (1 <= d <= k and 1 <= d2 <= k):
        raise ValueError(f"degrees must be in 1..{k}, got {d}, {d2}")
    if not 0 <= u <= k:
        raise ValueError(f"u must be in 0..{k}, got {u}")
    lo = _exact_utility_pmf(d, u, k)
    hi = _exact_utility_pmf(d2, u, k)
    zero = Fraction(0)
    for i in range(1, max(d, d2, u) + 1):
        if hi.get(i, zero) < lo.get(i, zero):
            return False
    return True


def release_probability(d: int, L: int, k: int) -> float:
    """q(d, L): release of a degree-d symbol exactly at L unsolved.

    Uniform-random processing order; the symbol releases when its
    second-to-last neighbor is solved. Zero whenever L > k-d+1 (a degree-d
    symbol cannot release before d-1 of its neighbors are solved).
    """
    if not 1 <= d <= k:
        raise ValueError(f"degree d must be in 1..{k}, got {d}")
    if not 1 <= L <= k:
        raise ValueError(f"L must be in 1..{k}, got {L}")
    if d == 1:
        return 1.0 if L == k else 0.0
    if L > k - d + 1:
        return 0.0
    return L * math.exp(log_comb(k - L - 1, d - 2) - log_comb(k, d))


@dataclass(frozen=True, eq=False)
class ReleaseCurve:
    """q(d, L) table and aggregate r(L) for one distribution, L = 1..k."""

    k: int
    dist: DegreeDistribution
    q: np.ndarray  # shape (k, k): q[d-1, L-1]
    r: np.ndarray  # shape (k,):   r[L-1]


def release_table(k: int, degrees=None) -> np.ndarray:
    """q(d, L) for the requested degrees (default all); shape (len(degrees), k)."""
    degrees = list(range(1, k + 1)) if degrees is None else list(degrees)
    table = np.zeros((len(degrees), k))
    for row, d in enumerate(degrees):
        if d == 1:
            table[row, k - 1] = 1.0
            continue
        log_denom = log_comb(k, d)
        for L in range(1, k - d + 2):
            table[row, L - 1] = L * math.exp(log_comb(k - L - 1, d - 2) - log_denom)
    return table


def release_curve(dist: DegreeDistribution) -> ReleaseCurve:
    k = dist.k
    q = release_table(k)
    r = dist.pmf @ q
    return ReleaseCurve(k=k, dist=dist, q=q, r=r)


def aggregate_release(dist: DegreeDistribution, L: int, k: int | None = None) -> float:
    """r(L) = sum_d pmf(d) q(d, L)."""
    if k is not None and k != dist.k:
        raise ValueError(f"k={k} does not match distribution k={dist.k}")
    k = dist.k
    return float(
        sum(p * release_probability(d, L, k) for d, p in enumerate(dist.pmf, start=1) if p > 0.0)
    )


def release_histogram_mc(d: int, k: int, trials: int, seed: int = 0) -> np.ndarray:
    """Monte-Carlo oracle for q(d, .): empirical release-L frequencies.

    Simulates the decoding model directly: input symbols are solved in a
    uniform random order, the symbol's d neighbors occupy a uniform random
    d-subset of the k order positions, and the release happens when the
    second-to-last neighbor is solved. Returns frequencies indexed by L-1.
    """
    if not 1 <= d <= k:
        raise ValueError(f"degree d must be in 1..{k}, got {d}")
    hist = np.zeros(k)
    if d == 1:
        hist[k - 1] = 1.0
        return hist
    rng = np.random.default_rng(seed)
    counts = np.zeros(k + 1, dtype=np.int64)
    chunk = 200_000
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        # d smallest of k iid uniforms mark a uniform random d-subset of positions
        positions = np.argpartition(rng.random((m, k)), d - 1, axis=1)[:, :d]
        second_largest = np.sort(positions, axis=1)[:, -2]
        L = k - (second_largest + 1)
        counts += np.bincount(L, minlength=k + 1)
        done += m
    return counts[1:].astype(np.float64) / trials


def switch_threshold(params: SolitonParams) -> int:
    """Unsolved-count switch point ceil(R): at u <= this, use the closer.

    An analytically integer R is snapped (tolerance 1e-9) so float rounding
    in the R evaluation cannot push the threshold up by one.
    """
    r = compute_R(params)
    nearest = round(r)
    if abs(r - nearest) < 1e-9:
        return int(nearest)
    return math.ceil(r)


def phase1_release_identity(params: SolitonParams, L: int, K: float = 1.0) -> tuple[float, float, float]:
    """(lhs, rhs, residual) of the first-phase release identity at L.

    lhs = (gamma/beta) K r_starter(L); rhs = K r_robust(L) with the spike
    term tau(d*) excluded. Equal up to floating-point rounding for every L
    in [ceil(R), k-1].
    """
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    k = params.k
    if not 1 <= L <= k:
        raise ValueError(f"L must be in 1..{k}, got {L}")
    s = soliton_structure(params)
    q = np.array([release_probability(d, L, k) for d in range(1, k + 1)])
    lam = s.rho.copy()
    lam[: s.spike - 1] += s.tau[: s.spike - 1]
    lhs = (s.gamma / s.beta) * K * float((lam / s.gamma) @ q)
    mu_no_spike = s.rho + s.tau
    mu_no_spike[s.spike - 1] -= s.tau[s.spike - 1]
    rhs = K * float((mu_no_spike / s.beta) @ q)
    return lhs, rhs, abs(lhs - rhs)


def expected_degree_one(params: SolitonParams, K: float) -> float:
    """Expected degree-one symbols in phase one: (gamma/beta) K lambda(1).

    Equals K (rho(1) + tau(1)) / beta; at the canonical symbol count
    K = beta k this is exactly 1 + R.
    """
    if K <= 0:
        raise ValueError(f"K must be positive, got {K}")
    s = soliton_structure(params)
    tau1 = s.tau[0] if s.spike > 1 else 0.0
    return K * (s.rho[0] + tau1) / s.beta
