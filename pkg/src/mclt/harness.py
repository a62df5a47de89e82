"""Monte-Carlo experiment driver and metrics.

An experiment runs many independent receive sessions of one scheme to full
recovery, recording per trial the received count at completion and the
unsolved count u at every point of an overhead grid (one incremental pass
per trial; decoding is incremental, so success-at-overhead-x does not need
separate truncated runs). Trial seeds are derived from (base_seed, index),
so results are bit-identical across runs and across worker counts.

Metrics:

* overhead = received/k - 1 at full recovery, averaged over completed trials
* success rate at overhead x = fraction of trials fully decoded within
  round((1+x) k) received symbols
* error rate at overhead x = mean fraction of the k input symbols still
  unrecovered at that point (symbol erasure rate after decoding; with
  uniformly random payloads this is proportional to bit-level error)

A trial that reaches cap_factor*k received symbols without completing is
marked capped and excluded from the overhead mean.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .distributions import SolitonParams
from .prng import GENERATOR, GENERATOR_VERSION, derive_seed
from .session import MCScheme, SCHEME_LABELS, run_session, scheme_for

_CHUNK = 250  # trials per work unit; fixed so results don't depend on worker count


def default_grid(start: float = 0.0, stop: float = 0.5, step: float = 0.01) -> np.ndarray:
    n = int(round((stop - start) / step))
    return np.round(start + step * np.arange(n + 1), 10)


def parse_grid(text: str) -> np.ndarray:
    """Parse 'start:stop:step' into an overhead grid."""
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"grid must look like 0:0.5:0.01, got {text!r}") from exc
    return default_grid(start, stop, step)


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    scheme: str
    k: int = 1000
    c: float = 0.1
    delta: float = 0.1
    trials: int = 10_000
    base_seed: int = 42
    grid: np.ndarray = field(default_factory=default_grid)
    erasure: float = 0.0
    cap_factor: int = 5

    def __post_init__(self):
        if self.scheme not in SCHEME_LABELS:
            raise ValueError(f"scheme must be one of {SCHEME_LABELS}, got {self.scheme!r}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.size == 0 or np.any(np.diff(grid) < 0) or grid[0] < 0:
            raise ValueError("grid must be nonempty, nonnegative and nondecreasing")
        object.__setattr__(self, "grid", grid)
        SolitonParams(self.k, self.c, self.delta)  # validates k, c, delta
        if not 0 <= self.erasure < 1:
            raise ValueError(f"erasure must be in [0, 1), got {self.erasure}")
        if self.cap_factor < 2:
            raise ValueError(f"cap_factor must be >= 2, got {self.cap_factor}")

    @property
    def params(self) -> SolitonParams:
        return SolitonParams(self.k, self.c, self.delta)

    def build_scheme(self) -> MCScheme:
        return scheme_for(self.scheme, self.params)

    def grid_received_counts(self) -> np.ndarray:
        return np.rint((1.0 + self.grid) * self.k).astype(np.int64)

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "k": self.k,
            "c": self.c,
            "delta": self.delta,
            "trials": self.trials,
            "base_seed": self.base_seed,
            "grid": [float(x) for x in self.grid],
            "erasure": self.erasure,
            "cap_factor": self.cap_factor,
        }


def trial_seed(base_seed: int, index: int) -> int:
    """Seed of trial ``index``; independent of execution order."""
    return derive_seed(base_seed, index)


@dataclass(frozen=True, eq=False)
class TrialRecord:
    seed: int
    received: int
    final_unsolved: int
    capped: bool
    u_at_grid: np.ndarray


def run_trial(spec: ExperimentSpec, seed: int, scheme: MCScheme | None = None) -> TrialRecord:
    """One session to full recovery (or the cap), sampling u on the grid."""
    if scheme is None:
        scheme = spec.build_scheme()
    report = run_session(
        scheme,
        seed=seed,
        erasure=spec.erasure,
        max_received=spec.cap_factor * spec.k,
        record_u=True,
    )
    traj = report.u_trajectory
    counts = spec.grid_received_counts()
    u_at = np.empty(counts.size, dtype=np.int64)
    for j, n in enumerate(counts):
        if n <= 0:
            u_at[j] = spec.k
        elif n <= len(traj):
            u_at[j] = traj[n - 1]
        else:
            u_at[j] = report.final_unsolved
    return TrialRecord(
        seed=seed,
        received=report.received,
        final_unsolved=report.final_unsolved,
        capped=report.capped,
        u_at_grid=u_at,
    )


@dataclass(eq=False)
class ExperimentResult:
    spec: ExperimentSpec
    trial_seeds: np.ndarray
    received_counts: np.ndarray
    final_unsolved: np.ndarray
    capped: int
    success_counts: np.ndarray  # per grid point
    u_sum: np.ndarray
    u_sumsq: np.ndarray

    @property
    def grid(self) -> np.ndarray:
        return self.spec.grid

    @property
    def trials(self) -> int:
        return self.spec.trials

    @property
    def overheads(self) -> np.ndarray:
        """Per-trial reception overhead of the completed trials."""
        done = self.final_unsolved == 0
        return self.received_counts[done] / self.spec.k - 1.0

    @property
    def mean_overhead(self) -> float:
        return float(self.overheads.mean())

    @property
    def stderr_overhead(self) -> float:
        o = self.overheads
        return float(o.std(ddof=1) / math.sqrt(o.size)) if o.size > 1 else 0.0

    def overhead_ci95(self) -> tuple[float, float]:
        m, se = self.mean_overhead, self.stderr_overhead
        return (m - 1.96 * se, m + 1.96 * se)

    @property
    def success_rate(self) -> np.ndarray:
        return self.success_counts / self.trials

    @property
    def error_rate(self) -> np.ndarray:
        return self.u_sum / (self.trials * self.spec.k)

    def error_rate_trial_var(self) -> np.ndarray:
        """Variance across trials of the per-trial unsolved fraction."""
        n, k = self.trials, self.spec.k
        mean_u = self.u_sum / n
        var_u = np.maximum(self.u_sumsq / n - mean_u**2, 0.0) * n / max(n - 1, 1)
        return var_u / k**2

    def summary_dict(self) -> dict:
        return {
            "scheme": self.spec.scheme,
            "k": self.spec.k,
            "mean_overhead": self.mean_overhead,
            "stderr": self.stderr_overhead,
            "trials": self.trials,
            "capped": self.capped,
        }


def _run_chunk(spec: ExperimentSpec, start: int, stop: int):
    scheme = spec.build_scheme()
    g = spec.grid.size
    seeds = np.empty(stop - start, dtype=np.uint64)
    received = np.empty(stop - start, dtype=np.int64)
    final_u = np.empty(stop - start, dtype=np.int64)
    capped = 0
    success = np.zeros(g, dtype=np.int64)
    u_sum = np.zeros(g, dtype=np.float64)
    u_sumsq = np.zeros(g, dtype=np.float64)
    for i in range(start, stop):
        rec = run_trial(spec, trial_seed(spec.base_seed, i), scheme)
        j = i - start
        seeds[j] = rec.seed
        received[j] = rec.received
        final_u[j] = rec.final_unsolved
        capped += rec.capped
        u = rec.u_at_grid
        success += u == 0
        u_sum += u
        u_sumsq += u.astype(np.float64) ** 2
    return seeds, received, final_u, capped, success, u_sum, u_sumsq


def run_experiment(spec: ExperimentSpec, workers: int | None = 1) -> ExperimentResult:
    """Run all trials and aggregate; deterministic in (spec, base_seed) only.

    ``workers=None`` uses all CPUs. Chunk boundaries are fixed by the trial
    count alone and partial aggregates are combined in chunk order, so the
    result is bit-identical for any worker count.
    """
    if workers is None:
        workers = os.cpu_count() or 1
    bounds = [(s, min(s + _CHUNK, spec.trials)) for s in range(0, spec.trials, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*((spec, a, b) for a, b in bounds))))
    else:
        parts = [_run_chunk(spec, a, b) for a, b in bounds]
    seeds = np.concatenate([p[0] for p in parts])
    received = np.concatenate([p[1] for p in parts])
    final_u = np.concatenate([p[2] for p in parts])
    capped = sum(p[3] for p in parts)
    g = spec.grid.size
    success = np.zeros(g, dtype=np.int64)
    u_sum = np.zeros(g, dtype=np.float64)
    u_sumsq = np.zeros(g, dtype=np.float64)
    for p in parts:
        success += p[4]
        u_sum += p[5]
        u_sumsq += p[6]
    return ExperimentResult(
        spec=spec,
        trial_seeds=seeds,
        received_counts=received,
        final_unsolved=final_u,
        capped=capped,
        success_counts=success,
        u_sum=u_sum,
        u_sumsq=u_sumsq,
    )


class InvalidComparison(ValueError):
    """Experiments are not comparable (different k, trials, or grid)."""


def two_proportion_z(count1: int, count2: int, n: int) -> float:
    """Pooled z statistic for two Bernoulli proportions with n trials each."""
    p1, p2 = count1 / n, count2 / n
    pooled = (count1 + count2) / (2 * n)
    var = pooled * (1.0 - pooled) * (2.0 / n)
    if var == 0.0:
        return 0.0
    return (p1 - p2) / math.sqrt(var)


def error_rate_z(a: ExperimentResult, b: ExperimentResult) -> np.ndarray:
    """Per-grid-point z for the difference of mean unsolved fractions.

    The unsolved fraction is averaged within each trial, so its sampling
    variance comes from trial-to-trial dispersion (Welch); pooling symbols
    across trials would ignore the within-trial correlation.
    """
    n = a.trials
    se = np.sqrt(a.error_rate_trial_var() / n + b.error_rate_trial_var() / n)
    diff = a.error_rate - b.error_rate
    return np.divide(diff, se, out=np.zeros_like(diff), where=se > 0)


def wilson_interval(successes: int, n: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval; sane at proportions of 0 or 1."""
    p = successes / n
    denom = 1.0 + z**2 / n
    center = (p + z**2 / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / n + z**2 / (4 * n**2))
    return (max(0.0, center - half), min(1.0, center + half))


@dataclass(eq=False)
class ComparisonReport:
    labels: list[str]
    means: list[float]
    stderrs: list[float]
    cis: list[tuple[float, float]]
    ordering: list[str]  # labels sorted by ascending mean overhead
    ci_disjoint: bool  # all pairwise 95% CIs disjoint
    grid: np.ndarray
    success_z: dict[str, np.ndarray]  # per ordered pair "A<B": z of success(A)-success(B)
    error_z: dict[str, np.ndarray]
    nondominance: dict[str, list[float]]  # overheads where the worse-mean scheme wins

    def to_dict(self) -> dict:
        return {
            "labels": self.labels,
            "mean_overhead": dict(zip(self.labels, self.means)),
            "stderr": dict(zip(self.labels, self.stderrs)),
            "ci95": {l: list(ci) for l, ci in zip(self.labels, self.cis)},
            "ordering": self.ordering,
            "ci_disjoint": self.ci_disjoint,
            "grid": [float(x) for x in self.grid],
            "success_z": {k: [float(x) for x in v] for k, v in self.success_z.items()},
            "error_z": {k: [float(x) for x in v] for k, v in self.error_z.items()},
            "nondominance": {k: [float(x) for x in v] for k, v in self.nondominance.items()},
        }


def compare(*results: ExperimentResult, z_crit: float = 2.576) -> ComparisonReport:
    """Rank experiments by mean overhead and test their curves pointwise.

    ``nondominance`` flags grid regions where the scheme with worse mean
    overhead nevertheless has a significantly higher success rate (pooled
    two-proportion test at ``z_crit``).
    """
    if len(results) < 2:
        raise InvalidComparison("need at least two experiments to compare")
    base = results[0].spec
    for r in results[1:]:
        if r.spec.k != base.k:
            raise InvalidComparison(f"mismatched k: {r.spec.k} vs {base.k}")
        if r.spec.trials != base.trials:
            raise InvalidComparison(f"mismatched trials: {r.spec.trials} vs {base.trials}")
        if r.spec.grid.size != base.grid.size or np.any(r.spec.grid != base.grid):
            raise InvalidComparison("mismatched overhead grids")
    labels = [r.spec.scheme for r in results]
    if len(set(labels)) != len(labels):
        labels = [f"{r.spec.scheme}#{i}" for i, r in enumerate(results)]
    means = [r.mean_overhead for r in results]
    cis = [r.overhead_ci95() for r in results]
    order = np.argsort(means)
    disjoint = all(
        cis[order[i]][1] < cis[order[i + 1]][0] for i in range(len(order) - 1)
    )
    success_z: dict[str, np.ndarray] = {}
    error_z: dict[str, np.ndarray] = {}
    nondom: dict[str, list[float]] = {}
    n = base.trials
    for ai in range(len(results)):
        for bi in range(ai + 1, len(results)):
            i, j = (ai, bi) if means[ai] <= means[bi] else (bi, ai)
            key = f"{labels[i]}<{labels[j]}"
            sz = np.array(
                [
                    two_proportion_z(int(ca), int(cb), n)
                    for ca, cb in zip(results[i].success_counts, results[j].success_counts)
                ]
            )
            success_z[key] = sz
            error_z[key] = error_rate_z(results[i], results[j])
            # better-mean scheme i is "dominated" where j's success is significantly higher
            nondom[key] = [float(x) for x, z in zip(base.grid, sz) if z < -z_crit]
    return ComparisonReport(
        labels=labels,
        means=means,
        stderrs=[r.stderr_overhead for r in results],
        cis=cis,
        ordering=[labels[i] for i in order],
        ci_disjoint=disjoint,
        grid=base.grid,
        success_z=success_z,
        error_z=error_z,
        nondominance=nondom,
    )


def _versions() -> dict:
    import matplotlib
    import scipy

    from . import __version__

    return {
        "mclt": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "matplotlib": matplotlib.__version__,
        "generator": f"{GENERATOR}-v{GENERATOR_VERSION}",
    }


def _write_curve_csv(path: Path, grid: np.ndarray, values: np.ndarray, column: str):
    with open(path, "w") as fh:
        fh.write(f"overhead,{column}\n")
        for x, v in zip(grid, values):
            fh.write(f"{x:.4f},{v:.10g}\n")


def save_experiment(result: ExperimentResult, outdir, figures: bool = True) -> Path:
    """Write summary.json, the curve CSVs, meta.json, and the figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "summary.json", "w") as fh:
        json.dump(result.summary_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_curve_csv(outdir / "success_rate.csv", result.grid, result.success_rate, "success_rate")
    _write_curve_csv(outdir / "error_rate.csv", result.grid, result.error_rate, "error_rate")
    meta = {"spec": result.spec.to_dict(), "versions": _versions(),
            "seed_rule": "trial_seed = derive_seed(base_seed, index)"}
    with open(outdir / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if figures:
        from .plotting import save_experiment_figures

        save_experiment_figures(result, outdir)
    return outdir


def save_comparison(report: ComparisonReport, results, outdir, figures: bool = True) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "comparison.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for result in results:
        save_experiment(result, outdir / result.spec.scheme.replace("+", "_"), figures=figures)
    if figures:
        from .plotting import save_comparison_figures

        save_comparison_figures(results, outdir)
    return outdir
