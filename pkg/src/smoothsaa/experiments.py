"""Seeded replication harness.

Draws M independent samples of size N, solves the empirical problem and
every configured smoothed estimator on each sample, and reports bias,
variance, MSE, and standard errors against the known ground truth.

Reproducibility contract: replication r consumes a counter-based stream
keyed by (master_seed, r) and normal variates come from the inverse CDF of
that stream, so every observation is a pure function of
(master_seed, r, i).  Replications are independent work units whose
results land in slot r of a preallocated array; aggregation therefore does
not depend on execution order or worker count, and runs are bit-identical
for any ``threads`` setting.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import bandwidth as bw
from . import problems as pb
from .kernels import Kernel
from .smoothing import VALUE_TOL
from .solvers import SolverError

_U53 = float(2**53)


class HarnessError(RuntimeError):
    """A replication failed or violated a structural guarantee."""


@dataclass(frozen=True)
class Normal:
    """Normal distribution parameterized by mean and variance."""

    mu: float
    sigma2: float

    def __post_init__(self):
        if self.sigma2 <= 0.0:
            raise ValueError(f"variance must be positive, got {self.sigma2}")

    def ppf(self, u):
        return self.mu + np.sqrt(self.sigma2) * ndtri(u)

    @property
    def label(self) -> str:
        return f"normal({self.mu:g},{self.sigma2:g})"


@dataclass(frozen=True)
class EstimatorSpec:
    """One column of a results table: a kernel plus a bandwidth rule.

    ``kernel=None`` denotes the plain empirical (SAA) estimator.
    """

    label: str
    kernel: Kernel | None = None
    rule: bw.BandwidthRule | None = None

    def __post_init__(self):
        if (self.kernel is None) != (self.rule is None):
            raise ValueError("kernel and bandwidth rule must be given together")


@dataclass(frozen=True)
class ExperimentConfig:
    distribution: Normal
    n: int
    replications: int
    alpha: float
    estimators: tuple[EstimatorSpec, ...]
    problem: str = "avar"
    master_seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("sample size N must be >= 2")
        if self.replications < 2:
            raise ValueError("need at least 2 replications")
        if self.problem not in ("avar", "quadratic"):
            raise ValueError(f"unknown problem label {self.problem!r}")
        if self.problem == "avar" and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        object.__setattr__(self, "estimators", tuple(self.estimators))

    def true_theta(self) -> float:
        if self.problem == "avar":
            return pb.true_avar_normal(self.distribution.mu, self.distribution.sigma2, self.alpha)
        return self.distribution.sigma2


@dataclass(frozen=True)
class EstimatorStats:
    """Replication summary for one estimator at one sample size."""

    label: str
    n: int
    replications: int
    mean: float
    bias: float
    variance: float
    mse: float
    stderr: float
    kernel: str = ""
    h_rule: str = ""
    h_mean: float = float("nan")
    max_excess_over_saa: float = float("nan")


def replication_sample(master_seed: int, r: int, n: int, distribution: Normal) -> np.ndarray:
    """The sample of replication r: a pure function of (master_seed, r, i)."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(r,))
    gen = np.random.Generator(np.random.Philox(ss))
    u = gen.integers(low=1, high=2**53, size=n) / _U53  # strictly inside (0, 1)
    return distribution.ppf(u)


def _rule_bandwidths(spec: EstimatorSpec, rows: np.ndarray, config: ExperimentConfig) -> np.ndarray:
    """Per-replication bandwidths for a rule, vectorized across rows."""
    rule = spec.rule
    m = rows.shape[0]
    if rule.kind == "fixed":
        return np.full(m, float(rule.h))
    if rule.kind == "rate":
        return np.full(m, bw.rate_rule(rows.shape[1], rule.scale, rule.eps))
    if rule.kind in ("plugin106", "silverman"):
        sigma = rows.std(axis=1, ddof=1)
        if np.any(sigma == 0.0):
            bad = int(np.flatnonzero(sigma == 0.0)[0])
            raise HarnessError(f"replication {bad}, estimator {spec.label!r}: zero-variance sample")
        if rule.kind == "plugin106":
            return 1.06 * sigma * rows.shape[1] ** (-0.2)
        q75, q25 = np.quantile(rows, [0.75, 0.25], axis=1)
        a = np.minimum(sigma, (q75 - q25) / 1.34)
        if np.any(a <= 0.0):
            bad = int(np.flatnonzero(a <= 0.0)[0])
            raise HarnessError(f"replication {bad}, estimator {spec.label!r}: degenerate spread")
        return 0.9 * a * rows.shape[1] ** (-0.2)
    # bias_matched: per-row procedure
    problem = _problem_for(config)
    out = np.empty(m)
    for i in range(m):
        if config.problem == "avar":
            modulus = problem.modulus()
        else:
            modulus = problem.modulus(float(np.ptp(rows[i])) + 1.0)
        out[i] = bw.bias_matched(rows[i], problem, spec.kernel, modulus, rule.pilot_fraction)
    return out


def _problem_for(config: ExperimentConfig):
    if config.problem == "avar":
        return pb.AvarProblem(config.alpha)
    return pb.QuadraticLocationProblem()


def _solve_saa_rows(rows: np.ndarray, config: ExperimentConfig) -> np.ndarray:
    if config.problem == "avar":
        theta, _ = pb._avar_saa_batch(rows, config.alpha)
        return theta
    return np.var(rows, axis=1)


def _solve_smoothed_rows(
    rows: np.ndarray, h: np.ndarray, kernel: Kernel, config: ExperimentConfig
) -> np.ndarray:
    if config.problem == "avar":
        theta, _ = pb._avar_smoothed_batch(rows, config.alpha, kernel, h)
        return theta
    return np.var(rows, axis=1) + h * h * kernel.m2()


def run_replications(config: ExperimentConfig, threads: int = 0) -> list[EstimatorStats]:
    """Run the experiment and summarize each estimator across replications.

    Per replication, every estimator sees the identical sample, and the
    smoothed optimal value is checked to dominate the empirical one
    (objectives here are convex in the data); any violation beyond the
    shared value tolerance aborts the run.
    """
    m, n = config.replications, config.n
    theta_true = config.true_theta()
    samples = np.empty((m, n))
    for r in range(m):
        samples[r] = replication_sample(config.master_seed, r, n, config.distribution)

    saa_theta = np.empty(m)
    kernel_specs = [s for s in config.estimators if s.kernel is not None]
    theta_by_spec = {id(s): np.empty(m) for s in kernel_specs}
    h_by_spec = {id(s): np.empty(m) for s in kernel_specs}

    def work(indices: np.ndarray) -> None:
        rows = samples[indices]
        try:
            saa_theta[indices] = _solve_saa_rows(rows, config)
            for spec in kernel_specs:
                h = _rule_bandwidths(spec, rows, config)
                h_by_spec[id(spec)][indices] = h
                theta_by_spec[id(spec)][indices] = _solve_smoothed_rows(
                    rows, h, spec.kernel, config
                )
        except SolverError as exc:
            raise HarnessError(f"replications {indices[0]}..{indices[-1]}: {exc}") from exc

    workers = threads if threads > 0 else (os.cpu_count() or 1)
    chunks = [c for c in np.array_split(np.arange(m), min(workers, m)) if c.size]
    if workers == 1 or len(chunks) == 1:
        for chunk in chunks:
            work(chunk)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for future in [pool.submit(work, chunk) for chunk in chunks]:
                future.result()

    stats: list[EstimatorStats] = []
    for spec in config.estimators:
        if spec.kernel is None:
            stats.append(_summary(spec, saa_theta, theta_true, config))
            continue
        theta_k = theta_by_spec[id(spec)]
        excess = theta_k - saa_theta
        if config.problem in ("avar", "quadratic"):  # convex in the data
            worst = int(np.argmin(excess))
            if excess[worst] < -VALUE_TOL:
                raise HarnessError(
                    f"replication {worst}, estimator {spec.label!r}: smoothed value "
                    f"{theta_k[worst]!r} fell below the empirical value {saa_theta[worst]!r}"
                )
        stats.append(
            _summary(
                spec,
                theta_k,
                theta_true,
                config,
                h_mean=float(np.mean(h_by_spec[id(spec)])),
                max_excess=float(np.max(excess)),
            )
        )
    return stats


def _summary(
    spec: EstimatorSpec,
    thetas: np.ndarray,
    theta_true: float,
    config: ExperimentConfig,
    h_mean: float = float("nan"),
    max_excess: float = float("nan"),
) -> EstimatorStats:
    m = thetas.size
    mean = float(np.mean(thetas))
    variance = float(np.var(thetas, ddof=1))
    mse = float(np.mean((thetas - theta_true) ** 2))
    return EstimatorStats(
        label=spec.label,
        n=config.n,
        replications=m,
        mean=mean,
        bias=mean - theta_true,
        variance=variance,
        mse=mse,
        stderr=float(np.sqrt(variance / m)),
        kernel="" if spec.kernel is None else spec.kernel.name,
        h_rule="" if spec.rule is None else spec.rule.label,
        h_mean=h_mean,
        max_excess_over_saa=max_excess,
    )


def summarize(stats: list[EstimatorStats], true_theta: float) -> list[dict]:
    """Table rows keyed by (N, estimator, h) against the given ground truth.

    Bias and MSE are recomputed from the stored means via the exact
    identity MSE = bias^2 + variance * (M-1)/M, so the rows stay coherent
    if a different truth is supplied.
    """
    if not stats:
        raise ValueError("no estimator statistics to summarize")
    rows = []
    for s in stats:
        bias = s.mean - true_theta
        mse = bias * bias + s.variance * (s.replications - 1) / s.replications
        rows.append(
            {
                "N": s.n,
                "estimator": s.label,
                "kernel": s.kernel,
                "h_rule": s.h_rule,
                "h_value": s.h_mean,
                "bias": bias,
                "variance": s.variance,
                "mse": mse,
                "stderr": s.stderr,
            }
        )
    return rows
