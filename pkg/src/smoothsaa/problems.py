"""Concrete stochastic-optimization problems.

Each problem exposes the empirical objective, its kernel-smoothed
counterpart, and matching subgradients through a common informal
interface (``saa_value`` / ``smoothed_value`` / ``saa_subgradient`` /
``smoothed_subgradient`` / ``modulus``), plus a solve entry point
returning a :class:`~smoothsaa.solvers.SolveReport`.

All objectives here are convex in the data argument, so the smoothed
value dominates the empirical value pointwise for every sample; the
amount of domination is bounded by the problem's declared modulus of
continuity.  Problems whose data enter only through a scalar projection
(classifier margin, portfolio return) are smoothed along that projection
with effective bandwidth h * ||direction||; for a spherical Gaussian
kernel this equals the exact multi-dimensional convolution, and for
compact kernels it is the documented one-dimensional surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from . import kernels as K
from . import smoothing as sm
from .kernels import Kernel
from .smoothing import Sample, SmoothingPlan, as_sample
from .solvers import (
    SolveReport,
    golden_section_batch,
    minimize_convex_1d,
    project_box_simplex,
    project_l1_ball,
    projected_subgradient,
    sphere_search_2d,
)

_SQRT2PI = math.sqrt(2.0 * math.pi)


def _phi(x):
    return np.exp(-0.5 * np.asarray(x, dtype=float) ** 2) / _SQRT2PI


# ---------------------------------------------------------------------------
# Average Value-at-Risk estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AvarProblem:
    """Variational AVaR at level alpha: minimize z + E[(X - z)_+] / alpha."""

    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")

    decision_dim = 1

    def term(self, u, x) -> float:
        z = float(np.atleast_1d(u)[0])
        return z + max(0.0, float(x) - z) / self.alpha

    def saa_value(self, u, sample) -> float:
        z = float(np.atleast_1d(u)[0])
        x = as_sample(sample).column()
        return z + float(np.mean(np.maximum(x - z, 0.0))) / self.alpha

    def smoothed_value(self, u, sample, plan: SmoothingPlan) -> float:
        z = float(np.atleast_1d(u)[0])
        x = as_sample(sample).column()
        hinges = sm.hinge_conv(plan.kernel, x - z, plan.h, plan)
        return z + float(np.mean(hinges)) / self.alpha

    def saa_subgradient(self, u, sample) -> np.ndarray:
        z = float(np.atleast_1d(u)[0])
        x = as_sample(sample).column()
        return np.array([1.0 - float(np.mean(x > z)) / self.alpha])

    def smoothed_subgradient(self, u, sample, plan: SmoothingPlan) -> np.ndarray:
        z = float(np.atleast_1d(u)[0])
        x = as_sample(sample).column()
        cdf = K.smoothed_hinge_ds(plan.kernel, x - z, plan.h)
        return np.array([1.0 - float(np.mean(cdf)) / self.alpha])

    def modulus(self) -> sm.ModulusSpec:
        return sm.ModulusSpec(((1.0 / self.alpha, 1.0),))

    def pilot_solve(self, data) -> np.ndarray:
        """Empirical solve on a (sub)sample; used by bias-matched bandwidths."""
        theta, zstar = _avar_saa_batch(np.asarray(data, dtype=float).reshape(1, -1), self.alpha)
        return np.array([zstar[0]])


def avar_value(sample, alpha: float, plan: SmoothingPlan | None = None) -> SolveReport:
    """Solve the empirical or smoothed AVaR problem for one sample.

    The empirical problem is piecewise linear; its minimizer set is an
    interval of sample breakpoints and the report carries the left-most
    optimal breakpoint.  The smoothed problem is solved by golden section
    on [min X - h, max X + h] (the objective has slope 1 - 1/alpha < 0
    below and slope 1 above that bracket).
    """
    problem = AvarProblem(alpha)
    x = as_sample(sample).column()
    if plan is None or plan.h == 0.0:
        theta, zstar = _avar_saa_batch(x[None, :], alpha)
        return SolveReport(
            value=float(theta[0]),
            minimizer=np.array([zstar[0]]),
            iterations=x.size,
            strategy="saa-breakpoints",
            converged=True,
            tolerance=0.0,
        )
    lo, hi = float(x.min() - plan.h), float(x.max() + plan.h)

    def g(z):
        return problem.smoothed_value(np.array([z]), sample, plan)

    zstar, theta = minimize_convex_1d(g, lo, hi, tol=1e-9)
    return SolveReport(
        value=float(theta),
        minimizer=np.array([zstar]),
        iterations=0,
        strategy=f"smoothed-{plan.resolve()}",
        converged=True,
        tolerance=1e-9,
    )


def true_avar_normal(mu: float, sigma2: float, alpha: float) -> float:
    """Exact AVaR of a Normal(mu, sigma2): mu + sigma * phi(q_{1-alpha}) / alpha."""
    if sigma2 <= 0.0:
        raise ValueError("variance must be positive")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    q = ndtri(1.0 - alpha)
    return mu + math.sqrt(sigma2) * float(_phi(q)) / alpha


def _avar_saa_batch(x_rows: np.ndarray, alpha: float):
    """Vectorized empirical AVaR over rows; left-most optimal breakpoint."""
    n = x_rows.shape[1]
    xs = np.sort(x_rows, axis=1)
    suffix = np.cumsum(xs[:, ::-1], axis=1)[:, ::-1]
    above = suffix - xs
    count_above = (n - 1) - np.arange(n)
    obj = xs + (above - count_above[None, :] * xs) / (n * alpha)
    jmin = np.argmin(obj, axis=1)  # first minimum = left-most breakpoint
    rows = np.arange(x_rows.shape[0])
    return obj[rows, jmin], xs[rows, jmin]


def _avar_smoothed_batch(x_rows: np.ndarray, alpha: float, kernel: Kernel, h):
    """Vectorized smoothed AVaR solves; h may vary per row."""
    h = np.broadcast_to(np.asarray(h, dtype=float), (x_rows.shape[0],))
    if np.any(h <= 0.0):
        raise ValueError("bandwidth must be positive for the smoothed solve")
    lo = x_rows.min(axis=1) - h
    hi = x_rows.max(axis=1) + h

    def g(z):
        s = x_rows - z[:, None]
        return z + np.mean(K.smoothed_hinge(kernel, s, h[:, None]), axis=1) / alpha

    zstar, theta = golden_section_batch(g, lo, hi, tol=1e-9)
    return theta, zstar


# ---------------------------------------------------------------------------
# quadratic location (smooth second-order test case)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadraticLocationProblem:
    """Minimize E[(u - X)^2]; the smoothed objective is the empirical one
    plus the exact constant h^2 * m2(K)."""

    decision_dim = 1

    def term(self, u, x) -> float:
        return (float(np.atleast_1d(u)[0]) - float(x)) ** 2

    def saa_value(self, u, sample) -> float:
        x = as_sample(sample).column()
        return float(np.mean((float(np.atleast_1d(u)[0]) - x) ** 2))

    def smoothed_value(self, u, sample, plan: SmoothingPlan) -> float:
        x = as_sample(sample).column()
        z = float(np.atleast_1d(u)[0])
        vals = sm.square_conv(plan.kernel, z - x, plan.h, plan)
        return float(np.mean(vals))

    def saa_subgradient(self, u, sample) -> np.ndarray:
        x = as_sample(sample).column()
        return np.array([2.0 * (float(np.atleast_1d(u)[0]) - float(np.mean(x)))])

    def smoothed_subgradient(self, u, sample, plan: SmoothingPlan) -> np.ndarray:
        # smoothing adds a u-independent constant to the objective
        return self.saa_subgradient(u, sample)

    def modulus(self, data_radius: float) -> sm.ModulusSpec:
        """w(t) = 2*c*t + t^2 with c bounding |u - x| over the probed range."""
        if data_radius <= 0.0:
            raise ValueError("data_radius must be positive")
        return sm.ModulusSpec(((2.0 * data_radius, 1.0), (1.0, 2.0)))

    def pilot_solve(self, data) -> np.ndarray:
        return np.array([float(np.mean(np.asarray(data, dtype=float)))])


def quadratic_location_values(sample, kernel: Kernel, h: float):
    """(theta_saa, theta_k): the biased sample variance and its smoothed
    value theta_saa + h^2 * m2(K), both exact closed forms."""
    if h < 0.0:
        raise ValueError("bandwidth must be >= 0")
    x = as_sample(sample).column()
    theta_saa = float(np.var(x))
    return theta_saa, theta_saa + h * h * kernel.m2()


# ---------------------------------------------------------------------------
# LASSO with data smoothing (ridge equivalence)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LassoProblem:
    """l1-constrained least squares on rows (y_i, x_i), smoothed by a
    Gaussian kernel with covariance A over the joint data vector.

    With beta_tilde = (-1, beta) the smoothed per-term objective is exactly
    (beta_tilde' x_tilde)^2 + h^2 * beta_tilde' A beta_tilde, so smoothing
    is ridge regularization and is never evaluated by quadrature in the
    solver.
    """

    data: np.ndarray  # rows x_tilde_i = (y_i, x_i), shape (N, m + 1)
    t: float
    cov: np.ndarray

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.shape[1] < 2:
            raise ValueError("need at least one feature column besides y")
        object.__setattr__(self, "data", data)
        if self.t <= 0.0:
            raise ValueError("l1 radius t must be positive")
        cov = np.asarray(self.cov, dtype=float)
        if cov.shape != (data.shape[1], data.shape[1]):
            raise ValueError("covariance must match the joint (y, x) dimension")
        if not np.allclose(cov, cov.T, atol=1e-12) or np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("covariance must be symmetric positive definite")
        object.__setattr__(self, "cov", cov)

    @classmethod
    def from_xy(cls, y, x, t: float, cov=None) -> "LassoProblem":
        y = np.asarray(y, dtype=float)
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[0] != y.size:
            x = x.T
        data = np.column_stack([y, x])
        if cov is None:
            cov = np.eye(data.shape[1])
        return cls(data=data, t=t, cov=cov)

    @property
    def n_features(self) -> int:
        return self.data.shape[1] - 1

    def beta_tilde(self, beta) -> np.ndarray:
        return np.concatenate(([-1.0], np.asarray(beta, dtype=float)))

    def sample(self) -> Sample:
        return Sample(self.data)

    def kernel(self) -> Kernel:
        return K.gaussian(self.cov)

    def ridge_penalty(self, beta, h: float) -> float:
        bt = self.beta_tilde(beta)
        return h * h * float(bt @ self.cov @ bt)

    def saa_value(self, beta, sample=None) -> float:
        data = self.data if sample is None else as_sample(sample).observations
        r = data @ self.beta_tilde(beta)
        return float(np.mean(r * r))

    def smoothed_value(self, beta, sample=None, plan: SmoothingPlan | None = None) -> float:
        data = self.data if sample is None else as_sample(sample).observations
        if plan is None:
            raise ValueError("smoothed_value needs a SmoothingPlan")
        self._check_kernel(plan.kernel)
        bt = self.beta_tilde(beta)
        sigma = math.sqrt(float(bt @ self.cov @ bt))
        r = data @ bt
        # scalar reduction: beta' (x + h Z) ~ Normal(beta' x, h^2 sigma^2)
        vals = sm.square_conv(K.gaussian(), r, plan.h * sigma, plan)
        return float(np.mean(vals))

    def _check_kernel(self, kernel: Kernel) -> None:
        if kernel.kind != K.GAUSSIAN:
            raise ValueError("LASSO smoothing requires a Gaussian kernel")
        if kernel.dim > 1 and (
            kernel.dim != self.cov.shape[0]
            or not np.allclose(kernel.cov, self.cov, atol=1e-12)
        ):
            raise ValueError("plan kernel covariance disagrees with the problem's")

    def saa_subgradient(self, beta, sample=None) -> np.ndarray:
        data = self.data if sample is None else as_sample(sample).observations
        r = data @ self.beta_tilde(beta)
        return 2.0 * (r @ data[:, 1:]) / data.shape[0]

    def smoothed_subgradient(self, beta, sample=None, plan: SmoothingPlan | None = None) -> np.ndarray:
        h = 0.0 if plan is None else plan.h
        g = self.saa_subgradient(beta, sample)
        return g + 2.0 * h * h * (self.cov @ self.beta_tilde(beta))[1:]

    def modulus(self) -> sm.ModulusSpec:
        """w(t) = c1^2 t (2 c2 + t) from the feasible-set and data bounds."""
        c1sq = 1.0 + self.t**2
        c2 = float(np.max(np.linalg.norm(self.data, axis=1)))
        return sm.ModulusSpec(((2.0 * c1sq * c2, 1.0), (c1sq, 2.0)))


def lasso_values(problem: LassoProblem, h: float, budget: int = 2000) -> SolveReport:
    """Minimize sum_i (beta_tilde' x_i)^2 + N h^2 beta_tilde' A beta_tilde
    over the l1 ball by projected gradient steps (fixed 1/L step).

    The report's value is the sum-form objective of the paper-scale
    problem; divide by N for the mean form used elsewhere.
    """
    if h < 0.0:
        raise ValueError("bandwidth must be >= 0")
    data = problem.data
    n = data.shape[0]
    x = data[:, 1:]
    y = data[:, 0]
    a_bb = problem.cov[1:, 1:]
    a_by = problem.cov[1:, 0]
    gram = x.T @ x + n * h * h * a_bb
    lip = 2.0 * float(np.linalg.eigvalsh(gram).max())
    step = 1.0 / max(lip, 1e-12)

    def objective(beta):
        r = x @ beta - y
        bt = problem.beta_tilde(beta)
        return float(r @ r) + n * h * h * float(bt @ problem.cov @ bt)

    def gradient(beta):
        r = x @ beta - y
        return 2.0 * (x.T @ r) + 2.0 * n * h * h * (a_bb @ beta - a_by)

    beta = np.zeros(problem.n_features)
    best_val = prev_val = objective(beta)
    best_beta = beta.copy()
    it = 0
    for it in range(1, budget + 1):
        beta = project_l1_ball(beta - step * gradient(beta), problem.t)
        val = objective(beta)
        if val < best_val:
            best_val, best_beta = val, beta.copy()
        if it > 10 and abs(prev_val - val) < 1e-14:
            break
        prev_val = val
    return SolveReport(
        value=float(best_val),
        minimizer=best_beta,
        iterations=it,
        strategy="projected-gradient-ridge",
        converged=True,
        tolerance=1e-12,
    )


# ---------------------------------------------------------------------------
# binary classification (SVM with L1 misclassification error)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SvmProblem:
    """Two-class linear separation minimizing average hinge violations over
    the unit sphere ||v|| = 1 with intercept gamma in [-c, c]."""

    class1: np.ndarray  # points to place on the negative side of v'x - gamma
    class2: np.ndarray
    gamma_bound: float | None = None

    def __post_init__(self):
        c1 = np.atleast_2d(np.asarray(self.class1, dtype=float))
        c2 = np.atleast_2d(np.asarray(self.class2, dtype=float))
        if c1.shape[0] < 1 or c2.shape[0] < 1:
            raise ValueError("both classes need at least one point")
        if c1.shape[1] != c2.shape[1]:
            raise ValueError("classes must share the feature dimension")
        object.__setattr__(self, "class1", c1)
        object.__setattr__(self, "class2", c2)

    @property
    def n_features(self) -> int:
        return self.class1.shape[1]

    def gamma_interval(self, h: float = 0.0):
        """[-c, c] wide enough to contain every optimal intercept."""
        if self.gamma_bound is not None:
            c = self.gamma_bound
        else:
            c = float(max(np.linalg.norm(self.class1, axis=1).max(),
                          np.linalg.norm(self.class2, axis=1).max()))
        return -c - h, c + h

    def split(self, u):
        u = np.asarray(u, dtype=float)
        return u[:-1], float(u[-1])

    def sample(self) -> Sample:
        """Canonical data layout: rows (features..., label) with label +-1."""
        rows1 = np.column_stack([self.class1, np.ones(self.class1.shape[0])])
        rows2 = np.column_stack([self.class2, -np.ones(self.class2.shape[0])])
        return Sample(np.vstack([rows1, rows2]))

    def _margins(self, u, sample=None):
        v, gamma = self.split(u)
        if sample is None:
            s1 = self.class1 @ v - gamma
            s2 = gamma - self.class2 @ v
        else:
            obs = as_sample(sample).observations
            labels = obs[:, -1]
            pts = obs[:, :-1]
            proj = pts @ v
            s1 = proj[labels > 0] - gamma
            s2 = gamma - proj[labels < 0]
        return s1, s2, v

    def saa_value(self, u, sample=None) -> float:
        s1, s2, _ = self._margins(u, sample)
        return float(np.mean(np.maximum(s1, 0.0)) + np.mean(np.maximum(s2, 0.0)))

    def smoothed_value(self, u, sample=None, plan: SmoothingPlan | None = None) -> float:
        s1, s2, v = self._margins(u, sample)
        h_eff = plan.h * float(np.linalg.norm(v))
        if h_eff == 0.0:
            return self.saa_value(u, sample)
        kern = _scalar_kernel(plan.kernel)
        return float(
            np.mean(sm.hinge_conv(kern, s1, h_eff, plan))
            + np.mean(sm.hinge_conv(kern, s2, h_eff, plan))
        )

    def saa_subgradient(self, u, sample=None) -> np.ndarray:
        s1, s2, v = self._margins(u, sample)
        a1 = (s1 > 0).astype(float)
        a2 = (s2 > 0).astype(float)
        gv = a1 @ self.class1 / self.class1.shape[0] - a2 @ self.class2 / self.class2.shape[0]
        gg = -np.mean(a1) + np.mean(a2)
        return np.append(gv, gg)

    def smoothed_subgradient(self, u, sample=None, plan: SmoothingPlan | None = None) -> np.ndarray:
        s1, s2, v = self._margins(u, sample)
        nv = float(np.linalg.norm(v))
        h_eff = plan.h * nv
        if h_eff == 0.0:
            return self.saa_subgradient(u, sample)
        kern = _scalar_kernel(plan.kernel)
        c1 = K.smoothed_hinge_ds(kern, s1, h_eff)
        c2 = K.smoothed_hinge_ds(kern, s2, h_eff)
        d1 = K.smoothed_hinge_dh(kern, s1, h_eff)
        d2 = K.smoothed_hinge_dh(kern, s2, h_eff)
        gv = c1 @ self.class1 / self.class1.shape[0] - c2 @ self.class2 / self.class2.shape[0]
        # bandwidth h||v|| varies with v
        gv = gv + (float(np.mean(d1)) + float(np.mean(d2))) * plan.h * v / nv
        gg = -float(np.mean(c1)) + float(np.mean(c2))
        return np.append(gv, gg)

    def modulus(self) -> sm.ModulusSpec:
        return sm.ModulusSpec(((1.0, 1.0),))


def svm_values(problem: SvmProblem, plan: SmoothingPlan | None = None) -> SolveReport:
    """Solve the (smoothed) classification problem.

    Two features: deterministic grid search over the unit circle with
    local refinement (the sphere constraint is nonconvex, so the grid is
    the global strategy at desk scale).  Higher dimensions fall back to a
    projected subgradient with post-step normalization and carry no global
    optimality claim.
    """
    h = 0.0 if plan is None else plan.h
    g_lo, g_hi = problem.gamma_interval(h)

    def objective_u(u):
        if plan is None or plan.h == 0.0:
            return problem.saa_value(u)
        return problem.smoothed_value(u, plan=plan)

    label = "saa" if (plan is None or plan.h == 0.0) else f"smoothed-{plan.resolve()}"
    if problem.n_features == 2:
        report = sphere_search_2d(
            lambda v, gm: objective_u(np.append(v, gm)),
            g_lo,
            g_hi,
            strategy=f"{label}-sphere-grid",
        )
        return report

    def project(u):
        v, gamma = problem.split(u)
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            v = np.zeros_like(v)
            v[0] = 1.0
        else:
            v = v / nv
        return np.append(v, np.clip(gamma, g_lo, g_hi))

    def gradient(u):
        if plan is None or plan.h == 0.0:
            return problem.saa_subgradient(u)
        return problem.smoothed_subgradient(u, plan=plan)

    x0 = np.append(np.ones(problem.n_features) / math.sqrt(problem.n_features), 0.0)
    report = projected_subgradient(
        objective_u, gradient, project, x0, strategy=f"{label}-sphere-subgradient"
    )
    return report


def _scalar_kernel(kernel: Kernel) -> Kernel:
    """The 1-D kernel used to smooth scalar projections of the data."""
    if kernel.dim == 1:
        return kernel
    if kernel.kind != K.GAUSSIAN:
        raise ValueError("multi-dimensional smoothing requires a Gaussian kernel")
    if not np.allclose(kernel.cov, kernel.cov[0, 0] * np.eye(kernel.dim), atol=1e-14):
        raise ValueError("projection smoothing requires a spherical Gaussian kernel")
    return K.gaussian(np.atleast_2d(kernel.cov[0, 0]))


# ---------------------------------------------------------------------------
# mean-AVaR portfolio selection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PortfolioProblem:
    """Trade off mean return against Average Value-at-Risk at level beta.

    Decisions are allocations u on the box-capped hyperplane
    {sum u = capital, l <= u <= b} plus the AVaR anchor eta.
    """

    returns: np.ndarray  # N x m sample of asset returns
    kappa: float
    beta: float
    capital: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        r = np.atleast_2d(np.asarray(self.returns, dtype=float))
        object.__setattr__(self, "returns", r)
        m = r.shape[1]
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (m,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (m,)).copy()
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must be in (0, 1), got {self.kappa}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must be in (0, 1), got {self.beta}")
        if np.any(lower > upper):
            i = int(np.flatnonzero(lower > upper)[0])
            raise ValueError(f"infeasible bounds: l[{i}]={lower[i]} > b[{i}]={upper[i]}")
        if lower.sum() > self.capital + 1e-12:
            raise ValueError(
                f"infeasible bounds: sum of lower bounds {lower.sum()} exceeds capital {self.capital}"
            )
        if upper.sum() < self.capital - 1e-12:
            raise ValueError(
                f"infeasible bounds: sum of upper bounds {upper.sum()} is below capital {self.capital}"
            )

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    def split(self, u):
        u = np.asarray(u, dtype=float)
        return u[:-1], float(u[-1])

    def sample(self) -> Sample:
        return Sample(self.returns)

    def eta_interval(self, h: float = 0.0):
        """Data-driven interval containing the optimal AVaR anchor.

        Bounds the portfolio return <u, X_i> over the feasible allocations
        for every observation (closed-form greedy linear programs), padded
        by the smoothing width.
        """
        lo = min(_box_simplex_linmin(row, self.capital, self.lower, self.upper)
                 for row in self.returns)
        hi = max(-_box_simplex_linmin(-row, self.capital, self.lower, self.upper)
                 for row in self.returns)
        pad = h * float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))
        return lo - pad - 1e-9, hi + pad + 1e-9

    def term(self, u_full, x) -> float:
        u, eta = self.split(u_full)
        r = float(np.dot(u, x))
        return -self.kappa * r + (1.0 - self.kappa) * (
            -eta + max(0.0, eta - r) / self.beta
        )

    def saa_value(self, u_full, sample=None) -> float:
        u, eta = self.split(u_full)
        data = self.returns if sample is None else as_sample(sample).observations
        r = data @ u
        hinge = np.maximum(eta - r, 0.0)
        return float(
            -self.kappa * np.mean(r)
            + (1.0 - self.kappa) * (-eta + np.mean(hinge) / self.beta)
        )

    def smoothed_value(self, u_full, sample=None, plan: SmoothingPlan | None = None) -> float:
        u, eta = self.split(u_full)
        data = self.returns if sample is None else as_sample(sample).observations
        h_eff = plan.h * float(np.linalg.norm(u))
        if h_eff == 0.0:
            return self.saa_value(u_full, sample)
        kern = _scalar_kernel(plan.kernel)
        r = data @ u
        hinge = sm.hinge_conv(kern, eta - r, h_eff, plan)
        # the linear mean-return term is unchanged: the kernel has zero mean
        return float(
            -self.kappa * np.mean(r)
            + (1.0 - self.kappa) * (-eta + np.mean(hinge) / self.beta)
        )

    def saa_subgradient(self, u_full, sample=None) -> np.ndarray:
        u, eta = self.split(u_full)
        data = self.returns if sample is None else as_sample(sample).observations
        r = data @ u
        active = (eta - r > 0).astype(float)
        coef = (1.0 - self.kappa) / self.beta
        gu = -self.kappa * data.mean(axis=0) - coef * (active @ data) / data.shape[0]
        geta = (1.0 - self.kappa) * (-1.0 + np.mean(active) / self.beta)
        return np.append(gu, geta)

    def smoothed_subgradient(self, u_full, sample=None, plan: SmoothingPlan | None = None) -> np.ndarray:
        u, eta = self.split(u_full)
        data = self.returns if sample is None else as_sample(sample).observations
        nu = float(np.linalg.norm(u))
        h_eff = plan.h * nu
        if h_eff == 0.0:
            return self.saa_subgradient(u_full, sample)
        kern = _scalar_kernel(plan.kernel)
        s = eta - data @ u
        cdf = K.smoothed_hinge_ds(kern, s, h_eff)
        dh = K.smoothed_hinge_dh(kern, s, h_eff)
        coef = (1.0 - self.kappa) / self.beta
        gu = (
            -self.kappa * data.mean(axis=0)
            - coef * (cdf @ data) / data.shape[0]
            + coef * float(np.mean(dh)) * plan.h * u / nu
        )
        geta = (1.0 - self.kappa) * (-1.0 + float(np.mean(cdf)) / self.beta)
        return np.append(gu, geta)

    def modulus(self) -> sm.ModulusSpec:
        c = float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))
        L = c * (self.kappa + (1.0 - self.kappa) / self.beta)
        return sm.ModulusSpec(((L, 1.0),))


def _box_simplex_linmin(cost, capital, lower, upper) -> float:
    """min <cost, u> over {sum u = capital, l <= u <= b}: greedy exact LP."""
    u = lower.copy()
    remaining = capital - lower.sum()
    for i in np.argsort(cost, kind="stable"):
        room = upper[i] - lower[i]
        add = min(room, remaining)
        u[i] += add
        remaining -= add
        if remaining <= 0:
            break
    return float(np.dot(cost, u))


def _portfolio_eta_solve(problem: PortfolioProblem, u: np.ndarray, plan: SmoothingPlan | None):
    """Exact inner minimization over eta at fixed allocations.

    The eta part of the objective is the variational AVaR of the negated
    portfolio returns, so the SAA case reduces to a breakpoint scan and
    the smoothed case to a bracketed 1-D convex search.
    """
    r = problem.returns @ u
    if plan is None or plan.h == 0.0:
        theta, zstar = _avar_saa_batch(-r[None, :], problem.beta)
        return -float(zstar[0]), float(theta[0])
    h_eff = plan.h * float(np.linalg.norm(u))
    if h_eff == 0.0:
        theta, zstar = _avar_saa_batch(-r[None, :], problem.beta)
        return -float(zstar[0]), float(theta[0])
    kern = _scalar_kernel(plan.kernel)
    neg = -r

    def g(z):
        return z + float(np.mean(sm.hinge_conv(kern, neg - z, h_eff, plan))) / problem.beta

    zstar, theta = minimize_convex_1d(g, float(neg.min() - h_eff), float(neg.max() + h_eff), 1e-10)
    return -zstar, theta


def portfolio_value(
    problem: PortfolioProblem,
    plan: SmoothingPlan | None = None,
    max_iter: int = 5000,
) -> SolveReport:
    """Solve the (smoothed) mean-AVaR allocation.

    eta is minimized exactly at every candidate allocation (the inner
    problem is one-dimensional and convex); the allocations follow a
    projected subgradient on the box-capped simplex with steps scaled to
    the feasible-set diameter.  The report's minimizer is (u, eta).
    """
    if plan is not None and plan.h == 0.0:
        plan = None
    label = "saa-subgradient" if plan is None else f"smoothed-{plan.resolve()}-subgradient"

    def project(u):
        return project_box_simplex(u, problem.capital, problem.lower, problem.upper)

    def collapsed(u):
        eta, avar_neg = _portfolio_eta_solve(problem, u, plan)
        r = problem.returns @ u
        value = -problem.kappa * float(np.mean(r)) + (1.0 - problem.kappa) * avar_neg
        return value, eta

    def fun(u):
        return collapsed(u)[0]

    def grad(u):
        eta = collapsed(u)[1]
        w = np.append(u, eta)
        if plan is None:
            return problem.saa_subgradient(w)[:-1]
        return problem.smoothed_subgradient(w, plan=plan)[:-1]

    u0 = project(np.full(problem.n_assets, problem.capital / problem.n_assets))
    diam = float(np.linalg.norm(problem.upper - problem.lower)) or 1.0
    g0 = float(np.linalg.norm(grad(u0)))
    step_a = 11.0 * diam / (4.0 * g0) if g0 > 0 else 1.0
    report = projected_subgradient(
        fun, grad, project, u0, step_a=step_a, max_iter=max_iter, strategy=label
    )
    u_star = report.minimizer
    eta_star, _ = _portfolio_eta_solve(problem, u_star, plan)
    return SolveReport(
        value=report.value,
        minimizer=np.append(u_star, eta_star),
        iterations=report.iterations,
        strategy=report.strategy,
        converged=report.converged,
        tolerance=report.tolerance,
    )
