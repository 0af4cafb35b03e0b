"""Deterministic optimization routines sized to desk-scale instances.

Everything here is chosen for reproducibility and auditability over speed:
fixed contraction schedules, exact projections, and no randomized state.
Identical inputs produce bit-identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


class SolverError(RuntimeError):
    """A solver hit a non-finite value or diverged."""


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one optimization run."""

    value: float
    minimizer: np.ndarray
    iterations: int
    strategy: str
    converged: bool
    tolerance: float

    def __post_init__(self):
        object.__setattr__(self, "minimizer", np.atleast_1d(np.asarray(self.minimizer, dtype=float)))
        if not np.isfinite(self.value):
            raise SolverError(f"non-finite optimal value {self.value!r}")


def minimize_convex_1d(f, lo: float, hi: float, tol: float = 1e-9):
    """Golden-section minimization of a convex f on [lo, hi].

    Value-based contraction, so nonsmooth convex objectives are fine.
    Returns ``(x_star, f_star)`` with ``x_star`` within ``tol`` of the
    minimizer set.
    """
    if not lo < hi:
        raise ValueError(f"invalid bracket [{lo}, {hi}]")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    _check_finite(fc, c)
    _check_finite(fd, d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            _check_finite(fc, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            _check_finite(fd, d)
    x = 0.5 * (a + b)
    fx = f(x)
    _check_finite(fx, x)
    return x, fx


def golden_section_batch(f, lo, hi, tol: float = 1e-9):
    """Vectorized golden section: row r of f(z) must depend on z[r] only.

    Each row contracts its own bracket and freezes once its width reaches
    ``tol``, so results are a pure function of that row's data (identical
    under any batching or execution order).
    """
    a = np.asarray(lo, dtype=float).copy()
    b = np.asarray(hi, dtype=float).copy()
    if np.any(b < a):
        raise ValueError("invalid bracket: hi < lo")
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = f(c)
    fd = f(d)
    width = float(np.max(b - a)) if a.size else 0.0
    max_iter = 2
    if width > tol:
        max_iter += int(np.ceil(np.log(tol / width) / np.log(_INVPHI)))
    for _ in range(max_iter):
        act = (b - a) > tol
        if not np.any(act):
            break
        go_l = act & (fc < fd)
        go_r = act & ~(fc < fd)
        b = np.where(go_l, d, b)
        a = np.where(go_r, c, a)
        cand_c = b - _INVPHI * (b - a)
        cand_d = a + _INVPHI * (b - a)
        probe = np.where(go_l, cand_c, cand_d)
        fp = f(probe)
        if not np.all(np.isfinite(fp[act])):
            bad = int(np.flatnonzero(act & ~np.isfinite(fp))[0])
            raise SolverError(f"non-finite objective in batch row {bad} at z={probe[bad]!r}")
        c, d, fc, fd = (
            np.where(go_l, cand_c, np.where(go_r, d, c)),
            np.where(go_l, c, np.where(go_r, cand_d, d)),
            np.where(go_l, fp, np.where(go_r, fd, fc)),
            np.where(go_l, fc, np.where(go_r, fp, fd)),
        )
    x = 0.5 * (a + b)
    fx = f(x)
    if not np.all(np.isfinite(fx)):
        bad = int(np.flatnonzero(~np.isfinite(fx))[0])
        raise SolverError(f"non-finite objective in batch row {bad}")
    return x, fx


def _check_finite(v, x):
    if not np.isfinite(v):
        raise SolverError(f"non-finite objective value at x={x!r}")


def project_l1_ball(v, t: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of radius t (exact, sorted)."""
    if t <= 0.0:
        raise ValueError("l1 radius must be positive")
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= t:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    cssv = np.cumsum(u) - t
    j = np.arange(1, v.size + 1)
    rho = np.nonzero(u * j > cssv)[0][-1]
    theta = cssv[rho] / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def project_box_simplex(u, capital: float, l, b) -> np.ndarray:
    """Euclidean projection onto {x : sum x = capital, l <= x <= b}.

    Solved by bisection on the shift tau in x = clip(u - tau, l, b); the
    constraint sum is monotone in tau.
    """
    u = np.asarray(u, dtype=float)
    l = np.broadcast_to(np.asarray(l, dtype=float), u.shape)
    b = np.broadcast_to(np.asarray(b, dtype=float), u.shape)
    if np.any(l > b):
        i = int(np.flatnonzero(l > b)[0])
        raise ValueError(f"empty feasible set: l[{i}]={l[i]} > b[{i}]={b[i]}")
    if l.sum() > capital + 1e-12:
        raise ValueError(f"empty feasible set: sum(l)={l.sum()} > capital={capital}")
    if b.sum() < capital - 1e-12:
        raise ValueError(f"empty feasible set: sum(b)={b.sum()} < capital={capital}")
    lo = float(np.min(u - b)) - 1.0
    hi = float(np.max(u - l)) + 1.0
    for _ in range(200):
        tau = 0.5 * (lo + hi)
        s = np.clip(u - tau, l, b).sum()
        if s > capital:
            lo = tau
        else:
            hi = tau
        if hi - lo < 1e-15 * max(1.0, abs(hi) + abs(lo)):
            break
    return np.clip(u - 0.5 * (lo + hi), l, b)


def projected_subgradient(
    fun,
    grad,
    project,
    x0,
    step_a: float = 1.0,
    step_b: float = 10.0,
    max_iter: int = 5000,
    ftol: float = 1e-10,
    patience: int = 100,
    strategy: str = "projected-subgradient",
) -> SolveReport:
    """Projected subgradient iteration with diminishing steps a/(k+b).

    Returns the best iterate seen.  Stops early once the best value has
    not improved by more than ``ftol`` for ``patience`` iterations.
    """
    x = project(np.asarray(x0, dtype=float))
    best_x = x.copy()
    best_f = fun(x)
    if not np.isfinite(best_f):
        raise SolverError(f"non-finite objective at start point {x0!r}")
    last_improved = 0
    k = 0
    for k in range(1, max_iter + 1):
        g = np.asarray(grad(x), dtype=float)
        if not np.all(np.isfinite(g)):
            raise SolverError(f"non-finite subgradient at iteration {k}")
        step = step_a / (k + step_b)
        x = project(x - step * g)
        fx = fun(x)
        if not np.isfinite(fx):
            raise SolverError(f"objective diverged at iteration {k}")
        if fx < best_f - ftol:
            best_f = fx
            best_x = x.copy()
            last_improved = k
        elif fx < best_f:
            best_f = fx
            best_x = x.copy()
        if k - last_improved >= patience:
            break
    converged = k < max_iter
    return SolveReport(
        value=float(best_f),
        minimizer=best_x,
        iterations=k,
        strategy=strategy,
        converged=converged,
        tolerance=ftol,
    )


def sphere_search_2d(
    objective,
    gamma_lo: float,
    gamma_hi: float,
    n_angles: int = 180,
    n_gammas: int = 61,
    refine_rounds: int = 4,
    strategy: str = "sphere-grid",
) -> SolveReport:
    """Exhaustive grid search over unit vectors v = (cos p, sin p) and an
    intercept grid, followed by local grid refinement.  Deterministic.

    ``objective`` is called as ``objective(v, gamma)``.
    """
    if gamma_hi < gamma_lo:
        raise ValueError("invalid gamma interval")
    p_lo, p_hi = 0.0, 2.0 * np.pi
    g_lo, g_hi = float(gamma_lo), float(gamma_hi)
    best = (np.inf, 0.0, g_lo)
    evals = 0
    for _ in range(refine_rounds + 1):
        phis = np.linspace(p_lo, p_hi, n_angles, endpoint=False) if p_hi - p_lo >= 2 * np.pi - 1e-12 \
            else np.linspace(p_lo, p_hi, n_angles)
        gammas = np.linspace(g_lo, g_hi, n_gammas) if g_hi > g_lo else np.array([g_lo])
        for p in phis:
            v = np.array([np.cos(p), np.sin(p)])
            for gm in gammas:
                val = objective(v, gm)
                evals += 1
                if not np.isfinite(val):
                    raise SolverError(f"non-finite objective at angle {p}, gamma {gm}")
                if val < best[0]:
                    best = (val, p, gm)
        # shrink around the incumbent
        p_span = (p_hi - p_lo) / max(n_angles - 1, 1)
        g_span = (g_hi - g_lo) / max(n_gammas - 1, 1)
        p_lo, p_hi = best[1] - 2 * p_span, best[1] + 2 * p_span
        g_lo, g_hi = best[2] - 2 * g_span, best[2] + 2 * g_span
    v = np.array([np.cos(best[1]), np.sin(best[1])])
    return SolveReport(
        value=float(best[0]),
        minimizer=np.append(v, best[2]),
        iterations=evals,
        strategy=strategy,
        converged=True,
        tolerance=max((p_hi - p_lo), (g_hi - g_lo)),
    )
