"""Smoothing kernels and their closed-form convolutions.

All kernels are canonicalized to unit bandwidth (compact kernels live on
[-1, 1], the Gaussian has unit variance by default); the bandwidth h is
applied externally as F(u, x + h*z).  Every kernel is a symmetric
probability density with finite positive second moment, which is what the
bias analysis needs.

The hinge and square convolutions below are the two scalar primitives all
shipped problems reduce to.  Closed forms are validated against quadrature
in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import ndtr, ndtri

UNIFORM = "uniform"
EPANECHNIKOV = "epanechnikov"
GAUSSIAN = "gaussian"

_KINDS = (UNIFORM, EPANECHNIKOV, GAUSSIAN)

#: draw count for Monte Carlo fractional moments of non-spherical Gaussians
MC_MOMENT_DRAWS = 4096
_MC_MOMENT_SEED = 20240901


@dataclass(frozen=True, eq=False)
class Kernel:
    """A unit-bandwidth smoothing kernel.

    Parameters
    ----------
    kind : str
        One of ``"uniform"``, ``"epanechnikov"``, ``"gaussian"``.
    cov : ndarray, optional
        Symmetric positive-definite covariance for the Gaussian kernel
        (enables multi-dimensional smoothing).  Only valid for
        ``kind="gaussian"``; default is the 1-D identity.
    """

    kind: str
    cov: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.cov is not None:
            if self.kind != GAUSSIAN:
                raise ValueError("covariance is only supported for the gaussian kernel")
            cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
            if cov.shape[0] != cov.shape[1]:
                raise ValueError("covariance must be square")
            if not np.allclose(cov, cov.T, atol=1e-12):
                raise ValueError("covariance must be symmetric")
            if np.linalg.eigvalsh(cov).min() <= 0:
                raise ValueError("covariance must be positive definite")
            object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return 1 if self.cov is None else self.cov.shape[0]

    @property
    def is_compact(self) -> bool:
        return self.kind in (UNIFORM, EPANECHNIKOV)

    @property
    def name(self) -> str:
        return self.kind

    def density(self, z):
        """Kernel density K(z); zero outside the support of compact kernels."""
        z = np.asarray(z, dtype=float)
        if self.kind == UNIFORM:
            return np.where(np.abs(z) <= 1.0, 0.5, 0.0)
        if self.kind == EPANECHNIKOV:
            return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z * z), 0.0)
        if self.dim == 1:
            s2 = 1.0 if self.cov is None else float(self.cov[0, 0])
            return np.exp(-0.5 * z * z / s2) / math.sqrt(2.0 * math.pi * s2)
        z2 = np.atleast_2d(z)
        sol = np.linalg.solve(self.cov, z2.T).T
        quad = np.einsum("ij,ij->i", z2, sol)
        norm = math.sqrt((2.0 * math.pi) ** self.dim * np.linalg.det(self.cov))
        out = np.exp(-0.5 * quad) / norm
        return out[0] if np.asarray(z).ndim == 1 else out

    def cdf(self, t):
        """Cumulative distribution of the 1-D kernel."""
        self._require_scalar()
        t = np.asarray(t, dtype=float)
        if self.kind == UNIFORM:
            return np.clip(0.5 * (t + 1.0), 0.0, 1.0)
        if self.kind == EPANECHNIKOV:
            tc = np.clip(t, -1.0, 1.0)
            return 0.25 * (2.0 + 3.0 * tc - tc**3)
        return ndtr(t)

    def ppf(self, u01):
        """Inverse CDF; deterministic sampling transform for u01 in (0, 1)."""
        self._require_scalar()
        u = np.asarray(u01, dtype=float)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise ValueError("u01 must lie strictly inside (0, 1)")
        if self.kind == UNIFORM:
            return 2.0 * u - 1.0
        if self.kind == EPANECHNIKOV:
            # Exact root of the cubic CDF (2 + 3t - t^3)/4 = u.
            return 2.0 * np.sin(np.arcsin(2.0 * u - 1.0) / 3.0)
        return ndtri(u)

    def m2(self) -> float:
        """Second moment m2(K) = int ||z||^2 K(z) dz."""
        if self.kind == UNIFORM:
            return 1.0 / 3.0
        if self.kind == EPANECHNIKOV:
            return 0.2
        return 1.0 if self.cov is None else float(np.trace(self.cov))

    def mbar(self, alpha: float) -> float:
        """Fractional absolute moment int ||z||^alpha K(z) dz, alpha in [0, 2].

        Closed forms cover the compact kernels and spherical Gaussians; a
        non-spherical Gaussian falls back to a fixed-seed Monte Carlo
        average over ``MC_MOMENT_DRAWS`` draws.
        """
        if not 0.0 <= alpha <= 2.0:
            raise ValueError(f"alpha must be in [0, 2], got {alpha}")
        if self.kind == UNIFORM:
            return 1.0 / (alpha + 1.0)
        if self.kind == EPANECHNIKOV:
            return 3.0 / ((alpha + 1.0) * (alpha + 3.0))
        m = self.dim
        spherical = self.cov is None or np.allclose(
            self.cov, self.cov[0, 0] * np.eye(m), atol=1e-14
        )
        if spherical:
            sigma = 1.0 if self.cov is None else math.sqrt(float(self.cov[0, 0]))
            # chi-distribution moment: E||Z||^a for Z ~ N(0, sigma^2 I_m)
            return float(
                sigma**alpha
                * 2.0 ** (alpha / 2.0)
                * _gamma((m + alpha) / 2.0)
                / _gamma(m / 2.0)
            )
        if alpha == 0.0:
            return 1.0
        if alpha == 2.0:
            return float(np.trace(self.cov))
        rng = np.random.default_rng(_MC_MOMENT_SEED)
        chol = np.linalg.cholesky(self.cov)
        draws = rng.standard_normal((MC_MOMENT_DRAWS, m)) @ chol.T
        return float(np.mean(np.linalg.norm(draws, axis=1) ** alpha))

    def _require_scalar(self):
        if self.dim != 1:
            raise ValueError("operation requires a 1-D kernel")


@dataclass(frozen=True)
class KernelMoments:
    """Second and fractional absolute moments of a kernel."""

    m2: float
    mbar: dict[float, float]


def uniform() -> Kernel:
    return Kernel(UNIFORM)


def epanechnikov() -> Kernel:
    return Kernel(EPANECHNIKOV)


def gaussian(cov=None) -> Kernel:
    return Kernel(GAUSSIAN, cov=None if cov is None else np.asarray(cov, dtype=float))


def density(kernel: Kernel, z):
    """Evaluate K(z)."""
    return kernel.density(z)


def moments(kernel: Kernel, alphas) -> KernelMoments:
    """Compute m2 and the requested fractional moments of a kernel."""
    return KernelMoments(m2=kernel.m2(), mbar={float(a): kernel.mbar(float(a)) for a in alphas})


def sample_kernel(kernel: Kernel, u01):
    """Inverse-CDF draw from the kernel density at uniform variate u01."""
    return kernel.ppf(u01)


def smoothed_hinge(kernel: Kernel, s, h):
    """Closed form of int max(0, s + h*z) K(z) dz for a 1-D kernel.

    Convex and non-decreasing in s, and >= max(0, s) by Jensen's
    inequality with the symmetric kernel.  Requires h > 0; use the plain
    hinge for h = 0.
    """
    kernel._require_scalar()
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0.0):
        raise ValueError("bandwidth h must be positive")
    s = np.asarray(s, dtype=float)
    t = s / h
    if kernel.kind == UNIFORM:
        mid = (s + h) ** 2 / (4.0 * h)
    elif kernel.kind == EPANECHNIKOV:
        tc = np.clip(t, -1.0, 1.0)
        mid = h * (3.0 / 16.0 + tc / 2.0 + 3.0 * tc**2 / 8.0 - tc**4 / 16.0)
    else:
        out = s * ndtr(t) + h * _phi(t)
        return out if out.ndim else float(out)
    out = np.where(t >= 1.0, s, np.where(t <= -1.0, 0.0, mid))
    return out if out.ndim else float(out)


def smoothed_hinge_ds(kernel: Kernel, s, h):
    """d/ds of the smoothed hinge; equals the kernel CDF at s/h."""
    if np.any(np.asarray(h, dtype=float) <= 0.0):
        raise ValueError("bandwidth h must be positive")
    return kernel.cdf(np.asarray(s, dtype=float) / np.asarray(h, dtype=float))


def smoothed_hinge_dh(kernel: Kernel, s, h):
    """d/dh of the smoothed hinge: the partial moment int_{z > -s/h} z K(z) dz."""
    kernel._require_scalar()
    h = np.asarray(h, dtype=float)
    if np.any(h <= 0.0):
        raise ValueError("bandwidth h must be positive")
    t = np.asarray(s, dtype=float) / h
    if kernel.kind == UNIFORM:
        tc = np.clip(t, -1.0, 1.0)
        out = (1.0 - tc * tc) / 4.0
    elif kernel.kind == EPANECHNIKOV:
        tc = np.clip(t, -1.0, 1.0)
        out = 3.0 / 16.0 * (1.0 - tc * tc) ** 2
    else:
        out = _phi(t)
    return out if out.ndim else float(out)


def smoothed_square(kernel: Kernel, s, h):
    """Closed form of int (s + h*z)^2 K(z) dz = s^2 + h^2 * m2(K).

    The cross term vanishes because the kernel is symmetric. Exact for
    every kernel, including h = 0.
    """
    kernel._require_scalar()
    h = np.asarray(h, dtype=float)
    if np.any(h < 0.0):
        raise ValueError("bandwidth h must be non-negative")
    s = np.asarray(s, dtype=float)
    out = s * s + h * h * kernel.m2()
    return out if out.ndim else float(out)


def _phi(t):
    return np.exp(-0.5 * np.asarray(t, dtype=float) ** 2) / math.sqrt(2.0 * math.pi)
