"""Measuring functions and the characteristic-function route to distributions.

A measuring function alpha(x) describes the instrument: the probability of a
reading near x1 is ||alpha(x - x1) Phi||^2 dx1.  For quantum Brownian motion
the characteristic functions of the one- and two-time reading distributions
are Gaussian factors times overlap integrals of the Fourier-transformed
measuring functions.  This module evaluates those integrals numerically and
inverts them, which gives an independent check of the closed-form Gaussian
distributions in :mod:`qbm.observables`.

Phase convention
----------------
The two-time integrand carries ``exp{q1 k2 [x(t1), x(t2)]}``.  The commutator
is the c-number ``i * c12`` with ``c12`` real, so the factor is the pure phase
``exp(1j * q1 * k2 * c12)``.  With this reading the Gaussian-slit result has
second-reading variance ``sigma2^2 + c12^2 / (4 sigma1^2) + <x^2>``, which is
the closed form.  A real exponent would flip the sign of the c12^2 term.  The
Gaussian-slit closed forms depend only on c12^2, so they do not fix the sign
of c12.  We take the commutator exactly as written.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .bath import DomainError
from .kernels import Divergent
from .quadrature import DEFAULT_QUAD, ConvergenceError, QuadratureConfig

# Gaussian overlap integrands fall below 1e-13 beyond |q| = 8 / sigma
Q_CUTOFF = 8.0
_MIN_NODES = 32
_MAX_NODES = 1 << 13


class AliasingError(ValueError):
    """The characteristic function has not decayed at the edge of its k-grid."""


@dataclass(frozen=True)
class GaussianSlit:
    sigma: float
    center: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("slit width sigma must be positive")


@dataclass(frozen=True)
class DoubleSlit:
    """Two Gaussian packets of width ``sigma`` separated by ``d``."""

    d: float
    sigma: float
    center: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("slit width sigma must be positive")
        if not self.d > 0:
            raise DomainError("slit separation d must be positive")

    @property
    def norm(self) -> float:
        s2 = self.sigma**2
        return (8.0 * math.pi * s2 * (1.0 + math.exp(-self.d**2 / (8.0 * s2))) ** 2) ** 0.25


MeasuringFunction = Union[GaussianSlit, DoubleSlit]


def alpha_value(mf: MeasuringFunction, x):
    x = np.asarray(x, dtype=float) - mf.center
    s2 = mf.sigma**2
    if isinstance(mf, GaussianSlit):
        out = (2.0 * math.pi * s2) ** -0.25 * np.exp(-x * x / (4.0 * s2))
    elif isinstance(mf, DoubleSlit):
        h = mf.d / 2.0
        out = (np.exp(-(x - h) ** 2 / (4.0 * s2)) + np.exp(-(x + h) ** 2 / (4.0 * s2))) / mf.norm
    else:
        raise TypeError(f"unknown measuring function {mf!r}")
    return out if out.ndim else float(out)


def alpha_fourier(mf: MeasuringFunction, q):
    """int dx alpha(x) exp(-i q x), in closed form."""
    q = np.asarray(q, dtype=float)
    s2 = mf.sigma**2
    phase = np.exp(-1j * q * mf.center)
    if isinstance(mf, GaussianSlit):
        out = (8.0 * math.pi * s2) ** 0.25 * np.exp(-s2 * q * q) * phase
    elif isinstance(mf, DoubleSlit):
        gauss = math.sqrt(4.0 * math.pi * s2) * np.exp(-s2 * q * q)
        out = 2.0 * gauss * np.cos(q * mf.d / 2.0) * phase / mf.norm
    else:
        raise TypeError(f"unknown measuring function {mf!r}")
    return out if out.ndim else complex(out)


def _overlap_nodes(mf: MeasuringFunction, n: int):
    qmax = Q_CUTOFF / mf.sigma
    x, w = np.polynomial.legendre.leggauss(n)
    return qmax * x, qmax * w


def _overlap(mf: MeasuringFunction, k, n: int, phase_rate=None):
    """(1/2pi) int dq conj(A(q - k/2)) A(q + k/2) exp(i q p) on Gauss nodes.

    ``k`` has shape (K,); ``phase_rate`` (shape (P,) or None) adds the factor
    exp(i q p) and gives a (K, P) result.
    """
    q, w = _overlap_nodes(mf, n)
    k = np.asarray(k, dtype=float)
    prod = np.conj(alpha_fourier(mf, q[:, None] - k[None, :] / 2)) * alpha_fourier(
        mf, q[:, None] + k[None, :] / 2
    )
    prod *= (w / (2.0 * math.pi))[:, None]
    if phase_rate is None:
        return prod.sum(axis=0)
    ph = np.exp(1j * q[:, None] * np.asarray(phase_rate, dtype=float)[None, :])
    return np.einsum("qk,qp->kp", prod, ph)


def _converged(fn, quad: QuadratureConfig, what: str):
    n = _MIN_NODES
    prev = fn(n)
    while n < _MAX_NODES:
        n *= 2
        cur = fn(n)
        err = float(np.max(np.abs(cur - prev))) if np.size(cur) else 0.0
        scale = float(np.max(np.abs(cur))) if np.size(cur) else 0.0
        if err <= max(quad.abs_tol, quad.rel_tol * scale):
            return cur
        prev = cur
    raise ConvergenceError(f"{what}: Gauss rule not converged at {n} nodes", prev, err)


def _finite_variance(x2_mean) -> float:
    if isinstance(x2_mean, Divergent):
        raise DomainError("characteristic function needs a finite <x^2>")
    v = float(x2_mean)
    if not v >= 0:
        raise DomainError("<x^2> must be nonnegative")
    return v


def xi_single(mf: MeasuringFunction, x2_mean, k1, quad: QuadratureConfig = DEFAULT_QUAD):
    """Characteristic function of the one-time reading distribution."""
    v = _finite_variance(x2_mean)
    k = np.atleast_1d(np.asarray(k1, dtype=float))
    overlap = _converged(lambda n: _overlap(mf, k, n), quad, "xi_single")
    out = np.exp(-0.5 * k * k * v) * overlap
    return out if np.ndim(k1) else complex(out[0])


def _check_covariance(cov) -> np.ndarray:
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (2, 2) or not np.allclose(cov, cov.T, rtol=0, atol=1e-14 * np.abs(cov).max()):
        raise DomainError("covariance must be a symmetric 2x2 matrix")
    eig = np.linalg.eigvalsh(cov)
    if eig[0] < -1e-12 * max(eig[-1], 1.0):
        raise DomainError(f"covariance is not positive semidefinite (eigenvalues {eig})")
    return cov


def kernel_covariance(x2_mean, s: float) -> np.ndarray:
    """Symmetrized two-time covariance from <x^2> and s(t2 - t1)."""
    v = _finite_variance(x2_mean)
    off = v - 0.5 * s
    return np.array([[v, off], [off, v]])


def xi_joint(mf1: MeasuringFunction, mf2: MeasuringFunction, covariance, c12: float,
             k1, k2, quad: QuadratureConfig = DEFAULT_QUAD):
    """Characteristic function of the two-time reading distribution.

    ``k1`` and ``k2`` are 1-d grids; the result has shape ``(len(k1), len(k2))``
    (scalars in, complex scalar out).  The (q1, q2) integral uses a
    tensor-product Gauss-Legendre rule.  The integrand is a product of a q1
    factor and a q2 factor, so the double sum is carried out as a product of
    two single sums.  This gives exactly the same result as the full
    double sum.
    """
    cov = _check_covariance(covariance)
    scalar = np.ndim(k1) == 0 and np.ndim(k2) == 0
    k1 = np.atleast_1d(np.asarray(k1, dtype=float))
    k2 = np.atleast_1d(np.asarray(k2, dtype=float))
    first = _converged(lambda n: _overlap(mf1, k1, n, phase_rate=k2 * c12), quad, "xi_joint q1")
    second = _converged(lambda n: _overlap(mf2, k2, n), quad, "xi_joint q2")
    K1, K2 = np.meshgrid(k1, k2, indexing="ij")
    gauss = np.exp(-0.5 * (cov[0, 0] * K1 * K1 + 2.0 * cov[0, 1] * K1 * K2 + cov[1, 1] * K2 * K2))
    out = gauss * first * second[None, :]
    return complex(out[0, 0]) if scalar else out


@dataclass(frozen=True)
class InvertedDistribution:
    x: np.ndarray | tuple[np.ndarray, np.ndarray]
    density: np.ndarray
    imag_residue: float


def _uniform_step(k: np.ndarray, name: str) -> float:
    if k.ndim != 1 or k.size < 2:
        raise DomainError(f"{name} must be a 1-d grid with at least 2 points")
    dk = np.diff(k)
    if np.any(dk <= 0) or not np.allclose(dk, dk[0], rtol=1e-9, atol=0):
        raise DomainError(f"{name} must be uniformly spaced and ascending")
    return float(dk[0])


def _edge_max(xi: np.ndarray) -> float:
    if xi.ndim == 1:
        return float(max(abs(xi[0]), abs(xi[-1])))
    edges = np.concatenate([xi[0, :], xi[-1, :], xi[:, 0], xi[:, -1]])
    return float(np.max(np.abs(edges)))


def invert_characteristic(k, xi, x=None, *, strict: bool = True,
                          decay_tol: float = 1e-12) -> InvertedDistribution:
    """W(x) = int dk/2pi xi(k) exp(-i k x) by a discrete Fourier sum.

    Without ``x`` the output lives on the FFT-conjugate grid of ``k``
    (spacing 2 pi / (N dk), centered at 0).  With ``x`` the sum is carried
    out directly at the requested points.  ``strict`` enforces
    |xi| < ``decay_tol`` on the grid edge; failing that raises AliasingError.
    """
    k = np.asarray(k, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != k.shape:
        raise DomainError("xi must be sampled on k")
    dk = _uniform_step(k, "k")
    if strict and _edge_max(xi) >= decay_tol:
        raise AliasingError(
            f"|xi| = {_edge_max(xi):.3g} at the k-grid edge exceeds {decay_tol:g}; widen the grid"
        )
    if x is None:
        n = k.size
        x = np.fft.fftshift(np.fft.fftfreq(n, d=dk / (2.0 * math.pi)))
        spec = np.fft.fftshift(np.fft.fft(xi))
        w = dk / (2.0 * math.pi) * np.exp(-1j * k[0] * x) * spec
    else:
        x = np.asarray(x, dtype=float)
        w = dk / (2.0 * math.pi) * (np.exp(-1j * np.multiply.outer(x, k)) @ xi)
    return InvertedDistribution(x=x, density=w.real.copy(), imag_residue=float(np.max(np.abs(w.imag))))


def invert_characteristic_2d(k1, k2, xi, x1, x2, *, strict: bool = True,
                             decay_tol: float = 1e-12) -> InvertedDistribution:
    """Two-variable version of :func:`invert_characteristic` on explicit x-grids.

    ``xi`` has shape (len(k1), len(k2)); the density has shape
    (len(x1), len(x2)).
    """
    k1 = np.asarray(k1, dtype=float)
    k2 = np.asarray(k2, dtype=float)
    xi = np.asarray(xi, dtype=complex)
    if xi.shape != (k1.size, k2.size):
        raise DomainError("xi must be sampled on the k1 x k2 grid")
    dk1, dk2 = _uniform_step(k1, "k1"), _uniform_step(k2, "k2")
    if strict and _edge_max(xi) >= decay_tol:
        raise AliasingError(
            f"|xi| = {_edge_max(xi):.3g} at the k-grid edge exceeds {decay_tol:g}; widen the grid"
        )
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    e1 = np.exp(-1j * np.multiply.outer(x1, k1))
    e2 = np.exp(-1j * np.multiply.outer(x2, k2))
    w = (dk1 * dk2 / (4.0 * math.pi**2)) * (e1 @ xi @ e2.T)
    return InvertedDistribution(x=(x1, x2), density=w.real.copy(), imag_residue=float(np.max(np.abs(w.imag))))


def _auto_grid(sd_lo: float, extent: float, decay: float = 1e-13) -> np.ndarray:
    """Symmetric k-grid: edge where a Gaussian of width 1/sd_lo drops below
    ``decay``, and spacing fine enough that the alias period covers ``extent``."""
    kmax = math.sqrt(2.0 * math.log(1.0 / decay)) / sd_lo
    dk = 2.0 * math.pi / extent
    n = int(2 * math.ceil(kmax / dk)) + 1
    return np.linspace(-kmax, kmax, n)


def joint_density_oracle(mf1: MeasuringFunction, mf2: MeasuringFunction, x2_mean, s: float,
                         c12: float, x1, x2, quad: QuadratureConfig = DEFAULT_QUAD,
                         max_grid: int = 2049) -> InvertedDistribution:
    """W(1,2) on an (x1, x2) grid via xi_joint and Fourier inversion.

    The k-grid is chosen from the distribution's own widths and grown until
    the characteristic function has decayed on its edge.
    """
    cov = kernel_covariance(x2_mean, s)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    # conservative widths: conditional spreads bound the decay of xi along each axis
    v = cov[0, 0]
    var1 = v + mf1.sigma**2
    var2 = v + mf2.sigma**2 + c12**2 / (4.0 * mf1.sigma**2)
    rho2 = min(cov[0, 1] ** 2 / (var1 * var2), 1.0 - 1e-12)
    sd_lo1 = math.sqrt(var1 * (1.0 - rho2))
    sd_lo2 = math.sqrt(var2 * (1.0 - rho2))
    reach = max(np.max(np.abs(x1)), np.max(np.abs(x2)))
    sep = max(getattr(mf1, "d", 0.0), getattr(mf2, "d", 0.0))
    extent = 2.0 * (reach + sep + 12.0 * math.sqrt(max(var1, var2)))
    scale = 1.0
    while True:
        k1 = _auto_grid(sd_lo1 / scale, extent)
        k2 = _auto_grid(sd_lo2 / scale, extent)
        if max(k1.size, k2.size) > max_grid:
            raise AliasingError(f"k-grid would exceed {max_grid} points per axis")
        xi = xi_joint(mf1, mf2, cov, c12, k1, k2, quad)
        if _edge_max(xi) < 1e-12:
            return invert_characteristic_2d(k1, k2, xi, x1, x2)
        scale *= 1.5
