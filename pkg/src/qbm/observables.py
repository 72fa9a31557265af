"""Closed-form measurement statistics built from the kernels s(t) and c(t).

All commutator-bearing expressions use the real amplitude ``c`` with
``[x(t1), x(t1 + t)] = i c``, so ``-[x, x]^2`` becomes ``+c^2`` and the
interference phase is real.  ``sigma2`` defaults to 0 (an ideal second
measurement) wherever decoherence is concerned.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bath import BathSpec, DomainError, Ohmic, UnitSystem
from .kernels import Divergent, KernelPair

# regime thresholds for ">>" in the decoherence estimate
REGIME_FACTOR = 10.0
SMALL_GAMMA_TAU = 0.1


class InconsistentInputsError(ValueError):
    """Kernel values and variance do not define a normalizable distribution."""


@dataclass(frozen=True)
class JointGaussian:
    sigma: float
    tau: float
    rho: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.tau > 0):
            raise DomainError("sigma and tau must be positive")
        if not self.rho**2 < 1:
            raise InconsistentInputsError(f"rho^2 = {self.rho**2:.17g} >= 1")


@dataclass(frozen=True)
class SpreadResult:
    t: float
    w2: float


@dataclass(frozen=True)
class InterferenceProfile:
    t: float
    x_grid: np.ndarray
    p: np.ndarray
    attenuation: float
    # the three terms inside the bracket, before the common prefactor
    fringe: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    phase_rate: float = 0.0
    prefactor: float = 1.0


@dataclass(frozen=True)
class DecoherenceEstimate:
    tau_d: float
    well_separated: bool
    beyond_wavelength: bool
    weak_damping: bool | None


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value!r}")
    return value


def _finite_variance(x2_mean) -> float:
    if isinstance(x2_mean, Divergent):
        raise DomainError("a finite equilibrium variance is required")
    return float(x2_mean)


def joint_gaussian_params(sigma1: float, sigma2: float, x2_mean, kernels: KernelPair) -> JointGaussian:
    """(sigma, tau, rho) of the two-time reading distribution.

    sigma^2 = sigma1^2 + <x^2>
    tau^2   = sigma2^2 + c^2 / (4 sigma1^2) + <x^2>
    2 sigma tau rho = 2 <x^2> - s
    """
    sigma1 = _positive("sigma1", sigma1)
    v = _finite_variance(x2_mean)
    sig2 = sigma1**2 + v
    tau2 = sigma2**2 + kernels.c**2 / (4.0 * sigma1**2) + v
    if not (sig2 > 0 and tau2 > 0):
        raise InconsistentInputsError("non-positive marginal variance")
    sigma, tau = math.sqrt(sig2), math.sqrt(tau2)
    rho = (2.0 * v - kernels.s) / (2.0 * sigma * tau)
    if not rho**2 < 1:
        raise InconsistentInputsError(f"rho^2 = {rho**2:.17g} >= 1 for these kernels")
    return JointGaussian(sigma, tau, rho)


def single_distribution(sigma, x1):
    """One-time reading density; ``sigma`` may be a JointGaussian."""
    if isinstance(sigma, JointGaussian):
        sigma = sigma.sigma
    sigma = _positive("sigma", sigma)
    x1 = np.asarray(x1, dtype=float)
    return np.exp(-x1 * x1 / (2.0 * sigma**2)) / math.sqrt(2.0 * math.pi * sigma**2)


def joint_distribution(jg: JointGaussian, x1, x2):
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    a, b, r = jg.sigma, jg.tau, jg.rho
    one = 1.0 - r * r
    q = (x1 / a) ** 2 - 2.0 * r * x1 * x2 / (a * b) + (x2 / b) ** 2
    return np.exp(-q / (2.0 * one)) / (2.0 * math.pi * a * b * math.sqrt(one))


def packet_width(sigma1: float, sigma2: float, kernels: KernelPair) -> SpreadResult:
    """Mean square width w^2 = sigma1^2 + c^2/(4 sigma1^2) + s + sigma2^2."""
    sigma1 = _positive("sigma1", sigma1)
    w2 = sigma1**2 + kernels.c**2 / (4.0 * sigma1**2) + kernels.s + sigma2**2
    return SpreadResult(t=kernels.t, w2=w2)


def conditional_spread(x, sigma1: float, sigma2: float, kernels: KernelPair):
    """Free-particle conditional density of the displacement x after lag t."""
    w2 = packet_width(sigma1, sigma2, kernels).w2
    x = np.asarray(x, dtype=float)
    return np.exp(-x * x / (2.0 * w2)) / math.sqrt(2.0 * math.pi * w2)


def attenuation(d: float, sigma1: float, sigma2: float, kernels: KernelPair) -> float:
    """Ratio of the fringe amplitude to twice the geometric mean of the slit terms."""
    sigma1 = _positive("sigma1", sigma1)
    w2 = packet_width(sigma1, sigma2, kernels).w2
    return math.exp(-(kernels.s + sigma2**2) * d * d / (8.0 * sigma1**2 * w2))


def interference_profile(x_grid, d: float, sigma1: float, sigma2: float,
                         kernels: KernelPair) -> InterferenceProfile:
    """Conditional reading density after a two-packet (cat state) preparation."""
    d = _positive("d", d)
    sigma1 = _positive("sigma1", sigma1)
    x = np.asarray(x_grid, dtype=float)
    s1sq = sigma1**2
    w2 = packet_width(sigma1, sigma2, kernels).w2
    rate = d * kernels.c / (4.0 * s1sq * w2)
    envelope = np.exp(-(x * x + (s1sq + kernels.s + sigma2**2) * d * d / (4.0 * s1sq)) / (2.0 * w2))
    fringe = envelope * np.cos(x * rate)
    left = 0.5 * np.exp(-(x - d / 2.0) ** 2 / (2.0 * w2))
    right = 0.5 * np.exp(-(x + d / 2.0) ** 2 / (2.0 * w2))
    pref = 1.0 / (math.sqrt(2.0 * math.pi * w2) * (1.0 + math.exp(-d * d / (8.0 * s1sq))))
    p = pref * (fringe + left + right)
    return InterferenceProfile(
        t=kernels.t, x_grid=x, p=p, attenuation=attenuation(d, sigma1, sigma2, kernels),
        fringe=fringe, left=left, right=right, phase_rate=rate, prefactor=pref,
    )


def measured_fringe_ratio(profile: InterferenceProfile) -> float:
    """Fringe-to-envelope amplitude ratio recovered from the density itself.

    The fringe term is isolated as p / prefactor minus the two slit terms and
    divided by cos(rate x) times twice the geometric mean of the slit terms.
    The grid point with the best conditioning is used.
    """
    x, p = profile.x_grid, profile.p
    left, right = profile.left, profile.right
    geo = 2.0 * np.sqrt(left * right)
    cosv = np.cos(profile.phase_rate * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = (left + right) / (geo * np.abs(cosv))
    cond[~np.isfinite(cond)] = np.inf
    i = int(np.argmin(cond))
    if not np.isfinite(cond[i]):
        raise DomainError("no grid point resolves the fringe term")
    fringe = p[i] / profile.prefactor - left[i] - right[i]
    return float(fringe / (geo[i] * cosv[i]))


def attenuation_no_dissipation(t: float, d: float, sigma1: float, units: UnitSystem, T: float) -> float:
    """Attenuation of a free, undamped particle at temperature T > 0.

    Equals 1 at t = 0 by continuity.
    """
    sigma1 = _positive("sigma1", sigma1)
    T = _positive("T", T)
    t = float(t)
    if t < 0:
        raise DomainError("t must be >= 0")
    if t == 0:
        return 1.0
    kT = units.boltzmann * T
    lam2 = units.thermal_wavelength(T) ** 2
    denom = 8.0 * sigma1**2 + 2.0 * lam2 + 8.0 * units.mass * sigma1**4 / (kT * t * t)
    return math.exp(-d * d / denom)


def decoherence_time(d: float, sigma1: float, units: UnitSystem, T: float,
                     bath: BathSpec | None = None) -> DecoherenceEstimate:
    """tau_d = sigma1^2 / (v_bar d), with regime flags.

    The flags test d >= 10 sigma1, d >= 10 lambda_bar and (Ohmic only)
    gamma tau_d < 0.1.  tau_d itself does not depend on the bath.
    """
    d = _positive("d", d)
    sigma1 = _positive("sigma1", sigma1)
    T = _positive("T", T)
    tau_d = sigma1**2 / (units.thermal_velocity(T) * d)
    weak = None
    if isinstance(bath, Ohmic):
        weak = bath.gamma * tau_d < SMALL_GAMMA_TAU
    return DecoherenceEstimate(
        tau_d=tau_d,
        well_separated=d >= REGIME_FACTOR * sigma1,
        beyond_wavelength=d >= REGIME_FACTOR * units.thermal_wavelength(T),
        weak_damping=weak,
    )


def measured_decoherence_time(t_grid, d: float, sigma1: float, units: UnitSystem, T: float):
    """Smallest grid time at which 8 m sigma1^4 / (kT t^2) has fallen to 8 d^2.

    Returns None when no grid time reaches the crossover.
    """
    sigma1 = _positive("sigma1", sigma1)
    T = _positive("T", T)
    kT = units.boltzmann * T
    for t in np.asarray(t_grid, dtype=float):
        if t > 0 and units.mass * sigma1**4 / (kT * t * t) <= d * d * (1 + 1e-12):
            return float(t)
    return None


def long_time_attenuation_rate(d: float, units: UnitSystem, T: float, gamma: float) -> float:
    """Asymptotic decay rate d^2 gamma / lambda_bar^2 of a(t) for gamma t >> 1."""
    gamma = _positive("gamma", gamma)
    return d * d * gamma / units.thermal_wavelength(T) ** 2
