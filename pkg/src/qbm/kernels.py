"""Time-domain kernels of quantum Brownian motion.

Mean square displacement and the commutator amplitude,

    s(t) = (2 hbar / pi) int_0^inf dw Im alpha(w) coth(hbar w / 2kT) (1 - cos wt)
    c(t) = (2 hbar / pi) int_0^inf dw Im alpha(w) sin wt,

with ``[x(t1), x(t1 + t)] = i c(t)``.  Both are evaluated for ``t >= 0``;
``s`` is even in ``t`` and ``c`` odd, so negative lags follow by symmetry.
"""
from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass
from typing import Union

from .bath import (
    BathSpec,
    DomainError,
    NoDissipation,
    Ohmic,
    Tabulated,
    UnitSystem,
    check_temperature,
)
from .quadrature import DEFAULT_QUAD, QuadratureConfig, integrate, panel_quad

THERMAL_MODES = ("quantum", "classical")


class HighTemperatureWarning(UserWarning):
    """Closed forms valid for kT >> hbar gamma were used outside that regime."""


@dataclass(frozen=True)
class KernelPair:
    t: float
    s: float
    c: float


@dataclass(frozen=True)
class Divergent:
    """Equilibrium variance of an unbound particle."""

    def __repr__(self):
        return "Divergent()"


Variance = Union[float, Divergent]


def _check_time(t: float) -> float:
    t = float(t)
    if not (t >= 0 and math.isfinite(t)):
        raise DomainError(f"time lag must be finite and >= 0, got {t!r}")
    return t


def _thermal_factor(units: UnitSystem, T: float, mode: str):
    """coth(hbar w / 2kT) as a scalar function of w, or its classical limit."""
    if mode not in THERMAL_MODES:
        raise ValueError(f"thermal mode must be one of {THERMAL_MODES}, got {mode!r}")
    kT = units.kT(T)
    if mode == "classical":
        if kT == 0:
            raise DomainError("classical thermal mode needs T > 0")
        scale = 2.0 * kT / units.hbar
        return lambda w: scale / w
    if kT == 0:
        return lambda w: 1.0
    beta = units.hbar / (2.0 * kT)
    return lambda w: 1.0 / math.tanh(beta * w)


def _scalar_response(bath: BathSpec, units: UnitSystem):
    """Fast scalar Im alpha for use inside the adaptive rule."""
    if isinstance(bath, Ohmic):
        g, m = bath.gamma, units.mass
        return lambda w: g / (m * w * (w * w + g * g))
    grid, vals = bath.grid, bath.values
    lo, hi = grid[0], grid[-1]

    def tab(w):
        if w < lo or w > hi:
            return 0.0
        i = bisect.bisect_right(grid, w) - 1
        if i >= len(grid) - 1:
            return vals[-1]
        u = (w - grid[i]) / (grid[i + 1] - grid[i])
        return vals[i] + u * (vals[i + 1] - vals[i])

    return tab


def _features(bath: BathSpec, units: UnitSystem, T: float) -> tuple:
    if isinstance(bath, Ohmic):
        pts = [bath.gamma]
        if T > 0:
            pts.append(2.0 * units.kT(T) / units.hbar)
        return tuple(pts)
    return tuple(bath.grid)


def _support(bath: BathSpec):
    return bath.grid[-1] if isinstance(bath, Tabulated) else None


def mean_square_displacement(bath: BathSpec, units: UnitSystem, T: float, t: float,
                             quad: QuadratureConfig = DEFAULT_QUAD, *,
                             thermal: str = "quantum") -> float:
    """s(t) for lag ``t >= 0``.

    ``thermal="classical"`` replaces coth(hbar w / 2kT) by 2kT / (hbar w),
    the high-temperature form in which the Ohmic integral is exactly the
    closed form of :func:`ohmic_high_t_kernels`.

    Raises ConvergenceError (carrying the partial estimate) when the panel
    series does not settle within ``quad.max_panels``.
    """
    t = _check_time(t)
    T = check_temperature(T)
    if isinstance(bath, NoDissipation):
        return units.kT(T) * t * t / units.mass
    if t == 0:
        return 0.0
    resp = _scalar_response(bath, units)
    coth = _thermal_factor(units, T, thermal)
    pref = 2.0 * units.hbar / math.pi
    origin = 0.0
    if isinstance(bath, Ohmic) and units.kT(T) > 0:
        origin = pref * units.kT(T) * t * t / (units.hbar * units.mass * bath.gamma)

    def f(w):
        return pref * resp(w) * coth(w)

    return integrate(f, t, "cos", quad, breakpoints=_features(bath, units, T),
                     support=_support(bath), origin=origin)


def commutator_amplitude(bath: BathSpec, units: UnitSystem, t: float,
                         quad: QuadratureConfig = DEFAULT_QUAD) -> float:
    """c(t) with [x(t1), x(t1 + t)] = i c(t); independent of temperature."""
    t = _check_time(t)
    if isinstance(bath, NoDissipation):
        return units.hbar * t / units.mass
    if t == 0:
        return 0.0
    resp = _scalar_response(bath, units)
    pref = 2.0 * units.hbar / math.pi

    def f(w):
        return pref * resp(w)

    origin = 0.0
    if isinstance(bath, Ohmic):
        origin = pref * t / (units.mass * bath.gamma)

    return integrate(f, t, "sin", quad, breakpoints=_features(bath, units, 0.0),
                     support=_support(bath), origin=origin)


def kernel_pair(bath: BathSpec, units: UnitSystem, T: float, t: float,
                quad: QuadratureConfig = DEFAULT_QUAD, *, thermal: str = "quantum") -> KernelPair:
    return KernelPair(
        t=float(t),
        s=mean_square_displacement(bath, units, T, t, quad, thermal=thermal),
        c=commutator_amplitude(bath, units, t, quad),
    )


def _ramp(x: float) -> float:
    """x - (1 - exp(-x)), without cancellation for small x."""
    if x < 1e-2:
        # alternating series x^2/2 - x^3/6 + ...; 8 terms reach double precision
        term, total = x * x / 2.0, 0.0
        for n in range(3, 11):
            total += term
            term *= -x / n
        return total
    return x + math.expm1(-x)


def ohmic_high_t_kernels(gamma: float, units: UnitSystem, T: float, t: float) -> KernelPair:
    """Closed-form Ohmic kernels in the regime kT >> hbar gamma.

    The regime is the caller's responsibility; a HighTemperatureWarning is
    emitted when kT < 10 hbar gamma.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    t = _check_time(t)
    kT = units.kT(T)
    if kT < 10.0 * units.hbar * gamma:
        warnings.warn(
            f"kT/(hbar gamma) = {kT / (units.hbar * gamma):.3g} < 10; "
            "high-temperature kernels are outside their regime",
            HighTemperatureWarning, stacklevel=2,
        )
    m = units.mass
    x = gamma * t
    s = 2.0 * kT / (m * gamma**2) * _ramp(x)
    c = units.hbar / (m * gamma) * -math.expm1(-x)
    return KernelPair(t=t, s=s, c=c)


def equilibrium_variance(bath: BathSpec, units: UnitSystem, T: float,
                         quad: QuadratureConfig = DEFAULT_QUAD, *,
                         thermal: str = "quantum") -> Variance:
    """<x^2> = (hbar / pi) int dw Im alpha coth(hbar w / 2kT).

    Free-particle baths (Ohmic, NoDissipation) give ``Divergent()``.  For a
    tabulated bath the integral runs over the grid support and is finite.
    """
    T = check_temperature(T)
    if isinstance(bath, (Ohmic, NoDissipation)):
        return Divergent()
    resp = _scalar_response(bath, units)
    coth = _thermal_factor(units, T, thermal)
    pref = units.hbar / math.pi
    grid = bath.grid
    pieces = []
    for a, b in zip(grid[:-1], grid[1:]):
        val, _ = panel_quad(lambda w: pref * resp(w) * coth(w), a, b, quad)
        pieces.append(val)
    return math.fsum(pieces)
