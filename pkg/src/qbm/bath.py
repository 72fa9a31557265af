"""Response functions of the dissipative environment and the unit context.

The environment enters every computation only through ``Im alpha(omega + i0+)``
on ``omega > 0``.  Three variants are supported: Ohmic, vanishing dissipation
(handled analytically by the kernels) and a tabulated response.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of the requested quantity."""


class UnsupportedVariantError(ValueError):
    """The bath variant has no pointwise representation for this operation."""


@dataclass(frozen=True)
class UnitSystem:
    hbar: float = 1.0
    boltzmann: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "boltzmann", "mass"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    def kT(self, T: float) -> float:
        return self.boltzmann * check_temperature(T)

    def thermal_wavelength(self, T: float) -> float:
        """Mean thermal de Broglie wavelength hbar / sqrt(m k T)."""
        if check_temperature(T) == 0:
            raise DomainError("thermal wavelength is undefined at T = 0")
        return self.hbar / math.sqrt(self.mass * self.boltzmann * T)

    def thermal_velocity(self, T: float) -> float:
        """Mean thermal velocity sqrt(k T / m)."""
        if check_temperature(T) == 0:
            raise DomainError("thermal velocity vanishes at T = 0")
        return math.sqrt(self.boltzmann * T / self.mass)


def check_temperature(T: float) -> float:
    T = float(T)
    if not (T >= 0 and math.isfinite(T)):
        raise DomainError(f"temperature must be finite and >= 0, got {T!r}")
    return T


def thermal_scales(units: UnitSystem, T: float) -> tuple[float, float]:
    """Return ``(lambda_bar, v_bar)`` at temperature ``T > 0``."""
    return units.thermal_wavelength(T), units.thermal_velocity(T)


@dataclass(frozen=True)
class Ohmic:
    """Mean motion obeys m<x''> + m gamma <x'> = 0."""

    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError(f"Ohmic gamma must be positive, got {self.gamma!r}")


@dataclass(frozen=True)
class NoDissipation:
    """Free particle in the limit gamma -> 0."""


@dataclass(frozen=True)
class Tabulated:
    """Im alpha sampled on an ascending grid; linear in between, zero outside."""

    grid: tuple[float, ...]
    values: tuple[float, ...]
    _grid: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise DomainError("grid and values must be 1-d arrays of equal length")
        if grid.size < 2:
            raise DomainError("a tabulated bath needs at least 2 grid points")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(values)):
            raise DomainError("grid and values must be finite")
        if grid[0] <= 0:
            raise DomainError("tabulated frequencies must be positive")
        if np.any(np.diff(grid) <= 0):
            raise DomainError("tabulated grid must be strictly ascending")
        if np.any(values < 0):
            raise DomainError("tabulated Im alpha must be nonnegative (passivity)")
        object.__setattr__(self, "grid", tuple(grid.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "_grid", grid)
        object.__setattr__(self, "_values", values)

    @classmethod
    def from_file(cls, path) -> "Tabulated":
        """Read two columns (omega, Im alpha), comma or whitespace separated."""
        with open(path) as fh:
            text = fh.read()
        rows = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except (ValueError, IndexError):
                # a header row such as "omega,im_alpha"
                if rows:
                    raise DomainError(f"malformed tabulated bath line: {line!r}")
        if not rows:
            raise DomainError(f"no data rows in {path}")
        grid, values = zip(*rows)
        return cls(grid, values)

    @property
    def support(self) -> tuple[float, float]:
        return self.grid[0], self.grid[-1]


BathSpec = Union[Ohmic, NoDissipation, Tabulated]


def im_alpha(bath: BathSpec, units: UnitSystem, omega):
    """Imaginary part of the response function at ``omega > 0``.

    Accepts a scalar or an array of frequencies.  ``NoDissipation`` has no
    pointwise response (it is a delta function at the origin); the kernels
    use its analytic limits instead, so it raises here.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0)):
        raise DomainError("im_alpha requires omega > 0")
    if isinstance(bath, Ohmic):
        g = bath.gamma
        out = g / (units.mass * w * (w * w + g * g))
    elif isinstance(bath, Tabulated):
        out = np.interp(w, bath._grid, bath._values, left=0.0, right=0.0)
    elif isinstance(bath, NoDissipation):
        raise UnsupportedVariantError(
            "NoDissipation has no pointwise Im alpha; use the analytic kernel limits"
        )
    else:
        raise TypeError(f"unknown bath variant {bath!r}")
    return out if out.ndim else float(out)
