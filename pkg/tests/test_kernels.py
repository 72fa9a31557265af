import math
import warnings

import numpy as np
import pytest

from qbm import (
    DomainError,
    Divergent,
    HighTemperatureWarning,
    NoDissipation,
    Ohmic,
    Tabulated,
    UnitSystem,
    commutator_amplitude,
    equilibrium_variance,
    kernel_pair,
    mean_square_displacement,
    ohmic_high_t_kernels,
)

from conftest import oscillator_response

# Ohmic s(t) with the full coth weight, from mpmath (30 digits, quad on
# [0, gamma] plus quadosc on [gamma, inf)); keys are (gamma, kT, t).
MPMATH_S = {
    (1.0, 1.0, 1.0): 0.82312363542259837,
    (1.0, 0.0, 1.0): 0.33537250849096421,
    (0.5, 2.0, 3.0): 11.632462927477186,
    (2.0, 0.1, 0.5): 0.16898185620066777,
    (1.0, 1.0, 20.0): 38.149693917273608,
}


@pytest.mark.parametrize("key", sorted(MPMATH_S))
def test_ohmic_msd_matches_mpmath(units, key):
    gamma, T, t = key
    assert mean_square_displacement(Ohmic(gamma), units, T, t) == pytest.approx(MPMATH_S[key], rel=1e-9)


def test_no_dissipation_limits():
    u = UnitSystem()
    assert mean_square_displacement(NoDissipation(), u, 10.0, 1.0) == 10.0
    assert commutator_amplitude(NoDissipation(), u, 3.0) == 3.0


@pytest.mark.parametrize("bath", [Ohmic(1.0), NoDissipation(), Tabulated([1.0, 2.0], [0.1, 0.3])])
def test_zero_lag(units, bath):
    assert mean_square_displacement(bath, units, 1.0, 0.0) == 0.0
    assert commutator_amplitude(bath, units, 0.0) == 0.0


def test_negative_lag_rejected(units):
    with pytest.raises(DomainError):
        mean_square_displacement(Ohmic(1.0), units, 1.0, -0.1)
    with pytest.raises(DomainError):
        commutator_amplitude(Ohmic(1.0), units, -0.1)


def test_high_t_closed_form_values(units):
    kp = ohmic_high_t_kernels(1.0, units, 10.0, 1.0)
    # 2kT/(m gamma) (t - (1 - e^-1)) = 20/e ; (hbar/m gamma)(1 - e^-1)
    assert kp.s == pytest.approx(20.0 / math.e, rel=1e-14)
    assert kp.c == pytest.approx(1.0 - 1.0 / math.e, rel=1e-14)
    # gamma = 2: (2kT/(m gamma^2)) (gamma t - 1 + e^{-gamma t}) at gamma t = 1
    assert ohmic_high_t_kernels(2.0, units, 40.0, 0.5).s == pytest.approx(20.0 / math.e, rel=1e-14)
    zero = ohmic_high_t_kernels(1.0, units, 10.0, 0.0)
    assert (zero.s, zero.c) == (0.0, 0.0)


def test_high_t_short_time_law(units):
    gamma, T = 2.0, 50.0
    t = 1e-4 / gamma
    kp = ohmic_high_t_kernels(gamma, units, T, t)
    assert kp.s / (T * t * t) == pytest.approx(1.0, abs=1e-3)
    assert kp.c / t == pytest.approx(1.0, abs=1e-3)
    # s = kT t^2 (1 - x/3 + x^2/12 - ...), x = gamma t
    x = gamma * t
    assert kp.s / (T * t * t) == pytest.approx(1.0 - x / 3.0 + x * x / 12.0, rel=1e-12)


def test_high_t_warning_outside_regime(units):
    with pytest.warns(HighTemperatureWarning):
        ohmic_high_t_kernels(1.0, units, 1.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ohmic_high_t_kernels(1.0, units, 100.0, 1.0)


def test_commutator_quadrature_matches_closed_form(units):
    for t in (0.01, 0.3, 1.0, 4.0):
        c = commutator_amplitude(Ohmic(1.0), units, t)
        assert c == pytest.approx(-math.expm1(-t), rel=1e-9)


@pytest.mark.parametrize("gamma", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("t", np.geomspace(1e-2, 10, 7))
def test_classical_mode_reproduces_high_t_closed_form(units, t, gamma):
    s = mean_square_displacement(Ohmic(gamma), units, 100.0, t, thermal="classical")
    c = commutator_amplitude(Ohmic(gamma), units, t)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HighTemperatureWarning)
        closed = ohmic_high_t_kernels(gamma, units, 100.0, t)
    assert s == pytest.approx(closed.s, rel=1e-8)
    assert c == pytest.approx(closed.c, rel=1e-8)


@pytest.mark.parametrize("t, tol", [(0.01, 2e-2), (0.1, 2e-3), (1.0, 2e-3), (10.0, 2e-3)])
def test_quantum_correction_to_high_t_form(units, t, tol):
    # coth x - 1/x ~ x/3 gives s - s_closed ~ hbar^2 (1 - e^{-gamma t}) / (6 m kT);
    # leading order only, and less uniform once 1/t approaches kT/hbar
    kT = 1000.0
    s = mean_square_displacement(Ohmic(1.0), units, kT, t)
    closed = ohmic_high_t_kernels(1.0, units, kT, t).s
    lead = -math.expm1(-t) / (6.0 * kT)
    assert (s - closed) == pytest.approx(lead, rel=tol)


def test_commutator_independent_of_temperature(units):
    # the commutator takes no temperature, and s at 2T differs from s at T
    bath = Ohmic(0.7)
    assert kernel_pair(bath, units, 1.0, 2.0).c == kernel_pair(bath, units, 2.0, 2.0).c
    assert kernel_pair(bath, units, 1.0, 2.0).s != kernel_pair(bath, units, 2.0, 2.0).s


def test_ohmic_msd_nondecreasing(units):
    ts = np.linspace(0.0, 15.0, 31)
    s = [mean_square_displacement(Ohmic(1.0), units, 1.0, t) for t in ts]
    assert np.all(np.diff(s) >= 0)


def test_zero_temperature_msd_positive(units):
    # quantum zero-point contribution survives at T = 0 with dissipation
    assert mean_square_displacement(Ohmic(1.0), units, 0.0, 1.0) > 0


@pytest.mark.parametrize("bath", [Ohmic(1.0), NoDissipation()])
def test_free_particle_variance_diverges(units, bath):
    assert isinstance(equilibrium_variance(bath, units, 1.0), Divergent)


def test_tabulated_variance_flat_grid_trapezoid(units):
    # flat response on [1, 3]; independent dense trapezoid of (hbar/pi) r coth(w/2kT)
    bath = Tabulated([1.0, 3.0], [0.2, 0.2])
    T = 0.8
    w = np.linspace(1.0, 3.0, 200001)
    ref = np.trapezoid(0.2 / np.tanh(w / (2 * T)), w) / math.pi
    assert equilibrium_variance(bath, units, T) == pytest.approx(ref, rel=1e-9)


def test_tabulated_variance_zero_temperature(units):
    bath = Tabulated([1.0, 3.0], [0.2, 0.2])
    assert equilibrium_variance(bath, units, 0.0) == pytest.approx(0.4 / math.pi, rel=1e-12)


def test_variance_consistent_with_msd_and_correlation(units, bound_bath):
    # s(t) = 2<x^2> - 2 C(t), C(t) = (hbar/pi) int Im alpha coth cos(wt); C by trapezoid
    T, t = 1.0, 2.3
    w = np.linspace(0.05, 5.0, 400001)
    r = np.interp(w, bound_bath.grid, bound_bath.values)
    corr = np.trapezoid(r / np.tanh(w / (2 * T)) * np.cos(w * t), w) / math.pi
    v = equilibrium_variance(bound_bath, units, T)
    s = mean_square_displacement(bound_bath, units, T, t)
    assert s == pytest.approx(2 * v - 2 * corr, rel=1e-8)


def test_tabulated_kernels_against_trapezoid(units, bound_bath):
    t = 3.0
    w = np.linspace(0.05, 5.0, 400001)
    r = np.interp(w, bound_bath.grid, bound_bath.values)
    c_ref = 2 / math.pi * np.trapezoid(r * np.sin(w * t), w)
    assert commutator_amplitude(bound_bath, units, t) == pytest.approx(c_ref, rel=1e-8)


def test_tabulated_oscillator_variance_near_classical_equipartition(units):
    # high T: <x^2> -> kT / (m w0^2) for a lightly damped oscillator
    w = np.linspace(1e-3, 40.0, 40000)
    bath = Tabulated(w, oscillator_response(w, gamma=0.05))
    assert equilibrium_variance(bath, units, 20.0) == pytest.approx(20.0, rel=2e-3)


def test_thermal_mode_validation(units):
    with pytest.raises(ValueError):
        mean_square_displacement(Ohmic(1.0), units, 1.0, 1.0, thermal="bogus")
    with pytest.raises(DomainError):
        mean_square_displacement(Ohmic(1.0), units, 0.0, 1.0, thermal="classical")
