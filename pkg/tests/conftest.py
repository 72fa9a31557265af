import numpy as np
import pytest

from qbm import Tabulated, UnitSystem


def oscillator_response(w, w0=1.0, gamma=0.3, mass=1.0):
    """Im alpha of a damped harmonic oscillator (a bound particle)."""
    return gamma * w / (mass * ((w0**2 - w**2) ** 2 + gamma**2 * w**2))


@pytest.fixture
def units():
    return UnitSystem()


@pytest.fixture
def bound_bath():
    w = np.linspace(0.05, 5.0, 200)
    return Tabulated(w, oscillator_response(w))



def pytest_terminal_summary(terminalreporter):
    # acceptance tests attach their PASS/FAIL line as an "acceptance" property
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if getattr(rep, "when", None) != "call":
                continue
            lines += [v for k, v in rep.user_properties if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
