"""Command-line sweeps over kernels, spreading, interference and attenuation.

Every subcommand builds a :class:`Scenario` from (lowest to highest
precedence) built-in defaults, a ``--scenario`` key-value file, the
``QBM_REL_TOL`` / ``QBM_ABS_TOL`` / ``QBM_MAX_PANELS`` environment variables
and command-line flags.  Output is CSV with a ``#`` metadata block, or JSON.

Exit codes: 0 success, 1 numerical failure (partial output written),
2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .bath import DomainError, NoDissipation, Ohmic, Tabulated, UnitSystem
from .kernels import (
    HighTemperatureWarning,
    KernelPair,
    THERMAL_MODES,
    commutator_amplitude,
    equilibrium_variance,
    mean_square_displacement,
    ohmic_high_t_kernels,
)
from .measurement import GaussianSlit, joint_density_oracle
from .observables import (
    attenuation,
    attenuation_no_dissipation,
    decoherence_time,
    interference_profile,
    joint_distribution,
    joint_gaussian_params,
    long_time_attenuation_rate,
    measured_decoherence_time,
    measured_fringe_ratio,
    packet_width,
)
from .quadrature import ConvergenceError, QuadratureConfig

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

SUBCOMMANDS = ("kernels", "spread", "interference", "attenuation", "oracle", "decoherence-time")

# option name -> (type, default); names double as scenario-file keys
OPTIONS = {
    "bath": (str, "ohmic"),
    "gamma": (float, 1.0),
    "temp": (float, 1.0),
    "sigma1": (float, 1.0),
    "sigma2": (float, 0.0),
    "d": (float, 10.0),
    "t-start": (float, 0.0),
    "t-end": (float, 1.0),
    "t-points": (int, 11),
    "t-scale": (str, "linear"),
    "time": (float, None),
    "x-min": (float, -10.0),
    "x-max": (float, 10.0),
    "x-points": (int, 201),
    "hbar": (float, 1.0),
    "mass": (float, 1.0),
    "kb": (float, 1.0),
    "rel-tol": (float, 1e-9),
    "abs-tol": (float, 1e-12),
    "max-panels": (int, 10**6),
    "thermal": (str, "quantum"),
    "format": (str, "csv"),
    "precision": (int, 12),
}

ENV_OVERRIDES = {"QBM_REL_TOL": "rel-tol", "QBM_ABS_TOL": "abs-tol", "QBM_MAX_PANELS": "max-panels"}


class UsageError(ValueError):
    """Invalid flags, scenario file or scenario combination."""


class UnsupportedScenarioError(UsageError):
    """The scenario cannot be evaluated by the requested subcommand."""


@dataclass(frozen=True)
class TimeGrid:
    start: float
    end: float
    points: int
    spacing: str = "linear"

    def __post_init__(self):
        if self.points < 2:
            raise UsageError("time grid needs at least 2 points")
        if not (self.start >= 0 and self.end > self.start):
            raise UsageError("time grid needs 0 <= t-start < t-end")
        if self.spacing not in ("linear", "log"):
            raise UsageError("t-scale must be 'linear' or 'log'")
        if self.spacing == "log" and self.start <= 0:
            raise UsageError("log time spacing needs t-start > 0")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.start, self.end, self.points)
        return np.linspace(self.start, self.end, self.points)


@dataclass(frozen=True)
class Scenario:
    units: UnitSystem
    bath: object
    temperature: float
    sigma1: float
    sigma2: float
    d: float
    time_grid: TimeGrid
    x_grid: tuple[float, float, int]
    quad: QuadratureConfig
    thermal: str = "quantum"
    time: float | None = None
    options: dict = field(default_factory=dict, compare=False)

    @property
    def fixed_time(self) -> float:
        return self.time_grid.end if self.time is None else self.time

    def xs(self) -> np.ndarray:
        lo, hi, n = self.x_grid
        return np.linspace(lo, hi, n)


@dataclass
class SweepOutput:
    header: list
    rows: list
    metadata: dict
    failed: bool = False


def _coerce(name: str, raw):
    kind = OPTIONS[name][0]
    try:
        if kind is int:
            value = float(raw)
            if value != int(value):
                raise ValueError
            return int(value)
        return kind(raw)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {name}: {raw!r}") from None


def read_scenario_file(path) -> dict:
    """Parse ``key = value`` lines; keys are flag names without dashes prefix."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read scenario file: {exc}") from None
    if not text.lstrip().startswith("["):
        text = "[scenario]\n" + text
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise UsageError(f"malformed scenario file {path}: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            name = key.strip().replace("_", "-")
            if name not in OPTIONS:
                raise UsageError(f"unknown scenario key {key!r} in {path}")
            values[name] = _coerce(name, raw.strip())
    return values


def resolve_options(flags: dict, environ=None) -> dict:
    environ = os.environ if environ is None else environ
    opts = {name: default for name, (_, default) in OPTIONS.items()}
    if flags.get("scenario"):
        opts.update(read_scenario_file(flags["scenario"]))
    for var, name in ENV_OVERRIDES.items():
        if environ.get(var):
            opts[name] = _coerce(name, environ[var])
    for name in OPTIONS:
        value = flags.get(name.replace("-", "_"))
        if value is not None:
            opts[name] = value
    return opts


def _parse_bath(spec: str, gamma: float):
    if spec == "ohmic":
        return Ohmic(gamma)
    if spec in ("none", "nodissipation"):
        return NoDissipation()
    if spec.startswith("tabulated:"):
        path = spec.split(":", 1)[1]
        try:
            return Tabulated.from_file(path)
        except OSError as exc:
            raise UsageError(f"cannot read tabulated bath: {exc}") from None
    raise UsageError(f"unknown bath {spec!r}; use ohmic, none or tabulated:<file>")


def build_scenario(opts: dict) -> Scenario:
    try:
        units = UnitSystem(hbar=opts["hbar"], boltzmann=opts["kb"], mass=opts["mass"])
        bath = _parse_bath(opts["bath"], opts["gamma"])
        quad = QuadratureConfig(opts["rel-tol"], opts["abs-tol"], opts["max-panels"])
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if not opts["temp"] >= 0:
        raise UsageError("temperature must be >= 0")
    if not opts["sigma1"] > 0 or opts["sigma2"] < 0 or not opts["d"] > 0:
        raise UsageError("need sigma1 > 0, sigma2 >= 0 and d > 0")
    if opts["x-points"] < 2 or not opts["x-max"] > opts["x-min"]:
        raise UsageError("x grid needs x-points >= 2 and x-max > x-min")
    if opts["thermal"] not in THERMAL_MODES:
        raise UsageError(f"thermal must be one of {THERMAL_MODES}")
    if opts["format"] not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    if opts["time"] is not None and opts["time"] < 0:
        raise UsageError("time must be >= 0")
    grid = TimeGrid(opts["t-start"], opts["t-end"], opts["t-points"], opts["t-scale"])
    return Scenario(
        units=units, bath=bath, temperature=opts["temp"], sigma1=opts["sigma1"],
        sigma2=opts["sigma2"], d=opts["d"], time_grid=grid,
        x_grid=(opts["x-min"], opts["x-max"], opts["x-points"]), quad=quad,
        thermal=opts["thermal"], time=opts["time"], options=dict(opts),
    )


def _bath_echo(bath) -> dict:
    if isinstance(bath, Ohmic):
        return {"variant": "ohmic", "gamma": bath.gamma}
    if isinstance(bath, NoDissipation):
        return {"variant": "none"}
    return {"variant": "tabulated", "grid": list(bath.grid), "values": list(bath.values)}


def _metadata(sc: Scenario, command: str, **extra) -> dict:
    meta = {
        "command": command,
        "version": __version__,
        "scenario": {k: sc.options[k] for k in sorted(sc.options) if k not in ("format", "precision")},
        "bath": _bath_echo(sc.bath),
        "tolerances": {"rel_tol": sc.quad.rel_tol, "abs_tol": sc.quad.abs_tol,
                       "max_panels": sc.quad.max_panels},
    }
    meta.update(extra)
    return meta


def _kernels_at(sc: Scenario, t: float):
    """(KernelPair, status) with partial estimates kept on non-convergence."""
    status = "ok"
    try:
        s = mean_square_displacement(sc.bath, sc.units, sc.temperature, t, sc.quad, thermal=sc.thermal)
    except ConvergenceError as exc:
        s, status = exc.estimate, "nonconverged"
    try:
        c = commutator_amplitude(sc.bath, sc.units, t, sc.quad)
    except ConvergenceError as exc:
        c, status = exc.estimate, "nonconverged"
    return KernelPair(t=float(t), s=s, c=c), status


def _closed_kernels(sc: Scenario, t: float):
    if isinstance(sc.bath, Ohmic):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", HighTemperatureWarning)
            return ohmic_high_t_kernels(sc.bath.gamma, sc.units, sc.temperature, t)
    if isinstance(sc.bath, NoDissipation):
        kT = sc.units.kT(sc.temperature)
        return KernelPair(t=t, s=kT * t * t / sc.units.mass, c=sc.units.hbar * t / sc.units.mass)
    return None


def run_kernels(sc: Scenario) -> SweepOutput:
    closed = not isinstance(sc.bath, Tabulated)
    header = ["t", "s", "c"] + (["s_closed", "c_closed"] if closed else []) + ["status"]
    rows, failed = [], False
    for t in sc.time_grid.values():
        kp, status = _kernels_at(sc, t)
        row = [kp.t, kp.s, kp.c]
        if closed:
            ck = _closed_kernels(sc, kp.t)
            row += [ck.s, ck.c]
        rows.append(row + [status])
        failed |= status != "ok"
    extra = {}
    if isinstance(sc.bath, Ohmic) and sc.temperature > 0:
        extra["kT_over_hbar_gamma"] = sc.units.kT(sc.temperature) / (sc.units.hbar * sc.bath.gamma)
    return SweepOutput(header, rows, _metadata(sc, "kernels", **extra), failed)


def run_spread(sc: Scenario) -> SweepOutput:
    header = ["t", "s", "c", "w2", "status"]
    rows, failed = [], False
    for t in sc.time_grid.values():
        kp, status = _kernels_at(sc, t)
        rows.append([kp.t, kp.s, kp.c, packet_width(sc.sigma1, sc.sigma2, kp).w2, status])
        failed |= status != "ok"
    return SweepOutput(header, rows, _metadata(sc, "spread"), failed)


def run_attenuation(sc: Scenario) -> SweepOutput:
    with_free = sc.temperature > 0
    header = ["t", "w2", "a"] + (["a_no_dissipation"] if with_free else []) + ["status"]
    rows, failed = [], False
    for t in sc.time_grid.values():
        kp, status = _kernels_at(sc, t)
        row = [kp.t, packet_width(sc.sigma1, sc.sigma2, kp).w2,
               attenuation(sc.d, sc.sigma1, sc.sigma2, kp)]
        if with_free:
            row.append(attenuation_no_dissipation(kp.t, sc.d, sc.sigma1, sc.units, sc.temperature))
        rows.append(row + [status])
        failed |= status != "ok"
    return SweepOutput(header, rows, _metadata(sc, "attenuation"), failed)


def run_interference(sc: Scenario) -> SweepOutput:
    t = sc.fixed_time
    kp, status = _kernels_at(sc, t)
    prof = interference_profile(sc.xs(), sc.d, sc.sigma1, sc.sigma2, kp)
    try:
        measured = measured_fringe_ratio(prof)
    except DomainError:
        measured = None
    rows = [[x, p] for x, p in zip(prof.x_grid, prof.p)]
    meta = _metadata(sc, "interference", time=t, attenuation=prof.attenuation,
                     measured_fringe_ratio=measured, w2=packet_width(sc.sigma1, sc.sigma2, kp).w2,
                     kernel_status=status)
    return SweepOutput(["x", "P"], rows, meta, status != "ok")


def run_oracle(sc: Scenario) -> SweepOutput:
    if not isinstance(sc.bath, Tabulated):
        raise UnsupportedScenarioError(
            "oracle needs a finite equilibrium variance; use --bath tabulated:<file>"
        )
    t = sc.fixed_time
    kp, status = _kernels_at(sc, t)
    v = equilibrium_variance(sc.bath, sc.units, sc.temperature, sc.quad, thermal=sc.thermal)
    if sc.sigma2 <= 0:
        raise UnsupportedScenarioError("oracle needs sigma2 > 0 (a finite-width second slit)")
    jg = joint_gaussian_params(sc.sigma1, sc.sigma2, v, kp)
    xs = sc.xs()
    inv = joint_density_oracle(GaussianSlit(sc.sigma1), GaussianSlit(sc.sigma2), v, kp.s, kp.c,
                               xs, xs, sc.quad)
    X1, X2 = np.meshgrid(xs, xs, indexing="ij")
    closed = joint_distribution(jg, X1, X2)
    err = np.abs(closed - inv.density)
    rows = [[X1[i, j], X2[i, j], closed[i, j], inv.density[i, j], err[i, j]]
            for i in range(xs.size) for j in range(xs.size)]
    meta = _metadata(sc, "oracle", time=t, x2_mean=v, s=kp.s, c=kp.c,
                     sigma=jg.sigma, tau=jg.tau, rho=jg.rho, linf=float(err.max()),
                     imag_residue=inv.imag_residue, kernel_status=status)
    return SweepOutput(["x1", "x2", "W_closed", "W_oracle", "abs_err"], rows, meta, status != "ok")


def run_decoherence_time(sc: Scenario) -> SweepOutput:
    if not sc.temperature > 0:
        raise UsageError("decoherence-time needs temp > 0")
    est = decoherence_time(sc.d, sc.sigma1, sc.units, sc.temperature, sc.bath)
    rate = None
    if isinstance(sc.bath, Ohmic):
        rate = long_time_attenuation_rate(sc.d, sc.units, sc.temperature, sc.bath.gamma)
    measured = measured_decoherence_time(sc.time_grid.values(), sc.d, sc.sigma1, sc.units,
                                         sc.temperature)
    header = ["tau_d", "d_gg_sigma1", "d_gg_lambda_bar", "gamma_tau_d_small",
              "long_time_rate", "tau_d_measured"]
    row = [est.tau_d, est.well_separated, est.beyond_wavelength, est.weak_damping, rate, measured]
    lam = sc.units.thermal_wavelength(sc.temperature)
    meta = _metadata(sc, "decoherence-time", lambda_bar=lam,
                     v_bar=sc.units.thermal_velocity(sc.temperature),
                     regime_factor=10.0)
    return SweepOutput(header, [row], meta)


RUNNERS = {
    "kernels": run_kernels,
    "spread": run_spread,
    "interference": run_interference,
    "attenuation": run_attenuation,
    "oracle": run_oracle,
    "decoherence-time": run_decoherence_time,
}


def _fmt(value, precision: int) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return f"{float(value):.{precision}g}"


def _json_value(value, precision: int):
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    v = float(value)
    return float(f"{v:.{precision}g}") if math.isfinite(v) else None


def render(out: SweepOutput, fmt: str = "csv", precision: int = 12) -> str:
    if fmt == "json":
        doc = {
            "metadata": out.metadata,
            "columns": out.header,
            "rows": [[_json_value(v, precision) for v in row] for row in out.rows],
        }
        return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False,
                          default=lambda v: _json_value(v, precision)) + "\n"
    lines = []
    for key in sorted(out.metadata):
        lines.append(f"# {key}: {json.dumps(out.metadata[key], sort_keys=True)}")
    lines.append(",".join(out.header))
    for row in out.rows:
        lines.append(",".join(_fmt(v, precision) for v in row))
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", help="key = value file; flags override it")
    common.add_argument("--bath", help="ohmic | none | tabulated:<file>")
    for name in ("gamma", "temp", "sigma1", "sigma2", "d", "t-start", "t-end", "time",
                 "x-min", "x-max", "hbar", "mass", "kb", "rel-tol", "abs-tol"):
        common.add_argument(f"--{name}", type=float)
    for name in ("t-points", "x-points", "max-panels", "precision"):
        common.add_argument(f"--{name}", type=int)
    common.add_argument("--t-scale", choices=("linear", "log"))
    common.add_argument("--thermal", choices=THERMAL_MODES,
                        help="classical replaces coth(hbar w/2kT) by 2kT/(hbar w)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--out", help="output path (default stdout)")

    parser = argparse.ArgumentParser(prog="qbm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(vars(args))
        scenario = build_scenario(opts)
        result = RUNNERS[args.command](scenario)
    except UsageError as exc:
        print(f"qbm {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, ArithmeticError, DomainError) as exc:
        print(f"qbm {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(result, opts["format"], opts["precision"])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if result.failed:
        print(f"qbm {args.command}: some rows did not converge", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
