"""Half-period panel quadrature for Fourier-type integrals on [0, inf).

``integrate(f, t, kind)`` evaluates

    sin kind:  int_0^inf f(w) sin(w t) dw
    cos kind:  int_0^inf f(w) (1 - cos(w t)) dw

for a smooth, eventually monotone ``f``.  The range is cut at zeros of the
oscillating factor into panels of length pi/t.  Each panel goes to QUADPACK's
adaptive Gauss-Kronrod rule; the alternating panel series of the tail is
summed with Wynn's epsilon algorithm.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from scipy import integrate as _spi


class ConvergenceError(RuntimeError):
    """Quadrature did not meet its tolerance.  ``estimate`` holds the partial sum."""

    def __init__(self, message: str, estimate: float, error: float = math.nan):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_panels: int = 10**6

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if int(self.max_panels) < 1:
            raise ValueError("max_panels must be >= 1")
        object.__setattr__(self, "max_panels", int(self.max_panels))


DEFAULT_QUAD = QuadratureConfig()

_MIN_TAIL_TERMS = 6


def panel_quad(f, a, b, cfg: QuadratureConfig):
    if b <= a:
        return 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", _spi.IntegrationWarning)
        try:
            val, err = _spi.quad(
                f, a, b, epsabs=cfg.abs_tol * 1e-3, epsrel=cfg.rel_tol * 1e-2,
                limit=400,
            )
        except _spi.IntegrationWarning:
            warnings.simplefilter("ignore", _spi.IntegrationWarning)
            val, err = _spi.quad(
                f, a, b, epsabs=cfg.abs_tol * 1e-3, epsrel=cfg.rel_tol * 1e-2,
                limit=2000,
            )
    return val, err


def wynn_epsilon(partial_sums) -> tuple[float, float]:
    """Extrapolated limit of a sequence of partial sums and an error estimate.

    Returns the most advanced even-column entry of the epsilon table and the
    distance to its predecessor in the same column.
    """
    s = [float(v) for v in partial_sums]
    n = len(s)
    if n == 0:
        return 0.0, math.inf
    if n < 3:
        return s[-1], abs(s[-1] - s[-2]) if n == 2 else math.inf
    prev = [0.0] * (n + 1)
    cur = s[:]
    best, best_prev = s[-1], s[-2]
    col = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            diff = cur[i + 1] - cur[i]
            if diff == 0.0:
                # sequence has converged exactly in this column
                nxt = None
                break
            nxt.append(prev[i + 1] + 1.0 / diff)
        if nxt is None:
            if col % 2 == 0:
                return cur[-1], 0.0
            return best, abs(best - best_prev)
        prev, cur = cur, nxt
        col += 1
        if col % 2 == 0 and len(cur) >= 2:
            best, best_prev = cur[-1], cur[-2]
    return best, abs(best - best_prev)


def _panel_edges(a: float, b: float, extra=()) -> list[float]:
    pts = {a, b}
    pts.update(p for p in extra if a < p < b)
    return sorted(pts)


def integrate(f, t: float, kind: str, cfg: QuadratureConfig = DEFAULT_QUAD, *,
              breakpoints=(), support: float | None = None, origin: float = 0.0) -> float:
    """Integral of ``f`` against ``sin(w t)`` or ``1 - cos(w t)`` over w >= 0.

    ``support`` is an upper frequency beyond which ``f`` vanishes identically;
    when given no tail series is needed.  ``breakpoints`` mark features of
    ``f`` (kinks, widths) that panel edges should include.  ``origin`` is the
    w -> 0 limit of the full integrand, used instead of sampling at w = 0.
    """
    if kind not in ("sin", "cos"):
        raise ValueError(f"kind must be 'sin' or 'cos', got {kind!r}")
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0:
        return 0.0
    h = math.pi / t
    if kind == "sin":
        def g(w):
            if w == 0.0:
                return origin
            return f(w) * math.sin(w * t)
    else:
        def g(w):
            if w == 0.0:
                return origin
            s = math.sin(0.5 * w * t)
            return 2.0 * f(w) * s * s

    if support is not None:
        n_panels = math.ceil(support / h)
        if n_panels > cfg.max_panels:
            raise ConvergenceError(
                f"{n_panels} panels needed on the bath support, max_panels={cfg.max_panels}",
                math.nan,
            )
        edges = [k * h for k in range(n_panels)] + [support]
        edges = _panel_edges(0.0, support, list(edges) + list(breakpoints))
        return math.fsum(panel_quad(g, a, b, cfg)[0] for a, b in zip(edges[:-1], edges[1:]))

    # head: up to the first zero of the oscillating factor past one panel
    head_end = h if kind == "sin" else 1.5 * h
    feats = [p for p in breakpoints if 0 < p < head_end]
    # geometric refinement above each small feature so the adaptive rule
    # sees every scale between it and the first zero
    for p in list(feats):
        q = p * 10.0
        while q < head_end:
            feats.append(q)
            q *= 10.0
    edges = _panel_edges(0.0, head_end, feats)
    head = math.fsum(panel_quad(g, a, b, cfg)[0] for a, b in zip(edges[:-1], edges[1:]))

    total_nonosc = 0.0
    if kind == "cos":
        total_nonosc, _ = panel_quad(f, head_end, math.inf, cfg)
        def osc(w):
            return -f(w) * math.cos(w * t)
    else:
        osc = g

    partial = []
    running = 0.0
    estimate, err = running, math.inf
    for j in range(cfg.max_panels):
        a = head_end + j * h
        term, _ = panel_quad(osc, a, a + h, cfg)
        running += term
        partial.append(running)
        if len(partial) >= _MIN_TAIL_TERMS:
            estimate, err = wynn_epsilon(partial[-40:])
            scale = abs(head + total_nonosc + estimate)
            if err <= max(cfg.abs_tol, cfg.rel_tol * scale) * 0.1:
                return head + total_nonosc + estimate
    raise ConvergenceError(
        f"tail series not converged after {cfg.max_panels} panels",
        head + total_nonosc + (estimate if partial else 0.0),
        err,
    )
