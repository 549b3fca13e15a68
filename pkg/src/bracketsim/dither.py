"""Periodic dither signals and their iterated-integral coefficients.

Dithers are bounded, zero-mean, 2*pi-periodic excitations written as
functions of phase.  This module verifies those three properties,
computes the single and nested phase integrals of frequency-scaled
dithers, and evaluates the averaged pair coefficient

    gamma_ij(omega) = omega^(p_i + p_j) / T *
                      int_0^T int_0^theta u_j(omega theta) u_i(omega tau) dtau dtheta,

with ``T = 2 pi / omega``, together with its high-frequency limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionViolationError, InputError, NumericsError

__all__ = [
    "DitherSignal",
    "sine",
    "cosine",
    "square",
    "custom",
    "check_dither_assumptions",
    "DitherCheck",
    "big_v",
    "big_v2",
    "gamma",
    "gamma_limit",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class DitherSignal:
    """A 2*pi-periodic scalar excitation as a function of phase.

    ``value`` must accept scalars and numpy arrays.  ``antiderivative``,
    when present, is the exact running integral ``U(s) = int_0^s u``,
    which quadrature uses as a closed-form inner integral.
    ``breakpoints`` lists jump phases within one period so composite
    rules can split panels there (square waves integrate exactly).
    """

    value: Callable
    label: str
    kind: str = "custom"  # "sine" | "cosine" | "square" | "custom"
    antiderivative: Optional[Callable] = None
    breakpoints: tuple[float, ...] = ()

    def __call__(self, s):
        return self.value(s)


def sine(phase: float = 0.0) -> DitherSignal:
    def value(s):
        if type(s) is float:  # hot path in steppers
            return math.sin(s + phase)
        return np.sin(s + phase)

    return DitherSignal(
        value=value,
        label=f"sin(s{phase:+g})" if phase else "sin",
        kind="sine",
        antiderivative=lambda s: math.cos(phase) - np.cos(s + phase),
    )


def cosine(phase: float = 0.0) -> DitherSignal:
    def value(s):
        if type(s) is float:
            return math.cos(s + phase)
        return np.cos(s + phase)

    return DitherSignal(
        value=value,
        label=f"cos(s{phase:+g})" if phase else "cos",
        kind="cosine",
        antiderivative=lambda s: np.sin(s + phase) - math.sin(phase),
    )


def _triangle(y):
    """Running integral of sign(sin): 2*pi-periodic triangle wave."""
    y = np.mod(y, TWO_PI)
    return np.where(y <= math.pi, y, TWO_PI - y)


def square(phase: float = 0.0) -> DitherSignal:
    """Unit square wave, +1 on the first half period (phase-reduced, so
    exactly periodic in floating point)."""
    bps = tuple(float(v) for v in sorted(np.mod([-phase, math.pi - phase], TWO_PI)))
    return DitherSignal(
        value=lambda s: np.where(np.mod(np.asarray(s, dtype=float) + phase, TWO_PI) < math.pi, 1.0, -1.0),
        label=f"square(s{phase:+g})" if phase else "square",
        kind="square",
        antiderivative=lambda s: _triangle(s + phase) - _triangle(phase),
        breakpoints=bps,
    )


def custom(fn: Callable, label: str, breakpoints: tuple[float, ...] = ()) -> DitherSignal:
    return DitherSignal(value=fn, label=label, kind="custom", breakpoints=tuple(breakpoints))


@dataclass(frozen=True)
class DitherCheck:
    """Measured residuals of the three admissibility conditions."""

    bound_ok: bool
    periodic_ok: bool
    zero_mean_ok: bool
    max_abs: float
    periodicity_residual: float
    mean_residual: float

    @property
    def passed(self) -> bool:
        return self.bound_ok and self.periodic_ok and self.zero_mean_ok


def check_dither_assumptions(u: DitherSignal, grid: int = 4096, tol: float = 1e-9) -> DitherCheck:
    """Verify |u| <= 1, 2*pi-periodicity and zero mean on one period.

    The mean is the composite trapezoid of u over [0, 2*pi] on ``grid``
    panels (reported as the raw integral residual, not divided by the
    period).  Failures are reported, never raised.
    """
    if grid < 16:
        raise InputError("grid must be at least 16")
    if tol <= 0:
        raise InputError("tol must be positive")
    s = np.linspace(0.0, TWO_PI, grid + 1)
    # probe just past breakpoints too: a jump can hide between grid points
    if u.breakpoints:
        extra = np.asarray(u.breakpoints)
        s_probe = np.sort(np.concatenate([s, extra + 1e-12, extra - 1e-12]))
    else:
        s_probe = s
    vals_probe = np.asarray(u.value(s_probe), dtype=float)
    max_abs = float(np.max(np.abs(vals_probe)))
    per_res = float(np.max(np.abs(np.asarray(u.value(s_probe + TWO_PI)) - vals_probe)))
    mean_res = float(abs(np.trapezoid(np.asarray(u.value(s), dtype=float), s)))
    return DitherCheck(
        bound_ok=max_abs <= 1.0 + tol,
        periodic_ok=per_res <= tol,
        zero_mean_ok=mean_res <= tol,
        max_abs=max_abs,
        periodicity_residual=per_res,
        mean_residual=mean_res,
    )


def _phase_edges(a: float, b: float, breakpoints, n: int) -> np.ndarray:
    """Uniform panel edges on [a, b] with dither jump phases inserted."""
    edges = np.linspace(a, b, n + 1)
    if breakpoints:
        bps = []
        for bp in breakpoints:
            k0 = math.floor((a - bp) / TWO_PI)
            k1 = math.ceil((b - bp) / TWO_PI)
            for k in range(k0, k1 + 1):
                p = bp + k * TWO_PI
                if a < p < b:
                    bps.append(p)
        if bps:
            edges = np.unique(np.concatenate([edges, bps]))
    return edges


def _simpson_on_edges(f: Callable, edges: np.ndarray) -> float:
    """Composite Simpson, one 3-point rule per panel between edges."""
    mid = 0.5 * (edges[:-1] + edges[1:])
    fa = np.asarray(f(edges[:-1]), dtype=float)
    fb = np.asarray(f(edges[1:]), dtype=float)
    fm = np.asarray(f(mid), dtype=float)
    h = np.diff(edges)
    return float(np.sum(h / 6.0 * (fa + 4.0 * fm + fb)))


def _refine(f: Callable, a: float, b: float, breakpoints=(), base: int = 4096,
            tol: float = 1e-10, max_doublings: int = 6) -> float:
    """Composite Simpson refined by panel doubling until stable."""
    if b <= a:
        return 0.0
    n = base
    prev = _simpson_on_edges(f, _phase_edges(a, b, breakpoints, n))
    for _ in range(max_doublings):
        n *= 2
        cur = _simpson_on_edges(f, _phase_edges(a, b, breakpoints, n))
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    return prev


def _running_integral(u: DitherSignal, a: float):
    """Return U with U(s) = int_a^s u, exact when an antiderivative exists."""
    if u.antiderivative is not None:
        Ua = u.antiderivative(a)
        return lambda s: u.antiderivative(s) - Ua
    # numeric fallback on a fine cached grid spanning a generous range
    n = 1 << 16
    grid = np.linspace(a, a + 4.0 * TWO_PI, n + 1)
    vals = np.asarray(u.value(grid), dtype=float)
    cum = np.concatenate([[0.0], np.cumsum((vals[1:] + vals[:-1]) * 0.5 * np.diff(grid))])
    return lambda s: np.interp(s, grid, cum)


def big_v(u: DitherSignal, p: float, omega: float, t_s: float, t_e: float) -> float:
    """Integral of the frequency-scaled dither: int_{t_s}^{t_e} omega^p u(omega t) dt.

    Substituting the phase gives omega^(p-1) * (U(omega t_e) - U(omega t_s)),
    evaluated in closed form for sine/cosine/square kinds and by refined
    composite quadrature otherwise.
    """
    if omega <= 0:
        raise InputError("omega must be positive")
    if t_e < t_s:
        raise InputError("t_e must not precede t_s")
    if u.antiderivative is not None:
        out = omega ** (p - 1.0) * float(u.antiderivative(omega * t_e) - u.antiderivative(omega * t_s))
    else:
        out = omega ** (p - 1.0) * _refine(
            lambda s: np.asarray(u.value(s), dtype=float),
            omega * t_s, omega * t_e, u.breakpoints,
        )
    if not math.isfinite(out):
        raise NumericsError("big_v produced a non-finite value")
    return out


def big_v2(u_i: DitherSignal, u_j: DitherSignal, p_i: float, p_j: float,
           omega: float, t_s: float, t_e: float) -> float:
    """Nested integral int_{t_s}^{t_e} v_i(theta) V_j(t_s, theta) dtheta.

    The outer dither is ``u_i``; the inner running integral belongs to
    ``u_j``.  Substituting the phase in both integrals leaves
    omega^(p_i + p_j - 2) times a pure phase integral.
    """
    if omega <= 0:
        raise InputError("omega must be positive")
    if t_e < t_s:
        raise InputError("t_e must not precede t_s")
    if t_e == t_s:
        return 0.0
    a, b = omega * t_s, omega * t_e
    Uj = _running_integral(u_j, a)
    bps = tuple(u_i.breakpoints) + tuple(u_j.breakpoints)
    val = _refine(lambda s: np.asarray(u_i.value(s), dtype=float) * Uj(s), a, b, bps)
    out = omega ** (p_i + p_j - 2.0) * val
    if not math.isfinite(out):
        raise NumericsError("big_v2 produced a non-finite value")
    return out


def _pair_phase_integral(u_i: DitherSignal, u_j: DitherSignal) -> float:
    """int_0^{2 pi} u_j(s) U_i(s) ds with U_i the running integral of u_i."""
    Ui = _running_integral(u_i, 0.0)
    bps = tuple(u_i.breakpoints) + tuple(u_j.breakpoints)
    return _refine(lambda s: np.asarray(u_j.value(s), dtype=float) * Ui(s), 0.0, TWO_PI, bps)


def gamma(u_i: DitherSignal, u_j: DitherSignal, p_i: float, p_j: float, omega: float) -> float:
    """Averaged pair coefficient of (u_i, u_j) at dither frequency omega.

    The double integral runs over exactly one period with ``u_j`` in the
    outer slot; the phase substitution reduces it to an omega-independent
    phase integral scaled by omega^(p_i + p_j - 1) / (2 pi).
    """
    if omega <= 0:
        raise InputError("omega must be positive")
    out = omega ** (p_i + p_j - 1.0) / TWO_PI * _pair_phase_integral(u_i, u_j)
    if not math.isfinite(out):
        raise NumericsError("gamma produced a non-finite value")
    return out


def gamma_limit(u_i: DitherSignal, u_j: DitherSignal, p_i: float, p_j: float,
                vanishing_bracket: bool = False, tol: float = 1e-9) -> float:
    """High-frequency limit of the pair coefficient.

    Case split on p_i + p_j: below one the omega power forces 0 exactly;
    at one the coefficient is omega-independent and evaluated at omega=1;
    above one the interaction condition must hold, i.e. either the
    one-period iterated integral vanishes or the caller certifies a
    vanishing bracket (``vanishing_bracket=True``); otherwise the limit
    would diverge and an assumption violation is raised.
    """
    p_sum = p_i + p_j
    if p_sum < 1.0 - 1e-12:
        return 0.0
    if abs(p_sum - 1.0) <= 1e-12:
        return gamma(u_i, u_j, p_i, p_j, omega=1.0)
    phase_int = _pair_phase_integral(u_i, u_j)
    if abs(phase_int) <= tol or vanishing_bracket:
        return 0.0
    raise AssumptionViolationError(
        f"pair ({u_i.label}, {u_j.label}) has p_i+p_j={p_sum:.3f} > 1 with "
        f"non-vanishing iterated integral {phase_int:.3e} and no vanishing-bracket certificate"
    )
