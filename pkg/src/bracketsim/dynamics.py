"""Time-varying vector fields with derivatives and Lie calculus.

A :class:`VectorField` is a total map ``(t, x) -> R^n`` together with
optional analytic derivatives.  When an analytic spatial Jacobian or time
partial is absent, symmetric finite differences with a relative step are
used instead.  On top of single fields, this module provides Lie
derivatives, Lie brackets, empirical Lipschitz estimation and the
vanishing-at-origin checks required of admissible dithered systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .dither import DitherSignal
from .errors import DimensionError, InputError, NumericsError

__all__ = [
    "VectorField",
    "Channel",
    "DitheredSystem",
    "evaluate_field",
    "spatial_jacobian",
    "time_partial",
    "lie_derivative",
    "lie_bracket",
    "estimate_lipschitz",
    "check_vanishing_at_origin",
    "VanishingReport",
]


@dataclass(frozen=True)
class VectorField:
    """A map ``(t, x) -> R^n`` defined for all t and all x.

    ``value`` must accept a float time and an ``(n,)`` array and return an
    ``(n,)`` array (lists/scalars are coerced).  ``spatial_jacobian``, when
    given, returns the ``(n, n)`` matrix of partials in x;
    ``time_partial`` the ``(n,)`` partial in t.  Missing derivatives fall
    back to central finite differences with step ``fd_step * (1 + |x|)``.

    ``vectorized`` marks fields whose callables also accept an ``(m,)``
    time array with an ``(m, n)`` state array (returning ``(m, n)`` resp.
    ``(m, n, n)``); quadrature code exploits this as a fast path.
    """

    dim: int
    value: Callable
    spatial_jacobian: Optional[Callable] = None
    time_partial: Optional[Callable] = None
    fd_step: float = 1e-6
    label: str = ""
    vectorized: bool = False

    def __post_init__(self):
        if self.dim < 1:
            raise InputError(f"field dimension must be positive, got {self.dim}")
        if self.fd_step <= 0:
            raise InputError("fd_step must be positive")

    def __call__(self, t, x):
        return evaluate_field(self, t, x)


@dataclass(frozen=True)
class Channel:
    """One dithered input channel: field, frequency power and dither."""

    field: VectorField
    power: float
    dither: DitherSignal

    def __post_init__(self):
        if not 0.0 < self.power < 1.0:
            raise InputError(f"channel power must lie in (0, 1), got {self.power}")


@dataclass(frozen=True)
class DitheredSystem:
    """Input-affine system: drift plus frequency-scaled dithered channels.

    The state equation is
    ``x' = f0(t, x) + sum_i omega^{p_i} f_i(t, x) u_i(omega t)``
    with ``f0 = drift`` and ``(f_i, p_i, u_i)`` taken from ``channels``.
    """

    dim: int
    drift: VectorField
    channels: tuple[Channel, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.channels) < 1:
            raise InputError("a dithered system needs at least one channel")
        if self.drift.dim != self.dim:
            raise DimensionError("drift dimension does not match system")
        for c in self.channels:
            if c.field.dim != self.dim:
                raise DimensionError("channel field dimension does not match system")

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def powers(self) -> tuple[float, ...]:
        return tuple(c.power for c in self.channels)

    def rhs(self, omega: float) -> Callable:
        """Right-hand side ``(t, x) -> x'`` at a fixed dither frequency."""
        drift = self.drift.value
        terms = [
            (omega**c.power, c.field.value, c.dither.value) for c in self.channels
        ]
        def f(t, x):
            out = np.asarray(drift(t, x), dtype=float).copy()
            for scale, fv, uv in terms:
                out += (scale * uv(omega * t)) * np.asarray(fv(t, x), dtype=float)
            return out
        return f


def _as_state(x, dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise DimensionError(f"state has shape {x.shape}, expected ({dim},)")
    return x


def evaluate_field(field: VectorField, t: float, x) -> np.ndarray:
    """Evaluate ``field.value`` with dimension checking."""
    x = _as_state(x, field.dim)
    out = np.atleast_1d(np.asarray(field.value(t, x), dtype=float))
    if out.shape != (field.dim,):
        raise DimensionError(
            f"field '{field.label}' returned shape {out.shape}, expected ({field.dim},)"
        )
    return out


def _fd_scale(field: VectorField, x: np.ndarray) -> float:
    return field.fd_step * (1.0 + float(np.linalg.norm(x)))


def spatial_jacobian(field: VectorField, t: float, x, detect_kink: bool = False):
    """Jacobian in the state argument; analytic when available else central FD.

    With ``detect_kink=True`` returns ``(J, flagged)`` where ``flagged`` is
    set when the forward and backward one-sided differences disagree by
    more than ``10 * fd_step`` in any entry, which marks points where the
    field is not differentiable (the central value is still returned).
    """
    x = _as_state(x, field.dim)
    if field.spatial_jacobian is not None and not detect_kink:
        J = np.asarray(field.spatial_jacobian(t, x), dtype=float)
        if J.shape != (field.dim, field.dim):
            raise DimensionError("analytic Jacobian has wrong shape")
        return J

    n = field.dim
    h = _fd_scale(field, x)
    f0 = evaluate_field(field, t, x)
    J = np.empty((n, n))
    flagged = False
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        fp = evaluate_field(field, t, x + e)
        fm = evaluate_field(field, t, x - e)
        J[:, k] = (fp - fm) / (2.0 * h)
        if detect_kink:
            fwd = (fp - f0) / h
            bwd = (f0 - fm) / h
            if np.max(np.abs(fwd - bwd)) > 10.0 * field.fd_step:
                flagged = True
    if not np.all(np.isfinite(J)):
        raise NumericsError(f"non-finite Jacobian entries for field '{field.label}'")
    if detect_kink:
        if field.spatial_jacobian is not None:
            J = np.asarray(field.spatial_jacobian(t, x), dtype=float)
        return J, flagged
    return J


def time_partial(field: VectorField, t: float, x) -> np.ndarray:
    """Partial derivative in the time argument (analytic or central FD)."""
    x = _as_state(x, field.dim)
    if field.time_partial is not None:
        return np.asarray(field.time_partial(t, x), dtype=float)
    h = field.fd_step * (1.0 + abs(t))
    out = (evaluate_field(field, t + h, x) - evaluate_field(field, t - h, x)) / (2.0 * h)
    if not np.all(np.isfinite(out)):
        raise NumericsError("non-finite time partial")
    return out


def lie_derivative(field: VectorField, direction: VectorField, t: float, x) -> np.ndarray:
    """Derivative of ``field`` along ``direction``: ``(d field / dx) . direction``."""
    if field.dim != direction.dim:
        raise DimensionError("fields have different dimensions")
    J = spatial_jacobian(field, t, x)
    return J @ evaluate_field(direction, t, x)


def lie_bracket(f: VectorField, g: VectorField, t: float, x) -> np.ndarray:
    """Commutator ``[f, g] = (dg/dx) f - (df/dx) g``.

    Antisymmetric and bilinear pointwise; vanishes for constant or
    proportional fields.
    """
    return lie_derivative(g, f, t, x) - lie_derivative(f, g, t, x)


def estimate_lipschitz(
    field: VectorField,
    box: Sequence,
    t_samples: int = 8,
    x_samples: int = 64,
    seed: int = 0,
    t_span: tuple[float, float] = (0.0, 2.0 * math.pi),
) -> float:
    """Empirical Lipschitz constant of x -> field(t, x) over a box.

    ``box`` is ``(lows, highs)`` per coordinate.  Samples ``x_samples``
    points (half uniform, half clustered in near pairs, which catches
    steep local slopes) at each of ``t_samples`` times and returns the
    largest difference quotient ``|f(t,x)-f(t,y)| / |x-y|``.  The result
    is deterministic in ``seed`` and never exceeds the true constant.
    """
    lows = np.atleast_1d(np.asarray(box[0], dtype=float))
    highs = np.atleast_1d(np.asarray(box[1], dtype=float))
    if lows.shape != (field.dim,) or highs.shape != (field.dim,):
        raise DimensionError("box bounds must match field dimension")
    if np.any(highs <= lows):
        raise InputError("box is degenerate (zero volume)")
    if t_samples < 2 or x_samples < 2:
        raise InputError("need at least 2 samples per axis")

    rng = np.random.default_rng(seed)
    ts = rng.uniform(t_span[0], t_span[1], size=t_samples)
    best = 0.0
    width = highs - lows
    for t in ts:
        pts = rng.uniform(lows, highs, size=(x_samples, field.dim))
        # near pairs: slope of a Lipschitz-but-kinked field is only seen locally
        jitter = pts[: x_samples // 2] + rng.normal(size=(x_samples // 2, field.dim)) * (
            1e-4 * width
        )
        jitter = np.clip(jitter, lows, highs)
        pts = np.vstack([pts, jitter])
        vals = np.array([evaluate_field(field, t, p) for p in pts])
        diff = vals[:, None, :] - vals[None, :, :]
        dx = pts[:, None, :] - pts[None, :, :]
        num = np.linalg.norm(diff, axis=2)
        den = np.linalg.norm(dx, axis=2)
        mask = den > 0
        if np.any(mask):
            best = max(best, float(np.max(num[mask] / den[mask])))
    return best


@dataclass(frozen=True)
class VanishingReport:
    """Residuals of the equilibrium conditions at the origin."""

    rows: tuple  # (condition label, t, residual norm)
    tol: float

    @property
    def passed(self) -> bool:
        return all(res <= self.tol for _, _, res in self.rows)

    @property
    def max_residual(self) -> float:
        return max((res for _, _, res in self.rows), default=0.0)

    def failures(self):
        return [row for row in self.rows if row[2] > self.tol]


def check_vanishing_at_origin(
    system: DitheredSystem, t_samples: Sequence[float], tol: float = 1e-9
) -> VanishingReport:
    """Check the five origin conditions on a dithered system.

    At ``x = 0`` and every supplied time, the residual norms of
    ``f_i``, ``L_{f_j} f_i``, ``L_{f_m} L_{f_j} f_i``, ``dt f_i`` and
    ``dt L_{f_j} f_i`` are recorded, with indices running over the drift
    and all channels.  The report passes iff every residual is within
    ``tol``; failures are listed, never raised.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    fields = [system.drift] + [c.field for c in system.channels]
    zero = np.zeros(system.dim)
    rows = []

    def lie_at(fi: VectorField, fj: VectorField, t: float, x) -> np.ndarray:
        return spatial_jacobian(fi, t, x) @ evaluate_field(fj, t, x)

    for t in t_samples:
        for i, fi in enumerate(fields):
            rows.append((f"f_{i}", t, float(np.linalg.norm(evaluate_field(fi, t, zero)))))
            rows.append((f"dt_f_{i}", t, float(np.linalg.norm(time_partial(fi, t, zero)))))
        for i, fi in enumerate(fields):
            for j, fj in enumerate(fields):
                lv = lie_at(fi, fj, t, zero)
                rows.append((f"lie_f{j}_f{i}", t, float(np.linalg.norm(lv))))
                h = fi.fd_step * (1.0 + abs(t))
                dt_lie = (lie_at(fi, fj, t + h, zero) - lie_at(fi, fj, t - h, zero)) / (2 * h)
                rows.append((f"dt_lie_f{j}_f{i}", t, float(np.linalg.norm(dt_lie))))
        for i, fi in enumerate(fields):
            for j, fj in enumerate(fields):
                for m, fm in enumerate(fields):
                    # D(L_{f_j} f_i) . f_m at 0; FD of the composite map
                    h = fi.fd_step
                    n = system.dim
                    grad = np.empty((n, n))
                    for kk in range(n):
                        e = np.zeros(n)
                        e[kk] = h
                        grad[:, kk] = (lie_at(fi, fj, t, e) - lie_at(fi, fj, t, -e)) / (2 * h)
                    val = grad @ evaluate_field(fm, t, zero)
                    rows.append(
                        (f"lielie_f{m}_f{j}_f{i}", t, float(np.linalg.norm(val)))
                    )
    return VanishingReport(rows=tuple(rows), tol=tol)
