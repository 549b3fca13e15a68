"""Built-in scenario: the scalar adaptive-gain example and its constants.

The example is the scalar plant x' = a x + b u with the oscillatory
feedback u built from the gain k and the pair of fields

    |x| sin(log(x^2 / 2)),    |x| cos(log(x^2 / 2)),

each scaled by b sqrt(k) and excited by a unit harmonic dither at power
1/2.  Both fields are set to exactly 0 at x = 0.  The averaged system is
xbar' = (a - b^2 k) xbar, exponentially stable for every k > a / b^2.

Channel labelling fixes the sign conventions: channel 1 carries the
cos-log field with the sine dither and channel 2 the sin-log field with
the cosine dither, so that gamma_12 = -1/2 and [f_1, f_2] = 2 b^2 k x
combine to the stable averaged drift.  (The opposite trig pairing makes
the averaged drift (a + b^2 k) x, which diverges; see the simulation.)

Closed-form global Lipschitz constants for the fields and their first
and second Lie derivatives are tabulated from the piecewise derivatives;
the first-order constants are |a| and 3 |b| sqrt(k).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import dither as dit
from .dynamics import Channel, DitheredSystem, VectorField
from .errors import ConfigError, InputError

__all__ = [
    "example_system",
    "sinlog_field",
    "coslog_field",
    "linear_field",
    "lipschitz_table",
    "LipschitzTable",
    "example_lbs_coefficient",
    "system_from_config",
]


def _loghalf_sq(x):
    """log(x^2 / 2) with the x = 0 singularity masked for array input."""
    ax = np.abs(x)
    safe = np.where(ax > 0, ax, 1.0)
    return np.log(0.5 * safe * safe)


def sinlog_field(b: float, k: float, fd_step: float = 1e-6) -> VectorField:
    """Scalar field b sqrt(k) |x| sin(log(x^2/2)), zero at the origin.

    The analytic derivative exists away from 0 and is
    sign(x) b sqrt(k) (sin(g) + 2 cos(g)) with g = log(x^2/2); at x = 0
    the Jacobian entry is reported as 0 and left to the flagged
    finite-difference path.
    """
    B = b * math.sqrt(k)

    def value(t, x):
        if isinstance(x, np.ndarray) and x.shape == (1,):  # hot path in steppers
            xv = float(x[0])
            if xv == 0.0:
                return np.zeros(1)
            return np.array([B * abs(xv) * math.sin(math.log(0.5 * xv * xv))])
        x = np.asarray(x, dtype=float)
        g = _loghalf_sq(x)
        return np.where(x == 0.0, 0.0, B * np.abs(x) * np.sin(g))

    def deriv(t, x):
        if isinstance(x, float):
            if x == 0.0:
                return 0.0
            g = math.log(0.5 * x * x)
            return (B if x > 0 else -B) * (math.sin(g) + 2.0 * math.cos(g))
        g = _loghalf_sq(x)
        return np.where(x == 0.0, 0.0, np.sign(x) * B * (np.sin(g) + 2.0 * np.cos(g)))

    return VectorField(
        dim=1, value=value, spatial_jacobian=_scalar_jac(deriv), time_partial=_zero_tp,
        fd_step=fd_step, label="sinlog", vectorized=True,
    )


def coslog_field(b: float, k: float, fd_step: float = 1e-6) -> VectorField:
    """Scalar field b sqrt(k) |x| cos(log(x^2/2)), zero at the origin."""
    B = b * math.sqrt(k)

    def value(t, x):
        if isinstance(x, np.ndarray) and x.shape == (1,):
            xv = float(x[0])
            if xv == 0.0:
                return np.zeros(1)
            return np.array([B * abs(xv) * math.cos(math.log(0.5 * xv * xv))])
        x = np.asarray(x, dtype=float)
        g = _loghalf_sq(x)
        return np.where(x == 0.0, 0.0, B * np.abs(x) * np.cos(g))

    def deriv(t, x):
        if isinstance(x, float):
            if x == 0.0:
                return 0.0
            g = math.log(0.5 * x * x)
            return (B if x > 0 else -B) * (math.cos(g) - 2.0 * math.sin(g))
        g = _loghalf_sq(x)
        return np.where(x == 0.0, 0.0, np.sign(x) * B * (np.cos(g) - 2.0 * np.sin(g)))

    return VectorField(
        dim=1, value=value, spatial_jacobian=_scalar_jac(deriv), time_partial=_zero_tp,
        fd_step=fd_step, label="coslog", vectorized=True,
    )


def _scalar_jac(deriv):
    # scalar fields: expose (t, x)->(1,1) for single states, (m,1,1) for batches
    def jac(t, x):
        if isinstance(x, np.ndarray) and x.shape == (1,):
            return np.array([[deriv(t, float(x[0]))]])
        x = np.asarray(x, dtype=float)
        return np.asarray(deriv(t, x), dtype=float).reshape(-1, 1, 1)
    return jac


def _zero_tp(t, x):
    x = np.asarray(x, dtype=float)
    return np.zeros_like(x)


def linear_field(matrix, fd_step: float = 1e-6, label: str = "linear") -> VectorField:
    """Time-invariant linear field x -> A x with exact Jacobian."""
    A = np.atleast_2d(np.asarray(matrix, dtype=float))
    if A.shape[0] != A.shape[1]:
        raise InputError("linear field needs a square matrix")
    n = A.shape[0]
    a00 = float(A[0, 0])

    def value(t, x):
        if n == 1 and isinstance(x, np.ndarray) and x.shape == (1,):
            return np.array([a00 * float(x[0])])
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return x @ A.T
        return A @ x

    def jac(t, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            return np.broadcast_to(A, (x.shape[0], n, n)).copy()
        return A.copy()

    return VectorField(
        dim=n, value=value, spatial_jacobian=jac, time_partial=_zero_tp,
        fd_step=fd_step, label=label, vectorized=True,
    )


def example_system(a: float, b: float, k: float) -> DitheredSystem:
    """The scalar example plant as a two-channel dithered system.

    Powers are 1/2 on both channels; dithers are the unit sine (channel
    1, cos-log field) and unit cosine (channel 2, sin-log field).
    """
    if b == 0:
        raise InputError("b must be nonzero")
    if k <= 0:
        raise InputError("k must be positive")
    return DitheredSystem(
        dim=1,
        drift=linear_field([[a]], label="drift"),
        channels=(
            Channel(field=coslog_field(b, k), power=0.5, dither=dit.sine()),
            Channel(field=sinlog_field(b, k), power=0.5, dither=dit.cosine()),
        ),
        label="paper-example",
    )


@dataclass(frozen=True)
class LipschitzTable:
    """Global Lipschitz constants of the example's field hierarchy.

    ``first_order`` holds (L_0, L_1, L_2); ``pair`` the 3x3 table for the
    first Lie derivatives and ``triple`` the 3x3x3 table for the second;
    indices are (field, direction) resp. (field, direction, direction).
    """

    first_order: tuple[float, float, float]
    pair: np.ndarray
    triple: np.ndarray
    l_max: float
    argmax: tuple

    @property
    def L0(self) -> float:
        return self.first_order[0]

    @property
    def L1(self) -> float:
        return self.first_order[1]

    @property
    def L2(self) -> float:
        return self.first_order[2]


def lipschitz_table(a: float, b: float, k: float) -> LipschitzTable:
    """Closed-form constants: L_i, then
    L_ij = 6|b|sqrt(k) L_j + L_i L_j and
    L_ijm = 16|b|sqrt(k) L_j L_m + 6|b|sqrt(k) L_i L_m + L_i L_j L_m.
    """
    if b == 0:
        raise InputError("b must be nonzero")
    if k <= 0:
        raise InputError("k must be positive")
    Bk = abs(b) * math.sqrt(k)
    L = (abs(a), 3.0 * Bk, 3.0 * Bk)
    pair = np.empty((3, 3))
    for i, j in itertools.product(range(3), repeat=2):
        pair[i, j] = 6.0 * Bk * L[j] + L[i] * L[j]
    triple = np.empty((3, 3, 3))
    for i, j, m in itertools.product(range(3), repeat=3):
        triple[i, j, m] = 16.0 * Bk * L[j] * L[m] + 6.0 * Bk * L[i] * L[m] + L[i] * L[j] * L[m]
    candidates = [(L[i], (i,)) for i in range(3)]
    candidates += [(pair[i, j], (i, j)) for i, j in itertools.product(range(3), repeat=2)]
    candidates += [
        (triple[i, j, m], (i, j, m)) for i, j, m in itertools.product(range(3), repeat=3)
    ]
    l_max, argmax = max(candidates, key=lambda c: c[0])
    return LipschitzTable(first_order=L, pair=pair, triple=triple, l_max=l_max, argmax=argmax)


def example_lbs_coefficient(a: float, b: float, k: float) -> tuple[float, bool]:
    """Averaged drift coefficient a - b^2 k and its stability verdict.

    Stable iff k > a / b^2 strictly; the boundary (coefficient 0) is
    reported as not stable.
    """
    if b == 0:
        raise InputError("b must be nonzero")
    coeff = a - b * b * k
    return coeff, coeff < 0.0


_DITHER_KINDS = {
    "sin": dit.sine,
    "cos": dit.cosine,
    "square": dit.square,
}


def _dither_from_config(spec: dict) -> dit.DitherSignal:
    kind = spec.get("kind")
    if kind not in _DITHER_KINDS:
        raise ConfigError(f"unknown dither kind {kind!r}; expected one of {sorted(_DITHER_KINDS)}")
    return _DITHER_KINDS[kind](phase=float(spec.get("phase", 0.0)))


def _field_from_config(spec: dict) -> VectorField:
    kind = spec.get("kind")
    if kind == "linear":
        return linear_field(spec["matrix"], label=spec.get("label", "linear"))
    if kind == "sinlog":
        return sinlog_field(float(spec["b"]), float(spec["k"]))
    if kind == "coslog":
        return coslog_field(float(spec["b"]), float(spec["k"]))
    raise ConfigError(f"unknown field kind {kind!r}; expected linear | sinlog | coslog")


def system_from_config(spec: dict) -> DitheredSystem:
    """Build a system from a config mapping (no executable code is loaded).

    Either ``{"name": "paper-example", "a": .., "b": .., "k": ..}`` or a
    custom spec with ``drift`` and ``channels`` entries built from the
    closed-form field family.
    """
    name = spec.get("name", "custom")
    if name == "paper-example":
        try:
            return example_system(float(spec["a"]), float(spec["b"]), float(spec["k"]))
        except KeyError as exc:
            raise ConfigError(f"paper-example scenario needs parameter {exc}") from exc
        except InputError as exc:
            raise ConfigError(str(exc)) from exc
    if name != "custom":
        raise ConfigError(f"unknown scenario name {name!r}")
    try:
        drift = _field_from_config(spec["drift"])
        channels = tuple(
            Channel(
                field=_field_from_config(ch["field"]),
                power=float(ch["power"]),
                dither=_dither_from_config(ch["dither"]),
            )
            for ch in spec["channels"]
        )
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed custom scenario: {exc}") from exc
    except InputError as exc:
        raise ConfigError(str(exc)) from exc
    return DitheredSystem(
        dim=drift.dim, drift=drift, channels=channels, label=spec.get("label", "custom")
    )
