"""Fixed-step integration producing immutable trajectories.

``euler`` realizes the first-order explicit solver used for the dithered
system; ``rk4`` is the classical fourth-order scheme for reference
trajectories.  The final step is shortened so the last sample lands on
``t_end`` exactly.  Identical inputs give bit-identical trajectories.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .dynamics import DitheredSystem, VectorField
from .errors import DimensionError, DivergenceError, InputError

__all__ = ["Trajectory", "integrate", "integrate_dithered", "sup_deviation", "write_csv"]

METHODS = ("euler", "rk4")


@dataclass(frozen=True)
class Trajectory:
    """Ordered samples (t, x) of one integration run.

    ``times`` has uniform spacing ``step`` except for a possibly shorter
    final step; ``states`` is the matching ``(m, n)`` array.  Both arrays
    are frozen after construction.
    """

    times: np.ndarray
    states: np.ndarray
    step: float
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if states.ndim != 2 or len(times) != len(states):
            raise DimensionError("times and states must align as (m,) and (m, n)")
        if len(times) < 1:
            raise InputError("empty trajectory")
        if np.any(np.diff(times) <= 0):
            raise InputError("times must be strictly increasing")
        if not np.all(np.isfinite(states)):
            raise InputError("trajectory states must be finite")
        times.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def x0(self) -> np.ndarray:
        return self.states[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def state_at(self, t) -> np.ndarray:
        """Linear interpolation of the state at time(s) t."""
        t = np.asarray(t, dtype=float)
        out = np.stack(
            [np.interp(t, self.times, self.states[:, k]) for k in range(self.dim)],
            axis=-1,
        )
        return out

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def _step_count(t0: float, t_end: float, h: float) -> int:
    """Number of steps: full steps of size h plus one shortened tail step."""
    n_full = int(math.floor((t_end - t0) / h + 1e-12))
    rem = t_end - (t0 + n_full * h)
    has_tail = rem > 1e-12 * max(1.0, abs(t_end), abs(t0))
    return max(1, n_full + (1 if has_tail else 0))


def integrate(
    rhs: Union[VectorField, Callable],
    t0: float,
    x0,
    h: float,
    t_end: float,
    method: str = "euler",
    meta: dict | None = None,
    record_every: int = 1,
) -> Trajectory:
    """Integrate ``x' = rhs(t, x)`` on [t0, t_end] with fixed step h.

    Euler: ``x_{m+1} = x_m + h rhs(t_m, x_m)``.  The last step shrinks to
    land on ``t_end`` exactly.  A non-finite state aborts integration and
    raises :class:`DivergenceError` carrying the finite prefix.
    ``record_every`` keeps every m-th sample (endpoints always kept) to
    bound memory on long runs.
    """
    if h <= 0:
        raise InputError("step h must be positive")
    if t_end <= t0:
        raise InputError("t_end must exceed t0")
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}; expected one of {METHODS}")
    if record_every < 1:
        raise InputError("record_every must be >= 1")
    f = rhs.value if isinstance(rhs, VectorField) else rhs
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if not np.all(np.isfinite(x)):
        raise InputError("x0 must be finite")

    total_steps = _step_count(t0, t_end, h)
    ts = [t0]
    xs = [x.copy()]
    meta = dict(meta or {})
    meta.setdefault("t0", t0)
    meta.setdefault("x0", [float(v) for v in x])

    def make_partial():
        return Trajectory(np.array(ts), np.array(xs), h, method, meta) if len(ts) > 1 else None

    t = t0
    for m in range(total_steps):
        t_next = t_end if m == total_steps - 1 else t0 + (m + 1) * h
        hh = t_next - t
        if method == "euler":
            x = x + hh * np.asarray(f(t, x), dtype=float)
        else:
            k1 = np.asarray(f(t, x), dtype=float)
            k2 = np.asarray(f(t + 0.5 * hh, x + 0.5 * hh * k1), dtype=float)
            k3 = np.asarray(f(t + 0.5 * hh, x + 0.5 * hh * k2), dtype=float)
            k4 = np.asarray(f(t + hh, x + hh * k3), dtype=float)
            x = x + hh / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
        t = t_next
        if not np.all(np.isfinite(x)):
            raise DivergenceError(
                f"state became non-finite at t={t:.6g}", trajectory=make_partial()
            )
        if (m + 1) % record_every == 0 or m + 1 == total_steps:
            ts.append(t)
            xs.append(x.copy())
    return Trajectory(np.array(ts), np.array(xs), h, method, meta)


def integrate_dithered(
    system: DitheredSystem,
    omega: float,
    t0: float,
    x0,
    h: float,
    t_end: float,
    method: str = "euler",
    record_every: int = 1,
) -> Trajectory:
    """Trajectory of the dithered system at a fixed dither frequency.

    Warns when the step does not resolve the dither period
    (h > (2 pi / omega) / 20).
    """
    if omega <= 0:
        raise InputError("omega must be positive")
    period = 2.0 * math.pi / omega
    if h > period / 20.0:
        warnings.warn(
            f"step h={h:g} under-resolves the dither period {period:g} "
            "(recommended h <= period/20)",
            stacklevel=2,
        )
    meta = {"system": system.label, "omega": omega}
    return integrate(system.rhs(omega), t0, x0, h, t_end, method, meta, record_every)


def sup_deviation(a: Trajectory, b: Trajectory) -> float:
    """Largest pointwise distance between two trajectories.

    Both must share t0 and t_end; b is resampled at a's times by linear
    interpolation when the steps differ.
    """
    if abs(a.t0 - b.t0) > 1e-10 or abs(a.t_end - b.t_end) > 1e-10:
        raise InputError(
            f"horizon mismatch: [{a.t0}, {a.t_end}] vs [{b.t0}, {b.t_end}]"
        )
    if a.dim != b.dim:
        raise DimensionError("trajectories have different state dimensions")
    xb = b.state_at(a.times)
    return float(np.max(np.linalg.norm(a.states - xb, axis=1)))


def write_csv(traj: Trajectory, path) -> None:
    """Export as CSV with header ``t,x1,...,xn`` in round-trip precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"x{k + 1}" for k in range(traj.dim)) + "\n")
        for t, row in zip(traj.times, traj.states):
            fh.write(",".join(repr(float(v)) for v in (t, *row)) + "\n")
