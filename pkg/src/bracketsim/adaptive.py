"""Epoch-wise dither-frequency adaptation driven by a quadratic integrator.

The augmented system couples the dithered state equation with a gain
integrator ``w' = |x|^2``, sampled every ``t_f`` seconds: during epoch k
the dither frequency is frozen at ``w_k = w(t0 + k t_f)`` while w keeps
accumulating.  The sequence w_k is non-decreasing by construction; once
the frequency is high enough for averaging to take hold, the state
decays exponentially and w converges to a finite limit.

Within an epoch the state is advanced by exactly the same stepper as a
standalone dithered integration at omega = w_k (the dither phase is
w_k * t with absolute time, no phase reset), so replaying an epoch
reproduces its trajectory bit for bit.  The integrator adds the
left-endpoint increments h * |x_m|^2 to w, which keeps every increment
non-negative regardless of the state method.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import DitheredSystem
from .errors import DivergenceError, InputError
from .sim import Trajectory, integrate_dithered

__all__ = ["EpochRecord", "AdaptiveRun", "run_adaptive", "check_adaptive_convergence",
           "ConvergenceReport", "write_adaptive_csv", "epoch_summary"]


@dataclass(frozen=True)
class EpochRecord:
    """One completed epoch: index, frozen frequency, start state, trajectory."""

    k: int
    w_k: float
    x_k: np.ndarray
    traj: Optional[Trajectory]


@dataclass(frozen=True)
class AdaptiveRun:
    """Full record of an adaptation run.

    ``epochs`` lists completed (possibly partial, on divergence) epochs;
    ``final_w`` and ``final_x`` describe the last sampled boundary.
    """

    epochs: tuple[EpochRecord, ...]
    final_w: float
    final_x: np.ndarray
    w_trace: Trajectory
    stop_reason: str
    x0_norm: float

    @property
    def converged(self) -> bool:
        return self.stop_reason in ("x_converged", "w_converged")

    @property
    def w_samples(self) -> tuple[float, ...]:
        return tuple(e.w_k for e in self.epochs) + (self.final_w,)

    @property
    def w_increments(self) -> tuple[float, ...]:
        ws = self.w_samples
        return tuple(b - a for a, b in zip(ws[:-1], ws[1:]))

    @property
    def last_w_increment(self) -> float:
        inc = self.w_increments
        return inc[-1] if inc else 0.0

    @property
    def final_x_norm(self) -> float:
        return float(np.linalg.norm(self.final_x))


def run_adaptive(
    system: DitheredSystem,
    t0: float,
    x0,
    w0: float,
    t_f: float,
    h: float,
    max_epochs: int = 200,
    x_tol: float = 1e-3,
    w_tol: float = 1e-6,
    method: str = "euler",
) -> AdaptiveRun:
    """Run the sampled frequency adaptation until a stopping rule fires.

    Stops when the sampled state norm falls to ``x_tol`` times the
    initial norm, when an epoch's frequency increment drops to ``w_tol``,
    or after ``max_epochs``.  All channel powers must equal 1/2.
    Divergence inside an epoch ends the run with the partial record.
    """
    for p in system.powers():
        if abs(p - 0.5) > 1e-12:
            raise InputError("frequency adaptation requires every channel power to be 1/2")
    if w0 <= 0:
        raise InputError("w0 must be positive")
    if t_f <= 0 or h <= 0:
        raise InputError("t_f and h must be positive")

    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    x0_norm = float(np.linalg.norm(x))
    w = float(w0)
    epochs: list[EpochRecord] = []
    w_times = [t0]
    w_vals = [w]
    stop_reason = "max_epochs"

    for k in range(max_epochs):
        if float(np.linalg.norm(x)) <= x_tol * x0_norm:
            stop_reason = "x_converged"
            break
        t_k = t0 + k * t_f
        w_k = w
        try:
            traj = integrate_dithered(system, w_k, t_k, x, h, t_k + t_f, method)
        except DivergenceError as err:
            epochs.append(EpochRecord(k=k, w_k=w_k, x_k=x.copy(), traj=err.trajectory))
            if err.trajectory is not None:
                dt = np.diff(err.trajectory.times)
                sq = np.sum(err.trajectory.states[:-1] ** 2, axis=1)
                w_path = w + np.cumsum(dt * sq)
                w = float(w_path[-1])
                w_times.extend(err.trajectory.times[1:].tolist())
                w_vals.extend(w_path.tolist())
                x = err.trajectory.states[-1].copy()
            stop_reason = "divergence"
            break
        epochs.append(EpochRecord(k=k, w_k=w_k, x_k=x.copy(), traj=traj))
        dt = np.diff(traj.times)
        sq = np.sum(traj.states[:-1] ** 2, axis=1)
        w_path = w + np.cumsum(dt * sq)
        w = float(w_path[-1])
        w_times.extend(traj.times[1:].tolist())
        w_vals.extend(w_path.tolist())
        x = traj.states[-1].copy()
        if w - w_k <= w_tol:
            stop_reason = "w_converged"
            break

    w_trace = Trajectory(
        np.asarray(w_times), np.asarray(w_vals)[:, None], h, method,
        {"system": system.label, "kind": "gain-integrator"},
    )
    return AdaptiveRun(
        epochs=tuple(epochs),
        final_w=w,
        final_x=x,
        w_trace=w_trace,
        stop_reason=stop_reason,
        x0_norm=x0_norm,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    passed: bool
    k_final: int
    w_final: float
    x_final_norm: float
    last_w_increment: float


def check_adaptive_convergence(run: AdaptiveRun, x_tol: float, w_tol: float) -> ConvergenceReport:
    """Pass iff the final state and the last frequency increment are small.

    The state must have contracted to ``x_tol`` times its initial norm
    and the last epoch's frequency increment must not exceed ``w_tol``
    (a run that never needed an epoch counts as increment 0).
    """
    x_ok = run.final_x_norm <= x_tol * run.x0_norm
    w_ok = run.last_w_increment <= w_tol
    return ConvergenceReport(
        passed=x_ok and w_ok,
        k_final=len(run.epochs),
        w_final=run.final_w,
        x_final_norm=run.final_x_norm,
        last_w_increment=run.last_w_increment,
    )


def write_adaptive_csv(run: AdaptiveRun, path) -> None:
    """Export the concatenated run as CSV rows ``t, x1..xn, w``."""
    dim = len(run.final_x)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"x{k + 1}" for k in range(dim)) + ",w\n")
        wt, wv = run.w_trace.times, run.w_trace.states[:, 0]
        pos = 0
        wrote_any = False
        for rec in run.epochs:
            if rec.traj is None:
                continue
            start = 0 if not wrote_any else 1  # boundary sample already written
            for t, row in zip(rec.traj.times[start:], rec.traj.states[start:]):
                while pos + 1 < len(wt) and wt[pos] < t - 1e-15:
                    pos += 1
                fh.write(",".join(repr(float(v)) for v in (t, *row, wv[pos])) + "\n")
            wrote_any = True
        if not wrote_any:
            fh.write(",".join(repr(float(v)) for v in (wt[0], *run.final_x, wv[0])) + "\n")


def epoch_summary(run: AdaptiveRun) -> list[dict]:
    """JSON-ready per-epoch summary [(k, w_k, |x_k|)] plus the final boundary."""
    rows = [
        {"k": rec.k, "w_k": rec.w_k, "x_norm": float(np.linalg.norm(rec.x_k))}
        for rec in run.epochs
    ]
    rows.append(
        {"k": len(run.epochs), "w_k": run.final_w, "x_norm": run.final_x_norm}
    )
    return rows


def write_epoch_summary(run: AdaptiveRun, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "stop_reason": run.stop_reason,
                "converged": run.converged,
                "epochs": epoch_summary(run),
            },
            fh,
            indent=2,
        )
