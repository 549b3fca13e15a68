"""Certificate calculus: exponent profile, sufficient frequency, envelopes.

Given the exponential envelope (alpha_bar, beta_bar) of the averaged
system, a horizon t_f and error scale D with

    alpha_bar * exp(-beta_bar * t_f) + D  in (0, 1)

yield a global exponential envelope for the dithered system with

    alpha = (alpha_bar + D) / q,    beta = -ln(q) / t_f,
    q = alpha_bar * exp(-beta_bar * t_f) + D,

valid above the sufficient dither frequency

    omega_star = max(1, (c * (Lambda_bar / D) * (9 t_f + 12 + 8 pi)
                         * exp(2 pi l^2 L t_f)) ** (1 / p_star)),

with c = pi^2 (l+1)^3 L^2.  The exponential factor overflows doubles for
realistic Lipschitz constants, so omega_star is carried in log10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InfeasibleBudgetError, InputError, NumericsError
from .sim import Trajectory, sup_deviation

__all__ = [
    "ExponentProfile",
    "exponent_profile",
    "OmegaStar",
    "omega_star",
    "select_budget",
    "derived_alpha_beta",
    "StabilityBudget",
    "make_budget",
    "EnvelopeReport",
    "check_envelope",
    "ApproximationReport",
    "check_approximation",
]

LOG10_E = math.log10(math.e)


@dataclass(frozen=True)
class ExponentProfile:
    """Derived exponents of a power tuple.

    ``p2`` is the largest pair sum strictly below one (None when no pair
    qualifies) and ``p3`` the largest triple sum strictly below two;
    omitted members simply drop out of the minimum defining ``p_star``.
    """

    p_list: tuple[float, ...]
    p1: float
    p2: Optional[float]
    p3: Optional[float]
    p_star: float
    set_p1: tuple[tuple[int, int], ...]
    set_p2: tuple[tuple[int, int, int], ...]


def exponent_profile(p_list: Sequence[float]) -> ExponentProfile:
    """Compute p', p'', p''' and p_star = min{1-p', 1-p'', 2-p'''}.

    Pairs and triples run over 1-based channel indices with repetition;
    the strict inequalities (< 1, < 2) are taken exactly as written.
    """
    ps = tuple(float(p) for p in p_list)
    if not ps:
        raise InputError("p_list must be nonempty")
    for p in ps:
        if not 0.0 < p < 1.0:
            raise InputError(f"every power must lie in (0, 1), got {p}")
    l = len(ps)
    p1 = max(ps)
    set_p1 = tuple(
        (i + 1, j + 1) for i in range(l) for j in range(l) if ps[i] + ps[j] < 1.0
    )
    set_p2 = tuple(
        (i + 1, j + 1, m + 1)
        for i in range(l)
        for j in range(l)
        for m in range(l)
        if ps[i] + ps[j] + ps[m] < 2.0
    )
    p2 = max(ps[i - 1] + ps[j - 1] for i, j in set_p1) if set_p1 else None
    p3 = max(ps[i - 1] + ps[j - 1] + ps[m - 1] for i, j, m in set_p2) if set_p2 else None
    members = [1.0 - p1]
    if p2 is not None:
        members.append(1.0 - p2)
    if p3 is not None:
        members.append(2.0 - p3)
    return ExponentProfile(
        p_list=ps, p1=p1, p2=p2, p3=p3, p_star=min(members), set_p1=set_p1, set_p2=set_p2
    )


@dataclass(frozen=True)
class OmegaStar:
    """Sufficient dither frequency, carried in log10.

    ``value`` is the linear frequency when representable as a double and
    inf otherwise; ``log10`` is always finite.
    """

    value: float
    log10: float


def omega_star(
    L: float, l: int, t_f: float, D: float, lambda_bar: float, p_star: float
) -> OmegaStar:
    """Evaluate the sufficient-frequency formula in log space.

    Monotone: non-decreasing in L, l, t_f and lambda_bar, non-increasing
    in D and p_star.  The max with 1 keeps log10 >= 0.
    """
    if min(L, t_f, D, lambda_bar) <= 0 or l < 1:
        raise InputError("L, t_f, D, lambda_bar must be positive and l >= 1")
    if not 0.0 < p_star <= 1.0:
        raise InputError(f"p_star must lie in (0, 1], got {p_star}")
    log10_c = 2.0 * math.log10(math.pi) + 3.0 * math.log10(l + 1.0) + 2.0 * math.log10(L)
    log10_inner = (
        log10_c
        + math.log10(lambda_bar / D)
        + math.log10(9.0 * t_f + 12.0 + 8.0 * math.pi)
        + 2.0 * math.pi * l * l * L * t_f * LOG10_E
    )
    if not math.isfinite(log10_inner):
        raise NumericsError("omega_star log representation overflowed")
    log10_omega = max(0.0, log10_inner / p_star)
    value = 10.0**log10_omega if log10_omega < 308.0 else math.inf
    return OmegaStar(value=value, log10=log10_omega)


def select_budget(alpha_bar: float, beta_bar: float, t_f: Optional[float] = None):
    """Pick a horizon and error scale satisfying the contraction condition.

    Without a horizon, t_f = ln(2 alpha_bar) / beta_bar makes the decayed
    envelope exactly 1/2.  D is then half the remaining contraction gap,
    D = (1 - alpha_bar exp(-beta_bar t_f)) / 2, so the sum lands strictly
    inside (0, 1).  A supplied t_f that already exhausts the gap raises.
    """
    if alpha_bar < 1.0:
        raise InputError("alpha_bar must be at least 1")
    if beta_bar <= 0.0:
        raise InputError("beta_bar must be positive")
    if t_f is None:
        t_f = math.log(2.0 * alpha_bar) / beta_bar
    if t_f <= 0.0:
        raise InputError("t_f must be positive")
    decayed = alpha_bar * math.exp(-beta_bar * t_f)
    if decayed >= 1.0:
        raise InfeasibleBudgetError(
            f"alpha_bar*exp(-beta_bar*t_f) = {decayed:.6g} >= 1: no admissible D exists"
        )
    D = 0.5 * (1.0 - decayed)
    return t_f, D


def derived_alpha_beta(alpha_bar: float, beta_bar: float, t_f: float, D: float):
    """Envelope constants transferred to the dithered system.

    Requires q = alpha_bar exp(-beta_bar t_f) + D in (0, 1); then
    alpha = (alpha_bar + D)/q >= 1 and beta = -ln(q)/t_f > 0.
    """
    if alpha_bar < 1.0 or beta_bar <= 0.0 or t_f <= 0.0 or D <= 0.0:
        raise InputError("need alpha_bar >= 1, beta_bar > 0, t_f > 0, D > 0")
    q = alpha_bar * math.exp(-beta_bar * t_f) + D
    if not 0.0 < q < 1.0:
        raise InfeasibleBudgetError(
            f"budget condition violated: alpha_bar*exp(-beta_bar*t_f) + D = {q:.6g} not in (0, 1)"
        )
    return (alpha_bar + D) / q, -math.log(q) / t_f


@dataclass(frozen=True)
class StabilityBudget:
    """The full certificate bundle for one scenario.

    ``d_sign_corrected`` records 0.5*(1 - alpha_bar e^{-beta_bar t_f})
    as used; ``d_uncorrected_form`` records the negative-valued variant
    0.5*(e^{-beta_bar t_f} - 1) that appears in the source material, for
    traceability only.
    """

    alpha_bar: float
    beta_bar: float
    t_f: float
    D: float
    L: float
    l: int
    p_star: float
    lambda_bar: float
    omega: OmegaStar
    alpha: float
    beta: float
    d_uncorrected_form: float
    checks: tuple = ()

    def to_dict(self) -> dict:
        return {
            "alpha_bar": self.alpha_bar,
            "beta_bar": self.beta_bar,
            "t_f": self.t_f,
            "D": self.D,
            "L": self.L,
            "l": self.l,
            "p_star": self.p_star,
            "lambda_bar": self.lambda_bar,
            "log10_omega_star": self.omega.log10,
            "omega_star": self.omega.value if math.isfinite(self.omega.value) else None,
            "alpha": self.alpha,
            "beta": self.beta,
            "d_uncorrected_form": self.d_uncorrected_form,
            "checks": list(self.checks),
        }


def make_budget(
    alpha_bar: float,
    beta_bar: float,
    L: float,
    p_list: Sequence[float],
    t_f: Optional[float] = None,
    D: Optional[float] = None,
    lambda_bar: Optional[float] = None,
) -> StabilityBudget:
    """Assemble the certificate: budget selection, envelope, frequency.

    ``lambda_bar`` defaults to alpha_bar (the trajectory bound an
    exponentially stable averaged system satisfies over any horizon).
    """
    profile = exponent_profile(p_list)
    if t_f is None or D is None:
        t_f_sel, D_sel = select_budget(alpha_bar, beta_bar, t_f)
        t_f = t_f if t_f is not None else t_f_sel
        D = D if D is not None else D_sel
    lam = alpha_bar if lambda_bar is None else lambda_bar
    alpha, beta = derived_alpha_beta(alpha_bar, beta_bar, t_f, D)
    ws = omega_star(L, len(profile.p_list), t_f, D, lam, profile.p_star)
    return StabilityBudget(
        alpha_bar=alpha_bar,
        beta_bar=beta_bar,
        t_f=t_f,
        D=D,
        L=L,
        l=len(profile.p_list),
        p_star=profile.p_star,
        lambda_bar=lam,
        omega=ws,
        alpha=alpha,
        beta=beta,
        d_uncorrected_form=0.5 * (math.exp(-beta_bar * t_f) - 1.0),
    )


@dataclass(frozen=True)
class EnvelopeReport:
    passed: bool
    max_ratio: float
    t_at_max: float


def check_envelope(traj: Trajectory, alpha: float, beta: float, slack: float = 1.0) -> EnvelopeReport:
    """Check |x(t)| <= slack * alpha * |x0| * exp(-beta (t - t0)) samplewise."""
    if slack < 1.0:
        raise InputError("slack must be at least 1")
    norms = traj.norms()
    x0n = float(norms[0])
    if x0n == 0.0:
        ok = bool(np.all(norms == 0.0))
        return EnvelopeReport(passed=ok, max_ratio=0.0 if ok else math.inf, t_at_max=traj.t0)
    env = alpha * x0n * np.exp(-beta * (traj.times - traj.t0))
    ratios = norms / env
    idx = int(np.argmax(ratios))
    return EnvelopeReport(
        passed=bool(ratios[idx] <= slack),
        max_ratio=float(ratios[idx]),
        t_at_max=float(traj.times[idx]),
    )


@dataclass(frozen=True)
class ApproximationReport:
    passed: bool
    sup_dev: float
    ratio: float


def check_approximation(
    traj_s: Trajectory, traj_lbs: Trajectory, D: float, x0_norm: float
) -> ApproximationReport:
    """Check sup_t |x_omega(t) - xbar(t)| < D * |x0| over the shared horizon."""
    if np.max(np.abs(traj_s.x0 - traj_lbs.x0)) > 1e-12:
        raise InputError("trajectories start from different initial states")
    dev = sup_deviation(traj_s, traj_lbs)
    scale = D * x0_norm
    if scale <= 0.0:
        return ApproximationReport(passed=dev == 0.0, sup_dev=dev, ratio=math.inf if dev else 0.0)
    return ApproximationReport(passed=dev < scale, sup_dev=dev, ratio=dev / scale)
