"""Construction of the averaged Lie-bracket system.

The averaged drift adds, to the original drift, every pair bracket
``[f_i, f_j]`` weighted by the high-frequency limit of its dither pair
coefficient:

    xbar' = f0(t, xbar) + sum_{i<j} gamma_ij(inf) [f_i, f_j](t, xbar).

The interaction condition is verified before construction: pairs whose
frequency powers sum above one must either average out (vanishing
one-period iterated integral) or commute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dither import check_dither_assumptions, gamma_limit, _pair_phase_integral
from .dynamics import DitheredSystem, VectorField, lie_bracket
from .errors import AssumptionViolationError, InputError

__all__ = ["LieBracketSystem", "InteractionReport", "check_interaction_condition", "build_lbs"]


@dataclass(frozen=True)
class LieBracketSystem:
    """Averaged system: full drift field plus the pair coefficient table.

    ``coefficients`` maps 1-based channel pairs (i, j), i < j, to the
    high-frequency limit of their dither coefficient.
    """

    drift: VectorField
    coefficients: dict
    source: DitheredSystem


@dataclass(frozen=True)
class PairVerdict:
    pair: tuple[int, int]
    p_sum: float
    integral_vanishes: bool
    bracket_vanishes: bool
    max_bracket_norm: float

    @property
    def passed(self) -> bool:
        return self.p_sum <= 1.0 + 1e-12 or self.integral_vanishes or self.bracket_vanishes


@dataclass(frozen=True)
class InteractionReport:
    verdicts: tuple[PairVerdict, ...]

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def bracket_vanishes(self, pair) -> bool:
        for v in self.verdicts:
            if v.pair == pair:
                return v.bracket_vanishes
        return False


def check_interaction_condition(
    system: DitheredSystem,
    probes: int = 50,
    tol: float = 1e-9,
    seed: int = 0,
    box_halfwidth: float = 10.0,
) -> InteractionReport:
    """Verify the interaction condition for every channel pair.

    Pairs with p_i + p_j <= 1 pass vacuously.  Above one, the one-period
    iterated dither integral is checked by quadrature; failing that, the
    bracket is probed at random (t, x) and the pair passes only if all
    probed bracket norms stay within tol (scaled by 1 + |x|).
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    rng = np.random.default_rng(seed)
    l = system.n_channels
    verdicts = []
    for i in range(1, l + 1):
        for j in range(i + 1, l + 1):
            ci, cj = system.channels[i - 1], system.channels[j - 1]
            p_sum = ci.power + cj.power
            if p_sum <= 1.0 + 1e-12:
                verdicts.append(PairVerdict((i, j), p_sum, True, False, math.nan))
                continue
            phase_int = _pair_phase_integral(ci.dither, cj.dither)
            max_norm = 0.0
            for _ in range(probes):
                t = rng.uniform(0.0, 2.0 * math.pi)
                x = rng.uniform(-box_halfwidth, box_halfwidth, size=system.dim)
                br = lie_bracket(ci.field, cj.field, t, x)
                max_norm = max(
                    max_norm,
                    float(np.linalg.norm(br)) / (1.0 + float(np.linalg.norm(x))),
                )
            verdicts.append(
                PairVerdict(
                    (i, j),
                    p_sum,
                    integral_vanishes=abs(phase_int) <= tol,
                    bracket_vanishes=max_norm <= tol,
                    max_bracket_norm=max_norm,
                )
            )
    return InteractionReport(tuple(verdicts))


def build_lbs(system: DitheredSystem, skip_assumption_checks: bool = False) -> LieBracketSystem:
    """Assemble the Lie-bracket system associated with a dithered system.

    Unless ``skip_assumption_checks`` acknowledges responsibility, the
    dither admissibility checks and the interaction condition run first
    and a violation raises.  Pair coefficients come from the exact
    high-frequency case split, never from numerical extrapolation.
    """
    interaction = None
    if not skip_assumption_checks:
        for c in system.channels:
            chk = check_dither_assumptions(c.dither)
            if not chk.passed:
                raise AssumptionViolationError(
                    f"dither '{c.dither.label}' fails admissibility: "
                    f"max|u|={chk.max_abs:.6g}, mean residual={chk.mean_residual:.3g}, "
                    f"periodicity residual={chk.periodicity_residual:.3g}"
                )
        interaction = check_interaction_condition(system)
        if not interaction.passed:
            bad = [v.pair for v in interaction.verdicts if not v.passed]
            raise AssumptionViolationError(f"interaction condition fails for pairs {bad}")

    l = system.n_channels
    coeffs = {}
    for i in range(1, l + 1):
        for j in range(i + 1, l + 1):
            ci, cj = system.channels[i - 1], system.channels[j - 1]
            certified = interaction.bracket_vanishes((i, j)) if interaction else False
            coeffs[(i, j)] = gamma_limit(
                ci.dither, cj.dither, ci.power, cj.power, vanishing_bracket=certified
            )

    drift_field = system.drift
    channels = system.channels
    pairs = []
    for (i, j), g in coeffs.items():
        if g == 0.0:
            continue
        fi, fj = channels[i - 1].field, channels[j - 1].field
        if fi.spatial_jacobian is not None and fj.spatial_jacobian is not None:
            def bracket(t, x, fi=fi, fj=fj):
                return fj.spatial_jacobian(t, x) @ np.asarray(fi.value(t, x), dtype=float) - (
                    fi.spatial_jacobian(t, x) @ np.asarray(fj.value(t, x), dtype=float)
                )
        else:
            def bracket(t, x, fi=fi, fj=fj):
                return lie_bracket(fi, fj, t, x)
        pairs.append((g, bracket))

    def drift_value(t, x):
        out = np.asarray(drift_field.value(t, x), dtype=float).copy()
        for g, bracket in pairs:
            out += g * bracket(t, x)
        return out

    drift = VectorField(
        dim=system.dim,
        value=drift_value,
        fd_step=drift_field.fd_step,
        label=f"lbs({system.label})" if system.label else "lbs",
    )
    return LieBracketSystem(drift=drift, coefficients=coeffs, source=system)
