"""bracketsim: Lie-bracket averaging of dithered input-affine systems.

Simulation of the dithered and averaged dynamics, global exponential
stability budgets with the sufficient dither frequency, numerical audits
of the functional-expansion bounds, and sampled frequency adaptation.
"""

__version__ = "0.1.0"

from .adaptive import AdaptiveRun, check_adaptive_convergence, run_adaptive
from .dither import (
    DitherSignal,
    big_v,
    big_v2,
    check_dither_assumptions,
    cosine,
    custom,
    gamma,
    gamma_limit,
    sine,
    square,
)
from .dynamics import (
    Channel,
    DitheredSystem,
    VectorField,
    check_vanishing_at_origin,
    estimate_lipschitz,
    evaluate_field,
    lie_bracket,
    lie_derivative,
    spatial_jacobian,
    time_partial,
)
from .errors import (
    AssumptionViolationError,
    BracketSimError,
    ConfigError,
    DimensionError,
    DivergenceError,
    InfeasibleBudgetError,
    InputError,
    NumericsError,
    ResolutionError,
)
from .expansion import (
    ExpansionContext,
    ExpansionReport,
    audit_bounds,
    audit_j_bounds,
    bound_value,
    eval_term,
    make_context,
    verify_expansion_identity,
)
from .lbs import LieBracketSystem, build_lbs, check_interaction_condition
from .scenarios import (
    LipschitzTable,
    coslog_field,
    example_lbs_coefficient,
    example_system,
    linear_field,
    lipschitz_table,
    sinlog_field,
    system_from_config,
)
from .sim import Trajectory, integrate, integrate_dithered, sup_deviation, write_csv
from .stability import (
    ExponentProfile,
    OmegaStar,
    StabilityBudget,
    check_approximation,
    check_envelope,
    derived_alpha_beta,
    exponent_profile,
    make_budget,
    omega_star,
    select_budget,
)
