"""almkit: first-order augmented Lagrangian solvers for nonconvex composite
problems with nonlinear equality (and convex inequality) constraints."""

from .apg import ApgResult, apg_solve
from .core import (
    ConstantsLedger,
    ConstraintOracle,
    DimensionMismatch,
    EvalCounters,
    KktResidual,
    NonFiniteValue,
    ProblemSpec,
    ProxCapableFunction,
    SmoothOracle,
    aggregate_constants,
    al_curvature_params,
    al_gradient_smooth,
    al_value,
    kkt_residual,
)
from .ialm import (
    IalmConfig,
    OuterIterationRecord,
    PowerGrowthDual,
    PracticalDual,
    SolveReport,
    TheoreticalDual,
    dual_step_size,
    gamma_schedule,
    ialm_solve,
)
from .ineq import (
    IneqConstants,
    IneqProblemSpec,
    IneqSolveReport,
    TripleKktResidual,
    al_ineq_gradient_smooth,
    al_ineq_value,
    ialm_ineq_solve,
    kkt_residual_ineq,
    slack_reformulate,
)
from .ippm import IppmResult, SubsolverStall, ippm_solve
from .problems import gen_clustering, gen_ev, gen_lcqp, load_points_csv

__all__ = [
    "ApgResult",
    "ConstantsLedger",
    "ConstraintOracle",
    "DimensionMismatch",
    "EvalCounters",
    "IalmConfig",
    "IneqConstants",
    "IneqProblemSpec",
    "IneqSolveReport",
    "IppmResult",
    "KktResidual",
    "NonFiniteValue",
    "OuterIterationRecord",
    "PowerGrowthDual",
    "PracticalDual",
    "ProblemSpec",
    "ProxCapableFunction",
    "SmoothOracle",
    "SolveReport",
    "SubsolverStall",
    "TheoreticalDual",
    "TripleKktResidual",
    "aggregate_constants",
    "al_curvature_params",
    "al_gradient_smooth",
    "al_ineq_gradient_smooth",
    "al_ineq_value",
    "al_value",
    "apg_solve",
    "dual_step_size",
    "gamma_schedule",
    "gen_clustering",
    "gen_ev",
    "gen_lcqp",
    "ialm_ineq_solve",
    "ialm_solve",
    "ippm_solve",
    "kkt_residual",
    "kkt_residual_ineq",
    "load_points_csv",
    "slack_reformulate",
]
