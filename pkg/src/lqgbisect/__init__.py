"""Finite-horizon LQG control under a quadratic energy budget.

The solver prices the energy constraint into the quadratic objective with a
nonnegative multiplier, runs a standard Riccati backward pass for each
candidate price, and bisects on the resulting constraint gap -- which is
monotone in the price -- until complementary slackness holds.  Expected costs
are exact (propagated second moments, no sampling); a Monte Carlo module
cross-checks them on demand.

Quickstart::

    from lqgbisect import example_path, load_problem_file, solve

    problem = load_problem_file(example_path("building"))
    result = solve(problem)
    print(result.lambda_star, result.Jp, result.C)
"""

from .moments import (
    CostPair,
    GapReport,
    MomentTrajectory,
    analytic_vs_empirical_gap,
    costs,
    moment_forward,
)
from .problem import (
    LqgProblem,
    ProblemFormatError,
    ValidationReport,
    example_path,
    load_problem,
    load_problem_file,
    problem_to_json,
    save_problem,
    validate,
)
from .riccati import (
    InnerBlockNotPD,
    RiccatiSolution,
    riccati_backward,
    riccati_residual,
)
from .simulate import (
    EmpiricalStats,
    FactorizationFailure,
    TrajectoryRecord,
    simulate,
    trajectory,
)
from .solver import (
    BracketFailure,
    GapEvaluation,
    KktReport,
    SolveResult,
    SweepTable,
    constraint_gap,
    kkt_residuals,
    lambda_sweep,
    solve,
)

__version__ = "0.1.0"

__all__ = [
    "CostPair",
    "GapReport",
    "MomentTrajectory",
    "analytic_vs_empirical_gap",
    "costs",
    "moment_forward",
    "LqgProblem",
    "ProblemFormatError",
    "ValidationReport",
    "example_path",
    "load_problem",
    "load_problem_file",
    "problem_to_json",
    "save_problem",
    "validate",
    "InnerBlockNotPD",
    "RiccatiSolution",
    "riccati_backward",
    "riccati_residual",
    "EmpiricalStats",
    "FactorizationFailure",
    "TrajectoryRecord",
    "simulate",
    "trajectory",
    "BracketFailure",
    "GapEvaluation",
    "KktReport",
    "SolveResult",
    "SweepTable",
    "constraint_gap",
    "kkt_residuals",
    "lambda_sweep",
    "solve",
    "__version__",
]
