"""Solvers, exact solutions, and Monte Carlo verification for a quasilinear
elliptic HJB equation and its regime-switching system."""

from .core import (
    AnisotropicQuadratic,
    BranchError,
    DomainError,
    Quadratic,
    RegimeModel,
    ScalarProblem,
    SolverError,
    StiffnessError,
    Tabulated,
    conjugate_exponent,
    fenchel_conjugate_numeric,
    validate_regime_model,
)
from .exact import (
    QuadraticCoefficients,
    RegimeCoefficients,
    long_run_cost,
    pde_residual_quadratic,
    scalar_quadratic_solution,
    scalar_sensitivities,
    solve_regime_betas,
    solve_regime_etas,
    solve_regime_system,
    stationary_variance_per_coordinate,
)

__version__ = "0.1.0"
