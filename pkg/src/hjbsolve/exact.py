"""Closed-form quadratic solutions of the scalar and regime-switching models.

For f(x) = a|x|^2 + b and p = 2 the scalar equation has the unique admissible
solution u(x) = A|x|^2 + B with

    2A^2 + A - a = 0,  A = (-1 + sqrt(1 + 8a)) / 4,  B = b + A*N.

The regime-switching analogue u_j(x) = beta_j|x|^2 + eta_j reduces to a
coupled quadratic system for beta and an M-matrix linear system for eta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BranchError,
    DomainError,
    Quadratic,
    RegimeModel,
    SolverError,
    validate_regime_model,
)

__all__ = [
    "QuadraticCoefficients",
    "RegimeCoefficients",
    "scalar_quadratic_solution",
    "scalar_sensitivities",
    "pde_residual_quadratic",
    "solve_regime_betas",
    "solve_regime_etas",
    "solve_regime_system",
    "long_run_cost",
    "stationary_variance_per_coordinate",
]


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Coefficients of the exact solution u = A|x|^2 + B."""

    A: float
    B: float

    def evaluate(self, r):
        return self.A * np.asarray(r, dtype=float) ** 2 + self.B


@dataclass(frozen=True, eq=False)
class RegimeCoefficients:
    """Per-regime coefficients u_j = beta_j|x|^2 + eta_j with residuals."""

    beta: np.ndarray
    eta: np.ndarray
    residual_beta: float
    residual_eta: float


def scalar_quadratic_solution(a: float, b: float, N: int) -> QuadraticCoefficients:
    """Admissible-branch coefficients for f = a|x|^2 + b, p = 2.

    The negative root (-1 - sqrt(1+8a))/4 violates the growth condition
    u(x)|x|^{-2} >= 0 at infinity and is never returned.
    """
    if a <= 0:
        raise DomainError(f"scalar_quadratic_solution requires a > 0, got {a}")
    if b < 0:
        raise DomainError(f"scalar_quadratic_solution requires b >= 0, got {b}")
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    A = (-1.0 + np.sqrt(1.0 + 8.0 * a)) / 4.0
    return QuadraticCoefficients(A=float(A), B=float(b + A * N))


def scalar_sensitivities(a: float, N: int) -> dict:
    """Closed-form derivatives of (A, B) with respect to the source data."""
    if a <= 0:
        raise DomainError(f"scalar_sensitivities requires a > 0, got {a}")
    root = np.sqrt(1.0 + 8.0 * a)
    return {"dA_da": float(1.0 / root), "dB_da": float(N / root), "dB_db": 1.0}


def pde_residual_quadratic(
    coeffs: QuadraticCoefficients,
    source: Quadratic,
    N: int,
    sample_radii,
) -> float:
    """Max abs residual of u = A r^2 + B in the p = 2 equation at the samples."""
    r = np.asarray(sample_radii, dtype=float)
    if r.size == 0:
        raise DomainError("sample_radii must be non-empty")
    if np.any(r < 0):
        raise DomainError("sample_radii must be non-negative")
    A, B = coeffs.A, coeffs.B
    resid = (
        -0.5 * (2.0 * A * N)
        + 0.5 * (4.0 * A**2 * r**2)
        + (A * r**2 + B)
        - source.radial(r)
    )
    return float(np.max(np.abs(resid)))


def _beta_residual(model: RegimeModel, beta: np.ndarray) -> np.ndarray:
    return 2.0 * beta**2 + model.delta * beta - model.alpha @ beta - model.a


def solve_regime_betas(
    model: RegimeModel,
    newton_tol: float = 1e-12,
    max_iters: int = 100,
    initial_guess: np.ndarray | None = None,
) -> np.ndarray:
    """Solve 2*beta_j^2 + delta_j*beta_j - sum_l alpha_jl*beta_l = a_j.

    Damped Newton with the analytic Jacobian
    J[j][l] = (4*beta_j + delta_j) * 1{j=l} - alpha[j][l] and the fixed
    initial guess beta_j = sqrt(a_j / 2), so the result is deterministic
    for a given model.
    """
    violations = validate_regime_model(model)
    if violations:
        raise DomainError("invalid regime model: " + "; ".join(violations))
    if newton_tol <= 0:
        raise DomainError("newton_tol must be positive")

    beta = np.sqrt(model.a / 2.0) if initial_guess is None else np.asarray(initial_guess, dtype=float).copy()
    res = _beta_residual(model, beta)
    for _ in range(max_iters):
        norm = float(np.max(np.abs(res)))
        if norm <= newton_tol:
            break
        jac = np.diag(4.0 * beta + model.delta) - model.alpha
        step = np.linalg.solve(jac, -res)
        lam = 1.0
        for _ in range(40):
            trial = beta + lam * step
            trial_res = _beta_residual(model, trial)
            if np.max(np.abs(trial_res)) < norm:
                beta, res = trial, trial_res
                break
            lam *= 0.5
        else:
            raise SolverError("beta Newton line search stalled", residual=norm)
    else:
        raise SolverError(
            f"beta Newton did not converge in {max_iters} iterations",
            residual=float(np.max(np.abs(res))),
        )
    if np.any(beta <= 0):
        raise BranchError(
            f"beta solver converged to a non-positive branch: {beta}",
            residual=float(np.max(np.abs(res))),
        )
    return beta


def solve_regime_etas(model: RegimeModel, beta: np.ndarray) -> np.ndarray:
    """Solve M*eta = C with M = diag(delta) - alpha, C_j = b_j + sigma_j^2*beta_j*N.

    For k = 2 the explicit 2x2 inverse is used as a cross-check of the
    library solve.
    """
    beta = np.asarray(beta, dtype=float)
    m = model.coupling_matrix()
    c = model.b + model.sigma**2 * beta * model.N
    det = np.linalg.det(m)
    if abs(det) < 1e-14 * max(1.0, float(np.abs(m).max()) ** model.k):
        raise np.linalg.LinAlgError(
            "coupling matrix is numerically singular; the M-matrix "
            "precondition should rule this out -- please report"
        )
    eta = np.linalg.solve(m, c)
    if model.k == 2:
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
        eta_direct = inv @ c
        if np.max(np.abs(eta - eta_direct)) > 1e-10 * max(1.0, float(np.max(np.abs(eta)))):
            raise SolverError("2x2 inverse cross-check disagrees with linear solve")
    return eta


def solve_regime_system(
    model: RegimeModel,
    newton_tol: float = 1e-12,
    max_iters: int = 100,
) -> RegimeCoefficients:
    """Solve both algebraic systems and report substitution residuals."""
    beta = solve_regime_betas(model, newton_tol=newton_tol, max_iters=max_iters)
    eta = solve_regime_etas(model, beta)
    res_b = float(np.max(np.abs(_beta_residual(model, beta))))
    res_e = float(
        np.max(
            np.abs(
                model.delta * eta
                - model.alpha @ eta
                - (model.b + model.sigma**2 * beta * model.N)
            )
        )
    )
    return RegimeCoefficients(beta=beta, eta=eta, residual_beta=res_b, residual_eta=res_e)


def long_run_cost(a: float, b: float, N: int, sigma: float) -> float:
    """Long-run average cost (A + 1/4)*N*sigma^2 + b of the controlled state."""
    if sigma <= 0:
        raise DomainError(f"long_run_cost requires sigma > 0, got {sigma}")
    A = scalar_quadratic_solution(a, b, N).A
    return float((A + 0.25) * N * sigma**2 + b)


def stationary_variance_per_coordinate(a: float, sigma: float) -> float:
    """Variance sigma^2/(4A) of each coordinate under the invariant law."""
    if sigma <= 0:
        raise DomainError(f"stationary variance requires sigma > 0, got {sigma}")
    A = scalar_quadratic_solution(a, 0.0, 1).A
    return float(sigma**2 / (4.0 * A))
