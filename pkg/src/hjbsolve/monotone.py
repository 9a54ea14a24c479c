"""Expanding-ball monotone Dirichlet approximation and its convergence rate.

Dirichlet problems are solved on balls of increasing radius R_n with boundary
data taken from the certified power-growth subsolution barrier
ubar(r) = -c(1+r^2)^{q/2} - C.  The solutions increase toward the exact
whole-space solution on a fixed observation ball, and the sup error decays
exponentially in R_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .core import DomainError, Quadratic, ScalarProblem, SolverError, conjugate_exponent
from .exact import scalar_quadratic_solution
from .radial import (
    DirichletValue,
    RadialSolution,
    solve_radial_bvp,
    subsolution_barrier_excess,
    subsolution_offset_for,
)

__all__ = ["SchemeRun", "run_expanding_balls", "fit_convergence_rate"]


@dataclass(frozen=True, eq=False)
class SchemeRun:
    """One monotone-scheme sweep over expanding balls."""

    radii: np.ndarray
    eps_schedule: np.ndarray
    solutions: list[RadialSolution]
    observation_radius: float
    error_curve: np.ndarray  # pairs (R_n, sup error on the observation ball)
    monotonicity_report: np.ndarray  # per step n: min of u_{n+1}-u_n on [0, R_obs]
    newton_tol: float
    failure_index: int | None = None

    @property
    def completed(self) -> bool:
        return self.failure_index is None


def _barrier_constants(eps: float, p: float, N: int, source, R: float):
    """Barrier pair (c, C) certified non-positive on [0, R]."""
    q = conjugate_exponent(p)
    c = 0.5 * p ** (1.0 / (p - 1.0)) * q ** (-q) * (1.0 - eps)
    radii = np.linspace(0.0, R, 2001)
    C = subsolution_offset_for(c, p, N, source, radii)
    excess = subsolution_barrier_excess(c, C, p, N, source, radii)
    if excess > 0:
        raise SolverError(f"barrier certification failed: excess {excess} > 0")
    return c, C


def run_expanding_balls(
    source: Quadratic,
    N: int,
    radii,
    R_obs: float,
    eps_schedule,
    m: int = 600,
    newton_tol: float = 1e-10,
    max_newton_iters: int = 80,
) -> SchemeRun:
    """Run the monotone Dirichlet scheme for the p = 2 quadratic benchmark.

    The boundary value on ball n is ubar_{eps_n}(R_n) with barrier constants
    certified per ball.  If a ball's Newton solve fails, the partial run is
    returned with ``failure_index`` set.
    """
    radii = np.asarray(radii, dtype=float)
    eps_schedule = np.asarray(eps_schedule, dtype=float)
    if radii.size != eps_schedule.size:
        raise DomainError("eps_schedule must have one entry per ball radius")
    if np.any(np.diff(radii) <= 0):
        raise DomainError("ball radii must be strictly increasing")
    if R_obs >= radii[0]:
        raise DomainError("observation radius must sit inside the smallest ball")
    if eps_schedule.size > 1 and np.any(np.diff(eps_schedule) >= 0):
        raise DomainError("eps schedule must decrease toward 0")

    exact = scalar_quadratic_solution(source.a, source.b, N)
    p = 2.0
    q = conjugate_exponent(p)
    r_watch = np.linspace(0.0, R_obs, 401)
    u_exact_watch = exact.evaluate(r_watch)

    solutions: list[RadialSolution] = []
    watch_profiles = []
    errors = []
    failure_index = None
    for n, (R_n, eps) in enumerate(zip(radii, eps_schedule)):
        c, C = _barrier_constants(eps, p, N, source, R_n)
        u_boundary = -c * (1.0 + R_n**2) ** (q / 2.0) - C
        problem = ScalarProblem(N=N, p=p, source=source)
        try:
            sol = solve_radial_bvp(
                problem,
                R_n,
                DirichletValue(u_boundary),
                m=m,
                newton_tol=newton_tol,
                max_newton_iters=max_newton_iters,
            )
        except SolverError:
            failure_index = n
            break
        solutions.append(sol)
        # cubic spline, not linear interp: linear introduces O(h^2) sampling
        # error that swamps the exponentially small scheme error on big balls
        profile = CubicSpline(sol.grid.nodes, sol.U)(r_watch)
        watch_profiles.append(profile)
        errors.append(float(np.max(np.abs(u_exact_watch - profile))))

    n_done = len(solutions)
    error_curve = np.column_stack([radii[:n_done], np.asarray(errors)]) if n_done else np.empty((0, 2))
    gaps = [
        float(np.min(watch_profiles[i + 1] - watch_profiles[i]))
        for i in range(n_done - 1)
    ]
    return SchemeRun(
        radii=radii,
        eps_schedule=eps_schedule,
        solutions=solutions,
        observation_radius=float(R_obs),
        error_curve=error_curve,
        monotonicity_report=np.asarray(gaps),
        newton_tol=newton_tol,
        failure_index=failure_index,
    )


def fit_convergence_rate(run: SchemeRun) -> dict:
    """Least-squares fit log(err_n) = log(C) - c*(R_n - R_obs).

    Points below 10x the Newton tolerance are treated as solver noise and
    excluded (their count is reported).
    """
    if run.error_curve.shape[0] == 0:
        raise DomainError("run has no error points")
    floor = 10.0 * run.newton_tol
    mask = run.error_curve[:, 1] > floor
    n_excluded = int(np.sum(~mask))
    pts = run.error_curve[mask]
    if pts.shape[0] < 3:
        raise DomainError(
            f"need >= 3 error points above the noise floor, have {pts.shape[0]} "
            f"({n_excluded} excluded)"
        )
    x = pts[:, 0] - run.observation_radius
    y = np.log(pts[:, 1])
    design = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coef
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return {
        "C_fit": float(np.exp(coef[0])),
        "c_fit": float(coef[1]),
        "r_squared": r_squared,
        "n_excluded": n_excluded,
    }
