"""Radial two-point BVP solver and numeric barrier checks.

The radial reduction of the scalar equation is

    -1/2 * (U'' + (N-1)/r * U') + (1/p)|U'|^p + U = f(r)   on [0, R],

with the regularity condition U'(0) = 0.  At the origin the singular term is
replaced by its analytic limit N*U''(0)/2, giving the row
-N*U''(0)/2 + U(0) - f(0) = 0.  The discretization is second-order centered
finite differences in U with a damped Newton iteration on the full nonlinear
system.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import DomainError, Quadratic, ScalarProblem, SolverError, StiffnessError, conjugate_exponent
from .exact import scalar_quadratic_solution

__all__ = [
    "RadialGrid",
    "DirichletValue",
    "NeumannSlope",
    "DirichletExactQuadratic",
    "NeumannExactQuadratic",
    "RadialSolution",
    "solve_radial_bvp",
    "radial_residual",
    "subsolution_barrier_excess",
    "subsolution_offset_for",
    "explosive_barrier_margin",
    "gradient_bound_ratio",
]

_GRADIENT_CEILING = 1e8


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing node set r_0 = 0 < ... < r_{m-1} = R."""

    R: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.size < 16:
            raise DomainError(f"radial grid needs >= 16 nodes, got {nodes.size}")
        if nodes[0] != 0.0 or nodes[-1] != self.R:
            raise DomainError("radial grid must span [0, R] exactly")
        if np.any(np.diff(nodes) <= 0):
            raise DomainError("radial grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, R: float, m: int) -> "RadialGrid":
        if R <= 0:
            raise DomainError(f"outer radius must be positive, got {R}")
        nodes = np.linspace(0.0, R, m)
        nodes[-1] = R
        return cls(R=R, nodes=nodes)

    @property
    def m(self) -> int:
        return self.nodes.size


# Boundary conditions at r = R.  The ExactQuadratic kinds derive their data
# from the closed-form solution and therefore require a Quadratic source.


@dataclass(frozen=True)
class DirichletValue:
    u_R: float


@dataclass(frozen=True)
class NeumannSlope:
    s_R: float


@dataclass(frozen=True)
class DirichletExactQuadratic:
    pass


@dataclass(frozen=True)
class NeumannExactQuadratic:
    pass


BoundaryCondition = DirichletValue | NeumannSlope | DirichletExactQuadratic | NeumannExactQuadratic


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Solved radial profile with derivative reconstruction and diagnostics.

    S[0] is exactly 0 (imposed); Upp is reconstructed from the ODE as
    Upp = 2*((1/p)|S|^p + U - f) - (N-1)*S/r for r > 0 and
    Upp[0] = 2*(U[0] - f(0))/N.
    """

    grid: RadialGrid
    U: np.ndarray
    S: np.ndarray
    Upp: np.ndarray
    residual: np.ndarray
    diagnostics: dict
    p: float
    N: int


def _radial_source(problem: ScalarProblem):
    src = problem.source
    if not hasattr(src, "radial"):
        raise DomainError("radial solver requires a radial (Quadratic or Tabulated) source")
    return src.radial


def _resolve_bc(bc: BoundaryCondition, problem: ScalarProblem, R: float):
    """Return ('dirichlet'|'neumann', target value)."""
    if isinstance(bc, DirichletValue):
        return "dirichlet", float(bc.u_R)
    if isinstance(bc, NeumannSlope):
        return "neumann", float(bc.s_R)
    if not isinstance(problem.source, Quadratic) or problem.p != 2:
        raise DomainError("ExactQuadratic boundary data requires a Quadratic source with p = 2")
    coeffs = scalar_quadratic_solution(problem.source.a, problem.source.b, problem.N)
    if isinstance(bc, DirichletExactQuadratic):
        return "dirichlet", float(coeffs.A * R**2 + coeffs.B)
    if isinstance(bc, NeumannExactQuadratic):
        return "neumann", float(2.0 * coeffs.A * R)
    raise DomainError(f"unknown boundary condition {bc!r}")


def _grad_power(d: np.ndarray, p: float) -> np.ndarray:
    """(1/p)|d|^p, taking |d| first so fractional p stays real."""
    return np.abs(d) ** p / p


def _grad_power_prime(d: np.ndarray, p: float) -> np.ndarray:
    """d/dd of (1/p)|d|^p = |d|^{p-2} d, with the subgradient choice 0 at 0."""
    out = np.zeros_like(d)
    nz = d != 0.0
    out[nz] = np.abs(d[nz]) ** (p - 2.0) * d[nz]
    return out


def _system_residual(u, r, h, p, N, f_vals, bc_kind, bc_value):
    m = u.size
    g = np.empty(m)
    g[0] = -N * (u[1] - u[0]) / h**2 + u[0] - f_vals[0]
    d = (u[2:] - u[:-2]) / (2.0 * h)
    if np.max(np.abs(d), initial=0.0) > _GRADIENT_CEILING:
        raise StiffnessError(
            "gradient iterate exceeded the overflow guard; use a finer mesh",
            residual=float(np.max(np.abs(d))),
        )
    lap = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
    ri = r[1:-1]
    g[1:-1] = -0.5 * (lap + (N - 1) / ri * d) + _grad_power(d, p) + u[1:-1] - f_vals[1:-1]
    if bc_kind == "dirichlet":
        g[-1] = u[-1] - bc_value
    else:
        g[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h) - bc_value
    return g


def _system_jacobian(u, r, h, p, N, bc_kind):
    m = u.size
    d = (u[2:] - u[:-2]) / (2.0 * h)
    hp = _grad_power_prime(d, p)
    ri = r[1:-1]

    jac = sp.lil_matrix((m, m))
    jac[0, 0] = N / h**2 + 1.0
    jac[0, 1] = -N / h**2

    idx = np.arange(1, m - 1)
    lower = -0.5 / h**2 + (N - 1) / (4.0 * h * ri) - hp / (2.0 * h)
    diag = 1.0 / h**2 + 1.0
    upper = -0.5 / h**2 - (N - 1) / (4.0 * h * ri) + hp / (2.0 * h)
    jac[idx, idx - 1] = lower
    jac[idx, idx] = diag
    jac[idx, idx + 1] = upper

    if bc_kind == "dirichlet":
        jac[m - 1, m - 1] = 1.0
    else:
        jac[m - 1, m - 1] = 3.0 / (2.0 * h)
        jac[m - 1, m - 2] = -2.0 / h
        jac[m - 1, m - 3] = 1.0 / (2.0 * h)
    return jac.tocsc()


def _newton(u0, r, h, p, N, f_vals, bc_kind, bc_value, tol, max_iters):
    u = u0.copy()
    trace = []
    g = _system_residual(u, r, h, p, N, f_vals, bc_kind, bc_value)
    for it in range(max_iters):
        norm = float(np.max(np.abs(g)))
        trace.append(norm)
        if norm <= tol:
            return u, it, trace
        jac = _system_jacobian(u, r, h, p, N, bc_kind)
        step = spla.spsolve(jac, -g)
        lam = 1.0
        for _ in range(40):
            trial = u + lam * step
            try:
                g_trial = _system_residual(trial, r, h, p, N, f_vals, bc_kind, bc_value)
            except StiffnessError:
                lam *= 0.5
                continue
            if np.max(np.abs(g_trial)) < norm:
                u, g = trial, g_trial
                break
            lam *= 0.5
        else:
            # line search exhausted: accept if the residual sits at the
            # rounding floor of the 1/h^2 stencil, otherwise report failure
            floor = 20.0 * np.finfo(float).eps * (1.0 + float(np.max(np.abs(u))) / h**2)
            if norm <= max(tol, floor):
                return u, it, trace
            raise SolverError(
                f"radial Newton stalled at residual {norm:.3e}; trace={trace}",
                residual=norm,
            )
    raise SolverError(
        f"radial Newton did not converge in {max_iters} iterations; trace={trace}",
        residual=float(np.max(np.abs(g))),
    )


def _initial_guess(problem, r, bc_kind, bc_value, f_vals):
    R = r[-1]
    h = r[1] - r[0]
    if isinstance(problem.source, Quadratic) and problem.p == 2:
        coeffs = scalar_quadratic_solution(problem.source.a, problem.source.b, problem.N)
        guess = coeffs.evaluate(r)
        slope_R = 2.0 * coeffs.A * R
    else:
        guess = f_vals.copy()
        slope_R = (f_vals[-1] - f_vals[-2]) / h
    if bc_kind == "dirichlet":
        gap = bc_value - guess[-1]
        if gap != 0.0:
            # boundary-layer shaped correction; width ~ 1/(2|U'(R)|)
            width = max(4.0 * h, min(0.5, 1.0 / (2.0 * abs(slope_R) + 1.0)))
            guess = guess + gap * np.exp((r - R) / width)
    return guess


def solve_radial_bvp(
    problem: ScalarProblem,
    R: float,
    bc: BoundaryCondition,
    m: int = 600,
    newton_tol: float = 1e-10,
    max_newton_iters: int = 60,
) -> RadialSolution:
    """Solve the radial BVP on [0, R] by damped Newton on the FD system.

    Falls back to continuation in the Dirichlet boundary value when the
    direct solve stalls (barrier boundary data sits far below the interior
    solution and creates a steep layer).
    """
    grid = RadialGrid.uniform(R, m)
    r = grid.nodes
    h = r[1] - r[0]
    p, N = problem.p, problem.N
    f_vals = _radial_source(problem)(r)
    bc_kind, bc_value = _resolve_bc(bc, problem, R)

    u0 = _initial_guess(problem, r, bc_kind, bc_value, f_vals)
    try:
        u, iters, trace = _newton(u0, r, h, p, N, f_vals, bc_kind, bc_value, newton_tol, max_newton_iters)
    except SolverError:
        if bc_kind != "dirichlet":
            raise
        # continuation: march the boundary value from the guess-compatible
        # one down to the target
        start = float(u0[-1]) if isinstance(problem.source, Quadratic) else float(f_vals[-1])
        u = u0.copy()
        iters = 0
        for theta in np.linspace(0.2, 1.0, 5):
            target = (1.0 - theta) * start + theta * bc_value
            u, it, trace = _newton(u, r, h, p, N, f_vals, bc_kind, target, newton_tol, max_newton_iters)
            iters += it

    s = np.empty_like(u)
    s[0] = 0.0
    s[1:-1] = (u[2:] - u[:-2]) / (2.0 * h)
    if bc_kind == "neumann":
        s[-1] = bc_value
    else:
        s[-1] = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)

    upp = np.empty_like(u)
    upp[0] = 2.0 * (u[0] - f_vals[0]) / N
    upp[1:] = 2.0 * (_grad_power(s[1:], p) + u[1:] - f_vals[1:]) - (N - 1) * s[1:] / r[1:]

    sol = RadialSolution(
        grid=grid,
        U=u,
        S=s,
        Upp=upp,
        residual=np.zeros_like(u),
        diagnostics={},
        p=p,
        N=N,
    )
    resid = radial_residual(sol, problem)
    sol.residual[:] = resid
    sol.diagnostics.update(
        {
            "is_convex": bool(np.all(upp >= -1e-8)),
            "gradient_monotone": bool(np.all(np.diff(s) >= -1e-8)),
            "max_residual": float(np.max(np.abs(resid))),
            "iterations": int(iters),
            "newton_residual": float(trace[-1]) if trace else 0.0,
            "h": float(h),
        }
    )
    return sol


def radial_residual(sol: RadialSolution, problem: ScalarProblem) -> np.ndarray:
    """Pointwise PDE residual; the r = 0 entry uses the origin limit form."""
    r = sol.grid.nodes
    f_vals = _radial_source(problem)(r)
    p, N = problem.p, problem.N
    out = np.empty_like(sol.U)
    out[0] = -0.5 * N * sol.Upp[0] + sol.U[0] - f_vals[0]
    out[1:] = (
        -0.5 * (sol.Upp[1:] + (N - 1) / r[1:] * sol.S[1:])
        + _grad_power(sol.S[1:], p)
        + sol.U[1:]
        - f_vals[1:]
    )
    return out


def subsolution_barrier_excess(
    c: float,
    C: float,
    p: float,
    N: int,
    source,
    sample_radii,
) -> float:
    """Max of L[ubar] - f over the samples for ubar = -c(1+r^2)^{q/2} - C.

    A non-positive return certifies the subsolution property on the sampled
    radii.  The admissible range is 0 < c < p^{1/(p-1)} q^{-q}; outside it
    the value is still computed but flagged with a warning.
    """
    q = conjugate_exponent(p)
    c_max = p ** (1.0 / (p - 1.0)) * q ** (-q)
    if not (0.0 < c < c_max):
        warnings.warn(
            f"barrier coefficient c={c} outside the admissible range (0, {c_max}); "
            "result is unverified",
            stacklevel=2,
        )
    r = np.asarray(sample_radii, dtype=float)
    if r.size == 0:
        raise DomainError("sample_radii must be non-empty")
    one = 1.0 + r**2
    lhs = (
        c * q * N / 2.0 * one ** (q / 2.0 - 1.0)
        + c * q * (q - 2.0) / 2.0 * one ** (q / 2.0 - 2.0) * r**2
        + c**p * q**p / p * one ** (p * (q / 2.0 - 1.0)) * np.abs(r) ** p
        - c * one ** (q / 2.0)
        - C
    )
    return float(np.max(lhs - source.radial(r)))


def subsolution_offset_for(c: float, p: float, N: int, source, sample_radii) -> float:
    """Smallest C >= 0 certifying subsolution excess <= 0 on the samples.

    The offset -C enters the excess affinely with slope -1, so the certified
    constant is just the positive part of the excess at C = 0 (plus a small
    safety margin).
    """
    excess0 = subsolution_barrier_excess(c, 0.0, p, N, source, sample_radii)
    return max(0.0, excess0) + 1e-9


def explosive_barrier_margin(
    R: float,
    alpha: float,
    p: float,
    N: int,
    radii_near_boundary,
) -> float:
    """Min over samples of L0[phi] for phi(r) = (R-r)^{-alpha}.

    L0 = -1/2*Delta + (1/p)|.'|^p + identity; a non-negative minimum
    certifies the explosive-barrier inequality near r = R.
    """
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    r = np.asarray(radii_near_boundary, dtype=float)
    if np.any(r >= R):
        raise DomainError("barrier (R-r)^{-alpha} is undefined for r >= R")
    if np.any(r <= 0):
        raise DomainError("samples must have r > 0 (radial Laplacian)")
    gap = R - r
    lap = alpha * (alpha + 1.0) * gap ** (-alpha - 2.0) + (N - 1) * alpha / r * gap ** (-alpha - 1.0)
    grad_term = alpha**p / p * gap ** (-p * (alpha + 1.0))
    return float(np.min(-0.5 * lap + grad_term + gap ** (-alpha)))


def gradient_bound_ratio(sol: RadialSolution, inner_R: float, source) -> float:
    """Diagnostic ratio for the interior gradient bound.

    ratio = sup_{r<=inner_R}|S| /
            (inner_R^{-1} sup_{r<=2 inner_R}|U| + sup_{r<=2 inner_R}|f|^{1/p} + 1)
    """
    if inner_R > sol.grid.R / 2.0:
        raise DomainError("inner_R must not exceed half the outer radius")
    r = sol.grid.nodes
    inner = r <= inner_R
    outer = r <= 2.0 * inner_R
    f_vals = np.abs(source.radial(r[outer]))
    numer = float(np.max(np.abs(sol.S[inner])))
    denom = (
        float(np.max(np.abs(sol.U[outer]))) / inner_R
        + float(np.max(f_vals)) ** (1.0 / sol.p)
        + 1.0
    )
    return numer / denom
