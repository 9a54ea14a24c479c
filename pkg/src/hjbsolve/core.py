"""Problem definitions, parameter validation, and convex-duality utilities.

The scalar equation under study is

    -1/2 * Laplacian(u) + (1/p) * |grad u|^p + u = f(x)   on R^N,  p > 1,

with conjugate exponent q = p/(p-1).  The regime-switching variant couples k
copies of the equation through a Markov generator.  Everything in this module
is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "DomainError",
    "SolverError",
    "BranchError",
    "StiffnessError",
    "Quadratic",
    "AnisotropicQuadratic",
    "Tabulated",
    "SourceSpec",
    "ScalarProblem",
    "RegimeModel",
    "conjugate_exponent",
    "fenchel_conjugate_numeric",
    "validate_regime_model",
]


class DomainError(ValueError):
    """A parameter fell outside the admissible range of an operation."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge.

    Attributes:
        residual: max-norm residual at the last iterate, when available.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class BranchError(SolverError):
    """A root finder converged to an inadmissible (non-positive) branch."""


class StiffnessError(SolverError):
    """A derivative iterate exceeded the overflow guard; refine the mesh."""


# ---------------------------------------------------------------------------
# Source terms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Quadratic:
    """Radial quadratic source f(x) = a*|x|^2 + b with a > 0, b >= 0."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError(f"Quadratic source requires a > 0, got a={self.a}")
        if self.b < 0:
            raise DomainError(f"Quadratic source requires b >= 0, got b={self.b}")

    def radial(self, r):
        r = np.asarray(r, dtype=float)
        return self.a * r**2 + self.b

    def xy(self, x, y):
        return self.a * (np.asarray(x) ** 2 + np.asarray(y) ** 2) + self.b


@dataclass(frozen=True)
class AnisotropicQuadratic:
    """Convex but non-radial source f(x,y) = cxx*x^2 + cyy*y^2 + cxy*x*y + c0.

    Convexity requires the Hessian [[2cxx, cxy], [cxy, 2cyy]] to be positive
    semidefinite.
    """

    cxx: float
    cyy: float
    cxy: float = 0.0
    c0: float = 0.0

    def __post_init__(self):
        hess = np.array([[2 * self.cxx, self.cxy], [self.cxy, 2 * self.cyy]])
        eigs = np.linalg.eigvalsh(hess)
        if eigs.min() < -1e-12:
            raise DomainError(
                "AnisotropicQuadratic Hessian must be positive semidefinite; "
                f"eigenvalues {eigs}"
            )

    def xy(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.cxx * x**2 + self.cyy * y**2 + self.cxy * x * y + self.c0


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Radial source sampled on a grid; evaluated by linear interpolation."""

    r: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape or r.size < 2:
            raise DomainError("Tabulated source needs matching 1-d r/value arrays")
        if np.any(np.diff(r) <= 0):
            raise DomainError("Tabulated radii must be strictly increasing")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)

    def radial(self, r):
        return np.interp(np.asarray(r, dtype=float), self.r, self.values)

    def xy(self, x, y):
        return self.radial(np.hypot(np.asarray(x), np.asarray(y)))

    def power_bound_ok(self, q: float) -> bool:
        """Check the implied growth bound f(r) * r^{-q} >= o(1) on the sample.

        Only the sign of the tail is checkable on a finite sample: the last
        quarter of the table must not trend below -|tail tolerance| * r^q.
        """
        tail = slice(3 * self.r.size // 4, None)
        r_t = self.r[tail]
        v_t = self.values[tail]
        scale = max(1.0, float(np.max(np.abs(self.values))))
        return bool(np.all(v_t * np.maximum(r_t, 1.0) ** (-q) >= -1e-8 * scale))


SourceSpec = Union[Quadratic, AnisotropicQuadratic, Tabulated]


# ---------------------------------------------------------------------------
# Problem instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalarProblem:
    """The scalar PDE instance: dimension N, gradient exponent p, source f."""

    N: int
    p: float
    source: SourceSpec

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"dimension N must be a positive integer, got {self.N}")
        if self.p <= 1:
            raise DomainError(f"exponent p must exceed 1, got {self.p}")
        q = conjugate_exponent(self.p)
        if abs(1.0 / self.p + 1.0 / q - 1.0) > 1e-14:
            raise DomainError("conjugate exponent identity violated")

    @property
    def q(self) -> float:
        return conjugate_exponent(self.p)


@dataclass(frozen=True, eq=False)
class RegimeModel:
    """Coupled k-regime instance with quadratic sources and p_j = 2.

    Fields:
        delta: discount rates, shape (k,), all positive.
        alpha: Markov generator, shape (k, k); off-diagonals >= 0, rows sum
            to 0 (probabilistic convention; the coupling matrix is
            M = diag(delta) - alpha).
        sigma: per-regime volatilities, shape (k,), all positive.
        a, b:  quadratic source coefficients f_j(x) = a_j|x|^2 + b_j.
        N:     state dimension.
    """

    delta: np.ndarray
    alpha: np.ndarray
    sigma: np.ndarray
    a: np.ndarray
    b: np.ndarray
    N: int

    def __post_init__(self):
        for name in ("delta", "sigma", "a", "b"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))

    @property
    def k(self) -> int:
        return self.delta.size

    def coupling_matrix(self) -> np.ndarray:
        """M = diag(delta) - alpha; an M-matrix when the model validates."""
        return np.diag(self.delta) - self.alpha


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def conjugate_exponent(p: float) -> float:
    """Return q = p/(p-1), the Hoelder conjugate of p."""
    if p <= 1:
        raise DomainError(f"conjugate exponent requires p > 1, got p={p}")
    return p / (p - 1.0)


def fenchel_conjugate_numeric(
    xi,
    p: float,
    search_radius: float,
    grid_points_per_axis: int,
) -> dict:
    """Brute-force check of inf_v { v.xi + |v|^q/q } = -|xi|^p/p.

    Grid-searches the convex objective over [-search_radius, search_radius]^d
    and reports the closed form alongside.  This is deliberately exhaustive
    rather than gradient-based so it stays independent of the analytic
    formula it is used to test.

    Returns a dict with keys ``numeric_inf``, ``closed_form``, ``argmin``,
    and ``error_bound`` (a Lipschitz * cell-radius bound on the grid gap).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if grid_points_per_axis < 3:
        raise ValueError("grid_points_per_axis must be at least 3")
    if search_radius <= 0:
        raise ValueError("search_radius must be positive")
    q = conjugate_exponent(p)
    d = xi.size

    axes = [np.linspace(-search_radius, search_radius, grid_points_per_axis)] * d
    mesh = np.meshgrid(*axes, indexing="ij")
    v = np.stack([m.ravel() for m in mesh], axis=-1)
    norms = np.linalg.norm(v, axis=-1)
    obj = v @ xi + norms**q / q
    i_min = int(np.argmin(obj))

    spacing = 2.0 * search_radius / (grid_points_per_axis - 1)
    lipschitz = np.linalg.norm(xi) + search_radius ** (q - 1.0)
    return {
        "numeric_inf": float(obj[i_min]),
        "closed_form": -float(np.linalg.norm(xi) ** p) / p,
        "argmin": v[i_min],
        "error_bound": float(lipschitz * spacing * np.sqrt(d) / 2.0),
    }


def validate_regime_model(model: RegimeModel) -> list[str]:
    """Return the list of violated invariants (empty iff the model is valid).

    Violations are reported, never raised, so callers can surface all of
    them at once.
    """
    out: list[str] = []
    k = model.k
    if k < 2:
        out.append(f"k: regime count must be >= 2, got {k}")
    if int(model.N) != model.N or model.N < 1:
        out.append(f"N: state dimension must be a positive integer, got {model.N}")
    for name, arr in (("delta", model.delta), ("sigma", model.sigma), ("a", model.a), ("b", model.b)):
        if arr.shape != (k,):
            out.append(f"{name}: expected shape ({k},), got {arr.shape}")
    if model.alpha.shape != (k, k):
        out.append(f"alpha: expected shape ({k}, {k}), got {model.alpha.shape}")
        return out
    if out:
        return out

    for j in range(k):
        if model.delta[j] <= 0:
            out.append(f"delta[{j}]: discount must be positive, got {model.delta[j]}")
        if model.sigma[j] <= 0:
            out.append(f"sigma[{j}]: volatility must be positive, got {model.sigma[j]}")
        if model.a[j] <= 0:
            out.append(f"a[{j}]: quadratic coefficient must be positive, got {model.a[j]}")
        if model.b[j] < 0:
            out.append(f"b[{j}]: constant coefficient must be non-negative, got {model.b[j]}")
        for l in range(k):
            if l != j and model.alpha[j, l] < 0:
                out.append(f"alpha[{j}][{l}]: off-diagonal rate negative ({model.alpha[j, l]})")
        row = float(model.alpha[j].sum())
        if abs(row) > 1e-12:
            out.append(f"alpha[{j}]: generator row must sum to 0, got {row}")

    if not out:
        m = model.coupling_matrix()
        for j in range(k):
            if m[j, j] <= 0:
                out.append(f"coupling matrix diagonal M[{j}][{j}] not positive ({m[j, j]})")
            for l in range(k):
                if l != j and m[j, l] > 0:
                    out.append(f"coupling matrix off-diagonal M[{j}][{l}] positive ({m[j, l]})")
    return out
