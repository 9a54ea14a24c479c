"""Euler-Maruyama simulation and Monte Carlo verification of optimality.

Under the optimal feedback -2A*x the controlled state is an
Ornstein-Uhlenbeck process dX = -2A*X dt + sigma dW.  Paths are generated
from counter-based per-path streams so results do not depend on scheduling:
path ``i`` of a run seeded with ``s`` uses a Philox generator keyed by
``s * 2**64 + i``.  Normal variates come from numpy's standard_normal for
every stream (recorded in scheme metadata for golden-output stability).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import DomainError, RegimeModel
from .exact import scalar_quadratic_solution, QuadraticCoefficients

__all__ = [
    "RngSpec",
    "PathSet",
    "MonteCarloEstimate",
    "simulate_ou",
    "simulate_regime_switching",
    "estimate_discounted_cost",
    "truncation_tail_bound",
    "optimal_feedback",
    "verify_value_function",
    "estimate_stationary_moments",
    "transversality_decay",
    "long_run_cost_estimate",
    "regime_occupation",
]


@dataclass(frozen=True)
class RngSpec:
    """Seed plus the fixed per-path stream derivation rule.

    Path index ``i`` uses ``Philox(key = seed * 2**64 + i)``, so the noise
    sequence of a given (seed, path index) pair is bit-identical regardless
    of how many paths run or in what order.
    """

    seed: int

    def __post_init__(self):
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must fit in 64 bits")

    def generator(self, path_index: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=(self.seed << 64) + path_index))


@dataclass(frozen=True, eq=False)
class PathSet:
    """Simulated trajectories with optional regime labels and RNG provenance."""

    times: np.ndarray
    states: np.ndarray  # (n_paths, n_steps, N)
    rng: RngSpec
    scheme_metadata: dict
    regimes: np.ndarray | None = None  # (n_paths, n_steps), labels in 1..k

    @property
    def n_paths(self) -> int:
        return self.states.shape[0]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def T(self) -> float:
        return float(self.times[-1])


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    n_samples: int


def _as_state(x0, N: int | None = None) -> np.ndarray:
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if N is not None and x0.size == 1 and N > 1:
        x0 = np.full(N, x0[0])
    return x0


def _path_normals(rng: RngSpec, path_index: int, n_steps: int, N: int) -> np.ndarray:
    return rng.generator(path_index).standard_normal((n_steps, N))


def _mc(samples: np.ndarray) -> MonteCarloEstimate:
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    std = float(samples.std(ddof=1)) if n > 1 else 0.0
    return MonteCarloEstimate(mean=float(samples.mean()), std_error=std / np.sqrt(n), n_samples=n)


def simulate_ou(
    A: float,
    sigma: float,
    x0,
    T: float,
    dt: float,
    n_paths: int,
    rng: RngSpec,
) -> PathSet:
    """Euler-Maruyama paths of dX = -2A*X dt + sigma dW from x0."""
    if A <= 0 or sigma < 0:
        raise DomainError("simulate_ou requires A > 0 and sigma >= 0")
    if dt <= 0 or T < dt:
        raise DomainError("require dt > 0 and T >= dt")
    x0 = _as_state(x0)
    N = x0.size
    n_steps = int(round(T / dt))
    times = np.arange(n_steps + 1) * dt

    metadata = {
        "dt": dt,
        "scheme": "euler-maruyama",
        "normals": "numpy-standard-normal",
        "stream": "philox(seed<<64 | path)",
        "A": A,
        "sigma": sigma,
    }
    if 2.0 * A * dt >= 1.0:
        metadata["stability_warning"] = (
            f"2*A*dt = {2 * A * dt:.3g} >= 1: explicit scheme is outside its "
            "stability region"
        )
        warnings.warn(metadata["stability_warning"], stacklevel=2)

    states = np.empty((n_paths, n_steps + 1, N))
    states[:, 0, :] = x0
    noise = np.empty((n_paths, n_steps, N))
    for i in range(n_paths):
        noise[i] = _path_normals(rng, i, n_steps, N)
    decay = 1.0 - 2.0 * A * dt
    root_dt = np.sqrt(dt)
    for t in range(1, n_steps + 1):
        states[:, t, :] = states[:, t - 1, :] * decay + sigma * root_dt * noise[:, t - 1, :]
    return PathSet(times=times, states=states, rng=rng, scheme_metadata=metadata)


def simulate_regime_switching(
    model: RegimeModel,
    beta: np.ndarray,
    x0,
    j0: int,
    T: float,
    dt: float,
    rng: RngSpec,
    switching: str = "bernoulli_euler",
    n_paths: int = 1,
) -> PathSet:
    """Regime-modulated OU paths with drift -2*beta_j*X and volatility sigma_j.

    ``switching`` is ``"bernoulli_euler"`` (switch with probability
    alpha[j][l]*dt per step) or ``"exponential_clock"`` (exact holding
    times).  ``j0`` is the 1-based initial regime; regime labels in the
    returned PathSet are 1-based as well.

    Per-path draw order: regime randomness first, then all normal
    increments, so both schemes stay deterministic per (seed, path).
    """
    beta = np.asarray(beta, dtype=float)
    if switching not in ("bernoulli_euler", "exponential_clock"):
        raise DomainError(f"unknown switching mode {switching!r}")
    k = model.k
    if not (1 <= j0 <= k):
        raise DomainError(f"initial regime must be in 1..{k}, got {j0}")
    off_rate = -np.diag(model.alpha)  # total leave rate per regime
    if switching == "bernoulli_euler" and dt * float(off_rate.max()) >= 0.5:
        raise DomainError(
            "dt too large for Bernoulli-Euler switching: "
            f"dt * max rate = {dt * off_rate.max():.3g} >= 0.5"
        )

    x0 = _as_state(x0, model.N)
    N = x0.size
    n_steps = int(round(T / dt))
    times = np.arange(n_steps + 1) * dt

    regimes = np.empty((n_paths, n_steps + 1), dtype=np.int64)
    noise = np.empty((n_paths, n_steps, N))
    # transition law out of each regime: jump probabilities proportional to
    # the off-diagonal rates
    jump_cdf = np.zeros((k, k))
    for j in range(k):
        probs = model.alpha[j].clip(min=0.0)
        probs[j] = 0.0
        total = probs.sum()
        jump_cdf[j] = np.cumsum(probs / total) if total > 0 else 1.0

    for i in range(n_paths):
        gen = rng.generator(i)
        if switching == "bernoulli_euler":
            u_switch = gen.random(n_steps)
            u_target = gen.random(n_steps)
            chain = np.empty(n_steps + 1, dtype=np.int64)
            chain[0] = j0 - 1
            for t in range(1, n_steps + 1):
                j = chain[t - 1]
                if u_switch[t - 1] < off_rate[j] * dt:
                    chain[t] = int(np.searchsorted(jump_cdf[j], u_target[t - 1]))
                else:
                    chain[t] = j
            regimes[i] = chain
        else:
            chain = np.empty(n_steps + 1, dtype=np.int64)
            t_now, j = 0.0, j0 - 1
            filled = 0
            while filled <= n_steps:
                hold = gen.exponential(1.0 / off_rate[j]) if off_rate[j] > 0 else np.inf
                t_next = t_now + hold
                stop = min(n_steps, int(np.floor(t_next / dt))) if np.isfinite(t_next) else n_steps
                chain[filled : stop + 1] = j
                filled = stop + 1
                if filled > n_steps:
                    break
                j = int(np.searchsorted(jump_cdf[j], gen.random()))
                t_now = t_next
            regimes[i] = chain
        noise[i] = gen.standard_normal((n_steps, N))

    states = np.empty((n_paths, n_steps + 1, N))
    states[:, 0, :] = x0
    root_dt = np.sqrt(dt)
    for t in range(1, n_steps + 1):
        j_now = regimes[:, t]
        drift = -2.0 * beta[j_now][:, None] * states[:, t - 1, :]
        states[:, t, :] = (
            states[:, t - 1, :] + drift * dt + model.sigma[j_now][:, None] * root_dt * noise[:, t - 1, :]
        )

    metadata = {
        "dt": dt,
        "scheme": "euler-maruyama",
        "switching": switching,
        "normals": "numpy-standard-normal",
        "stream": "philox(seed<<64 | path)",
    }
    return PathSet(
        times=times,
        states=states,
        rng=rng,
        scheme_metadata=metadata,
        regimes=regimes + 1,
    )


def optimal_feedback(A: float):
    """Feedback law of the quadratic solution: alpha*(x) = -2A*x."""

    def control(x: np.ndarray) -> np.ndarray:
        return -2.0 * A * x

    return control


def truncation_tail_bound(a: float, b: float, N: int, x0, T: float, sigma: float = 1.0) -> float:
    """Closed-form bound e^{-T} * (A*(e^{-4AT}|x0|^2 + N sigma^2/(4A)) + B)."""
    coeffs = scalar_quadratic_solution(a, b, N)
    x0 = _as_state(x0, N)
    A, B = coeffs.A, coeffs.B
    return float(
        np.exp(-T) * (A * (np.exp(-4.0 * A * T) * np.dot(x0, x0) + N * sigma**2 / (4.0 * A)) + B)
    )


def estimate_discounted_cost(
    a: float,
    b: float,
    N: int,
    x0,
    T: float,
    dt: float,
    n_paths: int,
    rng: RngSpec,
    control=None,
    truncation_budget: float = 0.01,
    block_size: int = 2000,
    sigma: float = 1.0,
) -> MonteCarloEstimate:
    """Monte Carlo estimate of E int_0^T e^{-t}(1/2|v|^2 + a|X|^2 + b) dt.

    ``control`` maps a (paths, N) state block to the applied control;
    defaults to the optimal feedback -2A*x.  Left-endpoint Riemann
    quadrature on the Euler grid (consistent O(dt) weak error).  With the
    default control the closed-form tail bound must fit inside
    ``truncation_budget``.
    """
    if dt <= 0 or T < dt:
        raise DomainError("require dt > 0 and T >= dt")
    x0 = _as_state(x0, N)
    if control is None:
        A = scalar_quadratic_solution(a, b, N).A
        control = optimal_feedback(A)
        tail = truncation_tail_bound(a, b, N, x0, T, sigma=sigma) if sigma > 0 else 0.0
        if tail > truncation_budget:
            raise DomainError(
                f"truncation tail bound {tail:.3e} exceeds the budget "
                f"{truncation_budget:.3e}; increase T"
            )

    n_steps = int(round(T / dt))
    disc = np.exp(-np.arange(n_steps) * dt)
    root_dt = np.sqrt(dt)
    costs = np.empty(n_paths)
    for start in range(0, n_paths, block_size):
        stop = min(start + block_size, n_paths)
        nb = stop - start
        noise = np.empty((nb, n_steps, x0.size))
        for i in range(nb):
            noise[i] = _path_normals(rng, start + i, n_steps, x0.size)
        x = np.tile(x0, (nb, 1))
        j_acc = np.zeros(nb)
        for t in range(n_steps):
            v = control(x)
            running = 0.5 * np.sum(v**2, axis=1) + a * np.sum(x**2, axis=1) + b
            j_acc += disc[t] * running * dt
            x = x + v * dt + sigma * root_dt * noise[:, t, :]
        costs[start:stop] = j_acc
    return _mc(costs)


def verify_value_function(a: float, b: float, N: int, x0, mc_params: dict) -> dict:
    """Compare the Monte Carlo cost under the optimal feedback to u(x0).

    Passes when |u_exact - mean| <= max(3*SE + tail bound, 0.02*u_exact).
    """
    coeffs = scalar_quadratic_solution(a, b, N)
    x0 = _as_state(x0, N)
    u_exact = float(coeffs.A * np.dot(x0, x0) + coeffs.B)
    estimate = estimate_discounted_cost(a, b, N, x0, **mc_params)
    tail = truncation_tail_bound(a, b, N, x0, mc_params["T"])
    gap = abs(u_exact - estimate.mean)
    tol = max(3.0 * estimate.std_error + tail, 0.02 * u_exact)
    z = (estimate.mean - u_exact) / estimate.std_error if estimate.std_error > 0 else 0.0
    return {
        "u_exact": u_exact,
        "estimate": estimate,
        "z_score": float(z),
        "tolerance": float(tol),
        "pass": bool(gap <= tol),
    }


def _burn_in_slice(paths: PathSet, burn_in_fraction: float) -> slice:
    if not (0.2 <= burn_in_fraction <= 0.8):
        raise DomainError("burn_in_fraction must lie in [0.2, 0.8]")
    start = int(burn_in_fraction * (paths.times.size - 1))
    return slice(start, None)


def estimate_stationary_moments(paths: PathSet, burn_in_fraction: float = 0.5) -> dict:
    """Time-and-path average of |X|^2 after burn-in.

    Each path's time average is one sample, so the standard error reflects
    path-to-path variation only.
    """
    A = paths.scheme_metadata.get("A")
    if A is not None and paths.T * 2.0 * A < 5.0:
        raise DomainError("horizon too short: need T * 2A >= 5 relaxation times")
    window = _burn_in_slice(paths, burn_in_fraction)
    sq = np.sum(paths.states[:, window, :] ** 2, axis=2)
    return {"mean_sq": _mc(sq.mean(axis=1))}


def transversality_decay(
    paths: PathSet,
    coeffs: QuadraticCoefficients,
    checkpoints,
) -> list[dict]:
    """Estimates of E[e^{-t} |u(X_t)|] at the requested checkpoint times."""
    out = []
    for t in checkpoints:
        if not (0.0 <= t <= paths.T + 1e-12):
            raise DomainError(f"checkpoint {t} outside [0, T]")
        idx = int(round(t / paths.dt))
        vals = np.abs(coeffs.A * np.sum(paths.states[:, idx, :] ** 2, axis=1) + coeffs.B)
        est = _mc(np.exp(-t) * vals)
        out.append({"t": float(t), "estimate": est})
    return out


def long_run_cost_estimate(
    paths: PathSet,
    a: float,
    b: float,
    A: float,
    burn_in_fraction: float = 0.5,
) -> MonteCarloEstimate:
    """Time-average of 1/2|{-2AX}|^2 + a|X|^2 + b after burn-in."""
    window = _burn_in_slice(paths, burn_in_fraction)
    x = paths.states[:, window, :]
    running = 0.5 * np.sum((2.0 * A * x) ** 2, axis=2) + a * np.sum(x**2, axis=2) + b
    return _mc(running.mean(axis=1))


def regime_occupation(paths: PathSet, burn_in_fraction: float = 0.0) -> dict:
    """Empirical long-run fraction of time spent in each regime.

    ``burn_in_fraction`` discards the initial stretch of each path so the
    fractions estimate the stationary distribution rather than mixing it
    with the deterministic start regime.  Standard errors come from the
    path-to-path spread of per-path occupation fractions.
    """
    if paths.regimes is None:
        raise DomainError("path set has no regime labels")
    if not (0.0 <= burn_in_fraction < 1.0):
        raise DomainError("burn_in_fraction must lie in [0, 1)")
    n_kept = paths.regimes.shape[1]
    start = int(burn_in_fraction * n_kept)
    labels = paths.regimes[:, start:]
    k = int(labels.max())
    fractions = []
    estimates = []
    for j in range(1, k + 1):
        per_path = (labels == j).mean(axis=1)
        fractions.append(float(per_path.mean()))
        estimates.append(_mc(per_path))
    return {"fractions": np.asarray(fractions), "estimates": estimates}
