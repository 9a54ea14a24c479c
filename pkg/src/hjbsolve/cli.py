"""Command-line entry point: config-driven solver runs emitting CSV artifacts.

A run is described by a small YAML file::

    command: radial        # exact | radial | grid2d | monotone | simulate
                           # | regime | verify | all
    output_dir: out
    seed: 1234
    parameters:
      a: 1.0
      b: 0.0

Each command writes its CSV artifacts plus ``summary.txt`` (one ``key=value``
per line, ending with ``status=ok`` or ``status=failed``) into the output
directory.  Exit codes: 0 ok, 1 invalid configuration, 2 solver
non-convergence, 3 a built-in numeric check failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from .core import (
    AnisotropicQuadratic,
    DomainError,
    Quadratic,
    RegimeModel,
    ScalarProblem,
    SolverError,
    validate_regime_model,
)
from .exact import (
    pde_residual_quadratic,
    scalar_quadratic_solution,
    solve_regime_system,
)
from .grid2d import Field2D, Grid2D, compare_to_exact, radial_symmetry_deviation, solve_fd2d
from .monotone import fit_convergence_rate, run_expanding_balls
from .radial import DirichletValue, NeumannExactQuadratic, solve_radial_bvp
from .stochastic import (
    RngSpec,
    estimate_stationary_moments,
    long_run_cost_estimate,
    regime_occupation,
    simulate_ou,
    simulate_regime_switching,
    verify_value_function,
)

__all__ = ["main", "run_config"]

EXIT_OK = 0
EXIT_BAD_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_CHECK_FAILED = 3

COMMANDS = ("exact", "radial", "grid2d", "monotone", "simulate", "regime", "verify", "all")


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    """Stable text form for CSV cells; repr keeps runs byte-identical."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _take(params: dict, defaults: dict, command: str) -> dict:
    unknown = set(params) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown parameter(s) for '{command}': {sorted(unknown)}")
    merged = dict(defaults)
    merged.update(params)
    return merged


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"parameter '{name}' must be a number, got {value!r}")
    return float(value)


# ---------------------------------------------------------------------------
# command implementations; each returns (metrics dict, exit code)


def _cmd_exact(params, outdir, seed, quiet):
    p = _take(params, {"a": 1.0, "b": 0.0, "N": 1}, "exact")
    coeffs = scalar_quadratic_solution(_number(p["a"], "a"), _number(p["b"], "b"), int(p["N"]))
    radii = np.linspace(0.0, 50.0, 100)
    resid = pde_residual_quadratic(coeffs, Quadratic(p["a"], p["b"]), int(p["N"]), radii)
    metrics = {"A": coeffs.A, "B": coeffs.B, "max_residual": float(np.max(np.abs(resid)))}
    code = EXIT_OK if metrics["max_residual"] <= 1e-12 else EXIT_CHECK_FAILED
    return metrics, code


def _radial_rows(sol):
    return zip(sol.grid.nodes, sol.U, sol.S, sol.Upp, sol.residual)


def _cmd_radial(params, outdir, seed, quiet):
    p = _take(
        params,
        {"a": 1.0, "b": 0.0, "N": [1, 2, 3], "p": 2.0, "R": 10.0, "m": 600, "newton_tol": 1e-10},
        "radial",
    )
    dims = p["N"] if isinstance(p["N"], list) else [p["N"]]
    metrics = {}
    code = EXIT_OK
    for N in dims:
        N = int(N)
        coeffs = scalar_quadratic_solution(_number(p["a"], "a"), _number(p["b"], "b"), N)
        problem = ScalarProblem(N=N, p=_number(p["p"], "p"), source=Quadratic(p["a"], p["b"]))
        sol = solve_radial_bvp(
            problem,
            _number(p["R"], "R"),
            NeumannExactQuadratic(),
            m=int(p["m"]),
            newton_tol=_number(p["newton_tol"], "newton_tol"),
        )
        name = f"radial_N{N}.csv" if len(dims) > 1 else "radial.csv"
        _write_csv(outdir / name, ["r", "u", "s", "upp", "residual"], _radial_rows(sol))
        max_res = float(np.max(np.abs(sol.residual)))
        upp_err = float(np.max(np.abs(sol.Upp - 2.0 * coeffs.A)))
        metrics[f"N{N}.max_residual"] = max_res
        metrics[f"N{N}.max_upp_error"] = upp_err
        metrics[f"N{N}.iterations"] = sol.diagnostics["iterations"]
        if max_res > 1e-8 or upp_err > 1e-6:
            code = EXIT_CHECK_FAILED
    return metrics, code


def _grid2d_source(p):
    if p["source"] == "quadratic":
        return Quadratic(_number(p["a"], "a"), _number(p["b"], "b")), True
    if p["source"] == "anisotropic":
        return (
            AnisotropicQuadratic(
                _number(p["cxx"], "cxx"),
                _number(p["cyy"], "cyy"),
                _number(p["cxy"], "cxy"),
                _number(p["c0"], "c0"),
            ),
            False,
        )
    raise ConfigError("grid2d source must be 'quadratic' or 'anisotropic'")


def _cmd_grid2d(params, outdir, seed, quiet):
    p = _take(
        params,
        {
            "source": "quadratic",
            "a": 2.0,
            "b": 1.0,
            "cxx": 1.0,
            "cyy": 3.0,
            "cxy": 0.5,
            "c0": 2.0,
            "L": 2.0,
            "n": 60,
            "lambda_lin": None,
            "damping": 0.5,
            "tol": 1e-6,
            "max_iters": 600,
            "ring_gradient": "one_sided",
            "csv_name": "grid2d.csv",
        },
        "grid2d",
    )
    source, is_radial = _grid2d_source(p)
    grid = Grid2D(_number(p["L"], "L"), int(p["n"]))
    X, Y = grid.meshes()
    lam = p["lambda_lin"]
    lam = (20.0 if is_radial else 25.0) if lam is None else _number(lam, "lambda_lin")
    if is_radial:
        coeffs = scalar_quadratic_solution(p["a"], p["b"], 2)
        exact = coeffs.A * (X**2 + Y**2) + coeffs.B
        boundary = exact
        initial = exact
    else:
        coeffs = None
        exact = None
        boundary = source.xy(X, Y)
        initial = boundary
    field, log = solve_fd2d(
        source,
        2.0,
        grid,
        boundary=boundary,
        lambda_lin=lam,
        damping=_number(p["damping"], "damping"),
        tol=_number(p["tol"], "tol"),
        max_iters=int(p["max_iters"]),
        initial=initial,
        ring_gradient=str(p["ring_gradient"]),
    )
    ex_vals = exact if exact is not None else np.full_like(field.values, np.nan)
    err = np.abs(field.values - ex_vals)
    rows = (
        (X[i, j], Y[i, j], field.values[i, j], ex_vals[i, j], err[i, j])
        for i in range(grid.n)
        for j in range(grid.n)
    )
    _write_csv(outdir / str(p["csv_name"]), ["x", "y", "u", "exact", "abs_err"], rows)
    dev = radial_symmetry_deviation(field)
    metrics = {
        "converged": int(log.converged),
        "iterations": log.iterations,
        "max_bin_spread": dev["max_bin_spread"],
    }
    if coeffs is not None:
        metrics.update(compare_to_exact(field, coeffs))
    code = EXIT_OK if log.converged else EXIT_NO_CONVERGENCE
    return metrics, code


def _cmd_monotone(params, outdir, seed, quiet):
    p = _take(
        params,
        {
            "a": 1.0,
            "b": 0.0,
            "N": 1,
            "radii": [4.0, 6.0, 8.0, 10.0],
            "R_obs": 2.0,
            "eps_schedule": [1 / 2, 1 / 3, 1 / 4, 1 / 5],
            "m": 600,
            "newton_tol": 1e-12,
        },
        "monotone",
    )
    run = run_expanding_balls(
        Quadratic(_number(p["a"], "a"), _number(p["b"], "b")),
        int(p["N"]),
        [float(r) for r in p["radii"]],
        _number(p["R_obs"], "R_obs"),
        [float(e) for e in p["eps_schedule"]],
        m=int(p["m"]),
        newton_tol=_number(p["newton_tol"], "newton_tol"),
    )
    rows = []
    for i in range(run.error_curve.shape[0]):
        gap = run.monotonicity_report[i - 1] if i > 0 else np.nan
        rows.append((run.error_curve[i, 0], run.eps_schedule[i], run.error_curve[i, 1], gap))
    _write_csv(outdir / "convergence.csv", ["R_n", "eps_n", "error", "min_monotone_gap"], rows)
    if not run.completed:
        return {"failure_index": run.failure_index}, EXIT_NO_CONVERGENCE
    metrics = {
        "min_gap": float(run.monotonicity_report.min()) if run.monotonicity_report.size else np.nan,
    }
    errors = run.error_curve[:, 1]
    ok = bool(np.all(np.diff(errors) < 0))
    try:
        fit = fit_convergence_rate(run)
    except DomainError as exc:
        # short runs can leave too few points above the noise floor; the
        # error curve itself is still a valid artifact
        metrics["fit_skipped"] = str(exc)
    else:
        metrics.update(
            c_fit=fit["c_fit"],
            C_fit=fit["C_fit"],
            r_squared=fit["r_squared"],
            n_excluded=fit["n_excluded"],
        )
        ok = ok and fit["c_fit"] > 0
    return metrics, EXIT_OK if ok else EXIT_CHECK_FAILED


def _write_paths_csv(outdir, paths, name="paths.csv", store=20):
    n_store = min(store, paths.n_paths)
    dim = paths.states.shape[2]
    header = ["t", "path_id"] + [f"x{i + 1}" for i in range(dim)] + ["regime"]
    rows = []
    for pid in range(n_store):
        for k, t in enumerate(paths.times):
            regime = int(paths.regimes[pid, k]) if paths.regimes is not None else 0
            rows.append((t, pid, *paths.states[pid, k, :], regime))
    _write_csv(outdir / name, header, rows)


def _cmd_simulate(params, outdir, seed, quiet):
    p = _take(
        params,
        {
            "a": 1.0,
            "b": 0.0,
            "N": 1,
            "sigma": 1.0,
            "x0": 2.0,
            "T": 50.0,
            "dt": 0.01,
            "n_paths": 5000,
            "paths_stored": 20,
            "burn_in_fraction": 0.5,
        },
        "simulate",
    )
    N = int(p["N"])
    coeffs = scalar_quadratic_solution(_number(p["a"], "a"), _number(p["b"], "b"), N)
    x0 = p["x0"]
    x0_vec = np.full(N, float(x0)) if np.isscalar(x0) else np.asarray(x0, dtype=float)
    paths = simulate_ou(
        coeffs.A,
        _number(p["sigma"], "sigma"),
        x0_vec,
        _number(p["T"], "T"),
        _number(p["dt"], "dt"),
        int(p["n_paths"]),
        RngSpec(seed),
    )
    _write_paths_csv(outdir, paths, store=int(p["paths_stored"]))
    ms = estimate_stationary_moments(paths, _number(p["burn_in_fraction"], "burn_in_fraction"))["mean_sq"]
    lr = long_run_cost_estimate(paths, p["a"], p["b"], coeffs.A, p["burn_in_fraction"])
    sigma = float(p["sigma"])
    target_ms = N * sigma**2 / (4.0 * coeffs.A)
    target_lr = (coeffs.A + 0.25) * N * sigma**2 + float(p["b"])
    est_rows = [
        ("mean_sq", ms.mean, ms.std_error, ms.n_samples),
        ("long_run_cost", lr.mean, lr.std_error, lr.n_samples),
    ]
    _write_csv(outdir / "estimates.csv", ["name", "mean", "std_error", "n"], est_rows)
    bias = 2.0 * coeffs.A * float(p["dt"])
    ok = abs(ms.mean - target_ms) <= 3 * ms.std_error + bias and abs(lr.mean - target_lr) <= 3 * lr.std_error + 4 * bias
    metrics = {
        "mean_sq": ms.mean,
        "mean_sq_target": target_ms,
        "long_run_cost": lr.mean,
        "long_run_cost_target": target_lr,
    }
    return metrics, EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_regime(params, outdir, seed, quiet):
    p = _take(
        params,
        {
            "delta": [1.0, 1.0],
            "alpha": [[-0.4, 0.4], [0.6, -0.6]],
            "sigma": [0.3, 1.0],
            "a": [2.5, 0.5],
            "b": [1.0, 0.5],
            "N": 2,
            "x0": 5.0,
            "j0": 1,
            "T": 30.0,
            "dt": 0.01,
            "n_paths": 200,
            "paths_stored": 10,
            "switching": "bernoulli_euler",
            "burn_in_fraction": 1 / 3,
        },
        "regime",
    )
    model = RegimeModel(
        delta=tuple(p["delta"]),
        alpha=tuple(tuple(row) for row in p["alpha"]),
        sigma=tuple(p["sigma"]),
        a=tuple(p["a"]),
        b=tuple(p["b"]),
        N=int(p["N"]),
    )
    violations = validate_regime_model(model)
    if violations:
        raise ConfigError("; ".join(violations))
    res = solve_regime_system(model)
    x0 = p["x0"]
    x0_vec = np.full(model.N, float(x0)) if np.isscalar(x0) else np.asarray(x0, dtype=float)
    paths = simulate_regime_switching(
        model,
        res.beta,
        x0_vec,
        int(p["j0"]),
        _number(p["T"], "T"),
        _number(p["dt"], "dt"),
        RngSpec(seed),
        switching=str(p["switching"]),
        n_paths=int(p["n_paths"]),
    )
    _write_paths_csv(outdir, paths, store=int(p["paths_stored"]))
    occ = regime_occupation(paths, burn_in_fraction=_number(p["burn_in_fraction"], "burn_in_fraction"))
    est_rows = [
        *((f"beta_{j + 1}", res.beta[j], 0.0, 1) for j in range(model.k)),
        *((f"eta_{j + 1}", res.eta[j], 0.0, 1) for j in range(model.k)),
        *(
            (f"occupation_{j + 1}", e.mean, e.std_error, e.n_samples)
            for j, e in enumerate(occ["estimates"])
        ),
    ]
    _write_csv(outdir / "estimates.csv", ["name", "mean", "std_error", "n"], est_rows)
    metrics = {
        "residual_beta": res.residual_beta,
        "residual_eta": res.residual_eta,
    }
    for j in range(model.k):
        metrics[f"beta_{j + 1}"] = res.beta[j]
        metrics[f"eta_{j + 1}"] = res.eta[j]
        metrics[f"occupation_{j + 1}"] = occ["fractions"][j]
    ok = res.residual_beta <= 1e-10 and res.residual_eta <= 1e-10
    return metrics, EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_verify(params, outdir, seed, quiet):
    p = _take(
        params,
        {"a": 1.0, "b": 0.0, "N": 1, "x0": 0.0, "T": 15.0, "dt": 0.005, "n_paths": 20000},
        "verify",
    )
    res = verify_value_function(
        _number(p["a"], "a"),
        _number(p["b"], "b"),
        int(p["N"]),
        p["x0"],
        dict(
            T=_number(p["T"], "T"),
            dt=_number(p["dt"], "dt"),
            n_paths=int(p["n_paths"]),
            rng=RngSpec(seed),
        ),
    )
    est = res["estimate"]
    _write_csv(
        outdir / "estimates.csv",
        ["name", "mean", "std_error", "n"],
        [("discounted_cost", est.mean, est.std_error, est.n_samples)],
    )
    metrics = {
        "u_exact": res["u_exact"],
        "estimate": est.mean,
        "std_error": est.std_error,
        "z_score": res["z_score"],
        "pass": int(res["pass"]),
    }
    return metrics, EXIT_OK if res["pass"] else EXIT_CHECK_FAILED


def _cmd_all(params, outdir, seed, quiet):
    chain = [
        ("exact", _cmd_exact, {}),
        ("radial", _cmd_radial, {}),
        ("monotone", _cmd_monotone, {}),
        ("grid2d", _cmd_grid2d, {}),
        (
            "grid2d_nonradial",
            _cmd_grid2d,
            {"source": "anisotropic", "L": 3.0, "n": 70, "csv_name": "grid2d_nonradial.csv"},
        ),
        ("simulate", _cmd_simulate, {}),
        ("regime", _cmd_regime, {}),
        ("verify", _cmd_verify, {}),
    ]
    metrics = {}
    worst = EXIT_OK
    for name, fn, overrides in chain:
        sub_params = dict(params.get(name, {}))
        merged = dict(overrides)
        merged.update(sub_params)
        sub_metrics, code = fn(merged, outdir, seed, quiet)
        for key, val in sub_metrics.items():
            metrics[f"{name}.{key}"] = val
        worst = max(worst, code)
        if not quiet:
            print(f"[{name}] exit={code}")
    return metrics, worst


_DISPATCH = {
    "exact": _cmd_exact,
    "radial": _cmd_radial,
    "grid2d": _cmd_grid2d,
    "monotone": _cmd_monotone,
    "simulate": _cmd_simulate,
    "regime": _cmd_regime,
    "verify": _cmd_verify,
    "all": _cmd_all,
}


def run_config(config: dict, output_override=None, seed_override=None, quiet=False) -> int:
    """Execute one run description; returns the process exit code."""
    if not isinstance(config, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(config) - {"command", "output_dir", "seed", "parameters"}
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    command = config.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}, got {command!r}")
    params = config.get("parameters") or {}
    if not isinstance(params, dict):
        raise ConfigError("parameters must be a mapping")
    outdir = Path(output_override or config.get("output_dir") or "out")
    seed = seed_override if seed_override is not None else config.get("seed", 0)
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    outdir.mkdir(parents=True, exist_ok=True)

    try:
        metrics, code = _DISPATCH[command](params, outdir, int(seed), quiet)
    except (ConfigError, DomainError):
        raise
    except SolverError as exc:
        _write_summary(outdir / "summary.txt", command, seed, {"error": str(exc)}, "failed")
        if not quiet:
            print(f"solver failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE

    status = "ok" if code == EXIT_OK else "failed"
    _write_summary(outdir / "summary.txt", command, seed, metrics, status)
    if not quiet:
        for key, val in metrics.items():
            print(f"{key}={val}")
        print(f"status={status}")
    return code


def _write_summary(path: Path, command, seed, metrics: dict, status: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"command={command}\n")
        fh.write(f"seed={seed}\n")
        for key, val in metrics.items():
            if isinstance(val, (float, np.floating)):
                fh.write(f"{key}={repr(float(val))}\n")
            else:
                fh.write(f"{key}={val}\n")
        fh.write(f"status={status}\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hjb",
        description="Config-driven solver runs for the quasilinear elliptic "
        "HJB equation; emits CSV artifacts and a key=value summary.",
    )
    parser.add_argument("--config", required=True, help="path to the YAML run description")
    parser.add_argument("--output", default=None, help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (overrides config)")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as fh:
            config = yaml.safe_load(fh)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except yaml.YAMLError as exc:
        print(f"config is not valid YAML: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    try:
        return run_config(config, args.output, args.seed, args.quiet)
    except (ConfigError, DomainError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
