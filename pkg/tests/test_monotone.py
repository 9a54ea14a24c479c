import numpy as np
import pytest

from hjbsolve.core import DomainError, Quadratic, SolverError
from hjbsolve.exact import scalar_quadratic_solution
from hjbsolve.monotone import SchemeRun, fit_convergence_rate, run_expanding_balls


@pytest.fixture(scope="module")
def benchmark_run():
    return run_expanding_balls(
        Quadratic(1.0, 0.0),
        1,
        [4.0, 6.0, 8.0, 10.0],
        2.0,
        [1 / 2, 1 / 3, 1 / 4, 1 / 5],
        m=600,
        newton_tol=1e-12,
    )


class TestExpandingBalls:
    def test_completes(self, benchmark_run):
        assert benchmark_run.completed
        assert len(benchmark_run.solutions) == 4

    def test_solutions_increase_toward_exact(self, benchmark_run):
        tol = 10.0 * benchmark_run.newton_tol
        assert np.all(benchmark_run.monotonicity_report >= -tol)

    def test_solutions_stay_below_exact(self, benchmark_run):
        co = scalar_quadratic_solution(1.0, 0.0, 1)
        for sol in benchmark_run.solutions:
            mask = sol.grid.nodes <= benchmark_run.observation_radius
            over = np.max(sol.U[mask] - co.evaluate(sol.grid.nodes[mask]))
            assert over <= 10.0 * benchmark_run.newton_tol

    def test_error_curve_strictly_decreasing(self, benchmark_run):
        errors = benchmark_run.error_curve[:, 1]
        assert np.all(np.diff(errors) < 0)

    def test_fitted_rate(self, benchmark_run):
        fit = fit_convergence_rate(benchmark_run)
        assert fit["c_fit"] > 0
        assert fit["r_squared"] >= 0.9


class TestInputValidation:
    def test_radii_must_increase(self):
        with pytest.raises(DomainError):
            run_expanding_balls(Quadratic(1.0, 0.0), 1, [4.0, 4.0], 2.0, [0.5, 0.4])

    def test_observation_inside_smallest_ball(self):
        with pytest.raises(DomainError):
            run_expanding_balls(Quadratic(1.0, 0.0), 1, [4.0, 6.0], 5.0, [0.5, 0.4])

    def test_eps_schedule_must_decrease(self):
        with pytest.raises(DomainError):
            run_expanding_balls(Quadratic(1.0, 0.0), 1, [4.0, 6.0], 2.0, [0.4, 0.5])

    def test_schedule_length_matches(self):
        with pytest.raises(DomainError):
            run_expanding_balls(Quadratic(1.0, 0.0), 1, [4.0, 6.0], 2.0, [0.5])


class TestPartialRuns:
    def test_failure_is_reported_not_raised(self):
        run = run_expanding_balls(
            Quadratic(1.0, 0.0),
            1,
            [4.0, 6.0],
            2.0,
            [0.5, 1 / 3],
            m=600,
            newton_tol=1e-12,
            max_newton_iters=1,
        )
        assert not run.completed
        assert run.failure_index == 0
        assert run.error_curve.shape[0] == 0


class TestFit:
    def _synthetic(self, errors, radii, r_obs=2.0, tol=1e-12):
        curve = np.column_stack([np.asarray(radii, dtype=float), np.asarray(errors, dtype=float)])
        return SchemeRun(
            radii=np.asarray(radii, dtype=float),
            eps_schedule=np.linspace(0.5, 0.2, len(radii)),
            solutions=[],
            observation_radius=r_obs,
            error_curve=curve,
            monotonicity_report=np.array([]),
            newton_tol=tol,
        )

    def test_exact_exponential_curve(self):
        radii = np.array([4.0, 6.0, 8.0, 10.0])
        errors = np.exp(-2.0 * (radii - 2.0))
        fit = fit_convergence_rate(self._synthetic(errors, radii))
        assert fit["c_fit"] == pytest.approx(2.0, abs=1e-8)
        assert fit["r_squared"] == pytest.approx(1.0)

    def test_flat_curve_gives_zero_rate(self):
        radii = np.array([4.0, 6.0, 8.0, 10.0])
        fit = fit_convergence_rate(self._synthetic(np.full(4, 0.3), radii))
        assert fit["c_fit"] == pytest.approx(0.0, abs=1e-8)

    def test_noise_floor_points_excluded(self):
        radii = np.array([4.0, 6.0, 8.0, 10.0])
        errors = np.array([1e-1, 1e-3, 1e-5, 1e-13])
        fit = fit_convergence_rate(self._synthetic(errors, radii, tol=1e-12))
        assert fit["n_excluded"] == 1

    def test_too_few_points_rejected(self):
        radii = np.array([4.0, 6.0, 8.0])
        errors = np.array([1e-1, 1e-13, 1e-14])
        with pytest.raises(DomainError):
            fit_convergence_rate(self._synthetic(errors, radii, tol=1e-12))
