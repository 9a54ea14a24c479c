import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hjbsolve.core import BranchError, DomainError, Quadratic, RegimeModel
from hjbsolve.exact import (
    long_run_cost,
    pde_residual_quadratic,
    scalar_quadratic_solution,
    scalar_sensitivities,
    solve_regime_betas,
    solve_regime_etas,
    solve_regime_system,
    stationary_variance_per_coordinate,
)

from test_core import code_e_model


class TestScalarQuadraticSolution:
    @pytest.mark.parametrize("a,b,N", [(1.0, 0.0, 1), (1.0, 0.0, 2), (2.0, 1.0, 2), (0.3, 5.0, 3)])
    def test_defining_equations(self, a, b, N):
        co = scalar_quadratic_solution(a, b, N)
        assert 2.0 * co.A**2 + co.A - a == pytest.approx(0.0, abs=1e-12)
        assert co.B == pytest.approx(b + co.A * N, abs=1e-12)

    def test_known_values(self):
        co = scalar_quadratic_solution(1.0, 0.0, 1)
        assert co.A == pytest.approx(0.5)
        assert co.B == pytest.approx(0.5)

    @given(st.floats(min_value=1e-3, max_value=1e3))
    def test_admissible_branch_positive(self, a):
        assert scalar_quadratic_solution(a, 0.0, 1).A > 0

    @given(st.floats(min_value=1e-3, max_value=1e3))
    def test_value_decreases_as_a_grows(self, a):
        # the other root 2A^2+A-a=0 is negative; A(a) is increasing
        lo = scalar_quadratic_solution(a, 0.0, 1).A
        hi = scalar_quadratic_solution(2.0 * a, 0.0, 1).A
        assert hi > lo

    def test_rejects_nonpositive_a(self):
        with pytest.raises(DomainError):
            scalar_quadratic_solution(-1.0, 0.0, 1)

    def test_evaluate(self):
        co = scalar_quadratic_solution(1.0, 0.0, 1)
        r = np.array([0.0, 1.0, 2.0])
        assert np.allclose(co.evaluate(r), 0.5 * r**2 + 0.5)


class TestSensitivities:
    @pytest.mark.parametrize("a,N", [(1.0, 1), (2.5, 2), (0.4, 3)])
    def test_against_central_differences(self, a, N):
        # independent oracle: finite differences of the closed form
        eps = 1e-6
        s = scalar_sensitivities(a, N)
        dA = (
            scalar_quadratic_solution(a + eps, 0.0, N).A
            - scalar_quadratic_solution(a - eps, 0.0, N).A
        ) / (2 * eps)
        dB = (
            scalar_quadratic_solution(a + eps, 0.0, N).B
            - scalar_quadratic_solution(a - eps, 0.0, N).B
        ) / (2 * eps)
        assert s["dA_da"] == pytest.approx(dA, rel=1e-6)
        assert s["dB_da"] == pytest.approx(dB, rel=1e-6)
        assert s["dB_db"] == 1.0


class TestPdeResidual:
    def test_exact_coefficients_have_zero_residual(self):
        co = scalar_quadratic_solution(2.0, 1.0, 2)
        r = np.linspace(0.0, 50.0, 100)
        assert pde_residual_quadratic(co, Quadratic(2.0, 1.0), 2, r) <= 1e-12

    def test_wrong_coefficients_detected(self):
        from hjbsolve.exact import QuadraticCoefficients

        r = np.linspace(0.0, 10.0, 50)
        bad = QuadraticCoefficients(A=0.7, B=0.5)
        assert pde_residual_quadratic(bad, Quadratic(1.0, 0.0), 1, r) > 1e-3


class TestLongRunFormulas:
    def test_long_run_cost_value(self):
        # a=1, b=0, N=1, sigma=1: A=1/2 gives (1/2+1/4)*1 = 0.75
        assert long_run_cost(1.0, 0.0, 1, 1.0) == pytest.approx(0.75)

    @given(
        st.floats(min_value=0.1, max_value=10.0),
        st.floats(min_value=0.0, max_value=5.0),
        st.floats(min_value=0.2, max_value=3.0),
    )
    def test_two_displayed_forms_agree(self, a, b, sigma):
        N = 2
        A = scalar_quadratic_solution(a, b, N).A
        alt = (2.0 * A**2 + a) * N * sigma**2 / (4.0 * A) + b
        assert long_run_cost(a, b, N, sigma) == pytest.approx(alt, rel=1e-12)

    def test_stationary_variance(self):
        assert stationary_variance_per_coordinate(1.0, 1.0) == pytest.approx(0.5)


class TestRegimeSystem:
    def test_code_e_values(self):
        res = solve_regime_system(code_e_model())
        assert np.allclose(res.beta, [0.8566, 0.4167], atol=5e-5)
        assert np.allclose(res.eta, [1.1900, 1.2796], atol=5e-5)
        assert res.residual_beta <= 1e-12
        assert res.residual_eta <= 1e-12

    def test_substitution_residuals(self):
        model = code_e_model()
        res = solve_regime_system(model)
        beta_resid = (
            2.0 * res.beta**2 + model.delta * res.beta - model.alpha @ res.beta - model.a
        )
        eta_resid = model.coupling_matrix() @ res.eta - (
            model.b + model.sigma**2 * res.beta * model.N
        )
        assert np.max(np.abs(beta_resid)) <= 1e-12
        assert np.max(np.abs(eta_resid)) <= 1e-12

    def test_decoupled_reduces_to_scalar(self):
        model = RegimeModel(
            delta=(1.0, 1.0),
            alpha=((0.0, 0.0), (0.0, 0.0)),
            sigma=(1.0, 1.0),
            a=(1.0, 2.0),
            b=(0.0, 1.0),
            N=1,
        )
        res = solve_regime_system(model)
        for j in range(2):
            co = scalar_quadratic_solution(model.a[j], model.b[j], 1)
            assert res.beta[j] == pytest.approx(co.A, abs=1e-10)
            assert res.eta[j] == pytest.approx(co.B, abs=1e-10)

    def test_symmetric_model_gives_equal_betas(self):
        model = RegimeModel(
            delta=(1.0, 1.0),
            alpha=((-0.5, 0.5), (0.5, -0.5)),
            sigma=(1.0, 1.0),
            a=(2.0, 2.0),
            b=(0.5, 0.5),
            N=2,
        )
        res = solve_regime_system(model)
        assert res.beta[0] == pytest.approx(res.beta[1], abs=1e-12)
        assert res.eta[0] == pytest.approx(res.eta[1], abs=1e-12)

    def test_bad_initial_guess_rejected(self):
        # a guess deep in the wrong branch either stalls or lands on a
        # non-admissible root; both surface as solver errors
        from hjbsolve.core import SolverError

        with pytest.raises(SolverError):
            solve_regime_betas(code_e_model(), initial_guess=[-5.0, -5.0])

    def test_etas_solve_the_linear_system(self):
        model = code_e_model()
        beta = solve_regime_betas(model)
        eta = solve_regime_etas(model, beta)
        rhs = model.b + model.sigma**2 * beta * model.N
        assert np.allclose(model.coupling_matrix() @ eta, rhs, atol=1e-12)
