import numpy as np
import pytest
from numpy.testing import assert_allclose

from dualgal.assembly import BasisConfig, build_dual_ansatz
from dualgal.errors import ArgumentError, DomainError
from dualgal.models import ProblemKind, ProblemSpec
from dualgal.problems import (PRESETS, PrimalSolution, adjoint_closed_form, adjoint_sensitivity, dtp_eval,
                              error_norms, exact_on_grid, exact_solution, ivp_dual_closed_form, ivp_problem,
                              laplace_problem, max_norm_errors, sine_two_pi, solve_problem, steady_cd_problem,
                              transient_cd_problem, transient_heat_problem)

GRID = np.linspace(0.0, 1.0, 1001)


class TestExactSolutions:
    def test_laplace(self):
        u, ux = exact_solution(laplace_problem(), GRID)
        assert_allclose(u, GRID)
        assert_allclose(ux, 1.0)

    @pytest.mark.parametrize("alpha", [10.0, 50.0, -7.0])
    def test_steady_profile(self, alpha):
        spec = steady_cd_problem(alpha=alpha)
        u, ux = exact_solution(spec, GRID)
        expected = np.expm1(alpha * GRID) / np.expm1(alpha)
        assert_allclose(u, expected, atol=1e-13)
        assert u[0] == 0.0 and u[-1] == pytest.approx(1.0, abs=1e-15)
        h = 1e-6
        fd = (exact_solution(spec, 0.4 + h)[0] - exact_solution(spec, 0.4 - h)[0]) / (2 * h)
        assert float(exact_solution(spec, 0.4)[1]) == pytest.approx(float(fd), rel=1e-6)

    def test_transient_cd_series_reproduces_initial_profile(self):
        u, _ = exact_solution(transient_cd_problem(), GRID, np.zeros_like(GRID))
        assert np.max(np.abs(u - sine_two_pi(GRID))) <= 1e-6

    def test_heat_closed_form(self):
        spec = transient_heat_problem()
        assert float(exact_solution(spec, 1.0, 0.0)[0]) == pytest.approx(2.0, abs=1e-12)
        x, t = 0.3, 0.4
        u, ux = (float(v) for v in exact_solution(spec, x, t))
        decay = np.exp(-np.pi ** 2 * t / 4)
        assert u == pytest.approx(1 + np.sin(np.pi * x / 2) * decay, abs=1e-12)
        assert ux == pytest.approx(np.pi / 2 * np.cos(np.pi * x / 2) * decay, abs=1e-10)

    def test_heat_grid_uses_closed_form(self):
        spec = transient_heat_problem()
        xs, ts = np.linspace(0, 1, 11), np.linspace(0, 1, 6)
        u, ux = exact_on_grid(spec, xs, ts)
        decay = np.exp(-np.pi ** 2 * ts / 4)
        assert_allclose(u, 1 + np.outer(np.sin(np.pi * xs / 2), decay), atol=1e-15)
        assert_allclose(ux, np.outer(np.pi / 2 * np.cos(np.pi * xs / 2), decay), atol=1e-15)

    def test_heat_series_for_other_profiles(self):
        spec = transient_heat_problem(u0=lambda x: 1 + 2 * np.sin(np.pi * np.asarray(x) / 2))
        x = np.array([0.1, 0.5, 0.9])
        u, _ = exact_solution(spec, x, 0.3)
        assert_allclose(u, 1 + 2 * np.sin(np.pi * x / 2) * np.exp(-np.pi ** 2 * 0.3 / 4), atol=1e-6)

    def test_ivp(self):
        u, du = exact_solution(ivp_problem(a=-2.0, u0=3.0), [0.0, 0.5])
        assert_allclose(u, [3.0, 3.0 * np.exp(-1.0)])
        assert_allclose(du, -2.0 * u)

    def test_transient_needs_t(self):
        with pytest.raises(ArgumentError):
            exact_solution(transient_heat_problem(), 0.5)

    def test_series_needs_diffusion(self):
        with pytest.raises(ArgumentError):
            exact_solution(transient_cd_problem(kappa=0.0), 0.5, 0.5)


class TestIvpClosedForm:
    def test_growth(self):
        t = np.linspace(0, 1, 11)
        _, _, u = ivp_dual_closed_form(1.0, 1.0, 0.0, 1.0, t)
        assert_allclose(u, np.exp(t), atol=1e-12)

    def test_terminal_value_does_not_matter(self):
        t = np.linspace(0, 1, 11)
        lam0, _, u0 = ivp_dual_closed_form(1.0, 1.0, 0.0, 1.0, t)
        lam7, _, u7 = ivp_dual_closed_form(1.0, 1.0, 7.0, 1.0, t)
        assert_allclose(u7, u0, atol=1e-12)
        assert lam7[-1] == pytest.approx(7.0) and lam0[-1] == pytest.approx(0.0, abs=1e-12)

    def test_initial_value(self):
        _, _, u = ivp_dual_closed_form(-2.0, 3.0, 0.0, 1.0, 0.0)
        assert float(u) == pytest.approx(3.0, abs=1e-12)

    def test_zero_rate(self):
        lam, rate, u = ivp_dual_closed_form(0.0, 2.0, 1.0, 1.0, np.array([0.0, 1.0]))
        assert_allclose(u, 2.0)
        assert lam[-1] == pytest.approx(1.0)


class TestDtP:
    def test_laplace_polynomial_exactness(self):
        spec = laplace_problem()
        solution, _ = solve_problem(spec, BasisConfig("bspline", 3, 4), BasisConfig("bspline", 2, 4))
        u, q = solution.fields(GRID)
        assert_allclose(u, GRID, atol=1e-12)
        assert_allclose(q, 1.0, atol=1e-12)

    def test_zero_coefficients(self):
        spec = steady_cd_problem()
        ansatz = build_dual_ansatz(spec, BasisConfig("bspline", 3, 4), BasisConfig("bspline", 2, 4))
        solution = PrimalSolution(spec, ansatz, np.zeros(ansatz.dof))
        u, q = solution.fields(GRID)
        assert np.all(u == 0.0) and np.all(q == 0.0)

    def test_scalar_point(self):
        spec = laplace_problem()
        solution, _ = solve_problem(spec, BasisConfig("bspline", 3, 2), BasisConfig("bspline", 2, 2))
        u, q = dtp_eval(solution, 0.3)
        assert isinstance(u, float)
        assert u == pytest.approx(0.3, abs=1e-12) and q == pytest.approx(1.0, abs=1e-12)

    def test_t_only_for_transient(self):
        spec = laplace_problem()
        solution, _ = solve_problem(spec, BasisConfig("bspline", 3, 2), BasisConfig("bspline", 2, 2))
        with pytest.raises(ArgumentError):
            dtp_eval(solution, 0.3, 0.1)
        with pytest.raises(DomainError):
            dtp_eval(solution, 1.3)

    def test_transient_points_match_grid(self):
        spec = transient_heat_problem()
        solution, _ = solve_problem(spec, BasisConfig("bspline", 3, 2), BasisConfig("bspline", 2, 2))
        xs, ts = np.array([0.1, 0.5, 0.9]), np.array([0.0, 0.7])
        u_grid, q_grid = solution.fields_on_grid(xs, ts)
        u_pt, q_pt = solution.fields(0.5, 0.7)
        assert float(u_pt) == pytest.approx(u_grid[1, 1], abs=1e-14)
        assert float(q_pt) == pytest.approx(q_grid[1, 1], abs=1e-14)

    def test_steady_cd_boundary_layer(self):
        spec = steady_cd_problem(alpha=50.0)
        solution, _ = solve_problem(spec, BasisConfig("bspline", 6, 20), BasisConfig("bspline", 5, 20))
        err_u, err_q = max_norm_errors(solution, n_points=1001)
        assert err_u <= 1e-2
        assert err_q <= 2e-2


class TestErrorNorms:
    def test_exact_recovery(self):
        solution, _ = solve_problem(laplace_problem(), BasisConfig("bspline", 3, 3), BasisConfig("bspline", 2, 3))
        errs = error_norms(solution)
        assert errs.E_u <= 1e-12 and errs.E_q <= 1e-12
        assert errs.dof == solution.ansatz.dof

    def test_fine_steady_cd(self):
        spec = steady_cd_problem(alpha=10.0)
        solution, report = solve_problem(spec, BasisConfig("bspline", 4, 64), BasisConfig("bspline", 3, 64))
        errs = error_norms(solution)
        assert errs.E_u <= 3e-5
        assert errs.E_q <= 1e-6
        assert report.residual <= 1e-9
        assert errs.dof == 2 * 64 + 3 + 4 - 2


class TestIvpDiscrete:
    def test_zero_rate_is_constant(self):
        solution, _ = solve_problem(ivp_problem(a=0.0, u0=2.5), BasisConfig("bspline", 2, 4))
        u, q = solution.fields(np.linspace(0, 1, 51))
        assert_allclose(u, 2.5, atol=1e-10)
        assert_allclose(q, 0.0, atol=1e-15)

    def test_decay(self):
        t = np.linspace(0, 1, 501)
        solution, _ = solve_problem(ivp_problem(a=-1.0), BasisConfig("bspline", 3, 16))
        assert np.max(np.abs(solution.fields(t)[0] - np.exp(-t))) <= 1e-6

    def test_decay_fine_mesh(self):
        t = np.linspace(0, 1, 501)
        solution, _ = solve_problem(ivp_problem(a=-1.0), BasisConfig("bspline", 3, 64))
        assert np.max(np.abs(solution.fields(t)[0] - np.exp(-t))) <= 1e-6

    def test_refinement_reduces_error(self):
        t = np.linspace(0, 1, 501)
        errs = []
        for n in (8, 32):
            solution, _ = solve_problem(ivp_problem(a=-1.0), BasisConfig("bspline", 3, n))
            errs.append(np.max(np.abs(solution.fields(t)[0] - np.exp(-t))))
        assert errs[1] < errs[0] / 20

    def test_terminal_value_invariance(self):
        t = np.linspace(0, 1, 501)
        gaps = []
        for n in (16, 64):
            u = [solve_problem(ivp_problem(a=-1.0, lambda_terminal=lt), BasisConfig("bspline", 3, n))[0].fields(t)[0]
                 for lt in (0.0, 5.0)]
            gaps.append(np.max(np.abs(u[0] - u[1])))
        assert gaps[1] <= 2e-7
        assert gaps[1] < gaps[0]

    def test_terminal_value_changes_lambda(self):
        sols = [solve_problem(ivp_problem(a=-1.0, lambda_terminal=lt), BasisConfig("bspline", 3, 8))[0]
                for lt in (0.0, 5.0)]
        assert sols[1].lambda_coef[-1] - sols[0].lambda_coef[-1] == pytest.approx(5.0)

    def test_repu_rejected(self):
        with pytest.raises(ArgumentError):
            solve_problem(ivp_problem(), BasisConfig("repu", 3, 4))


class TestAdjoint:
    def test_growth(self):
        assert adjoint_sensitivity(1.0, 1.0) == pytest.approx(np.e - 1.0, abs=1e-9)

    def test_small_rate(self):
        assert adjoint_sensitivity(1e-8, 2.0) == pytest.approx(2.0, abs=1e-6)

    def test_decay(self):
        assert adjoint_sensitivity(-3.0, 1.0) == pytest.approx((np.exp(-3.0) - 1.0) / -3.0, abs=1e-9)
        assert adjoint_closed_form(-3.0, 1.0) == pytest.approx(0.316738, abs=1e-6)

    def test_random_against_closed_form(self, rng):
        for a, T in zip(rng.uniform(-2, 2, 10), rng.uniform(0.2, 2, 10)):
            assert adjoint_sensitivity(a, T) == pytest.approx(adjoint_closed_form(a, T), abs=1e-9)

    def test_zero_rate(self):
        assert adjoint_closed_form(0.0, 3.0) == 3.0

    def test_bad_horizon(self):
        with pytest.raises(ArgumentError):
            adjoint_sensitivity(1.0, 0.0)


class TestSpec:
    def test_presets_cover_every_kind(self):
        assert set(PRESETS) == set(ProblemKind)
        for kind, make in PRESETS.items():
            assert make().kind is kind

    def test_kind_from_string(self):
        assert ProblemSpec("steady_cd").kind is ProblemKind.STEADY_CD

    @pytest.mark.parametrize("kwargs", [dict(kind="nope"), dict(kind="steady_cd", kappa=-1.0),
                                        dict(kind="ivp_ode", T=0.0), dict(kind="ivp_ode", u0=np.sin)])
    def test_invalid(self, kwargs):
        with pytest.raises(ArgumentError):
            ProblemSpec(**kwargs)

    def test_effective_coefficients(self):
        assert ProblemSpec("laplace_1d", kappa=3.0, alpha=2.0).coefficients == (1.0, 0.0)
        assert ProblemSpec("transient_heat", kappa=3.0, alpha=2.0).coefficients == (3.0, 0.0)
