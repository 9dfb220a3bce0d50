import math
from types import SimpleNamespace

import pytest

from dualgal import problems
from dualgal.assembly import BasisConfig
from dualgal.errors import ArgumentError
from dualgal.models import ErrorPair
from dualgal.problems import convergence_study, max_norm_errors, solve_problem, steady_cd_problem
from dualgal.solver import SolveMethod
from dualgal.utils import loglog_slope

N_LIST = [4, 8, 16, 32, 64]


@pytest.mark.parametrize("degrees,rates", [
    ((1, 1), (1.0, 1.0)),
    ((1, 2), (1.0, 2.0)),
    ((2, 3), (2.0, 3.0)),
    ((3, 4), (3.0, 4.0)),
])
def test_bspline_rates_alpha10(degrees, rates):
    record = convergence_study(steady_cd_problem(alpha=10.0), "bspline", degrees, N_LIST)
    p, q = degrees
    assert record.dofs == tuple(2 * n + p + q - 2 for n in N_LIST)
    assert record.rate_u == pytest.approx(rates[0], abs=0.25)
    assert record.rate_q == pytest.approx(rates[1], abs=0.25)


@pytest.mark.parametrize("degrees,rates", [
    ((1, 1), (1.2, 0.9)),
    ((1, 2), (0.9, 2.0)),
    ((2, 3), (2.0, 3.0)),
    ((3, 4), (3.0, 3.7)),
])
def test_bspline_rates_alpha50(degrees, rates):
    record = convergence_study(steady_cd_problem(alpha=50.0), "bspline", degrees, N_LIST)
    assert record.rate_u == pytest.approx(rates[0], abs=0.4)
    assert record.rate_q == pytest.approx(rates[1], abs=0.4)


REPU_N = [2, 4, 8, 16, 32, 64]


def test_repu_frame_rates():
    record = convergence_study(steady_cd_problem(alpha=10.0), "repu", (2, 3), REPU_N)
    assert record.rate_u == pytest.approx(2.0, abs=0.3)
    assert record.rate_q == pytest.approx(3.0, abs=0.3)
    assert record.dofs == tuple(4 * n for n in REPU_N)


@pytest.mark.parametrize("degrees,floor", [
    ((2, 4), (1.7, 2.9)),
    ((3, 4), (2.6, 3.7)),
])
def test_repu_higher_degree_rates(degrees, floor):
    record = convergence_study(steady_cd_problem(alpha=10.0), "repu", degrees, REPU_N)
    assert record.rate_u >= floor[0]
    assert record.rate_q >= floor[1]


def test_repu_solve_goes_through_least_squares():
    _, report = solve_problem(steady_cd_problem(alpha=10.0), BasisConfig("repu", 3, 16), BasisConfig("repu", 2, 16))
    assert report.method is SolveMethod.MIN_NORM_LEAST_SQUARES
    assert report.residual <= 1e-9


def test_repu_max_error_at_thirty_cells():
    solution, _ = solve_problem(steady_cd_problem(alpha=10.0), BasisConfig("repu", 3, 30),
                                BasisConfig("repu", 2, 30))
    err_u, err_q = max_norm_errors(solution)
    assert err_u <= 1.2e-2
    assert err_q <= 1.7e-4


def test_rates_use_finest_levels(monkeypatch):
    # coarse levels off the power law; the last three follow E_u ~ dof^-2, E_q ~ dof^-3
    table = {2: (1.0, 1.0), 4: (1e-3, 1e-3), 8: (16.0 ** -2, 16.0 ** -3),
             16: (32.0 ** -2, 32.0 ** -3), 32: (64.0 ** -2, 64.0 ** -3)}
    report = SimpleNamespace(method=SolveMethod.DEFINITE_FACTORIZATION)
    monkeypatch.setattr(problems, "solve_problem", lambda spec, lam_cfg, mu_cfg, tol: (lam_cfg.n, report))
    monkeypatch.setattr(problems, "error_norms", lambda n: ErrorPair(*table[n], 2 * n))
    record = convergence_study(steady_cd_problem(), "bspline", (2, 3), sorted(table))
    assert record.rate_u == pytest.approx(2.0, abs=1e-12)
    assert record.rate_q == pytest.approx(3.0, abs=1e-12)


def test_workers_keep_order():
    spec = steady_cd_problem(alpha=10.0)
    serial = convergence_study(spec, "bspline", (2, 3), [4, 8, 16])
    pooled = convergence_study(spec, "bspline", (2, 3), [4, 8, 16], workers=3)
    assert pooled.n_list == serial.n_list
    assert pooled.errors == serial.errors
    assert pooled.rate_u == serial.rate_u


@pytest.mark.parametrize("n_list", [[4, 8], [4, 8, 8], [16, 8, 4]])
def test_bad_refinement_list(n_list):
    with pytest.raises(ArgumentError):
        convergence_study(steady_cd_problem(), "bspline", (2, 3), n_list)


class TestSlope:
    def test_exact_power_law(self):
        dofs = [10, 20, 40, 80]
        errs = [3.0 * d ** -2.5 for d in dofs]
        assert loglog_slope(dofs, errs) == pytest.approx(2.5, abs=1e-12)

    def test_needs_two_positive_errors(self):
        assert math.isnan(loglog_slope([10, 20, 40], [0.0, 0.0, 1e-3]))

    def test_error_pair_is_plain_data(self):
        assert ErrorPair(1e-3, 2e-4, 12) == ErrorPair(1e-3, 2e-4, 12)
