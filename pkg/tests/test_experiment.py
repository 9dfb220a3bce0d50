import pytest

from dualgal.errors import ConfigError
from dualgal.experiment import load_experiment, parse_config_text, validate_config
from dualgal.models import ProblemKind
from dualgal.problems import heat_profile, sine_two_pi

STEADY = {"kind": "steady_cd", "p": "2", "q": "3", "n": "8"}


def test_parse_skips_comments_and_blanks():
    raw = parse_config_text("# header\n\nkind = laplace_1d   # trailing\n p=2\n")
    assert raw == {"kind": "laplace_1d", "p": "2"}


@pytest.mark.parametrize("text,needle", [
    ("kind laplace_1d\n", "line 1"),
    ("kind = a\n = 3\n", "empty key"),
    ("p = 1\np = 2\n", "duplicate key 'p'"),
])
def test_parse_errors(text, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config_text(text)


def test_steady_defaults_come_from_preset():
    cfg, errs = validate_config(dict(STEADY))
    assert errs == []
    assert cfg.problem.kind is ProblemKind.STEADY_CD
    assert cfg.problem.alpha == 10.0
    assert (cfg.family, cfg.fmt, cfg.out) == ("bspline", "csv", None)
    assert cfg.lambda_config().degree == 3
    assert cfg.mu_config(n=16).n == 16


def test_overrides_reach_the_problem():
    cfg, errs = validate_config(dict(STEADY, alpha="50", bc_right="2.5", tol="1e-8"))
    assert errs == []
    assert cfg.problem.alpha == 50.0 and cfg.problem.bc_right == 2.5
    assert cfg.tol == 1e-8


def test_missing_kind_is_named():
    cfg, errs = validate_config({"p": "2", "q": "3", "n": "4"})
    assert cfg is None
    assert "missing required key: kind" in errs


def test_every_problem_is_reported():
    _, errs = validate_config({"kind": "steady_cd", "colour": "red", "family": "fourier"})
    assert "unknown key: colour" in errs
    assert "missing required key: p" in errs
    assert "missing required key: q" in errs
    assert "missing required key: n" in errs
    assert any(e.startswith("family:") for e in errs)


def test_ivp_needs_no_p():
    cfg, errs = validate_config({"kind": "ivp_ode", "q": "3", "n": "16", "lambda_T": "5", "a": "-2"})
    assert errs == []
    assert cfg.problem.lambda_terminal == 5.0 and cfg.problem.a == -2.0
    assert cfg.mu_config() is None


@pytest.mark.parametrize("n_list,needle", [("4,8", "at least 3"), ("4,8,8", "strictly increasing"),
                                           ("4,x,16", "n_list")])
def test_converge_n_list(n_list, needle):
    _, errs = validate_config(dict(STEADY, n_list=n_list), mode="converge")
    assert any(needle in e for e in errs)


def test_converge_needs_no_n():
    cfg, errs = validate_config({"kind": "steady_cd", "p": "2", "q": "3", "n_list": "4,8,16"}, mode="converge")
    assert errs == []
    assert cfg.n_list == (4, 8, 16)


def test_transient_rejects_repu():
    _, errs = validate_config({"kind": "transient_cd", "p": "2", "q": "3", "n": "2", "family": "repu"})
    assert "family: transient_cd needs bspline" in errs


def test_u0_profiles():
    cfg, _ = validate_config({"kind": "transient_heat", "p": "2", "q": "3", "n": "2", "u0": "heat"})
    assert cfg.problem.u0 is heat_profile
    cfg, _ = validate_config({"kind": "transient_cd", "p": "2", "q": "3", "n": "2"})
    assert cfg.problem.u0 is sine_two_pi
    _, errs = validate_config({"kind": "transient_cd", "p": "2", "q": "3", "n": "2", "u0": "wiggle"})
    assert any(e.startswith("u0:") for e in errs)


def test_invalid_problem_values():
    _, errs = validate_config(dict(STEADY, kappa="-1"))
    assert any(e.startswith("problem:") for e in errs)
    _, errs = validate_config(dict(STEADY, format="xml", tol="0"))
    assert any(e.startswith("format:") for e in errs)
    assert "tol: must be > 0" in errs


def test_load_joins_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("p = 2\nq = 3\nn = 4\nbogus = 1\n")
    with pytest.raises(ConfigError) as info:
        load_experiment(path)
    assert "missing required key: kind" in str(info.value)
    assert "unknown key: bogus" in str(info.value)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read config"):
        load_experiment(tmp_path / "nope.cfg")
