import json

import numpy as np
import pytest

from dualgal.cli import main


def write_cfg(tmp_path, name, **entries):
    path = tmp_path / name
    path.write_text("".join(f"{k} = {v}\n" for k, v in entries.items()))
    return str(path)


def read_csv(path):
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    rows = [list(map(float, line.split(","))) for line in lines[1:] if not line.startswith("#")]
    footer = dict(line[2:].split("=", 1) for line in lines if line.startswith("# "))
    return header, np.array(rows), footer


def test_solve_laplace(tmp_path):
    cfg = write_cfg(tmp_path, "laplace.cfg", kind="laplace_1d", p=2, q=3, n=4, eval_grid=11)
    out = tmp_path / "out" / "laplace.csv"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    header, rows, footer = read_csv(out)
    assert header == ["x", "u_exact", "u_H", "q_exact", "q_H"]
    assert rows.shape == (11, 5)
    assert np.max(np.abs(rows[:, 2] - rows[:, 0])) <= 1e-12
    assert footer["kind"] == "laplace_1d"
    assert footer["method"] in ("definite_factorization", "min_norm_least_squares")
    assert float(footer["residual"]) <= 1e-9


def test_solve_heat(tmp_path):
    cfg = write_cfg(tmp_path, "heat.cfg", kind="transient_heat", p=5, q=6, n=1, eval_grid=6)
    out = tmp_path / "heat.csv"
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    header, rows, footer = read_csv(out)
    assert header[:2] == ["x", "t"]
    assert rows.shape == (36, 6)
    assert int(footer["dof"]) == 66
    assert float(footer["E_u"]) < 8e-3
    assert float(footer["E_q"]) < 1.8e-1


def test_missing_kind_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "bad.cfg", p=2, q=3, n=4)
    assert main(["solve", "--config", cfg]) == 2
    assert "missing required key: kind" in capsys.readouterr().err


def test_inconsistent_system_exits_3(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "tight.cfg", kind="steady_cd", alpha=10, family="repu", p=2, q=3, n=8, tol="1e-30")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "never.csv")]) == 3
    assert "error:" in capsys.readouterr().err
    assert not (tmp_path / "never.csv").exists()


def test_short_refinement_list_exits_2(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "conv.cfg", kind="steady_cd", p=2, q=3, n_list="4,8")
    assert main(["converge", "--config", cfg]) == 2
    assert "n_list" in capsys.readouterr().err


def test_converge_rates_are_reproducible(tmp_path):
    cfg = write_cfg(tmp_path, "conv.cfg", kind="steady_cd", alpha=10, p=2, q=3, n_list="4,8,16,32,64")
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["converge", "--config", cfg, "--out", str(first)]) == 0
    assert main(["converge", "--config", cfg, "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    header, rows, footer = read_csv(first)
    assert header == ["n", "dof", "E_u", "E_q"]
    assert list(rows[:, 0]) == [4, 8, 16, 32, 64]
    assert float(footer["rate_u"]) == pytest.approx(2.0, abs=0.25)
    assert float(footer["rate_q"]) == pytest.approx(3.0, abs=0.25)


def test_json_to_stdout(tmp_path, capsys):
    cfg = write_cfg(tmp_path, "ivp.cfg", kind="ivp_ode", q=3, n=16, eval_grid=5, format="json")
    assert main(["solve", "--config", cfg]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["columns"][0] == "t"
    assert len(doc["rows"]) == 5
    assert doc["summary"]["kind"] == "ivp_ode"
    t, u_exact, u_h = (np.array([r[i] for r in doc["rows"]]) for i in range(3))
    assert np.max(np.abs(u_h - np.exp(-t))) <= 1e-6
    assert np.max(np.abs(u_exact - np.exp(-t))) <= 1e-14


def test_format_flag_overrides_config(tmp_path):
    cfg = write_cfg(tmp_path, "l.cfg", kind="laplace_1d", p=2, q=3, n=2, eval_grid=3, format="json")
    out = tmp_path / "l.csv"
    assert main(["solve", "--config", cfg, "--out", str(out), "--format", "csv"]) == 0
    assert out.read_text().startswith("x,u_exact")


def _field_line(text, key):
    for line in text.splitlines():
        if line.startswith(key):
            return line
    raise AssertionError(f"{key} not printed")


def _field(text, key):
    return _field_line(text, key).split()[-1]


def test_demo_quadratic(capsys):
    assert main(["demo", "quadratic"]) == 0
    out = capsys.readouterr().out
    assert float(_field(out, "x ")) == pytest.approx(1.41421356, abs=1e-8)
    assert float(_field(out, "y ")) == pytest.approx(1.0, abs=1e-8)


def test_demo_adjoint(capsys):
    assert main(["demo", "adjoint", "--a", "1", "--T", "1"]) == 0
    assert _field(capsys.readouterr().out, "dF/dp") == "1.7182818285"


def test_demo_maxent(capsys):
    assert main(["demo", "maxent", "--poly", "unit-square", "--point", "0.5,0.5"]) == 0
    phis = [float(line.split()[-1]) for line in capsys.readouterr().out.splitlines() if line.startswith("phi")]
    assert phis == pytest.approx([0.25] * 4, abs=1e-10)


def test_demo_linear(capsys):
    assert main(["demo", "linear", "--A", "1,1;1,-1", "--b", "2,0"]) == 0
    line = _field_line(capsys.readouterr().out, "x_H")
    x = [float(v) for v in line.split(None, 1)[1].strip("[]").split(",")]
    assert x == pytest.approx([1.0, 1.0], abs=1e-12)


def test_demo_ivp(capsys):
    assert main(["demo", "ivp", "--samples", "3"]) == 0
    out = capsys.readouterr().out
    gap = float(out.strip().splitlines()[-1].split("=")[-1])
    assert gap <= 1e-3


def test_unknown_demo_exits_2(capsys):
    assert main(["demo", "nope"]) == 2


def test_no_command_prints_help(capsys):
    assert main([]) == 0
    assert "usage: dualgal" in capsys.readouterr().out
