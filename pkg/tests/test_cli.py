import filecmp
from pathlib import Path

import pytest

from relboltz.cli import EXIT_CONFIG, EXIT_DIVERGED, EXIT_OK, KEYS, main, parse_config
from relboltz.errors import ConfigError
from relboltz.limit_harness import read_summary

SMALL = ["n_x=8", "n_p=8", "n_t=2", "L_x=2", "L_p=4", "n_omega=8"]


def test_defaults(tmp_path):
    empty = tmp_path / "empty.cfg"
    empty.write_text("# nothing here\n\n")
    cfg = parse_config(empty)
    assert cfg.values == {k: d for k, (_, d) in KEYS.items()}
    assert cfg["N"] == 2 and cfg.c_list == (2.0, 4.0, 8.0, 16.0, 32.0)
    assert (cfg["alpha"], cfg["beta"], cfg["b"], cfg["B"], cfg["a"], cfg["T"]) == (1.0, 1.0, 1e-3, 1.0, 0.5, 1.0)
    assert (cfg["n_t"], cfg["n_x"], cfg["n_p"], cfg["n_omega"], cfg.seed) == (16, 24, 24, 16, 42)


def test_override_precedence(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("c_list=1,10\n")
    assert parse_config(f).c_list == (1.0, 10.0)
    assert parse_config(f, ["c_list=2,4"]).c_list == (2.0, 4.0)


def test_israel_needs_table(tmp_path):
    f = tmp_path / "a.cfg"
    f.write_text("sigma.kind=israel\n")
    with pytest.raises(ConfigError, match="sigma.b_table"):
        parse_config(f)


def test_israel_with_table(tmp_path):
    table = tmp_path / "b.txt"
    table.write_text("0 1\n3.141592653589793 2\n")
    cfg = parse_config(None, ["sigma.kind=israel", f"sigma.b_table={table}"])
    assert cfg.sigma().b(0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("text,line", [("N=2\nbogus=1\n", 2), ("\n\nn_x=abc\n", 3), ("a=1.5\n", 1),
                                       ("just words\n", 1)])
def test_errors_carry_line_numbers(tmp_path, text, line):
    f = tmp_path / "bad.cfg"
    f.write_text(text)
    with pytest.raises(ConfigError) as e:
        parse_config(f)
    assert e.value.line == line and f"line {line}" in str(e.value)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config(tmp_path / "nope.cfg")


def test_echo_roundtrip(tmp_path):
    cfg = parse_config(None, ["c=3.5", "cutoff=1", "kind=PHAT_DIFF,KERNEL_DIFF", "p=1,0"])
    f = tmp_path / "echo.cfg"
    f.write_text(cfg.echo())
    assert parse_config(f) == cfg


def test_config_error_exit(tmp_path, capsys):
    assert main(["kinematics", "bogus=1", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "bogus" in capsys.readouterr().err


def test_kinematics_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["kinematics", "n_samples=1000", "--out", str(d), "--no-timestamp"]) == EXIT_OK
    names = sorted(p.name for p in a.iterdir())
    assert "summary.csv" in names and "config.txt" in names
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    assert not mismatch and not errors
    assert not (a / "summary.csv").read_text().startswith("#")


def test_timestamp_header(tmp_path):
    assert main(["kinematics", "n_samples=1000", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "summary.csv").read_text().startswith("# generated")


def test_seed_flag(tmp_path):
    main(["kinematics", "n_samples=1000", "--seed", "7", "--out", str(tmp_path), "--no-timestamp"])
    assert "seed=7\n" in (tmp_path / "config.txt").read_text()


def test_limit_phat(tmp_path):
    assert main(["limit", "kind=PHAT_DIFF", "--out", str(tmp_path)]) == EXIT_OK
    s = read_summary(tmp_path / "limit_PHAT_DIFF.csv")
    assert 1.95 <= s["slope"] <= 2.05


def test_verify_writes_table(tmp_path):
    assert main(["verify", "suites=jacobian,invariant", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "verify.csv").read_text().splitlines()
    assert lines[0] == "test_name,status,max_residual,tolerance"
    assert [ln.split(",")[1] for ln in lines[1:]] == ["pass", "pass"]


def test_xsec(tmp_path):
    assert main(["xsec", "n_samples=1000", "--out", str(tmp_path)]) == EXIT_OK
    for name in ("catalog.csv", "envelope.csv", "cutoff.csv"):
        assert (tmp_path / name).is_file()


def test_solve_small(tmp_path):
    assert main(["solve", *SMALL, "traj.format=text", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,x1,x2,p1,p2,value")
    assert (tmp_path / "norm_trace.csv").is_file()


def test_solve_diverges(tmp_path):
    assert main(["solve", *SMALL, "b=10", "--out", str(tmp_path)]) == EXIT_DIVERGED
    assert "reduce b" in (tmp_path / "divergence.txt").read_text()
    assert "fail" in (tmp_path / "summary.csv").read_text()


def test_solver_rejects_n3(tmp_path):
    assert main(["solve", "N=3", "--out", str(tmp_path)]) == EXIT_CONFIG
