import csv
import io
import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudofrac.cli import COMMANDS, RunConfig, UsageError, main, parse_config, run, serialize


def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(parse_config(argv), out, err)
    lines = out.getvalue().splitlines()
    return code, (json.loads(lines[0]) if lines else None), err.getvalue()


def test_parse_eig():
    cfg = parse_config(["eig", "--domain", "ball:1", "--s", "0.5", "--p", "2", "--h", "0.1"])
    assert cfg == RunConfig(command="eig", domain="ball:1", s=0.5, p=2.0, h=0.1)


def test_bad_s_message():
    with pytest.raises(UsageError, match=r"s must lie in \(0,1\)"):
        parse_config(["eig", "--domain", "ball:1", "--s", "1.5", "--p", "2"])


def test_usage_exit_code(capsys):
    assert main(["eig", "--domain", "ball:1", "--s", "1.5", "--p", "2"]) == 2
    assert "s must lie in (0,1)" in capsys.readouterr().err
    assert main(["nonsense"]) == 2
    assert main(["eig", "--domain", "ball:1", "--s", "0.5"]) == 2


def test_config_file_merge(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"command": "sweep-p", "domain": "ball:1", "p_list": [2, 4, 8]}))
    cfg = parse_config(["--config", str(path), "--s", "0.5"])
    assert cfg.command == "sweep-p" and cfg.p_list == (2.0, 4.0, 8.0) and cfg.s == 0.5


def test_flags_override_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"command": "geom", "domain": "ball:1", "s": 0.3}))
    assert parse_config(["--config", str(path), "--s", "0.7"]).s == 0.7


def test_unknown_file_key(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"command": "geom", "colour": "red"}))
    with pytest.raises(UsageError, match="unknown keys"):
        parse_config(["--config", str(path)])


def test_help_shows_grammar(capsys):
    with pytest.raises(SystemExit) as exc:
        parse_config(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "ball:R" in text and "rect:hx,hy" in text


@settings(max_examples=40, deadline=None)
@given(
    command=st.sampled_from(COMMANDS),
    s=st.none() | st.floats(0.01, 0.99),
    p=st.none() | st.floats(1.01, 100.0),
    h=st.none() | st.floats(0.001, 1.0),
    p_list=st.none() | st.lists(st.floats(1.1, 64.0), min_size=1, max_size=4, unique=True).map(lambda v: tuple(sorted(v))),
    seed=st.integers(0, 10**6),
    fmt=st.sampled_from(["csv", "json"]),
    timing=st.booleans(),
)
def test_round_trip(command, s, p, h, p_list, seed, fmt, timing):
    cfg = RunConfig(command=command, domain="ball:1", s=s if s is not None else 0.5, p=p if p is not None else 2.0,
                    h=h, p_list=p_list or (2.0,), s_list=(0.5, 0.9), seed=seed, format=fmt, timing=timing)
    assert parse_config(serialize(cfg)) == cfg


def test_geom_summary():
    code, summary, _ = run_cli(["geom", "--domain", "rect:1,0.5", "--s", "0.5"])
    assert code == 0
    assert summary["lambda_infinity"] == pytest.approx(2**0.5, abs=1e-2)


def test_check_inequalities(tmp_path):
    code, summary, _ = run_cli(["check", "--suite", "inequalities", "--seed", "7", "--out", str(tmp_path)])
    assert code == 0 and summary["failed"] == 0
    rows = list(csv.DictReader(open(tmp_path / "checks.csv")))
    assert len(rows) == summary["margins"] == 200 * 2 * 4
    assert all(r["pass"] == "true" for r in rows)


def test_eig_empty_grid():
    code, summary, err = run_cli(["eig", "--domain", "ball:1", "--s", "0.5", "--p", "2", "--h", "2.5"])
    assert code == 2 and summary is None and "EmptyGrid" in err


def test_eig_artifacts(tmp_path):
    code, summary, _ = run_cli(["eig", "--domain", "ball:1", "--s", "0.5", "--p", "2", "--h", "0.1",
                                "--out", str(tmp_path)])
    assert code == 0 and summary["converged"]
    assert (tmp_path / "eigenfunction.csv").exists() and (tmp_path / "eig.json").exists()


def test_non_convergence_exit():
    code, summary, err = run_cli(["eig", "--domain", "ball:1", "--s", "0.5", "--p", "3", "--h", "0.2",
                                  "--max-iters", "1"])
    assert code == 3 and not summary["converged"] and "did not reach" in err


def test_sweep_reproducible_bytes(tmp_path):
    for name in ("a", "b"):
        code, _, _ = run_cli(["sweep-p", "--domain", "ball:1", "--s", "0.5", "--p-list", "2,4", "--h", "0.2",
                              "--no-timing", "--out", str(tmp_path / name)])
        assert code == 0
    assert (tmp_path / "a" / "sweep_p.csv").read_bytes() == (tmp_path / "b" / "sweep_p.csv").read_bytes()


def test_sweep_s_json(tmp_path):
    code, summary, _ = run_cli(["sweep-s", "--domain", "rect:0.5,0.5", "--p", "2", "--s-list", "0.5,0.9",
                                "--h", "0.125", "--format", "json", "--out", str(tmp_path)])
    assert code == 0
    rows = json.loads((tmp_path / "sweep_s.json").read_text())
    assert len(rows) == 2 and set(rows[0]) >= {"s", "p", "lambda", "gap"}


@pytest.mark.parametrize("suite", ["oracle", "cone"])
def test_other_suites(suite):
    code, summary, _ = run_cli(["check", "--suite", suite, "--h", "0.125"])
    assert code == 0 and summary["suite"] == suite


def test_viscosity_and_diagram(tmp_path):
    code, summary, _ = run_cli(["viscosity", "--domain", "ball:1", "--s", "0.5", "--h", "0.2",
                                "--out", str(tmp_path)])
    assert code == 0 and summary["finite"]
    code, summary, _ = run_cli(["diagram", "--domain", "ball:1", "--h", "0.2", "--p", "8"])
    assert code == 0 and summary["corner_inf"] == pytest.approx(1.0, abs=1e-9)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pseudofrac", "geom", "--domain", "ball:1", "--s", "0.5"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["lambda_infinity"] == pytest.approx(1.0, abs=2e-2)
