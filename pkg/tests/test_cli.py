import json
from pathlib import Path

import pytest

from gradheat import cli

FIXTURES = Path(__file__).parent / "fixtures"

SMALL = """
[problem]
dim = 1
p = 3
q = 6/5
M = 1

[grid]
R = 1
h = 0.05

[solver]
T = 0.05
stride = 10

[checks]
run = {checks}

[run]
seed = 7
n_random = 3
"""


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_classify_and_exponents(capsys):
    assert cli.main(["classify", "3", "3/2"]) == 0
    assert capsys.readouterr().out.strip() == "Critical"
    assert cli.main(["exponents", "--dim", "3"]) == 0
    out = capsys.readouterr().out.split()
    assert "p_S=5" in out and "p_B=15/4" in out
    assert cli.main(["classify", "1", "3/2"]) == 2


def test_empty_check_list(tmp_path):
    cfg = write(tmp_path, "[problem]\ndim = 1\np = 3\nq = 3/2\n")
    out = tmp_path / "out"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    assert not out.exists()


@pytest.mark.parametrize("text", [
    "[problem]\ndim = 1\np = abc\nq = 2\n",
    "[grid]\nR = 1\n",
    "[problem]\ndim = 1\np = 3\nq = 2\n[checks]\nrun = nonsense\n",
    "[problem]\ndim = 1\np = 3\nq = 2\n[sweep]\nq =\n",
    "[problem]\ndim = 1\np = 3\nq = 2\n[solver]\nbc = neumann\n",
    "not an ini file",
])
def test_config_errors_exit_2(tmp_path, text):
    assert cli.main(["run", str(write(tmp_path, text))]) == 2


def test_missing_config_file(tmp_path):
    assert cli.main(["run", str(tmp_path / "nope.ini")]) == 2


def test_classify_only_report(tmp_path):
    cfg = write(tmp_path, "[problem]\ndim = 1\np = 3\nq = 3/2\n[checks]\nrun = classify\n")
    out = tmp_path / "o"
    assert cli.main(["run", str(cfg), "--out", str(out)]) == 0
    rec = json.loads((out / "classify.summary.json").read_text())
    assert rec["regime"] == "Critical" and rec["q_c"] == "3/2"


def test_env_output_dir(tmp_path, monkeypatch):
    cfg = write(tmp_path, "[problem]\ndim = 1\np = 3\nq = 3/2\n[checks]\nrun = classify\n")
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env_out"))
    assert cli.main(["run", str(cfg)]) == 0
    assert (tmp_path / "env_out" / "classify.csv").exists()


def test_determinism(tmp_path):
    cfg = write(tmp_path, SMALL.format(checks="classify, bernstein, estimates, doubling, rescaling"))
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["run", str(cfg), "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir() if p.name != "manifest.txt")
    assert names == sorted(p.name for p in b.iterdir() if p.name != "manifest.txt")
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n
    assert "timestamp=" in (a / "manifest.txt").read_text()


def test_seed_override_changes_doubling_report(tmp_path):
    cfg = write(tmp_path, SMALL.format(checks="doubling"))
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", str(cfg), "--out", str(a)])
    cli.main(["run", str(cfg), "--out", str(b), "--seed", "8"])
    assert (a / "doubling.csv").read_bytes() != (b / "doubling.csv").read_bytes()


def test_single_check_subcommands(tmp_path):
    cfg = write(tmp_path, SMALL.format(checks=""))
    for cmd, name in [("verify-bernstein", "bernstein"), ("verify-estimates", "estimates"),
                      ("rescale-check", "rescaling")]:
        out = tmp_path / cmd
        assert cli.main([cmd, "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / f"{name}.summary.json").exists()


def test_solve_exports(tmp_path):
    cfg = write(tmp_path, SMALL.format(checks=""))
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    assert (tmp_path / "s" / "trajectory" / "manifest.json").exists()


def test_sweep_parallel_matches_serial(tmp_path):
    text = SMALL.format(checks="classify, rescaling") + "\n[sweep]\nq = 6/5, 3/2\nM = 0.5, 1\n"
    cfg = write(tmp_path, text)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s1")]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path / "s2"), "--jobs", "2"]) == 0
    t1 = (tmp_path / "s1" / "sweep.csv").read_text()
    assert t1 == (tmp_path / "s2" / "sweep.csv").read_text()
    assert t1.count("\n") == 1 + 4 * 2
    assert cli.main(["sweep", "--config", str(write(tmp_path, SMALL.format(checks=""), "x.ini"))]) == 2


def test_doubling_fixture(capsys):
    fx = str(FIXTURES / "doubling_chain.json")
    assert cli.main(["doubling-check", fx]) == 0
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
    assert sum(1 for r in lines if r.get("certified")) == 4
    assert sum(1 for r in lines if r.get("hypothesis") == "fails") == 2
    assert cli.main(["doubling-check", fx, "--start", "2"]) == 0
    assert cli.main(["doubling-check", fx, "--start", "0"]) == 1


def test_bad_fixture(tmp_path):
    assert cli.main(["doubling-check", str(write(tmp_path, "{}", "f.json"))]) == 2
