"""CLI surface: commands, exit codes, file outputs, determinism."""

import json

import pytest

from stochgames.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_big_match(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--game", "big_match", "--lambda", "1e-3",
                       "--out", str(tmp_path))
    assert code == 0
    assert "v[live] = 0.5" in out
    report = json.loads((tmp_path / "solve_big_match.json").read_text())
    assert report["values"]["live"] == pytest.approx(0.5, abs=1e-9)
    assert report["values"]["won"] == pytest.approx(1.0)


def test_solve_const5(capsys):
    code, out, _ = run(capsys, "solve", "--game", "const5", "--lambda", "0.5")
    assert code == 0
    assert "v[only] = 5" in out


def test_malformed_file_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({
        "states": ["s"], "actions1": ["a"], "actions2": ["b"], "initial": "s",
        "payoff": [[[1]]],
        "transition": [[[{"s": 0.9}]]],
    }))
    code, _, err = run(capsys, "solve", "--game", str(bad), "--lambda", "0.5")
    assert code == 1
    assert "(s, a, b)" in err  # names the offending row


def test_unknown_game_exit_code(capsys):
    code, _, err = run(capsys, "solve", "--game", "no_such_game", "--lambda", "0.5")
    assert code == 1
    assert "no_such_game" in err


def test_bad_flags_exit_code(capsys):
    assert main(["solve", "--game", "big_match"]) == 1  # missing --lambda


def test_check_big_match(capsys):
    code, out, _ = run(capsys, "check", "--game", "big_match",
                       "--ladder", "1e-1,1e-2,1e-3,1e-4,1e-5")
    assert code == 0
    assert "H1: holds" in out
    assert "H2: holds" in out
    assert "absorbing: yes (live state live)" in out
    assert "critical: yes" in out


def test_check_cycle3_witness(capsys):
    code, out, _ = run(capsys, "check", "--game", "cycle3",
                       "--ladder", "1e-1,1e-2,1e-3,1e-4")
    assert code == 0
    assert "H1: violated" in out
    assert "(s1, s2, s3)" in out
    assert "H2: holds" in out


def test_puiseux_command(capsys, tmp_path):
    code, out, _ = run(capsys, "puiseux", "--game", "big_match",
                       "--ladder", "1e-1,1e-2,1e-3,1e-4,1e-5", "--out", str(tmp_path))
    assert code == 0
    assert "lam^1" in out
    data = json.loads((tmp_path / "puiseux_big_match.json").read_text())
    assert data["p1"][0]["terms"]["top"]["e"] == "1"


def test_trajectory_writes_curve(capsys, tmp_path):
    code, out, _ = run(capsys, "trajectory", "--game", "big_match",
                       "--eval", "uniform:2000", "--grid", "21", "--out", str(tmp_path))
    assert code == 0
    csvs = list(tmp_path.glob("trajectory_big_match_*.csv"))
    assert len(csvs) == 1
    text = csvs[0].read_text()
    assert text.startswith("# game: big_match")
    assert "uniform:2000" in text
    assert (tmp_path / csvs[0].name.replace(".csv", ".svg")).exists()


def test_limit_command(capsys, tmp_path):
    code, out, _ = run(capsys, "limit", "--game", "big_match", "--grid", "21",
                       "--out", str(tmp_path))
    assert code == 0
    assert "limit kind: absorbing" in out
    assert (tmp_path / "limit_big_match.csv").exists()


def test_limit_not_covered(capsys, tmp_path):
    code, out, _ = run(capsys, "limit", "--game", "cycle3", "--out", str(tmp_path))
    assert code == 0
    assert "not covered" in out.lower()


def test_verify_const5_and_determinism(capsys, tmp_path):
    args = ("verify", "--game", "const5", "--ladder", "1e-2,1e-3", "--grid", "21")
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert run(capsys, *args, "--out", str(out1))[0] == 0
    assert run(capsys, *args, "--out", str(out2))[0] == 0
    for f in sorted(out1.iterdir()):
        if f.suffix == ".csv":
            assert f.read_bytes() == (out2 / f.name).read_bytes()
    summary = (out1 / "verify_const5_summary.csv").read_text().splitlines()
    assert summary[0] == "family,norm_target,norm_actual,sup_error,limit_distance,covered"
    # constant game: sup error bounded by the clock-step discreteness norm*|g|
    for line in summary[1:]:
        family, norm, _, sup_err = line.split(",")[:4]
        assert float(sup_err) <= float(norm) * 5.0 + 1e-9


def test_verify_flags_uncovered_game(capsys, tmp_path):
    code, out, _ = run(capsys, "verify", "--game", "cycle3", "--ladder", "1e-2",
                       "--grid", "11", "--out", str(tmp_path))
    assert code == 0
    assert "NOT COVERED" in out
    summary = (tmp_path / "verify_cycle3_summary.csv").read_text()
    assert "False" in summary
    # curves still emitted
    assert list(tmp_path.glob("verify_cycle3_discounted_*.csv"))
