import json
import math

import pytest

from csbp.cli import main


def _run(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


def test_riccati_solve(capsys):
    code, out = _run(capsys, ["riccati", "solve", "--a", "1", "--b", "0", "--c", "1",
                              "--t", str(math.pi / 4)])
    assert code == 0
    assert out["case"] == "TangentPure" and out["y"] == pytest.approx(1.0)


def test_riccati_solve_past_blow_up(capsys):
    code, out = _run(capsys, ["riccati", "solve", "--a", "1", "--b", "0", "--c", "1", "--t", "3"])
    assert code == 1 and out["t_star"] == pytest.approx(math.pi / 2)


def test_riccati_blowup(capsys):
    code, out = _run(capsys, ["riccati", "blowup", "--a", "1", "--b", "3", "--c", "2"])
    assert code == 0 and out == {"case": "RealRoots", "t_star": pytest.approx(math.log(2)),
                                 "finite": True}
    code, out = _run(capsys, ["riccati", "blowup", "--a", "0", "--b", "1", "--c", "1"])
    assert out["finite"] is False and out["t_star"] == "inf"


def test_invalid_coefficient_exit_code(capsys):
    assert main(["riccati", "blowup", "--a", "-1", "--b", "0", "--c", "1"]) == 2


def test_operators_check_and_dump(capsys, tmp_path):
    code, out = _run(capsys, ["operators", "check", "--n-e", "2,4,8",
                              "--output-dir", str(tmp_path)])
    assert code == 0 and out["passed"]
    assert (tmp_path / "report.csv").exists() and (tmp_path / "summary.json").exists()
    code, out = _run(capsys, ["operators", "dump", "--p", "2"])
    assert out["H"] == pytest.approx([1 / 3, 4 / 3, 1 / 3])


def test_converge_from_config_file(capsys, tmp_path):
    cfg = {"problem": "burgers", "p": 2, "n_e": [8, 16, 32], "output_dir": str(tmp_path / "o")}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    code, out = _run(capsys, ["converge", "--config", str(path)])
    assert code == (0 if out["passed"] else 1)
    assert out["kind"] == "converge"
    assert (tmp_path / "o" / "report.csv").exists()
    assert (tmp_path / "o" / "summary.json").exists()


def test_flags_override_config(capsys, tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"p": 3, "n_e": [8]}))
    code, out = _run(capsys, ["simulate", "--config", str(path), "--p", "2", "--dt", "1e-4",
                              "--output-dir", str(tmp_path / "sim")])
    assert code == 0
    summary = json.loads((tmp_path / "sim" / "summary.json").read_text())
    assert summary["config"]["p"] == 2


def test_failed_check_gives_nonzero_exit(capsys, tmp_path):
    code, out = _run(capsys, ["simulate", "--p", "2", "--n-e", "8", "--dt", "5e-3",
                              "--energy-tol", "1e-20", "--output-dir", str(tmp_path)])
    assert code == 1 and out["passed"] is False


def test_bad_config_exit_code(capsys, tmp_path):
    assert main(["converge", "--n-e", "8,16", "--output-dir", str(tmp_path)]) == 2
