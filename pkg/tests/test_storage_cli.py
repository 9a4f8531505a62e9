"""File formats and the command-line harness end to end."""

import json
import subprocess
import sys

import numpy as np
import pytest

from lsqsolve.cli import main
from lsqsolve.errors import InvalidSpec
from lsqsolve.storage import (load_matrix_lsm, load_vector_vec,
                              save_matrix_lsm, save_vector_vec)

SWEEP_HEADER = ("seed,m,n,k,kappa,r,c,rel_residual,tv_distance,t_sketch_ms,"
                "t_svd_ms,t_lambda_ms,t_sample_ms,reject_rounds_mean")


# -- file formats -------------------------------------------------------------


def test_matrix_round_trip_real(tmp_path):
    a = np.array([[0.1 + 0.2, 0.0, -1.0],
                  [3.0, 1e-300, 0.3333333333333333]])
    path = tmp_path / "a.lsm"
    save_matrix_lsm(path, a)
    back = load_matrix_lsm(path)
    assert back.dtype == np.float64
    np.testing.assert_array_equal(back, a)


def test_matrix_round_trip_complex(tmp_path):
    a = np.array([[1.0 + 2.0j, 0.0], [0.0, -0.5j]])
    path = tmp_path / "a.lsm"
    save_matrix_lsm(path, a)
    back = load_matrix_lsm(path)
    assert back.dtype == np.complex128
    np.testing.assert_array_equal(back, a)


def test_matrix_zeros_are_omitted(tmp_path):
    path = tmp_path / "sparse.lsm"
    save_matrix_lsm(path, np.diag([1.0, 2.0, 3.0]))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "LSM 3 3"
    assert len(lines) == 4


def test_vector_round_trip(tmp_path):
    v = np.array([0.0, -1.5, 1 / 3])
    path = tmp_path / "b.vec"
    save_vector_vec(path, v)
    np.testing.assert_array_equal(load_vector_vec(path), v)


def test_matrix_bad_header(tmp_path):
    path = tmp_path / "bad.lsm"
    path.write_text("MAT 2 2\n")
    with pytest.raises(InvalidSpec, match="expected 'LSM m n'"):
        load_matrix_lsm(path)


def test_matrix_bad_entry_line_reports_position(tmp_path):
    path = tmp_path / "bad.lsm"
    path.write_text("LSM 2 2\n1 1 0.5 0.0\n1 2 0.5\n")
    with pytest.raises(InvalidSpec, match=r"bad\.lsm:3"):
        load_matrix_lsm(path)


def test_matrix_index_out_of_range(tmp_path):
    path = tmp_path / "bad.lsm"
    path.write_text("LSM 2 2\n3 1 0.5 0.0\n")
    with pytest.raises(InvalidSpec, match="index out of range"):
        load_matrix_lsm(path)


def test_vector_bad_header(tmp_path):
    path = tmp_path / "bad.vec"
    path.write_text("VEC\n")
    with pytest.raises(InvalidSpec):
        load_vector_vec(path)


# -- CLI ----------------------------------------------------------------------


GEN = ["generate", "--m", "48", "--n", "36", "--k", "2", "--kappa", "3.0",
       "--seed", "5"]
SOLVE_INLINE = ["solve", "--m", "48", "--n", "36", "--k", "2",
                "--kappa", "3.0", "--r", "60", "--c", "240", "--seed", "5"]


def test_generate_then_solve_files(tmp_path, capsys):
    mat = tmp_path / "a.lsm"
    vec = tmp_path / "b.vec"
    assert main(GEN + ["--out-matrix", str(mat), "--out-vector", str(vec)]) == 0
    a = load_matrix_lsm(mat)
    assert a.shape == (48, 36)
    report = tmp_path / "run.json"
    code = main(["solve", "--matrix", str(mat), "--rhs", str(vec),
                 "--k", "2", "--kappa", "3.0", "--r", "60", "--c", "240",
                 "--seed", "5", "--report", str(report)])
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["format"] == "lsqsolve-run/1"
    assert doc["index_base"] == 0
    assert doc["instance"]["kind"] == "files"
    assert "replay" not in doc
    out = capsys.readouterr().out
    assert "detected rank 2" in out


def test_solve_inline_with_verification(tmp_path):
    report = tmp_path / "run.json"
    code = main(SOLVE_INLINE + ["--verify", "--report", str(report)])
    assert code == 0
    doc = json.loads(report.read_text())
    ver = doc["verification"]
    assert ver["ok"] and not ver["skipped"]
    assert ver["rejection_law_tv"] <= 1e-12


def test_solve_records_entries_and_samples(tmp_path):
    report = tmp_path / "run.json"
    code = main(SOLVE_INLINE + ["--samples", "50", "--entries", "1,5,36",
                                "--report", str(report)])
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["entries"]["indices"] == [0, 4, 35]
    assert len(doc["entries"]["values"]) == 3
    assert doc["samples"]["count"] == 50
    assert len(doc["samples"]["indices"]) == 50
    assert all(r >= 1 for r in doc["samples"]["rounds"])


def test_usage_errors_exit_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--m", "8"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["generate", "--m", "8", "--n", "8", "--k", "1"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(SOLVE_INLINE + ["--entries", "0,1"])
    assert exc.value.code == 1


def test_manual_mode_requires_sketch_sizes():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--m", "8", "--n", "8", "--k", "1", "--kappa", "1.0"])
    assert exc.value.code == 1


def test_budget_refusal_and_force(tmp_path, capsys):
    args = ["solve", "--m", "12", "--n", "6", "--k", "1", "--kappa", "1.0",
            "--r", "5001", "--c", "8", "--seed", "0"]
    assert main(args) == 2
    assert "--force" in capsys.readouterr().err
    assert main(args + ["--force"]) == 0


def test_missing_matrix_file_exits_two(tmp_path, capsys):
    code = main(["solve", "--matrix", str(tmp_path / "nope.lsm"),
                 "--rhs", str(tmp_path / "nope.vec"), "--k", "1",
                 "--kappa", "1.0", "--r", "10", "--c", "20"])
    assert code == 2


def test_reports_are_byte_identical_without_timings(tmp_path):
    first = tmp_path / "one.json"
    second = tmp_path / "two.json"
    assert main(SOLVE_INLINE + ["--samples", "25", "--omit-timings",
                                "--report", str(first)]) == 0
    assert main(SOLVE_INLINE + ["--samples", "25", "--omit-timings",
                                "--report", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_seed_env_var_sets_default(tmp_path, monkeypatch):
    explicit = tmp_path / "explicit.json"
    env = tmp_path / "env.json"
    base = ["solve", "--m", "48", "--n", "36", "--k", "2", "--kappa", "3.0",
            "--r", "60", "--c", "240", "--omit-timings"]
    assert main(base + ["--seed", "9", "--report", str(explicit)]) == 0
    monkeypatch.setenv("LSQ_SEED", "9")
    assert main(base + ["--report", str(env)]) == 0
    assert explicit.read_bytes() == env.read_bytes()


def test_verify_replays_report(tmp_path, capsys):
    report = tmp_path / "run.json"
    assert main(SOLVE_INLINE + ["--samples", "40", "--report",
                                str(report)]) == 0
    out = tmp_path / "verified.json"
    assert main(["verify", "--report", str(report), "--out", str(out)]) == 0
    assert "replay ok, samples ok, oracle ok" in capsys.readouterr().out
    doc = json.loads(out.read_text())
    assert doc["verification"]["replay_ok"]
    assert doc["verification"]["samples_ok"]
    assert doc["verification"]["oracle"]["ok"]


def test_verify_flags_tampered_report(tmp_path, capsys):
    report = tmp_path / "run.json"
    assert main(SOLVE_INLINE + ["--report", str(report)]) == 0
    doc = json.loads(report.read_text())
    doc["solution"]["w"][0] = doc["solution"]["w"][0] + 1.0
    report.write_text(json.dumps(doc))
    assert main(["verify", "--report", str(report),
                 "--out", str(tmp_path / "v.json")]) == 3
    assert "MISMATCH" in capsys.readouterr().out


def test_sweep_csv_schema(tmp_path):
    csv_path = tmp_path / "grid.csv"
    code = main(["sweep", "--m", "48", "--n", "36", "--k", "2",
                 "--kappa", "3.0", "--r-list", "40,80", "--c-list", "160",
                 "--seed-list", "1,2", "--samples", "20",
                 "--csv", str(csv_path)])
    assert code == 0
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 1 + 2 * 1 * 2
    first = lines[1].split(",")
    assert first[:7] == ["1", "48", "36", "2", "3.0", "40", "160"]
    assert float(first[7]) > 0.0


def test_sweep_budget_checked(capsys):
    code = main(["sweep", "--m", "8", "--n", "8", "--k", "1",
                 "--kappa", "1.0", "--r-list", "6000", "--c-list", "10",
                 "--seed-list", "1", "--csv", "unused.csv"])
    assert code == 2


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "lsqsolve.cli", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "generate" in proc.stdout and "sweep" in proc.stdout
