import json
import os

import pytest

from chains import three_state_chain
from main import build_parser, run


def invoke(capsys, *argv):
    code, report = run(list(argv) + ["--no-logs"])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out else None), err


class TestCheck:
    def test_lumpable(self, capsys, three_file):
        code, data, _ = invoke(capsys, "check", "-m", three_file, "-p", "{1,2}{3}")
        assert code == 0
        assert data["command"] == "check"
        assert data["results"]["lumpable"] is True
        assert data["results"]["partition"] == [[1, 2], [3]]
        assert data["input_digest"].startswith("sha256:")
        assert data["error"] is None

    def test_not_lumpable_still_succeeds(self, capsys, three_file):
        code, data, _ = invoke(capsys, "check", "-m", three_file, "-p", "{1,3}{2}")
        assert code == 0
        assert data["results"]["lumpable"] is False
        assert data["results"]["max_deviation"] == pytest.approx(0.3)

    def test_config_is_echoed(self, capsys, three_file):
        _, data, _ = invoke(capsys, "check", "-m", three_file, "-p", "{1,2}{3}", "--tol-lump", "1e-6")
        assert data["config"]["tol_lump"] == 1e-6
        assert data["config"]["tol_validate"] == 1e-9


class TestReduce:
    def test_reduces(self, capsys, three_file):
        code, data, _ = invoke(capsys, "reduce", "-m", three_file, "-p", "{1,2}{3}")
        assert code == 0
        assert data["results"]["reduced_matrix"] == pytest.approx([[0.75, 0.25], [0.5, 0.5]])
        assert data["results"]["spectrum_subset"] is True

    def test_not_lumpable_exits_one(self, capsys, three_file):
        code, data, err = invoke(capsys, "reduce", "-m", three_file, "-p", "{1,3}{2}")
        assert code == 1
        assert data["error"]["type"] == "NotLumpable"
        assert data["error"]["max_deviation"] == pytest.approx(0.3)
        assert "NotLumpable" in err

    def test_bad_partition_exits_two(self, capsys, three_file):
        code, data, _ = invoke(capsys, "reduce", "-m", three_file, "-p", "{1,2}{2,3}")
        assert code == 2
        assert data["error"]["type"] == "ParseError"


class TestInputErrors:
    def test_row_sum_violation(self, capsys, tmp_path):
        path = tmp_path / "bad.mat"
        path.write_text("0.5 0.6\n0.5 0.4\n")
        code, data, _ = invoke(capsys, "oracle", "-m", str(path))
        assert code == 2
        assert data["error"]["type"] == "RowSumViolation"
        assert data["error"]["row"] == 1

    def test_parse_error_position(self, capsys, tmp_path):
        path = tmp_path / "bad.mat"
        path.write_text("1 0\n0 one\n")
        code, data, _ = invoke(capsys, "oracle", "-m", str(path))
        assert code == 2
        assert (data["error"]["line"], data["error"]["column"]) == (2, 3)

    def test_missing_file(self, capsys, tmp_path):
        code, data, _ = invoke(capsys, "oracle", "-m", str(tmp_path / "none.mat"))
        assert code == 2
        assert data["error"]["type"] == "InputFileError"

    def test_argument_errors(self, capsys):
        code, report = run(["check", "--no-logs"])
        assert code == 2
        assert report is None

    def test_bad_environment(self, capsys, monkeypatch, three_file):
        monkeypatch.setenv("LUMPCHAIN_THREADS", "many")
        code, _, err = invoke(capsys, "oracle", "-m", three_file)
        assert code == 2
        assert "LUMPCHAIN_THREADS" in err


class TestDiscoverAndOracle:
    def test_discover_eight_state_chain(self, capsys, eight_file):
        code, data, _ = invoke(capsys, "discover", "-m", eight_file)
        assert code == 0
        results = data["results"]
        assert results["source"] == "spectral"
        assert results["count"] == 10
        assert results["lumpings"][1]["blocks"] == [[1, 2, 3, 4], [5, 6, 7, 8]]
        assert results["complete"] is False
        assert any("degenerate" in w for w in data["warnings"])
        first = results["eigenvalues"][0]
        assert first["re"] == pytest.approx(1.0)
        assert abs(first["im"]) < 1e-12

    def test_generating_set_is_one_based(self, capsys, three_file):
        _, data, _ = invoke(capsys, "discover", "-m", three_file)
        middle = data["results"]["lumpings"][1]
        assert middle["blocks"] == [[1, 2], [3]]
        assert [g["eigenvectors"] for g in middle["generating_set"]] == [[1], [2]]
        assert middle["complement"] == [3]

    def test_oracle_eight_state_chain(self, capsys, eight_file):
        code, data, _ = invoke(capsys, "oracle", "-m", eight_file)
        assert code == 0
        assert data["results"]["bell_number"] == 4140
        assert data["results"]["count"] == 10
        assert data["results"]["lumpings"][0]["generating_set"] is None

    def test_discover_matches_oracle(self, capsys, eight_file):
        _, spectral, _ = invoke(capsys, "discover", "-m", eight_file)
        _, oracle, _ = invoke(capsys, "oracle", "-m", eight_file)
        assert [e["blocks"] for e in spectral["results"]["lumpings"]] == [
            e["blocks"] for e in oracle["results"]["lumpings"]
        ]

    def test_oracle_guard(self, capsys, eight_file):
        code, data, _ = invoke(capsys, "oracle", "-m", eight_file, "--guard", "100")
        assert code == 1
        assert data["error"]["type"] == "GuardExceeded"
        assert data["error"]["bell_number"] == 4140

    def test_non_diagonalizable_falls_back(self, capsys, tmp_path):
        path = tmp_path / "jordan.mat"
        path.write_text("0.5 0.5 0\n0 0.5 0.5\n0 0 1\n")
        code, data, _ = invoke(capsys, "discover", "-m", str(path))
        assert code == 0
        assert data["results"]["source"] == "oracle"
        assert any("fell back" in w for w in data["warnings"])

    def test_non_diagonalizable_beyond_guard(self, capsys, tmp_path):
        path = tmp_path / "jordan.mat"
        path.write_text("0.5 0.5 0\n0 0.5 0.5\n0 0 1\n")
        code, data, _ = invoke(capsys, "discover", "-m", str(path), "--guard", "2")
        assert code == 1
        assert data["error"]["type"] == "NotDiagonalizable"

    def test_repeated_eigenvalue_falls_back(self, capsys, tmp_path):
        # lambda2 = lambda3 = 0.7 in a single Jordan block
        path = tmp_path / "three_state_defective.mat"
        rows = three_state_chain(0.75, 0.2, 0.8)
        path.write_text("\n".join(" ".join(repr(float(v)) for v in row) for row in rows) + "\n")
        code, data, _ = invoke(capsys, "discover", "-m", str(path))
        assert code == 0
        assert data["results"]["source"] == "oracle"
        assert [e["blocks"] for e in data["results"]["lumpings"]] == [
            [[1, 2, 3]], [[1, 2], [3]], [[1], [2], [3]],
        ]

    def test_threads_from_environment(self, capsys, monkeypatch, eight_file):
        monkeypatch.setenv("LUMPCHAIN_THREADS", "2")
        code, data, _ = invoke(capsys, "discover", "-m", eight_file)
        assert code == 0
        assert data["config"]["threads"] == 2
        assert data["results"]["count"] == 10

    def test_output_is_byte_identical(self, capsys, eight_file):
        run(["discover", "-m", eight_file, "--no-logs"])
        first = capsys.readouterr().out
        run(["discover", "-m", eight_file, "--no-logs"])
        assert capsys.readouterr().out == first


class TestSimulate:
    def test_simulate(self, capsys, eight_file, tmp_path):
        trajectory = tmp_path / "traj.txt"
        code, data, _ = invoke(
            capsys, "simulate", "-m", eight_file, "--x0", "1", "-T", "2000", "--seed", "5",
            "--trajectory-out", str(trajectory),
        )
        assert code == 0
        assert data["results"]["length"] == 2000
        assert data["results"]["rng"]["name"] == "numpy.random.PCG64"
        states = [int(line) for line in trajectory.read_text().split()]
        assert len(states) == 2000
        assert states[0] == 1
        assert min(states) >= 1 and max(states) <= 8

    def test_quotient_test_is_diagnostic(self, capsys, eight_file):
        code, data, _ = invoke(
            capsys, "simulate", "-m", eight_file, "--x0", "1", "-T", "5000", "--seed", "5",
            "-p", "{1,2,3,4}{5,6,7,8}",
        )
        assert code == 0
        test = data["results"]["quotient_test"]
        assert test["diagnostic"] is True
        assert test["lumpable"] is True
        assert test["dof"] == 2
        assert any("diagnostic" in w for w in data["warnings"])

    def test_too_short_for_test(self, capsys, eight_file):
        code, data, _ = invoke(
            capsys, "simulate", "-m", eight_file, "--x0", "1", "-T", "100", "--seed", "5",
            "-p", "{1,2,3,4}{5,6,7,8}",
        )
        assert code == 1
        assert data["error"]["type"] == "InsufficientData"

    def test_x0_out_of_range(self, capsys, three_file):
        code, data, _ = invoke(capsys, "simulate", "-m", three_file, "--x0", "4", "-T", "10", "--seed", "1")
        assert code == 2


class TestOutputs:
    def test_out_file(self, capsys, three_file, tmp_path):
        target = tmp_path / "reports" / "check.json"
        code, _ = run(["check", "-m", three_file, "-p", "0 0 1", "--out", str(target), "--no-logs"])
        assert code == 0
        assert capsys.readouterr().out == ""
        assert json.loads(target.read_text())["results"]["lumpable"] is True

    def test_table_goes_to_stderr(self, capsys, eight_file):
        code, data, err = invoke(capsys, "oracle", "-m", eight_file, "--table")
        assert code == 0
        assert data["results"]["count"] == 10
        assert "LUMPCHAIN ORACLE" in err
        assert "{1,2,3,4}{5,6,7,8}" in err

    def test_no_table_by_default(self, capsys, eight_file):
        code, _, err = invoke(capsys, "oracle", "-m", eight_file)
        assert code == 0
        assert "LUMPCHAIN" not in err

    def test_json_flag_keeps_table_off(self):
        parser = build_parser()
        assert parser.parse_args(["check", "-m", "x", "-p", "0"]).table is False
        assert parser.parse_args(["check", "-m", "x", "-p", "0", "--json"]).table is False
        assert parser.parse_args(["check", "-m", "x", "-p", "0", "--table"]).table is True

    def test_exhaustive_subset_limit_is_echoed(self, capsys, eight_file):
        code, data, _ = invoke(capsys, "discover", "-m", eight_file, "--exhaustive-subset-limit", "4")
        assert code == 0
        assert data["config"]["exhaustive_subset_limit"] == 4

    def test_logs(self, capsys, three_file, tmp_path):
        logs = tmp_path / "logs"
        code, _ = run(["check", "-m", three_file, "-p", "{1,2}{3}", "--logs-dir", str(logs)])
        assert code == 0
        names = os.listdir(logs)
        assert "runtime.log" in names
        assert "sessions.log" in names
        run_files = [n for n in names if n.startswith("run_") and n.endswith(".json")]
        assert len(run_files) == 1
        record = json.loads((logs / run_files[0]).read_text())
        assert record["exit_code"] == 0
        assert record["report"]["command"] == "check"
        assert "RUN ENDED: check exit=0" in (logs / "sessions.log").read_text()
