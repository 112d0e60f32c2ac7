"""Tests for the command-line interface."""

from unittest.mock import patch

import numpy as np
import pytest

from csdcompiler.circuits import (
    Circuit,
    Gate,
    read_circuit,
    read_matrix,
    simulate,
    write_circuit,
    write_matrix,
)
from csdcompiler.cli import create_parser, main
from csdcompiler.errors import ParameterizationError


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for name in ("CSD_TOL", "CSD_MAX_SWEEPS", "CSD_STRICT_UNITARITY", "CSD_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def matrix_file(tmp_path):
    """Random two-qubit matrix written by the rand command."""
    path = tmp_path / "u.txt"
    assert main(["rand", "--nb", "2", "--seed", "3", "--out", str(path)]) == 0
    return path


class TestParser:
    """Test argument parsing."""

    def test_defaults(self):
        args = create_parser().parse_args(["compile", "--in", "a", "--out", "b"])
        assert args.input == "a"
        assert args.output == "b"
        assert args.mode == "nr"
        assert args.tol == 1e-8
        assert args.max_sweeps == 20
        assert args.verify is False

    def test_rejects_unknown_mode(self):
        with pytest.raises(SystemExit):
            create_parser().parse_args(["compile", "--mode", "fast"])

    def test_no_command_prints_help(self, capsys):
        assert main([]) == 1
        assert "usage" in capsys.readouterr().out


class TestRand:
    """Test the rand command."""

    def test_writes_unitary(self, matrix_file):
        u = read_matrix(matrix_file)
        assert u.shape == (4, 4)
        assert np.allclose(u @ u.conj().T, np.eye(4))

    def test_stdout(self, capsys):
        assert main(["rand", "--nb", "1", "--seed", "0"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "1"
        assert len(lines) == 3


class TestCompile:
    """Test the compile command."""

    def test_nr_with_stats_and_verify(self, matrix_file, tmp_path, capsys):
        out = tmp_path / "c.txt"
        code = main(["compile", "--in", str(matrix_file), "--out", str(out), "--verify", "--stats"])
        assert code == 0
        text = capsys.readouterr().out
        assert "cnot_count: 5" in text
        assert "epsilon_nr: 7" in text
        assert "epsilon_r: 3" in text
        assert "epsilon_lower_bound: 3" in text
        assert "expected_cnot_count: 5" in text
        assert "reconstruction_error" in text
        circuit = read_circuit(out)
        assert np.allclose(simulate(circuit), read_matrix(matrix_file), atol=1e-8)

    def test_r_mode(self, matrix_file, tmp_path, capsys):
        out = tmp_path / "c.txt"
        code = main(
            ["compile", "--in", str(matrix_file), "--out", str(out), "--mode", "r",
             "--max-sweeps", "4", "--stats"]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "converged:" in text
        assert read_circuit(out).cnot_count() in (3, 5)

    def test_missing_input_file(self, tmp_path):
        assert main(["compile", "--in", str(tmp_path / "nope"), "--out", str(tmp_path / "c")]) == 2

    def test_missing_flag(self, matrix_file):
        assert main(["compile", "--in", str(matrix_file)]) == 2

    def test_malformed_matrix(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("1\n1,0\n")
        assert main(["compile", "--in", str(bad), "--out", str(tmp_path / "c")]) == 2
        assert "line" in capsys.readouterr().err

    def test_invalid_tolerance(self, matrix_file, tmp_path):
        code = main(["compile", "--in", str(matrix_file), "--out", str(tmp_path / "c"), "--tol", "-1"])
        assert code == 2

    def test_parameterization_failure_exit_code(self, matrix_file, tmp_path):
        with patch("csdcompiler.cli.compile_nr", side_effect=ParameterizationError("stuck", 4)):
            code = main(["compile", "--in", str(matrix_file), "--out", str(tmp_path / "c")])
        assert code == 1

    def test_internal_error_is_not_usage_error(self, matrix_file, tmp_path, capsys):
        with patch("csdcompiler.cli.compile_nr", side_effect=ValueError("boom")):
            code = main(["compile", "--in", str(matrix_file), "--out", str(tmp_path / "c")])
        assert code == 1
        assert "Internal error: boom" in capsys.readouterr().err

    def test_r_mode_expected_count_tracks_convergence(self, matrix_file, tmp_path, capsys):
        out = tmp_path / "c.txt"
        code = main(
            ["compile", "--in", str(matrix_file), "--out", str(out), "--mode", "r",
             "--max-sweeps", "2", "--stats"]
        )
        assert code == 0
        lines = dict(
            line.split(": ", 1) for line in capsys.readouterr().out.splitlines() if ": " in line
        )
        expected = 3 if lines["converged"] == "true" else 5
        assert int(lines["expected_cnot_count"]) == expected
        assert int(lines["cnot_count"]) == expected

    def test_stats_help_names_single_sweep_offset(self, capsys):
        with pytest.raises(SystemExit):
            create_parser().parse_args(["compile", "--help"])
        assert "2^nb - 2" in " ".join(capsys.readouterr().out.split())


class TestVerify:
    """Test the verify command."""

    def test_pass(self, matrix_file, tmp_path, capsys):
        out = tmp_path / "c.txt"
        assert main(["compile", "--in", str(matrix_file), "--out", str(out)]) == 0
        assert main(["verify", "--in", str(matrix_file), "--out", str(out)]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_fail(self, matrix_file, tmp_path, capsys):
        out = tmp_path / "c.txt"
        write_circuit(Circuit(2, [Gate.cnot(0, 1)]), out)
        assert main(["verify", "--in", str(matrix_file), "--out", str(out)]) == 3
        assert "FAIL" in capsys.readouterr().out

    def test_qubit_mismatch(self, matrix_file, tmp_path):
        out = tmp_path / "c.txt"
        write_circuit(Circuit(3), out)
        assert main(["verify", "--in", str(matrix_file), "--out", str(out)]) == 2

    def test_empty_circuit_matches_identity(self, tmp_path, capsys):
        matrix = tmp_path / "eye.txt"
        write_matrix(np.eye(4), matrix)
        circuit = tmp_path / "c.txt"
        write_circuit(Circuit(2), circuit)
        assert main(["verify", "--in", str(matrix), "--out", str(circuit)]) == 0

    def test_perturbed_rotation_fails(self, matrix_file, tmp_path, capsys):
        out = tmp_path / "c.txt"
        assert main(["compile", "--in", str(matrix_file), "--out", str(out)]) == 0
        circuit = read_circuit(out)
        k = next(i for i, g in enumerate(circuit.gates) if g.axis is not None)
        g = circuit.gates[k]
        circuit.gates[k] = Gate.rotn(g.axis, g.angle + 1e-2, g.target)
        write_circuit(circuit, out)
        assert main(["verify", "--in", str(matrix_file), "--out", str(out)]) == 3
        assert "reconstruction_error" in capsys.readouterr().out


class TestRandExtras:
    """Test rand determinism and range checks."""

    def test_same_seed_same_file(self, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert main(["rand", "--nb", "2", "--seed", "1", "--out", str(a)]) == 0
        assert main(["rand", "--nb", "2", "--seed", "1", "--out", str(b)]) == 0
        assert a.read_text() == b.read_text()

    def test_out_of_range(self, tmp_path):
        assert main(["rand", "--nb", "11", "--out", str(tmp_path / "u.txt")]) == 2
