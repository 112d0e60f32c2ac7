"""Tests for the matrix and circuit text formats."""

import numpy as np
import pytest

from csdcompiler.circuits import (
    Circuit,
    Gate,
    format_matrix,
    read_circuit,
    read_matrix,
    simulate,
    write_circuit,
    write_matrix,
)
from csdcompiler.errors import CircuitFormatError, MatrixFormatError, NotUnitaryError
from csdcompiler.matcore import haar_random_unitary


class TestMatrixFormat:
    """Test matrix files."""

    def test_roundtrip_is_exact(self, tmp_path, u3):
        path = tmp_path / "u.txt"
        write_matrix(u3, path)
        assert np.array_equal(read_matrix(path), u3)

    def test_header_and_entries(self):
        text = format_matrix(np.eye(2))
        lines = text.splitlines()
        assert lines[0] == "1"
        assert lines[1] == "1,0 0,0"

    def test_bad_row_count(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("1\n1,0 0,0\n")
        with pytest.raises(MatrixFormatError) as excinfo:
            read_matrix(path)
        assert "expected 2 rows" in str(excinfo.value)

    def test_bad_entry_reports_line_and_column(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("1\n1,0 0,0\n0,0 oops\n")
        with pytest.raises(MatrixFormatError) as excinfo:
            read_matrix(path)
        assert excinfo.value.line == 3
        assert excinfo.value.column == 2

    def test_bad_header(self, tmp_path):
        path = tmp_path / "u.txt"
        path.write_text("two\n")
        with pytest.raises(MatrixFormatError):
            read_matrix(path)

    def test_non_unitary_warns_by_default(self, tmp_path, caplog):
        path = tmp_path / "u.txt"
        write_matrix(2.0 * np.eye(2), path)
        u = read_matrix(path)
        assert np.allclose(u, 2.0 * np.eye(2))
        assert "unitarity" in caplog.text

    def test_non_unitary_strict(self, tmp_path):
        path = tmp_path / "u.txt"
        write_matrix(2.0 * np.eye(2), path)
        with pytest.raises(NotUnitaryError):
            read_matrix(path, strict=True)


class TestCircuitFormat:
    """Test circuit files."""

    def test_roundtrip_preserves_unitary(self, tmp_path):
        circuit = Circuit(
            2,
            [
                Gate.rotn((0.0, 1.0, 0.0), 0.123456789, 1),
                Gate.cnot(1, 0),
                Gate.phase(-0.5),
            ],
        )
        path = tmp_path / "c.txt"
        write_circuit(circuit, path)
        loaded = read_circuit(path)
        assert loaded.nb == 2
        assert loaded.gates == circuit.gates
        assert np.allclose(simulate(loaded), simulate(circuit), atol=1e-15)

    def test_written_text(self, tmp_path):
        path = tmp_path / "c.txt"
        write_circuit(Circuit(2, [Gate.cnot(0, 1)]), path)
        assert path.read_text() == "NB 2\nCNOT 0 1\n"

    @pytest.mark.parametrize(
        "text,line",
        [
            ("CNOT 0 1\n", 1),
            ("NB 2\nSWAP 0 1\n", 2),
            ("NB 2\nCNOT 0 2\n", 2),
            ("NB 2\nCNOT 1 1\n", 2),
            ("NB 2\nROTN 1 0 0 0.5\n", 2),
            ("NB 2\nROTN 1 1 0 0.5 0\n", 2),
            ("NB 2\nPHASE\n", 2),
        ],
    )
    def test_malformed(self, tmp_path, text, line):
        path = tmp_path / "c.txt"
        path.write_text(text)
        with pytest.raises(CircuitFormatError) as excinfo:
            read_circuit(path)
        assert excinfo.value.line == line

    def test_random_matrix_text_parses(self, tmp_path):
        u = haar_random_unitary(2, 3)
        path = tmp_path / "u.txt"
        path.write_text(format_matrix(u))
        assert np.array_equal(read_matrix(path), u)
