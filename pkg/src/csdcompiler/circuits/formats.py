"""
Text formats for matrices and circuits.

Matrix file::

    <nb>
    <re,im> <re,im> ...      # 2^nb rows of 2^nb entries

Circuit file::

    NB <nb>
    PHASE <angle>
    ROTN <nx> <ny> <nz> <angle> <target>
    CNOT <control> <target>

Angles are radians. Floats are written with 17 significant digits so a write/read
roundtrip is exact. Example on two qubits: ``CNOT 0 1`` maps basis index 1 (binary 01,
qubit 0 set) to index 3 and leaves indices 0 and 2 fixed.
"""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np

from ..errors import CircuitFormatError, MatrixFormatError, NotUnitaryError
from ..matcore import MAX_QUBITS, unitarity_residual
from .model import Circuit, Gate, GateKind

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

UNITARITY_TOL = 1e-8


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def format_matrix(u: np.ndarray) -> str:
    """Matrix text format of a 2^nb square matrix."""
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    nb = dim.bit_length() - 1
    if u.shape != (dim, dim) or dim != 2**nb or nb < 1:
        raise ValueError(f"matrix shape {u.shape} is not 2^nb square")
    lines = [str(nb)]
    for row in u:
        lines.append(" ".join(f"{_fmt(z.real)},{_fmt(z.imag)}" for z in row))
    return "\n".join(lines) + "\n"


def write_matrix(u: np.ndarray, path: PathLike) -> None:
    """Write a 2^nb square matrix in the matrix text format."""
    Path(path).write_text(format_matrix(u), encoding="utf-8")


def _parse_complex(token: str, line: int, column: int) -> complex:
    parts = token.split(",")
    if len(parts) != 2:
        raise MatrixFormatError(f"expected 're,im', got {token!r}", line, column)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise MatrixFormatError(f"invalid number in {token!r}", line, column)


def read_matrix(path: PathLike, strict: bool = False) -> np.ndarray:
    """
    Read a matrix file.

    Args:
        path: File to read.
        strict: Turn the unitarity warning into a NotUnitaryError.

    Returns:
        Complex 2^nb x 2^nb array.

    Raises:
        MatrixFormatError: On malformed content, with line/column diagnostics.
        NotUnitaryError: If strict and ||U·U† − I||_F > 1e-8.
    """
    rows = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise MatrixFormatError("empty file", 1)
    try:
        nb = int(rows[0].strip())
    except ValueError:
        raise MatrixFormatError(f"header must be an integer nb, got {rows[0]!r}", 1)
    if not 1 <= nb <= MAX_QUBITS:
        raise MatrixFormatError(f"nb must be in [1, {MAX_QUBITS}], got {nb}", 1)
    dim = 2**nb
    body = rows[1:]
    if len(body) != dim:
        raise MatrixFormatError(
            f"expected {dim} rows for nb={nb}, found {len(body)}", len(rows)
        )
    u = np.empty((dim, dim), dtype=complex)
    for i, text in enumerate(body):
        line_no = i + 2
        tokens = text.split()
        if len(tokens) != dim:
            raise MatrixFormatError(
                f"expected {dim} entries, found {len(tokens)}", line_no
            )
        for j, token in enumerate(tokens):
            u[i, j] = _parse_complex(token, line_no, j + 1)

    residual = unitarity_residual(u)
    if residual > UNITARITY_TOL:
        if strict:
            raise NotUnitaryError(residual, UNITARITY_TOL, what=str(path))
        logger.warning(f"{path}: matrix deviates from unitarity by {residual:.3e}")
    return u


def write_circuit(circuit: Circuit, path: PathLike) -> None:
    """Write a circuit in the line-based gate format."""
    lines = [f"NB {circuit.nb}"]
    for gate in circuit.gates:
        if gate.kind is GateKind.CNOT:
            lines.append(f"CNOT {gate.control} {gate.target}")
        elif gate.kind is GateKind.ROTN:
            nx, ny, nz = gate.axis  # type: ignore[misc]
            lines.append(
                f"ROTN {_fmt(nx)} {_fmt(ny)} {_fmt(nz)} {_fmt(gate.angle)} {gate.target}"
            )
        else:
            lines.append(f"PHASE {_fmt(gate.angle)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ints(tokens: List[str], line: int) -> List[int]:
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise CircuitFormatError(f"expected integer qubit indices, got {tokens}", line)


def _floats(tokens: List[str], line: int) -> List[float]:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise CircuitFormatError(f"expected numbers, got {tokens}", line)


def read_circuit(path: PathLike) -> Circuit:
    """
    Read a circuit file.

    Raises:
        CircuitFormatError: On a missing header, unknown opcode, bad arity, qubit index
            out of range or CNOT with control equal to target.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    numbered = [(i + 1, ln.split()) for i, ln in enumerate(lines) if ln.strip()]
    if not numbered or numbered[0][1][0] != "NB" or len(numbered[0][1]) != 2:
        raise CircuitFormatError("missing 'NB <nb>' header", 1)
    header_line, header = numbered[0]
    nb = _ints(header[1:], header_line)[0]
    if not 1 <= nb <= MAX_QUBITS:
        raise CircuitFormatError(f"nb must be in [1, {MAX_QUBITS}], got {nb}", header_line)

    circuit = Circuit(nb)
    for line_no, tokens in numbered[1:]:
        op, args = tokens[0], tokens[1:]
        if op == "CNOT":
            if len(args) != 2:
                raise CircuitFormatError("CNOT takes <control> <target>", line_no)
            control, target = _ints(args, line_no)
            bad = [q for q in (control, target) if not 0 <= q < nb]
            if bad:
                raise CircuitFormatError(f"qubit {bad[0]} out of range for NB {nb}", line_no)
            if control == target:
                raise CircuitFormatError(f"CNOT control equals target ({control})", line_no)
            gate = Gate.cnot(control, target)
        elif op == "ROTN":
            if len(args) != 5:
                raise CircuitFormatError("ROTN takes <nx> <ny> <nz> <angle> <target>", line_no)
            nx, ny, nz, angle = _floats(args[:4], line_no)
            target = _ints(args[4:], line_no)[0]
            if not 0 <= target < nb:
                raise CircuitFormatError(f"qubit {target} out of range for NB {nb}", line_no)
            if abs(np.linalg.norm([nx, ny, nz]) - 1.0) > 1e-12:
                raise CircuitFormatError("ROTN axis is not a unit vector", line_no)
            gate = Gate.rotn((nx, ny, nz), angle, target)
        elif op == "PHASE":
            if len(args) != 1:
                raise CircuitFormatError("PHASE takes <angle>", line_no)
            gate = Gate.phase(_floats(args, line_no)[0])
        else:
            raise CircuitFormatError(f"unknown opcode {op!r}", line_no, 1)
        circuit.append(gate)
    return circuit
