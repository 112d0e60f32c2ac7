"""
Circuit intermediate representation and its exact dense simulator.

A circuit is an ordered list of gates applied left to right in time, so its matrix is
G_k ⋯ G_2·G_1. Qubit 0 is the least significant bit of the basis index.

Gate semantics:
    CNOT(control, target): σx on target when control is 1.
    ROTN(axis, angle, target): exp(i·angle·σ·axis) on target.
    PHASE(angle): global factor exp(i·angle).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np

logger = logging.getLogger(__name__)

MAX_SIM_QUBITS = 10

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (PAULI_X, PAULI_Y, PAULI_Z)


class GateKind(Enum):
    """Elementary operations."""

    CNOT = "CNOT"
    ROTN = "ROTN"
    PHASE = "PHASE"


class CompileMode(Enum):
    """Compilation flavours."""

    NR = "nr"
    R = "r"


def sigma_dot(v: Iterable[float]) -> np.ndarray:
    """σ·v for a real 3-vector."""
    vx, vy, vz = (float(c) for c in v)
    return vx * PAULI_X + vy * PAULI_Y + vz * PAULI_Z


def rotation_matrix(axis: Iterable[float], angle: float) -> np.ndarray:
    """exp(i·angle·σ·axis) for a unit axis."""
    return np.cos(angle) * np.eye(2, dtype=complex) + 1j * np.sin(angle) * sigma_dot(axis)


def rotation_from_su2(v: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Axis and angle of an SU(2) matrix, V = exp(i·angle·σ·axis).

    The angle lies in [0, π]; a (near) scalar matrix gets the z axis.
    """
    a = v[0, 0]
    b = v[0, 1]
    # V = cos θ + i sin θ (n·σ) gives V00 = cos θ + i n_z sin θ, V01 = sin θ (n_y + i n_x).
    vec = np.array([b.imag, b.real, a.imag])
    sin_t = float(np.linalg.norm(vec))
    angle = float(np.arctan2(sin_t, a.real))
    if sin_t < 1e-15:
        return np.array([0.0, 0.0, 1.0]), angle
    return vec / sin_t, angle


def decompose_one_qubit(u: np.ndarray) -> Tuple[float, np.ndarray, float]:
    """Split a 2x2 unitary into (phase, axis, angle) with U = e^{i·phase}·exp(i·angle·σ·axis)."""
    phase = float(np.angle(np.linalg.det(u))) / 2
    axis, angle = rotation_from_su2(u * np.exp(-1j * phase))
    return phase, axis, angle


@dataclass(frozen=True)
class Gate:
    """One elementary operation."""

    kind: GateKind
    target: Optional[int] = None
    control: Optional[int] = None
    axis: Optional[Tuple[float, float, float]] = None
    angle: float = 0.0

    def __post_init__(self):
        if self.kind is GateKind.CNOT:
            if self.control is None or self.target is None:
                raise ValueError("CNOT needs control and target")
            if self.control == self.target:
                raise ValueError(f"CNOT control equals target ({self.control})")
            if self.control < 0 or self.target < 0:
                raise ValueError("qubit indices must be non-negative")
        elif self.kind is GateKind.ROTN:
            if self.target is None or self.axis is None:
                raise ValueError("ROTN needs target and axis")
            if self.target < 0:
                raise ValueError("qubit indices must be non-negative")
            norm = float(np.linalg.norm(self.axis))
            if abs(norm - 1.0) > 1e-12:
                raise ValueError(f"ROTN axis must be a unit vector, norm is {norm!r}")

    @classmethod
    def cnot(cls, control: int, target: int) -> "Gate":
        return cls(GateKind.CNOT, target=int(target), control=int(control))

    @classmethod
    def rotn(cls, axis: Iterable[float], angle: float, target: int) -> "Gate":
        vec = np.asarray(list(axis), dtype=float)
        vec = vec / np.linalg.norm(vec)
        return cls(
            GateKind.ROTN,
            target=int(target),
            axis=(float(vec[0]), float(vec[1]), float(vec[2])),
            angle=float(angle),
        )

    @classmethod
    def from_unitary(cls, u: np.ndarray, target: int) -> Tuple["Gate", float]:
        """ROTN gate for a 2x2 unitary plus the global phase it leaves out."""
        phase, axis, angle = decompose_one_qubit(u)
        return cls.rotn(axis, angle, target), phase

    @classmethod
    def phase(cls, angle: float) -> "Gate":
        return cls(GateKind.PHASE, angle=float(angle))

    def inverse(self) -> "Gate":
        if self.kind is GateKind.CNOT:
            return self
        if self.kind is GateKind.ROTN:
            return Gate(GateKind.ROTN, target=self.target, axis=self.axis, angle=-self.angle)
        return Gate(GateKind.PHASE, angle=-self.angle)

    def qubits(self) -> Tuple[int, ...]:
        if self.kind is GateKind.CNOT:
            return (self.control, self.target)  # type: ignore[return-value]
        if self.kind is GateKind.ROTN:
            return (self.target,)  # type: ignore[return-value]
        return ()

    def local_matrix(self) -> np.ndarray:
        """2x2 matrix of a ROTN gate."""
        if self.kind is not GateKind.ROTN:
            raise ValueError(f"{self.kind.value} has no one-qubit matrix")
        return rotation_matrix(self.axis, self.angle)  # type: ignore[arg-type]


@dataclass
class Circuit:
    """Ordered gate list on ``nb`` qubits."""

    nb: int
    gates: List[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.nb < 1:
            raise ValueError(f"nb must be >= 1, got {self.nb}")
        for gate in self.gates:
            self._check(gate)

    def _check(self, gate: Gate) -> None:
        for q in gate.qubits():
            if q >= self.nb:
                raise ValueError(f"qubit {q} out of range for nb={self.nb}")

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self) -> Iterator[Gate]:
        return iter(self.gates)

    def append(self, gate: Gate) -> None:
        self._check(gate)
        self.gates.append(gate)

    def extend(self, gates: Iterable[Gate]) -> None:
        for gate in gates:
            self.append(gate)

    def inverse(self) -> "Circuit":
        return Circuit(self.nb, [g.inverse() for g in reversed(self.gates)])

    def cnot_count(self) -> int:
        return cnot_count(self)

    def rotation_count(self) -> int:
        return sum(1 for g in self.gates if g.kind is GateKind.ROTN)


def cnot_count(circuit: Circuit) -> int:
    """Exact number of CNOT gates."""
    return sum(1 for g in circuit.gates if g.kind is GateKind.CNOT)


def _apply_one_qubit(m: np.ndarray, g: np.ndarray, target: int, nb: int) -> np.ndarray:
    dim = m.shape[0]
    axis = nb - 1 - target
    t = m.reshape([2] * nb + [dim])
    t = np.tensordot(g, t, axes=([1], [axis]))
    return np.moveaxis(t, 0, axis).reshape(dim, dim)


def _cnot_permutation(control: int, target: int, nb: int) -> np.ndarray:
    idx = np.arange(2**nb)
    return np.where((idx >> control) & 1, idx ^ (1 << target), idx)


def apply_gate(m: np.ndarray, gate: Gate, nb: int) -> np.ndarray:
    """Left-multiply ``m`` by the full-register matrix of ``gate``."""
    if gate.kind is GateKind.CNOT:
        return m[_cnot_permutation(gate.control, gate.target, nb)]  # type: ignore[arg-type]
    if gate.kind is GateKind.ROTN:
        return _apply_one_qubit(m, gate.local_matrix(), gate.target, nb)  # type: ignore[arg-type]
    return m * np.exp(1j * gate.angle)


def gate_matrix(gate: Gate, nb: int) -> np.ndarray:
    """Full 2^nb matrix of a single gate."""
    return apply_gate(np.eye(2**nb, dtype=complex), gate, nb)


def simulate(circuit: Circuit) -> np.ndarray:
    """
    Dense unitary of a circuit.

    Raises:
        ValueError: If the circuit has more than 10 qubits.
    """
    if circuit.nb > MAX_SIM_QUBITS:
        raise ValueError(f"simulation limited to {MAX_SIM_QUBITS} qubits, got {circuit.nb}")
    m = np.eye(2**circuit.nb, dtype=complex)
    for gate in circuit.gates:
        m = apply_gate(m, gate, circuit.nb)
    return m


def reconstruction_error(circuit: Circuit, target: np.ndarray) -> float:
    """Frobenius distance between the simulated circuit and ``target``."""
    return float(np.linalg.norm(simulate(circuit) - np.asarray(target)))


@dataclass
class CompileStats:
    """Gate tallies and verification error of one compilation."""

    cnot_count: int
    rotation_count: int
    reconstruction_error: float
    mode: CompileMode
    nb: int = 0

    @classmethod
    def from_circuit(
        cls, circuit: Circuit, target: np.ndarray, mode: CompileMode
    ) -> "CompileStats":
        return cls(
            cnot_count=circuit.cnot_count(),
            rotation_count=circuit.rotation_count(),
            reconstruction_error=reconstruction_error(circuit, target),
            mode=mode,
            nb=circuit.nb,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "cnot_count": self.cnot_count,
            "rotation_count": self.rotation_count,
            "reconstruction_error": self.reconstruction_error,
            "mode": self.mode.value,
            "nb": self.nb,
        }
