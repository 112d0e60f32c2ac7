"""
End-to-end compilation.

A unitary is normalized to unit determinant, broken by recursive CSD into 2^nb − 1
single-target multiplexors and swept: each multiplexor takes the diagonal left over by
its predecessor, is split against a triad into a diagonal and a convenient part, and the
convenient part is realized with 2^{nb−1} − 1 CNOTs. The NR mode sweeps once with the ê_z
triad and expands the final diagonal; the R mode alternates DOL and DOR sweeps with
optimized axes until the final diagonal is local, i.e. costs no CNOTs.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .axisopt import U2Subset, optimum_axis, triad_from_k
from .circuits.model import Circuit, CompileMode, CompileStats, Gate, rotation_matrix
from .config import CompileConfig
from .errors import NotUnitaryError, ParameterizationError
from .matcore import csd, normalize_det, num_qubits, unitarity_residual
from .muxseo import (
    ConvenientMultiplexor,
    DiagonalUnitary,
    Multiplexor,
    assemble_operator,
    expand_convenient,
    expand_d_multiplexor,
    local_diagonal,
    local_diagonal_gates,
    multiply_by_diagonal,
    realize_multiplexor,
    split_convenient,
)
from .su2param import Side, Triad, factorize

logger = logging.getLogger(__name__)

E_X = np.array([1.0, 0.0, 0.0])
E_Y = np.array([0.0, 1.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])
FLAG_TIE_TOL = 1e-9
# Relative change between same-direction sweeps below which relaxation has stalled.
STALL_TOL = 1e-7


class Direction(Enum):
    """Sweep direction. Right-to-left sweeps use DOL splits, left-to-right DOR."""

    RIGHT_TO_LEFT = "right-to-left"
    LEFT_TO_RIGHT = "left-to-right"

    @property
    def side(self) -> Side:
        return Side.DOL if self is Direction.RIGHT_TO_LEFT else Side.DOR


class AxisMode(Enum):
    FIXED_Z = "fixed-z"
    OPTIMIZED = "optimized"


def epsilon_nr(nb: int) -> int:
    """CNOT count of the single-sweep row of the count table."""
    return (2**nb - 1) * (2 ** (nb - 1) - 1) + 2**nb


def epsilon_r(nb: int) -> int:
    """CNOT count of the relaxed row of the count table."""
    return (2**nb - 1) * (2 ** (nb - 1) - 1)


def epsilon_lower_bound(nb: int) -> int:
    """ceil((4^nb − 3nb − 1)/4)."""
    return -(-(4**nb - 3 * nb - 1) // 4)


def expected_cnot_count(nb: int, converged: bool) -> int:
    """CNOTs this compiler emits: the relaxed count plus 2^nb − 2 for an expanded diagonal."""
    return epsilon_r(nb) + (0 if converged else 2**nb - 2)


@dataclass
class MuxSequence:
    """
    2^nb − 1 multiplexors, ``muxes[0]`` applied first. Every multiplexor spans the
    register (target plus controls cover all qubits) so diagonals can move along it.
    """

    nb: int
    muxes: List[Multiplexor]

    def __post_init__(self):
        if len(self.muxes) != 2**self.nb - 1:
            raise ValueError(f"expected {2**self.nb - 1} multiplexors, got {len(self.muxes)}")
        for j, mux in enumerate(self.muxes):
            if mux.nb != self.nb:
                raise ValueError(f"multiplexor {j} has nb={mux.nb}, expected {self.nb}")
            if mux.nk != self.nb - 1:
                raise ValueError(f"multiplexor {j} does not span the register")

    def __len__(self) -> int:
        return len(self.muxes)

    def product(self) -> np.ndarray:
        """Υ_{M−1}⋯Υ_1·Υ_0."""
        out = np.eye(2**self.nb, dtype=complex)
        for mux in self.muxes:
            out = assemble_operator(mux) @ out
        return out


@dataclass
class SweepResult:
    """
    One sweep. ``realized[j]`` is the exact operator of ``circuits[j]`` and
    seq = residual_delta·realized (right-to-left) or realized·residual_delta.
    """

    direction: Direction
    convs: List[ConvenientMultiplexor]
    residual_delta: DiagonalUnitary
    circuits: List[Circuit]
    realized: MuxSequence
    axes: List[Tuple[float, float]]
    cost: float


@dataclass
class RelaxationReport:
    """
    Progress of the sweep loop.

    cost_history holds the residual after each sweep; final_residual is that of the
    sweep the circuit is emitted from, the lowest one. stalled marks a loop stopped by
    a repeating residual cycle.
    """

    sweeps_run: int
    cost_history: List[float] = field(default_factory=list)
    converged: bool = False
    final_residual: float = 0.0
    tol: float = 1e-8
    stalled: bool = False

    def __post_init__(self):
        if len(self.cost_history) != self.sweeps_run:
            raise ValueError("cost_history must have one entry per sweep")
        if self.converged and self.final_residual > self.tol:
            raise ValueError("a converged report needs final_residual <= tol")

    @property
    def monotone(self) -> bool:
        return all(b <= a + 1e-12 for a, b in zip(self.cost_history, self.cost_history[1:]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sweeps_run": self.sweeps_run,
            "cost_history": list(self.cost_history),
            "converged": self.converged,
            "final_residual": self.final_residual,
            "tol": self.tol,
            "stalled": self.stalled,
        }


def _decompose(blocks: List[np.ndarray], m: int, nb: int, tol: float) -> List[Multiplexor]:
    # ``blocks`` is the block diagonal over the qubits m..nb−1 acting on qubits 0..m−1.
    if m == 1:
        return [Multiplexor(0, list(range(1, nb)), blocks, nb)]
    half = 2 ** (m - 1)
    lefts: List[np.ndarray] = []
    rights: List[np.ndarray] = []
    thetas = []
    for block in blocks:
        factors = csd(block, tol)
        lefts += [factors.l0, factors.l1]
        rights += [factors.r0, factors.r1]
        thetas.append(factors.thetas)
    controls = list(range(m - 1)) + list(range(m, nb))
    members = [
        rotation_matrix(E_Y, thetas[b >> (m - 1)][b & (half - 1)]) for b in range(2 ** (nb - 1))
    ]
    d_mux = Multiplexor(m - 1, controls, members, nb)
    return _decompose(rights, m - 1, nb, tol) + [d_mux] + _decompose(lefts, m - 1, nb, tol)


def csd_tree(u: np.ndarray, tol: float = 1e-8) -> MuxSequence:
    """
    Recursive CSD of a unit-determinant unitary into 2^nb − 1 multiplexors.

    Each level splits on its most significant qubit: the CSD middle factor becomes an
    Ry multiplexor targeting that qubit, and the leaves become general multiplexors
    targeting qubit 0.

    Raises:
        ValueError: If det(U) is not 1.
        NotUnitaryError: Propagated from the CSD.
    """
    u = np.asarray(u, dtype=complex)
    nb = num_qubits(u.shape[0])
    det = complex(np.linalg.det(u))
    if abs(det - 1.0) > 1e-6:
        raise ValueError(f"csd_tree needs det(U) = 1, got {det:.6g}; call normalize_det first")
    seq = MuxSequence(nb, _decompose([u], nb, nb, tol))
    logger.debug(f"csd_tree nb={nb}: {len(seq)} multiplexors")
    return seq


def _choose_flags(mux: Multiplexor, triad: Triad, side: Side) -> List[int]:
    flags = []
    for u in mux.members:
        costs = []
        for f in (0, 1):
            try:
                costs.append(1.0 - np.cos(factorize(u, triad, f, side).gamma))
            except ParameterizationError:
                costs.append(np.inf)
        flags.append(1 if costs[1] < costs[0] - FLAG_TIE_TOL else 0)
    return flags


def _choose_triad(
    mux: Multiplexor,
    side: Side,
    axis_mode: AxisMode,
    init: Tuple[float, float],
    max_iter: int,
    index: int,
) -> Tuple[Triad, Tuple[float, float]]:
    if axis_mode is AxisMode.FIXED_Z:
        return Triad.standard(), (0.0, 0.0)
    start = triad_from_k(*init)
    subset = U2Subset(list(mux.members), _choose_flags(mux, start, side))
    try:
        solution = optimum_axis(subset, init, side, max_iter)
    except ParameterizationError as exc:
        logger.warning(f"multiplexor {index}: axis optimization failed ({exc}), keeping k={init}")
        return start, init
    logger.debug(f"multiplexor {index}: axis solution {solution.to_dict()}")
    return solution.triad, (solution.kx, solution.ky)


def _absorbed_family(conv: ConvenientMultiplexor) -> bool:
    # Collinear Φ_b with f(b) = b_μ expand exactly, leaving no diagonal behind.
    if conv.nk == 0 or conv.absorbed_control() is None:
        return False
    try:
        conv.strong_direction()
    except ValueError:
        return False
    return True


def sweep(
    seq: MuxSequence,
    direction: Direction = Direction.RIGHT_TO_LEFT,
    axis_mode: AxisMode = AxisMode.FIXED_Z,
    incoming: Optional[DiagonalUnitary] = None,
    axes: Optional[Sequence[Tuple[float, float]]] = None,
    axis_max_iter: int = 100,
) -> SweepResult:
    """
    Turn every multiplexor into a realized convenient multiplexor, pushing diagonals.

    ``incoming`` is a diagonal applied before the sequence (right-to-left) or after it
    (left-to-right); ``axes`` warm-starts the optimizer per multiplexor.

    Raises:
        ParameterizationError: Naming the multiplexor index, after all fallbacks.
    """
    side = direction.side
    merge_side = Side.DOR if side is Side.DOL else Side.DOL
    m = len(seq)
    order = range(m) if side is Side.DOL else range(m - 1, -1, -1)
    carry = incoming if incoming is not None else DiagonalUnitary.identity(seq.nb)
    new_axes = list(axes) if axes is not None else [(0.0, 0.0)] * m
    convs: List[Optional[ConvenientMultiplexor]] = [None] * m
    circuits: List[Optional[Circuit]] = [None] * m
    realized: List[Optional[Multiplexor]] = [None] * m

    for j in order:
        try:
            mux = multiply_by_diagonal(seq.muxes[j], carry, merge_side)
            triad, new_axes[j] = _choose_triad(
                mux, side, axis_mode, new_axes[j], axis_max_iter, j
            )
            flags = _choose_flags(mux, triad, side)
            delta_split, conv = split_convenient(mux, triad, side, flags)
            if _absorbed_family(conv):
                circuit = expand_convenient(conv)
                delta_real = DiagonalUnitary.identity(seq.nb)
            else:
                delta_real, circuit = realize_multiplexor(conv.as_multiplexor(), side)
        except ParameterizationError as exc:
            raise ParameterizationError(str(exc), index=j) from exc
        carry = delta_split.compose(delta_real)
        convs[j] = conv
        circuits[j] = circuit
        realized[j] = multiply_by_diagonal(conv.as_multiplexor(), delta_real.inverse(), side)
        logger.debug(
            f"multiplexor {j} ({side.value}): axis k={np.round(new_axes[j], 6).tolist()}, "
            f"flags={flags}, {circuit.cnot_count()} CNOTs"
        )

    cost = local_diagonal(carry).residual
    return SweepResult(
        direction=direction,
        convs=convs,  # type: ignore[arg-type]
        residual_delta=carry,
        circuits=circuits,  # type: ignore[arg-type]
        realized=MuxSequence(seq.nb, realized),  # type: ignore[arg-type]
        axes=new_axes,
        cost=cost,
    )


def relax(
    seq: MuxSequence, config: Optional[CompileConfig] = None
) -> Tuple[SweepResult, RelaxationReport]:
    """
    Alternate right-to-left and left-to-right sweeps until the leftover diagonal is
    within ``config.tol`` of a local one or ``config.max_sweeps`` sweeps have run.

    The residual recorded after each sweep is the Frobenius distance between the
    leftover diagonal and the nearest local diagonal (a global phase times one-qubit
    z-phases, see ``local_diagonal``); a local diagonal costs no CNOTs. The loop also
    stops when two sweeps in the same direction leave the same residual, since every
    later sweep repeats that cycle. Every sweep represents the whole input, so the one
    with the lowest residual is returned.
    """
    config = config or CompileConfig(mode="r")
    axis_mode = AxisMode.OPTIMIZED if config.optimize_axes else AxisMode.FIXED_Z
    current = seq
    carry: Optional[DiagonalUnitary] = None
    axes: Optional[List[Tuple[float, float]]] = None
    history: List[float] = []
    best: Optional[SweepResult] = None
    stalled = False
    for s in range(config.max_sweeps):
        direction = Direction.RIGHT_TO_LEFT if s % 2 == 0 else Direction.LEFT_TO_RIGHT
        result = sweep(current, direction, axis_mode, carry, axes, config.axis_max_iter)
        history.append(result.cost)
        logger.info(f"sweep {s + 1} ({direction.value}): residual {result.cost:.3e}")
        if best is None or result.cost < best.cost:
            best = result
        if result.cost <= config.tol:
            break
        if s >= 2 and abs(history[-1] - history[-3]) <= STALL_TOL * max(history[-3], config.tol):
            stalled = True
            logger.info(f"relaxation stalled after {s + 1} sweeps at residual {best.cost:.3e}")
            break
        current, carry, axes = result.realized, result.residual_delta, result.axes

    assert best is not None
    report = RelaxationReport(
        sweeps_run=len(history),
        cost_history=history,
        converged=best.cost <= config.tol,
        final_residual=best.cost,
        tol=config.tol,
        stalled=stalled,
    )
    if not report.monotone and not stalled:
        logger.warning(f"relaxation residual increased: {history}")
    if not report.converged:
        logger.warning(
            f"relaxation did not converge in {report.sweeps_run} sweeps "
            f"(residual {report.final_residual:.3e} > {config.tol:.1e})"
        )
    return best, report


def diagonal_to_seo(delta: DiagonalUnitary, prune: bool = True) -> Circuit:
    """
    Expand a diagonal unitary as a cascade of multiplexed z-rotations.

    Stage q (from nb − 1 down to 1) targets qubit q with controls 0..q−1 and costs 2^q
    CNOTs; qubit 0 takes a single z-rotation and the rest is a global phase, for
    2^nb − 2 CNOTs in total. With ``prune`` stages whose angles all vanish are skipped.
    """
    nb = delta.nb
    phases = delta.phases.copy()
    circuit = Circuit(nb)
    triad = Triad(E_Y, E_Z, E_X)
    for q in range(nb - 1, 0, -1):
        half = 2**q
        lo, hi = phases[:half], phases[half : 2 * half]
        angles = (lo - hi) / 2
        phases = (lo + hi) / 2
        if prune and np.max(np.abs(angles)) <= 1e-15:
            continue
        stage = ConvenientMultiplexor(
            q, list(range(q)), nb, triad, np.column_stack([np.zeros(half), angles])
        )
        circuit.extend(expand_d_multiplexor(stage).gates)
    angle = float(phases[0] - phases[1]) / 2
    glob = float(phases[0] + phases[1]) / 2
    if not prune or abs(angle) > 1e-15:
        circuit.append(Gate.rotn(E_Z, angle, 0))
    if not prune or abs(glob) > 1e-15:
        circuit.append(Gate.phase(glob))
    return circuit


def compile_sequence(
    seq: MuxSequence, phase: float = 0.0, config: Optional[CompileConfig] = None
) -> Tuple[Circuit, RelaxationReport]:
    """
    Emit the circuit of e^{i·phase}·(product of ``seq``).

    NR: one right-to-left sweep with the ê_z triad, final diagonal expanded. R: the
    relaxation loop; a converged run emits the diagonal's local fit (no CNOTs), any
    other run expands the exact diagonal.
    """
    config = config or CompileConfig()
    if config.mode == "nr":
        result = sweep(seq, Direction.RIGHT_TO_LEFT, AxisMode.FIXED_Z)
        report = RelaxationReport(1, [result.cost], False, result.cost, config.tol)
        tail = diagonal_to_seo(result.residual_delta, prune=False).gates
    else:
        result, report = relax(seq, config)
        if report.converged:
            tail = local_diagonal_gates(local_diagonal(result.residual_delta))
        else:
            tail = diagonal_to_seo(result.residual_delta, prune=False).gates

    body = [gate for circuit in result.circuits for gate in circuit.gates]
    circuit = Circuit(seq.nb)
    if result.direction is Direction.RIGHT_TO_LEFT:
        circuit.extend(body)
        circuit.extend(tail)
    else:
        circuit.extend(tail)
        circuit.extend(body)
    circuit.append(Gate.phase(phase))
    return circuit, report


def _prepare(u: np.ndarray, tol: float) -> Tuple[MuxSequence, float]:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    residual = unitarity_residual(u)
    if residual > tol * u.shape[0]:
        raise NotUnitaryError(residual, tol * u.shape[0], what="input")
    u_norm, phase = normalize_det(u)
    return csd_tree(u_norm, tol), phase


def compile_nr(
    u: np.ndarray, config: Optional[CompileConfig] = None
) -> Tuple[Circuit, CompileStats]:
    """
    Single-sweep compilation, (2^nb−1)(2^{nb−1}−1) + 2^nb − 2 CNOTs for every input.

    Raises:
        NotUnitaryError: If U is not unitary within 1e-8 per dimension.
    """
    config = (config or CompileConfig()).model_copy(update={"mode": "nr"})
    seq, phase = _prepare(u, 1e-8)
    circuit, _ = compile_sequence(seq, phase, config)
    stats = CompileStats.from_circuit(circuit, u, CompileMode.NR)
    logger.info(
        f"compile_nr nb={seq.nb}: {stats.cnot_count} CNOTs, "
        f"error {stats.reconstruction_error:.2e}"
    )
    return circuit, stats


def compile_r(
    u: np.ndarray,
    tol: Optional[float] = None,
    max_sweeps: Optional[int] = None,
    config: Optional[CompileConfig] = None,
) -> Tuple[Circuit, RelaxationReport, CompileStats]:
    """
    Relaxation compilation. Converged runs emit (2^nb−1)(2^{nb−1}−1) CNOTs; the others
    fall back to expanding the leftover diagonal and report converged = False.
    """
    update: Dict[str, Any] = {"mode": "r"}
    if tol is not None:
        update["tol"] = tol
    if max_sweeps is not None:
        update["max_sweeps"] = max_sweeps
    config = CompileConfig(**{**(config or CompileConfig()).model_dump(), **update})
    seq, phase = _prepare(u, 1e-8)
    circuit, report = compile_sequence(seq, phase, config)
    stats = CompileStats.from_circuit(circuit, u, CompileMode.R)
    logger.info(
        f"compile_r nb={seq.nb}: {stats.cnot_count} CNOTs, converged={report.converged} "
        f"after {report.sweeps_run} sweeps"
    )
    return circuit, report, stats
