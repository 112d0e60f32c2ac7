"""
U(2)-multiplexors and their expansion into CNOTs and one-qubit rotations.

A multiplexor with target t and ascending controls c_0 < c_1 < ... applies member U_b to
the target when the controls read b = Σ_k bit(c_k)·2^k. Everything here is exact; the
brute-force ``assemble_operator`` is the oracle every expansion is checked against.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import hadamard

from .axisopt import U2Subset
from .circuits.model import (
    Circuit,
    Gate,
    rotation_from_su2,
    rotation_matrix,
)
from .errors import ParameterizationError
from .su2param import Side, Triad, factorize, flip_factor, rotation_taking

logger = logging.getLogger(__name__)

ANTIDIAGONAL_TOL = 1e-11
COLLINEAR_TOL = 1e-10

# iH with H the Hadamard gate; special unitary, H = −i·(iH).
I_HADAMARD = 1j * np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
E_X = np.array([1.0, 0.0, 0.0])
E_Z = np.array([0.0, 0.0, 1.0])


def _member_and_target_bits(
    target: int, controls: Sequence[int], nb: int
) -> Tuple[np.ndarray, np.ndarray]:
    idx = np.arange(2**nb)
    b = np.zeros_like(idx)
    for k, c in enumerate(controls):
        b |= ((idx >> c) & 1) << k
    return b, (idx >> target) & 1


@dataclass
class Multiplexor:
    """Single-target U(2)-multiplexor."""

    target: int
    controls: List[int]
    members: List[np.ndarray]
    nb: int

    def __post_init__(self):
        self.controls = [int(c) for c in self.controls]
        self.members = [np.asarray(m, dtype=complex) for m in self.members]
        qubits = [self.target] + self.controls
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"target {self.target} and controls {self.controls} overlap")
        if any(q < 0 or q >= self.nb for q in qubits):
            raise ValueError(f"qubits {qubits} out of range for nb={self.nb}")
        if self.controls != sorted(self.controls):
            raise ValueError("controls must be ascending")
        if len(self.members) != 2**self.nk:
            raise ValueError(f"expected {2**self.nk} members, got {len(self.members)}")
        if any(m.shape != (2, 2) for m in self.members):
            raise ValueError("members must be 2x2")

    @property
    def nk(self) -> int:
        return len(self.controls)

    @classmethod
    def identity(cls, target: int, controls: Sequence[int], nb: int) -> "Multiplexor":
        return cls(target, list(controls), [np.eye(2, dtype=complex)] * 2 ** len(controls), nb)

    def subset(self, flags: Optional[List[int]] = None) -> U2Subset:
        return U2Subset(list(self.members), list(flags or []))

    def with_members(self, members: Sequence[np.ndarray]) -> "Multiplexor":
        return Multiplexor(self.target, list(self.controls), list(members), self.nb)

    def basis_indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """Member index b and target bit of every basis state."""
        return _member_and_target_bits(self.target, self.controls, self.nb)


@dataclass
class DiagonalUnitary:
    """diag(e^{i·phases}) on nb qubits."""

    nb: int
    phases: np.ndarray

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        if self.phases.shape != (2**self.nb,):
            raise ValueError(f"expected {2**self.nb} phases, got shape {self.phases.shape}")

    @classmethod
    def identity(cls, nb: int) -> "DiagonalUnitary":
        return cls(nb, np.zeros(2**nb))

    def entries(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    def matrix(self) -> np.ndarray:
        return np.diag(self.entries())

    def inverse(self) -> "DiagonalUnitary":
        return DiagonalUnitary(self.nb, -self.phases)

    def compose(self, other: "DiagonalUnitary") -> "DiagonalUnitary":
        """Product of two diagonals (they commute)."""
        if other.nb != self.nb:
            raise ValueError(f"dimension mismatch: nb={self.nb} vs nb={other.nb}")
        return DiagonalUnitary(self.nb, self.phases + other.phases)


def _strong_rotation(triad: Triad, phi1: float, phi2: float) -> np.ndarray:
    vec = phi1 * triad.s1 + phi2 * triad.s2
    angle = float(np.linalg.norm(vec))
    if angle == 0.0:
        return np.eye(2, dtype=complex)
    return rotation_matrix(vec / angle, angle)


@dataclass
class ConvenientMultiplexor:
    """
    Multiplexor whose members are e^{iΦ_b}·(iσw)^{f(b)} with Φ_b = φ_b1·σ_s1 + φ_b2·σ_s2.

    ``phis`` has shape (2^nk, 2).
    """

    target: int
    controls: List[int]
    nb: int
    triad: Triad
    phis: np.ndarray
    flags: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.controls = [int(c) for c in self.controls]
        self.phis = np.asarray(self.phis, dtype=float)
        n = 2 ** len(self.controls)
        if self.phis.shape != (n, 2):
            raise ValueError(f"phis must have shape ({n}, 2), got {self.phis.shape}")
        if not self.flags:
            self.flags = [0] * n
        if len(self.flags) != n or any(f not in (0, 1) for f in self.flags):
            raise ValueError(f"expected {n} flags in {{0, 1}}")

    @property
    def nk(self) -> int:
        return len(self.controls)

    def members(self) -> List[np.ndarray]:
        return [
            _strong_rotation(self.triad, p1, p2) @ flip_factor(self.triad, f)
            for (p1, p2), f in zip(self.phis, self.flags)
        ]

    def as_multiplexor(self) -> Multiplexor:
        return Multiplexor(self.target, list(self.controls), self.members(), self.nb)

    def strong_direction(self) -> np.ndarray:
        """
        Common unit direction (c1, c2) of all Φ_b in the strong plane.

        Raises:
            ValueError: If the Φ_b are not collinear.
        """
        norms = np.linalg.norm(self.phis, axis=1)
        k = int(np.argmax(norms))
        if norms[k] < 1e-15:
            return np.array([1.0, 0.0])
        d = self.phis[k] / norms[k]
        cross = self.phis[:, 0] * d[1] - self.phis[:, 1] * d[0]
        if np.max(np.abs(cross)) > COLLINEAR_TOL:
            raise ValueError("members do not share a single strong direction")
        return d

    def absorbed_control(self) -> Optional[int]:
        """Position k in ``controls`` with f(b) = bit k of b, if any."""
        n = len(self.flags)
        for k in range(self.nk):
            if all(self.flags[b] == (b >> k) & 1 for b in range(n)):
                return k
        return None


def assemble_operator(mux: Multiplexor) -> np.ndarray:
    """Dense 2^nb matrix Σ_b P_b(controls) ⊗ U_b(target)."""
    dim = 2**mux.nb
    idx = np.arange(dim)
    b, t = mux.basis_indices()
    stack = np.stack(mux.members)
    op = np.zeros((dim, dim), dtype=complex)
    base = idx & ~(1 << mux.target)
    for out_bit in (0, 1):
        op[base | (out_bit << mux.target), idx] = stack[b, out_bit, t]
    return op


def hadamard_transform_angles(phi: Sequence[float]) -> np.ndarray:
    """
    θ = H·φ/N with H the ±1 Sylvester-Hadamard matrix of size N, so that
    φ_b = Σ_g (−1)^{popcount(b & g)}·θ_g.

    Raises:
        ValueError: If the length is not a power of two.
    """
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    if n == 0 or n & (n - 1):
        raise ValueError(f"length must be a power of two, got {n}")
    return hadamard(n) @ phi / n


def gray_order(nk: int) -> Tuple[List[int], List[int]]:
    """
    Reflected Gray sequence over nk bits and the bit flipped after each entry
    (the last flip closes the cycle back to 0).
    """
    if nk < 1:
        raise ValueError(f"nk must be >= 1, got {nk}")
    n = 2**nk
    order = [i ^ (i >> 1) for i in range(n)]
    flips = [(order[i] ^ order[(i + 1) % n]).bit_length() - 1 for i in range(n)]
    return order, flips


def _closing_gray(nk: int, k: int) -> Tuple[List[int], List[int]]:
    # Gray cycle starting at 2^k and ending at 0; flips[i] sits between entries i and i+1.
    order, _ = gray_order(nk)

    def swap(g: int) -> int:
        hi, lo = (g >> (nk - 1)) & 1, (g >> k) & 1
        g &= ~((1 << (nk - 1)) | (1 << k))
        return g | (hi << k) | (lo << (nk - 1))

    seq = [swap(g) for g in reversed(order)]
    flips = [(seq[i] ^ seq[i + 1]).bit_length() - 1 for i in range(len(seq) - 1)]
    return seq, flips


def _rotation_gate(u: np.ndarray, target: int) -> Gate:
    axis, angle = rotation_from_su2(u)
    return Gate.rotn(axis, angle, target)


def _frame_to_x(axis: np.ndarray) -> Optional[np.ndarray]:
    if np.linalg.norm(axis - E_X) < 1e-12:
        return None
    return rotation_taking(axis, E_X)


def _flip_axis(direction: np.ndarray) -> np.ndarray:
    """Unit axis perpendicular to ``direction``; ê_x whenever ê_x is perpendicular."""
    if abs(float(direction @ E_X)) < 1e-12:
        return E_X
    m = E_X - (direction @ E_X) * direction
    if np.linalg.norm(m) < 1e-12:
        m = np.cross(direction, E_Z)
    return m / np.linalg.norm(m)


def _collinear_angles(conv: ConvenientMultiplexor) -> Tuple[np.ndarray, np.ndarray]:
    d = conv.strong_direction()
    axis = d[0] * conv.triad.s1 + d[1] * conv.triad.s2
    return axis, hadamard_transform_angles(conv.phis @ d)


def _emit_alternating(
    rotations: List[np.ndarray],
    control_qubits: List[int],
    target: int,
    frame: Optional[np.ndarray],
    trailing_flip: bool,
) -> List[Gate]:
    # Rotations interleaved with controlled flips about an axis m̂; each flip is
    # F†·CNOT·F with F σm F† = σx, and the frames fold into the neighbouring rotations.
    gates: List[Gate] = []
    fdag = frame.conj().T if frame is not None else None
    last = len(rotations) - 1
    for i, rot in enumerate(rotations):
        m = rot
        if frame is not None:
            if i > 0:
                m = m @ fdag
            if i < last or trailing_flip:
                m = frame @ m
        gates.append(_rotation_gate(m, target))
        if i < len(control_qubits):
            gates.append(Gate.cnot(control_qubits[i], target))
    if trailing_flip and fdag is not None:
        gates.append(_rotation_gate(fdag, target))
    return gates


def expand_d_multiplexor(conv: ConvenientMultiplexor) -> Circuit:
    """
    Gray-code expansion of a flag-free multiplexor whose Φ_b share one strong direction n̂.

    Emits 2^nk rotations about n̂ (Hadamard-transformed angles, Gray order) alternating
    with 2^nk CNOTs, the last closing the Gray cycle. The controlled flips may use any
    axis m̂ ⊥ n̂; m̂ = ê_x is taken whenever n̂ ⊥ ê_x, otherwise the σm→σx frame leaves
    one extra trailing rotation.

    Raises:
        ValueError: On flags, a non-collinear subset or nk = 0.
    """
    if any(conv.flags):
        raise ValueError("expand_d_multiplexor needs all flags 0")
    if conv.nk == 0:
        raise ValueError("a multiplexor without controls has no Gray expansion")
    axis, theta = _collinear_angles(conv)
    order, flips = gray_order(conv.nk)
    rotations = [rotation_matrix(axis, theta[g]) for g in order]
    controls = [conv.controls[p] for p in flips]
    frame = _frame_to_x(_flip_axis(axis))
    gates = _emit_alternating(rotations, controls, conv.target, frame, True)
    return Circuit(conv.nb, gates)


def absorb_boundary_cnot(conv: ConvenientMultiplexor, mu: int) -> ConvenientMultiplexor:
    """
    D·(iσw(target))^{n(μ)} with n(μ) the projector on control μ reading 1.

    Members with b_μ = 1 pick up a trailing iσw, so the returned flags are f(b) = b_μ.

    Raises:
        ValueError: If mu is not a control or the input already carries flags.
    """
    if mu not in conv.controls:
        raise ValueError(f"qubit {mu} is not a control of the multiplexor")
    if any(conv.flags):
        raise ValueError("boundary absorption needs a flag-free multiplexor")
    k = conv.controls.index(mu)
    flags = [(b >> k) & 1 for b in range(2**conv.nk)]
    return ConvenientMultiplexor(
        conv.target, list(conv.controls), conv.nb, conv.triad, conv.phis.copy(), flags
    )


def expand_convenient(conv: ConvenientMultiplexor) -> Circuit:
    """
    Expansion with 2^nk − 1 CNOTs of a convenient multiplexor from the absorbed family.

    The Gray cycle is arranged to open with the flip on control μ, which cancels against
    the (iσw)^{b_μ} of the members; the leftover i^{n(μ)} is a z-rotation on μ and a phase.

    Raises:
        ValueError: If the flags are not f(b) = b_μ for some control or the Φ_b are not
            collinear. Such multiplexors go through ``realize_multiplexor``.
    """
    k = conv.absorbed_control()
    if k is None:
        raise ValueError("flags do not follow a single control; use realize_multiplexor")
    axis, theta = _collinear_angles(conv)
    seq, flips = _closing_gray(conv.nk, k)
    rotations = [rotation_matrix(axis, theta[g]) for g in seq]
    controls = [conv.controls[p] for p in flips]
    gates = _emit_alternating(rotations, controls, conv.target, _frame_to_x(conv.triad.w), False)
    gates.append(Gate.rotn(E_Z, -np.pi / 4, conv.controls[k]))
    gates.append(Gate.phase(np.pi / 4))
    return Circuit(conv.nb, gates)


def _block_phases(mux: Multiplexor, delta: DiagonalUnitary) -> np.ndarray:
    if delta.nb != mux.nb:
        raise ValueError(f"dimension mismatch: diagonal nb={delta.nb}, multiplexor nb={mux.nb}")
    b, t = mux.basis_indices()
    table = np.zeros((2**mux.nk, 2))
    table[b, t] = delta.phases
    if not np.allclose(np.exp(1j * table[b, t]), delta.entries(), atol=1e-12):
        raise ValueError("diagonal depends on qubits outside the multiplexor")
    return table


def multiply_by_diagonal(mux: Multiplexor, delta: DiagonalUnitary, side: Side) -> Multiplexor:
    """
    Fold a diagonal into a multiplexor: U_b ← D_b·U_b for Side.DOL (diagonal applied
    after) or U_b·D_b for Side.DOR, D_b being the 2x2 block of delta aligned with P_b.

    Raises:
        ValueError: On a dimension mismatch or a diagonal that varies on qubits the
            multiplexor does not touch.
    """
    table = np.exp(1j * _block_phases(mux, delta))
    members = []
    for u, d in zip(mux.members, table):
        members.append(d[:, np.newaxis] * u if side is Side.DOL else u * d[np.newaxis, :])
    return mux.with_members(members)


def split_convenient(
    mux: Multiplexor, triad: Triad, side: Side, flags: Optional[Sequence[int]] = None
) -> Tuple[DiagonalUnitary, ConvenientMultiplexor]:
    """
    Split every member into its diagonal and convenient parts.

    DOL: U_b = [e^{iη_b}e^{iγ_bσz}]·[e^{iΦ_b}(iσw)^{f(b)}], the bracketed diagonals
    collected (applied after) into the returned DiagonalUnitary. DOR mirrors it with the
    diagonal applied first. A member that cannot be factored with its flag is retried
    with the other flag.

    Raises:
        ParameterizationError: If a member fails with both flags.
    """
    n = len(mux.members)
    requested = list(flags) if flags is not None else [0] * n
    phis = np.zeros((n, 2))
    used = []
    table = np.zeros((n, 2))
    for b, (u, f) in enumerate(zip(mux.members, requested)):
        try:
            params = factorize(u, triad, f, side)
        except ParameterizationError:
            logger.warning(f"member {b}: retrying with flag {1 - f}")
            try:
                params = factorize(u, triad, 1 - f, side)
            except ParameterizationError as exc:
                raise ParameterizationError(f"member {b} has no factorization: {exc}") from exc
        phis[b] = (params.alpha, params.beta)
        if side is Side.DOR and params.f:
            # (iσw)·e^{iΦ} = e^{−iΦ}·(iσw)
            phis[b] = -phis[b]
        used.append(params.f)
        table[b] = (params.eta + params.gamma, params.eta - params.gamma)
    b_idx, t_idx = mux.basis_indices()
    delta = DiagonalUnitary(mux.nb, table[b_idx, t_idx])
    conv = ConvenientMultiplexor(mux.target, list(mux.controls), mux.nb, triad, phis, used)
    return delta, conv


def _principal(z: complex) -> complex:
    s = complex(np.sqrt(complex(z)))
    if s.real < -1e-12 or (abs(s.real) <= 1e-12 and s.imag < 0):
        s = -s
    return s


def _pair_split(
    a: np.ndarray, b: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    A = Δ0·v·u and B = Δ1·v·σz·u.

    Δ1⁻¹·N·Δ0 with N = B·A† must be traceless with determinant −1; only the products
    g_i of matching entries matter, split symmetrically between Δ0 and Δ1.
    """
    n = b @ a.conj().T
    det = complex(np.linalg.det(n))
    if abs(n[0, 0]) <= ANTIDIAGONAL_TOL:
        g0 = g1 = _principal(-1.0 / det)
    else:
        root = _principal(n[1, 1] / (n[0, 0] * det))
        candidates = [(root, -root * n[0, 0] / n[1, 1]), (-root, root * n[0, 0] / n[1, 1])]
        deviations = [abs(x - 1) + abs(y - 1) for x, y in candidates]
        pick = 1 if deviations[1] < deviations[0] - 1e-9 else 0
        g0, g1 = candidates[pick]
    psi = np.angle([g0, g1])
    a_red = np.exp(-0.5j * psi)[:, np.newaxis] * a
    b_red = np.exp(0.5j * psi)[:, np.newaxis] * b
    m = b_red @ a_red.conj().T
    _, vecs = np.linalg.eigh((m + m.conj().T) / 2)
    v = vecs[:, [1, 0]]
    u = v.conj().T @ a_red
    return psi / 2, -psi / 2, v, u


def _realize(
    members: np.ndarray, controls: List[int], target: int
) -> Tuple[np.ndarray, List[Gate]]:
    if not controls:
        gate, phase = Gate.from_unitary(members[0], target)
        return np.full((1, 2), phase), [gate]

    half = members.shape[0] // 2
    ph0 = np.empty((half, 2))
    ph1 = np.empty((half, 2))
    vs = np.empty((half, 2, 2), dtype=complex)
    us = np.empty((half, 2, 2), dtype=complex)
    for b in range(half):
        ph0[b], ph1[b], vs[b], us[b] = _pair_split(members[b], members[b + half])

    lower = controls[:-1]
    pu, gates_u = _realize(us, lower, target)
    # Δ_u commutes through the controlled-σz into the v members.
    vs = vs * np.exp(1j * pu)[:, np.newaxis, :]
    pv, gates_v = _realize(vs, lower, target)

    # controlled-σz = H·CNOT·H; each H = −i·(iH) merges into a rotation, −1 overall.
    first = _rotation_gate(I_HADAMARD @ gates_u[-1].local_matrix(), target)
    second = _rotation_gate(gates_v[0].local_matrix() @ I_HADAMARD, target)
    gates = gates_u[:-1] + [first, Gate.cnot(controls[-1], target), second] + gates_v[1:]
    phases = np.concatenate([ph0 + pv, ph1 + pv]) + np.pi
    return phases, gates


def realize_multiplexor(
    mux: Multiplexor, side: Side = Side.DOL
) -> Tuple[DiagonalUnitary, Circuit]:
    """
    Exact expansion of any multiplexor into 2^nk − 1 CNOTs and 2^nk target rotations,
    up to a diagonal on the multiplexor's qubits: X = Δ·C (DOL) or X = C·Δ (DOR).

    Members are demultiplexed pairwise on the most significant control.
    """
    members = np.stack(mux.members)
    if side is Side.DOR:
        members = members.conj().transpose(0, 2, 1)
    table, gates = _realize(members, list(mux.controls), mux.target)
    circuit = Circuit(mux.nb, gates)
    if side is Side.DOR:
        circuit = circuit.inverse()
        table = -table
    b, t = mux.basis_indices()
    return DiagonalUnitary(mux.nb, table[b, t]), circuit


@dataclass
class LocalDiagonal:
    """Nearest e^{i·phase}·Π_q e^{i·angles[q]·n_q} to a diagonal, and the distance left."""

    phase: float
    angles: np.ndarray
    residual: float


def local_diagonal(delta: DiagonalUnitary) -> LocalDiagonal:
    """
    Fit a product of one-qubit phases to a diagonal.

    Each angle is the argument of the mean ratio e^{i(φ_{j⊕2^q} − φ_j)} over the states
    with qubit q at 0; the global phase is then optimal in closed form.
    """
    entries = delta.entries()
    idx = np.arange(entries.shape[0])
    angles = np.zeros(delta.nb)
    for q in range(delta.nb):
        lo = idx[((idx >> q) & 1) == 0]
        mean = np.mean(entries[lo + (1 << q)] * entries[lo].conj())
        angles[q] = float(np.angle(mean)) if abs(mean) > 0 else 0.0
    bits = (idx[:, np.newaxis] >> np.arange(delta.nb)) & 1
    local = np.exp(1j * (bits @ angles))
    phase = float(np.angle(np.sum(entries * local.conj())))
    residual = float(np.linalg.norm(entries - np.exp(1j * phase) * local))
    return LocalDiagonal(phase, angles, residual)


def local_diagonal_gates(fit: LocalDiagonal) -> List[Gate]:
    """z-rotations and a phase gate realizing the fitted local diagonal (no CNOTs)."""
    gates = [
        Gate.rotn(E_Z, -d / 2, q) for q, d in enumerate(fit.angles) if abs(d) > 1e-15
    ]
    gates.append(Gate.phase(fit.phase + float(np.sum(fit.angles)) / 2))
    return gates
