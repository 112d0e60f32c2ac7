"""
Dense complex linear algebra used throughout the compiler.

Covers unitarity checks, determinant normalization, Haar-random fixtures and the
cosine-sine decomposition (CSD). Matrices are plain ``numpy.ndarray`` values of complex
dtype; the basis index of a 2^nb matrix has qubit 0 as its least significant bit.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import block_diag, cossin

from .errors import NotUnitaryError

logger = logging.getLogger(__name__)

MAX_QUBITS = 10
BLOCK_TOL = 1e-14
ZERO_ANGLE = 1e-12


def unitarity_residual(m: np.ndarray) -> float:
    """Frobenius norm of M·M† − I."""
    m = np.asarray(m)
    return float(np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0])))


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    """Return True iff ``m`` is square and ||M·M† − I||_F <= tol."""
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return unitarity_residual(m) <= tol


def num_qubits(dim: int) -> int:
    """Number of qubits for a power-of-two dimension >= 2."""
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"dimension {dim} is not a power of two >= 2")
    return dim.bit_length() - 1


def normalize_det(u: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Scale ``u`` to unit determinant.

    The phase is the principal angle of det(U) divided by the dimension, so
    U = e^{i·phase}·U_norm with det(U_norm) = 1.

    Returns:
        Tuple of (U_norm, phase in radians).
    """
    u = np.asarray(u, dtype=complex)
    dim = u.shape[0]
    phase = float(np.angle(np.linalg.det(u))) / dim
    return u * np.exp(-1j * phase), phase


def haar_random_unitary(nb: int, seed: int) -> np.ndarray:
    """
    Haar-distributed unitary on ``nb`` qubits.

    QR of a complex Gaussian matrix with the phases of R's diagonal moved into Q,
    which makes the distribution exactly Haar. Deterministic for a fixed seed.

    Raises:
        ValueError: If nb is outside [1, 10].
    """
    if not 1 <= nb <= MAX_QUBITS:
        raise ValueError(f"nb must be in [1, {MAX_QUBITS}], got {nb}")
    dim = 2**nb
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass
class CSDFactors:
    """
    U = (L0 ⊕ L1)·D·(R0 ⊕ R1) with D = exp(i σy ⊗ Θ) on the most significant qubit.

    For each sub-index k the 2x2 block of D acting on the most significant qubit is
    [[cos θ_k, sin θ_k], [−sin θ_k, cos θ_k]].
    """

    l0: np.ndarray
    l1: np.ndarray
    r0: np.ndarray
    r1: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        half = self.l0.shape[0]
        for name in ("l1", "r0", "r1"):
            if getattr(self, name).shape != (half, half):
                raise ValueError(f"{name} must be {half}x{half}")
        if self.thetas.shape != (half,):
            raise ValueError(f"thetas must have length {half}")

    @property
    def half(self) -> int:
        return int(self.l0.shape[0])

    def left(self) -> np.ndarray:
        return block_diag(self.l0, self.l1)

    def right(self) -> np.ndarray:
        return block_diag(self.r0, self.r1)

    def middle(self) -> np.ndarray:
        c = np.diag(np.cos(self.thetas))
        s = np.diag(np.sin(self.thetas))
        return np.block([[c, s], [-s, c]]).astype(complex)

    def reconstruct(self) -> np.ndarray:
        return self.left() @ self.middle() @ self.right()


def _canonical_gauge(factors: CSDFactors) -> CSDFactors:
    # Each k admits a common phase on column k of L0/L1 compensated on row k of R0/R1;
    # fix it by making the dominant entry of each row of R0 real and positive.
    r0 = factors.r0
    idx = np.argmax(np.abs(r0), axis=1)
    dominant = r0[np.arange(factors.half), idx]
    phases = np.where(np.abs(dominant) > 0, dominant / np.abs(dominant), 1.0)
    return CSDFactors(
        l0=factors.l0 * phases[np.newaxis, :],
        l1=factors.l1 * phases[np.newaxis, :],
        r0=factors.r0 * phases.conj()[:, np.newaxis],
        r1=factors.r1 * phases.conj()[:, np.newaxis],
        thetas=factors.thetas,
    )


def _block_shortcut(u: np.ndarray, half: int) -> Optional[CSDFactors]:
    # Block-diagonal and block-antidiagonal inputs need no SVD; this keeps their
    # factors free of the arbitrary unitaries an SVD of degenerate blocks returns.
    eye = np.eye(half, dtype=complex)
    zeros = np.zeros(half)
    scale = BLOCK_TOL * 2 * half
    if np.linalg.norm(u[:half, half:]) <= scale and np.linalg.norm(u[half:, :half]) <= scale:
        return CSDFactors(
            l0=u[:half, :half], l1=u[half:, half:], r0=eye, r1=eye.copy(), thetas=zeros
        )
    if np.linalg.norm(u[:half, :half]) <= scale and np.linalg.norm(u[half:, half:]) <= scale:
        return CSDFactors(
            l0=u[:half, half:],
            l1=-u[half:, :half],
            r0=eye,
            r1=eye.copy(),
            thetas=np.full(half, np.pi / 2),
        )
    return None


def csd(u: np.ndarray, tol: float = 1e-8) -> CSDFactors:
    """
    Cosine-sine decomposition of an even-dimensional unitary.

    Args:
        u: Unitary matrix of even dimension >= 2.
        tol: Unitarity tolerance, scaled by the dimension.

    Returns:
        CSDFactors with thetas in [0, π/2]. Block-diagonal input (the identity
        included) yields L0 = U00, L1 = U11, R0 = R1 = I and zero angles.

    Raises:
        ValueError: If the dimension is odd or the matrix is not square.
        NotUnitaryError: If ||U·U† − I||_F exceeds tol·dim.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    dim = u.shape[0]
    if dim < 2 or dim % 2:
        raise ValueError(f"CSD needs an even dimension >= 2, got {dim}")
    residual = unitarity_residual(u)
    if residual > tol * dim:
        raise NotUnitaryError(residual, tol * dim, what="CSD input")

    half = dim // 2
    shortcut = _block_shortcut(u, half)
    if shortcut is not None:
        logger.debug(f"csd dim={dim} block shortcut thetas={shortcut.thetas[0]:.6f}")
        return shortcut

    (u1, u2), thetas, (v1h, v2h) = cossin(u, p=half, q=half, separate=True)
    thetas = np.clip(np.asarray(thetas), 0.0, np.pi / 2)
    thetas[thetas <= ZERO_ANGLE] = 0.0
    # scipy's middle factor is [[C, -S], [S, C]]. Conjugating the k-th 2x2 block by
    # diag(1, -1) gives [[C, S], [-S, C]]; a block with θ_k = 0 is already the
    # identity, so its sign stays +1 and L1/R1 keep the orientation scipy returned.
    signs = np.where(thetas > ZERO_ANGLE, -1.0, 1.0)
    factors = CSDFactors(
        l0=u1,
        l1=u2 * signs[np.newaxis, :],
        r0=v1h,
        r1=v2h * signs[:, np.newaxis],
        thetas=thetas,
    )
    factors = _canonical_gauge(factors)
    logger.debug(f"csd dim={dim} thetas={np.round(factors.thetas, 6).tolist()}")
    return factors
