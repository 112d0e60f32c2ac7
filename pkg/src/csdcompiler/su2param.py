"""
SU(2) factorizations over an arbitrary orthonormal triad.

DOL (diagonal on the left):   U = e^{iη}·e^{iγσz}·e^{iσ·θ⃗}·(iσw)^f
DOR (diagonal on the right):  U = e^{iη}·(iσw)^f·e^{iσ·θ⃗}·e^{iγσz}

with θ⃗ = α·ŝ1 + β·ŝ2 in the strong plane and ŵ = ŝ1 × ŝ2 the weak axis. For
V = [[x, y], [−y*, x*]] the DOL form gives x·e^{−iγ} = p + i·r_z and
y·e^{−iγ} = r_y + i·r_x with p = cos θ and r⃗ = sin θ·θ̂, so γ is fixed by the single
real constraint r⃗·ŵ = 0.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Tuple

import numpy as np
from scipy.optimize import brentq

from .circuits.model import rotation_matrix, sigma_dot
from .errors import ParameterizationError

logger = logging.getLogger(__name__)

GAMMA_BRACKETS = 256
GAMMA_XTOL = 1e-13
BRANCH_TOL = 1e-12
# Rounding slack on cos θ for members sitting on the θ = π/2 boundary.
BOUNDARY_SLACK = 1e-9


class Side(Enum):
    """Which side of the strong-plane rotation carries the diagonal factor."""

    DOL = "dol"
    DOR = "dor"


def _unit(v: Iterable[float]) -> np.ndarray:
    arr = np.asarray(list(v), dtype=float)
    return arr / np.linalg.norm(arr)


@dataclass
class Triad:
    """Orthonormal frame (ŝ1, ŝ2, ŵ) with ŵ = ŝ1 × ŝ2."""

    s1: np.ndarray
    s2: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.s1 = np.asarray(self.s1, dtype=float)
        self.s2 = np.asarray(self.s2, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        tol = 1e-12
        if abs(np.linalg.norm(self.s1) - 1) > tol or abs(np.linalg.norm(self.s2) - 1) > tol:
            raise ValueError("strong directions must be unit vectors")
        if abs(float(self.s1 @ self.s2)) > tol:
            raise ValueError("strong directions must be orthogonal")
        if np.linalg.norm(np.cross(self.s1, self.s2) - self.w) > tol:
            raise ValueError("w must equal s1 x s2")

    @classmethod
    def standard(cls) -> "Triad":
        """(ê_x, ê_y, ê_z)."""
        return cls(np.eye(3)[0], np.eye(3)[1], np.eye(3)[2])

    def reflect_y(self) -> "Triad":
        """Flip the y components of the strong directions; used by the transpose trick."""
        flip = np.array([1.0, -1.0, 1.0])
        s1 = self.s1 * flip
        s2 = self.s2 * flip
        return Triad(s1, s2, np.cross(s1, s2))


@dataclass
class XYPair:
    """First row (x, y) of an SU(2) matrix [[x, y], [−y*, x*]]."""

    x: complex
    y: complex

    def __post_init__(self):
        norm = abs(self.x) ** 2 + abs(self.y) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"|x|^2 + |y|^2 must be 1, got {norm!r}")

    @classmethod
    def from_su2(cls, v: np.ndarray) -> "XYPair":
        return cls(complex(v[0, 0]), complex(v[0, 1]))


@dataclass
class SU2Params:
    """(η, α, β, γ, f) of a DOL or DOR factorization."""

    eta: float
    alpha: float
    beta: float
    gamma: float
    f: int = 0
    side: Side = Side.DOL

    def __post_init__(self):
        if self.f not in (0, 1):
            raise ValueError(f"f must be 0 or 1, got {self.f}")
        if np.cos(self.theta) < -BRANCH_TOL:
            raise ParameterizationError(
                f"theta={self.theta} violates the cos(theta) >= 0 branch"
            )

    @property
    def theta(self) -> float:
        return float(np.hypot(self.alpha, self.beta))

    def strong_vector(self, triad: Triad) -> np.ndarray:
        """θ⃗ = α·ŝ1 + β·ŝ2."""
        return self.alpha * triad.s1 + self.beta * triad.s2

    def diagonal(self) -> np.ndarray:
        """The diagonal factor e^{iη}·e^{iγσz}."""
        return np.exp(1j * self.eta) * np.diag([np.exp(1j * self.gamma), np.exp(-1j * self.gamma)])


def flip_factor(triad: Triad, power: int = 1) -> np.ndarray:
    """(iσw)^power for power in {−1, 0, 1}."""
    if power == 0:
        return np.eye(2, dtype=complex)
    return (1j if power > 0 else -1j) * sigma_dot(triad.w)


def project_su2(u: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Remove the determinant phase of a 2x2 unitary.

    Returns:
        (η, V) with V = e^{−iη}·U, det V = 1 and η half the principal angle of det U.
    """
    u = np.asarray(u, dtype=complex)
    eta = float(np.angle(np.linalg.det(u))) / 2
    return eta, u * np.exp(-1j * eta)


def dol_orthogonal(v: np.ndarray) -> Tuple[float, float, float]:
    """
    Closed-form DOL angles (α, β, γ) over the standard triad.

    γ = ∠x, cos θ = |x| and β + iα = (y·x*/|x·y|)·θ. A vanishing x gives γ = 0 and
    θ = π/2; a vanishing y gives α = β = 0.
    """
    x, y = complex(v[0, 0]), complex(v[0, 1])
    if abs(y) < 1e-15:
        return 0.0, 0.0, float(np.angle(x))
    if abs(x) < 1e-15:
        z = (np.pi / 2) * y / abs(y)
        return float(z.imag), float(z.real), 0.0
    theta = float(np.arctan2(abs(y), abs(x)))
    z = (y * np.conj(x) / abs(x * y)) * theta
    return float(z.imag), float(z.real), float(np.angle(x))


def _wrap(angle: float) -> float:
    """Map to (−π, π]."""
    wrapped = (angle + np.pi) % (2 * np.pi) - np.pi
    return float(np.pi if wrapped == -np.pi else wrapped)


def _constraint_coefficient(pair: XYPair, w: np.ndarray) -> complex:
    # r⃗·ŵ = Im(c·e^{−iγ}) with c = (w_x + i·w_y)·y + w_z·x
    return complex((w[0] + 1j * w[1]) * pair.y + w[2] * pair.x)


def _solve_gamma_w(pair: XYPair, w: np.ndarray) -> float:
    c = _constraint_coefficient(pair, w)
    if abs(c) < 1e-14:
        # Every γ satisfies the constraint; take the smallest |γ| on the p >= 0 branch.
        if pair.x.real >= 0:
            return 0.0
        d = _wrap(float(np.angle(pair.x)))
        return _wrap(d - np.sign(d) * np.pi / 2)

    def g(gamma: float) -> float:
        return float((c * np.exp(-1j * gamma)).imag)

    grid = np.linspace(-np.pi, np.pi, GAMMA_BRACKETS + 1)
    values = (c * np.exp(-1j * grid)).imag
    roots = [float(grid[k]) for k in np.flatnonzero(values == 0.0)]
    for k in np.flatnonzero(values[:-1] * values[1:] < 0):
        roots.append(float(brentq(g, grid[k], grid[k + 1], xtol=GAMMA_XTOL)))

    candidates = []
    for root in roots:
        gamma = _wrap(root)
        candidates.append((gamma, float((pair.x * np.exp(-1j * gamma)).real)))
    admissible = [gamma for gamma, p in candidates if p >= -BRANCH_TOL]
    if admissible:
        return min(admissible, key=abs)
    # On the θ = π/2 boundary both roots have p ≈ 0 and rounding may push each below zero.
    if candidates:
        gamma, p = max(candidates, key=lambda item: item[1])
        if p >= -BOUNDARY_SLACK:
            return gamma
    raise ParameterizationError(f"no admissible gamma root among {len(roots)} candidates")


def _k_to_w(kx: float, ky: float) -> np.ndarray:
    return np.array([kx, ky, 1.0]) / np.sqrt(1.0 + kx * kx + ky * ky)


def solve_gamma(pair: XYPair, kx: float, ky: float) -> float:
    """
    Diagonal angle γ of the DOL form for the weak axis ŵ ∝ (kx, ky, 1).

    Scans 256 brackets of the signed constraint over [−π, π], refines sign changes with
    Brent's method and keeps roots with cos θ = Re(x·e^{−iγ}) >= 0, preferring the
    smallest |γ|.

    Raises:
        ParameterizationError: If no admissible root exists.
    """
    return _solve_gamma_w(pair, _k_to_w(kx, ky))


def gamma_residual(pair: XYPair, kx: float, ky: float, gamma: float) -> float:
    """
    Residual of the squared γ equation in sin/cos form, normalized by max(|x|², |y|²).

    (k_y cos a_y + k_x sin a_y)²·|y|² − sin²(a_x)·|x|² with a_x = ∠x − γ, a_y = ∠y − γ.
    """
    ax = float(np.angle(pair.x)) - gamma
    ay = float(np.angle(pair.y)) - gamma
    lhs = (ky * np.cos(ay) + kx * np.sin(ay)) ** 2 * abs(pair.y) ** 2
    rhs = np.sin(ax) ** 2 * abs(pair.x) ** 2
    scale = max(abs(pair.x) ** 2, abs(pair.y) ** 2)
    return float(abs(lhs - rhs) / scale)


def _check_special(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {v.shape}")
    if abs(np.linalg.det(v) - 1.0) > 1e-9:
        raise ValueError("matrix is not special unitary; call project_su2 first")
    return v


def _dol_core(v: np.ndarray, triad: Triad) -> Tuple[float, float, float]:
    pair = XYPair.from_su2(v / np.sqrt(abs(v[0, 0]) ** 2 + abs(v[0, 1]) ** 2))
    gamma = _solve_gamma_w(pair, triad.w)
    phase = np.exp(-1j * gamma)
    xe, ye = pair.x * phase, pair.y * phase
    r = np.array([ye.imag, ye.real, xe.imag])
    r -= (r @ triad.w) * triad.w
    sin_t = float(np.linalg.norm(r))
    if sin_t < 1e-15:
        return 0.0, 0.0, gamma
    if xe.real < -BOUNDARY_SLACK:
        raise ParameterizationError(f"cos(theta)={xe.real:.3e} is off the cos(theta) >= 0 branch")
    theta = float(np.arctan2(sin_t, max(xe.real, 0.0)))
    vec = theta * r / sin_t
    return float(vec @ triad.s1), float(vec @ triad.s2), gamma


def dol_oblique(v: np.ndarray, triad: Triad, f: int = 0) -> SU2Params:
    """
    DOL factorization of an SU(2) matrix over an arbitrary triad.

    With f = 1 the weak-axis flip is split off first: the factorization is computed
    for V·(−iσw) and the returned parameters reconstruct V with the trailing (iσw).

    Returns:
        SU2Params with η = 0 and side DOL.

    Raises:
        ValueError: If V is not special unitary.
        ParameterizationError: If the γ solve finds no admissible root.
    """
    v = _check_special(v)
    if f:
        v = v @ flip_factor(triad, -1)
    alpha, beta, gamma = _dol_core(v, triad)
    return SU2Params(eta=0.0, alpha=alpha, beta=beta, gamma=gamma, f=f, side=Side.DOL)


def dor_oblique(v: np.ndarray, triad: Triad, f: int = 0) -> SU2Params:
    """
    DOR factorization through the transpose: if V = e^{iσ·θ⃗}·e^{iγσz} then
    Vᵀ = e^{iγσz}·e^{iσ·θ⃗'} with θ⃗' the y-reflected vector, so the DOL solver run on
    Vᵀ with the reflected triad yields the same (α, β, γ).
    """
    v = _check_special(v)
    if f:
        v = flip_factor(triad, -1) @ v
    alpha, beta, gamma = _dol_core(v.T, triad.reflect_y())
    return SU2Params(eta=0.0, alpha=alpha, beta=beta, gamma=gamma, f=f, side=Side.DOR)


def su2_reconstruct(params: SU2Params, triad: Triad) -> np.ndarray:
    """Evaluate a DOL or DOR factorization back to its 2x2 unitary."""
    theta = params.theta
    if theta == 0.0:
        rot = np.eye(2, dtype=complex)
    else:
        rot = rotation_matrix(params.strong_vector(triad) / theta, theta)
    diag = np.diag([np.exp(1j * params.gamma), np.exp(-1j * params.gamma)])
    flip = flip_factor(triad, params.f)
    if params.side is Side.DOL:
        out = diag @ rot @ flip
    else:
        out = flip @ rot @ diag
    return np.exp(1j * params.eta) * out


def factorize(u: np.ndarray, triad: Triad, f: int = 0, side: Side = Side.DOL) -> SU2Params:
    """Factor any 2x2 unitary: split off e^{iη}, then run the DOL or DOR solver."""
    eta, v = project_su2(u)
    solver = dol_oblique if side is Side.DOL else dor_oblique
    params = solver(v, triad, f)
    params.eta = eta
    return params


def rotation_taking(from_dir: Iterable[float], to_dir: Iterable[float]) -> np.ndarray:
    """
    SU(2) matrix R with R·(σ·from)·R† = σ·to.

    R = e^{i(π/2)σ·m̂} = iσ·m̂ with m̂ the bisector of the two directions, or any axis
    perpendicular to both when they are antipodal.
    """
    a = _unit(from_dir)
    b = _unit(to_dir)
    m = a + b
    if np.linalg.norm(m) < 1e-12:
        trial = np.eye(3)[int(np.argmin(np.abs(a)))]
        m = np.cross(a, trial)
    m = m / np.linalg.norm(m)
    return 1j * sigma_dot(m)


__all__ = [
    "SU2Params",
    "Side",
    "Triad",
    "XYPair",
    "dol_oblique",
    "dol_orthogonal",
    "dor_oblique",
    "factorize",
    "flip_factor",
    "gamma_residual",
    "project_su2",
    "rotation_taking",
    "solve_gamma",
    "su2_reconstruct",
]
