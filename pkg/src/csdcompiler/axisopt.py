"""
Optimum weak axis for a U(2)-subset.

The correction cost of a subset under a triad is 4·Σ_b (1 − cos γ_b), the price of the
diagonal factors e^{iγ_b σz} left over by the DOL (or DOR) factorization of each member.
Triads are parameterized by (kx, ky) with ŵ ∝ (kx, ky, 1) and ŝ1 horizontal.

The γ constraint Im(c·e^{−iγ}) = 0 has the roots γ = ∠c and ∠c + π, so the DOL cost
can be evaluated for a whole grid of axes at once; the scan and the Newton iterations
use that vectorized form and the reported cost is re-evaluated member by member.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.optimize import minimize

from .errors import ParameterizationError
from .matcore import is_unitary
from .su2param import BRANCH_TOL, Side, Triad, factorize, project_su2

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
RESIDUAL_TOL = 1e-6
SINGULAR_TOL = 1e-10
ZERO_COST = 1e-14
DEGENERATE_C = 1e-14
SCAN_HALF_WIDTH = 4.0
SCAN_POINTS = 64
MAX_STARTS = 4
MAX_NEWTON_STEP = 2.0
@dataclass
class U2Subset:
    """Ordered members U_b of a multiplexor together with their flip flags f(b)."""

    members: List[np.ndarray]
    flags: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.members = [np.asarray(m, dtype=complex) for m in self.members]
        n = len(self.members)
        if n == 0 or n & (n - 1):
            raise ValueError(f"subset size must be a power of two, got {n}")
        if not self.flags:
            self.flags = [0] * n
        if len(self.flags) != n:
            raise ValueError(f"expected {n} flags, got {len(self.flags)}")
        if any(f not in (0, 1) for f in self.flags):
            raise ValueError("flags must be 0 or 1")
        for b, m in enumerate(self.members):
            if m.shape != (2, 2) or not is_unitary(m, 1e-10):
                raise ValueError(f"member {b} is not a 2x2 unitary")

    def __len__(self) -> int:
        return len(self.members)

    def transposed(self) -> "U2Subset":
        return U2Subset([m.T for m in self.members], list(self.flags))


def triad_from_k(kx: float, ky: float) -> Triad:
    """
    Triad with ŵ = (kx, ky, 1)/√(1 + kx² + ky²) and ŝ1 = (ky, −kx, 0)/√(kx² + ky²).

    (0, 0) maps to the standard triad.
    """
    rho = float(np.hypot(kx, ky))
    if rho == 0.0:
        return Triad.standard()
    w = np.array([kx, ky, 1.0]) / np.sqrt(1.0 + rho * rho)
    s1 = np.array([ky, -kx, 0.0]) / rho
    s2 = np.cross(w, s1)
    return Triad(s1, s2, np.cross(s1, s2))


@dataclass
class AxisSolution:
    """Result of optimum_axis."""

    kx: float
    ky: float
    triad: Triad
    cost: float
    residuals: Tuple[float, float] = (0.0, 0.0)
    iterations: int = 0

    def to_dict(self):
        return {
            "kx": self.kx,
            "ky": self.ky,
            "cost": self.cost,
            "residuals": list(self.residuals),
            "iterations": self.iterations,
        }


def member_gammas(subset: U2Subset, triad: Triad, side: Side = Side.DOL) -> np.ndarray:
    """Diagonal angles γ_b of every member under ``triad``."""
    return np.array(
        [factorize(m, triad, f, side).gamma for m, f in zip(subset.members, subset.flags)]
    )


def correction_cost(subset: U2Subset, triad: Triad, side: Side = Side.DOL) -> float:
    """
    L = 4·Σ_b (1 − cos γ_b).

    Raises:
        ParameterizationError: Propagated from the member factorizations.
    """
    gammas = member_gammas(subset, triad, side)
    return float(4.0 * np.sum(1.0 - np.cos(gammas)))




def _k_axes(kx: np.ndarray, ky: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(ŵ, ŝ1, ŝ2) for arrays of (kx, ky), each of shape (..., 3)."""
    kx, ky = np.broadcast_arrays(np.asarray(kx, dtype=float), np.asarray(ky, dtype=float))
    rho = np.hypot(kx, ky)
    w = np.stack([kx, ky, np.ones_like(kx)], axis=-1) / np.sqrt(1.0 + rho * rho)[..., None]
    safe = np.where(rho == 0.0, 1.0, rho)
    s1 = np.where(
        (rho == 0.0)[..., None],
        np.array([1.0, 0.0, 0.0]),
        np.stack([ky, -kx, np.zeros_like(kx)], axis=-1) / safe[..., None],
    )
    return w, s1, np.cross(w, s1)


class _MemberRows:
    """First rows (x, y) of the SU(2) parts of a subset, ready for broadcasting."""

    def __init__(self, subset: U2Subset):
        rows = np.array([project_su2(m)[1][0] for m in subset.members])
        rows /= np.linalg.norm(rows, axis=1, keepdims=True)
        self.x = rows[:, 0]
        self.y = rows[:, 1]
        self.flags = np.asarray(subset.flags, dtype=bool)

    def solve(self, w: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        (x', y', e^{−iγ}) per axis and member, shapes (..., B).

        x', y' are the rows after the trailing flip (−iσw) is split off the f = 1 members.
        """
        wx, wy, wz = w[..., 0:1], w[..., 1:2], w[..., 2:3]
        wplus = wx + 1j * wy
        x, y = self.x, self.y
        xp = np.where(self.flags, -1j * (wplus * y + wz * x), x)
        yp = np.where(self.flags, -1j * (x * np.conj(wplus) - wz * y), y)
        c = wplus * yp + wz * xp
        mag = np.abs(c)
        degenerate = mag < DEGENERATE_C
        unit = np.conj(c) / np.where(degenerate, 1.0, mag)
        p0 = (xp * unit).real
        # Both roots are admissible on the θ = π/2 boundary; the smaller |γ| wins.
        take_other = np.where(np.abs(p0) <= BRANCH_TOL, unit.real < 0, p0 < 0)
        phase = np.where(take_other, -unit, unit)
        angle = np.angle(xp)
        free = np.where(xp.real >= 0, 0.0, angle - np.sign(angle) * np.pi / 2)
        return xp, yp, np.where(degenerate, np.exp(-1j * free), phase)


def cost_surface(subset: U2Subset, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
    """DOL correction cost for arrays of (kx, ky); same shape as the broadcast inputs."""
    w, _, _ = _k_axes(kx, ky)
    _, _, phase = _MemberRows(subset).solve(w)
    return 4.0 * np.sum(1.0 - phase.real, axis=-1)


def residuals(kx: float, ky: float, subset: U2Subset) -> Tuple[float, float]:
    """
    Stationarity residuals (F1, F2) of the DOL correction cost at (kx, ky).

    F_j = Σ_b sin γ_b·q_b·w_z·X_bj / (p_b − Σ_j s_jz·(h_b·ŝ_j)) over the members with
    f_b = 0, where p = cos θ, q = sin θ, X = (α, β)/θ and h = (r_y, −r_x, p) with
    r = θ⃗·sin θ/θ. X is taken as 0 when θ vanishes. A member with f_b = 1 has its γ_b
    fixed by U_b alone and contributes nothing.

    Moving ŵ by λ_j·ŝ_j changes the cost by 4·F_j·λ_j to first order, so both residuals
    vanish exactly at the stationary axes.

    Raises:
        ParameterizationError: If a denominator is singular.
    """
    triad = triad_from_k(kx, ky)
    strong = (triad.s1, triad.s2)
    total = np.zeros(2)
    for b, (member, f) in enumerate(zip(subset.members, subset.flags)):
        if f:
            continue
        params = factorize(member, triad, 0, Side.DOL)
        theta = params.theta
        p, q = np.cos(theta), np.sin(theta)
        if theta < 1e-12:
            x = np.zeros(2)
            r = np.zeros(3)
        else:
            x = np.array([params.alpha, params.beta]) / theta
            r = params.strong_vector(triad) * q / theta
        h = np.array([r[1], -r[0], p])
        denominator = p - sum(s[2] * (h @ s) for s in strong)
        if abs(denominator) < SINGULAR_TOL:
            raise ParameterizationError(f"singular stationarity denominator at member {b}")
        numerators = q * triad.w[2] * x
        total += np.sin(params.gamma) * numerators / denominator
    return float(total[0]), float(total[1])


class _AxisObjective:
    """Vectorized cost and residuals with the random perturbation for singular points."""

    def __init__(self, subset: U2Subset, rng: np.random.Generator):
        self.rows = _MemberRows(subset)
        self.rng = rng
        self.evaluations = 0

    def surface(self, kx: np.ndarray, ky: np.ndarray) -> np.ndarray:
        w, _, _ = _k_axes(kx, ky)
        self.evaluations += int(np.size(w) // 3)
        _, _, phase = self.rows.solve(w)
        return 4.0 * np.sum(1.0 - phase.real, axis=-1)

    def cost(self, k: Sequence[float]) -> float:
        return float(self.surface(np.float64(k[0]), np.float64(k[1])))

    def _residuals_at(self, k: np.ndarray) -> np.ndarray:
        w, s1, s2 = _k_axes(np.float64(k[0]), np.float64(k[1]))
        xp, yp, phase = self.rows.solve(w)
        keep = ~self.rows.flags
        xe, ye = (xp * phase)[keep], (yp * phase)[keep]
        r = np.stack([ye.imag, ye.real, xe.imag], axis=-1)
        r -= np.outer(r @ w, w)
        p = np.maximum(xe.real, 0.0)
        h = np.stack([r[:, 1], -r[:, 0], p], axis=-1)
        denominator = h @ w
        if np.any(np.abs(denominator) < SINGULAR_TOL):
            raise ParameterizationError("singular stationarity denominator")
        weights = -phase[keep].imag / denominator
        return np.array([weights @ (r @ s1), weights @ (r @ s2)])

    def residuals(self, k: np.ndarray, attempts: int = 5) -> np.ndarray:
        point = np.asarray(k, dtype=float)
        for _ in range(attempts):
            try:
                return self._residuals_at(point)
            except ParameterizationError as exc:
                logger.warning(f"{exc} at k={point.tolist()}, perturbing")
                direction = self.rng.standard_normal(2)
                point = point + FD_STEP * direction / np.linalg.norm(direction)
        raise ParameterizationError(f"residuals singular around k={np.asarray(k).tolist()}")

    def jacobian(self, k: np.ndarray, f0: np.ndarray) -> np.ndarray:
        jac = np.empty((2, 2))
        for col in range(2):
            dk = np.zeros(2)
            dk[col] = FD_STEP
            jac[:, col] = (self.residuals(k + dk) - f0) / FD_STEP
        return jac


def _scan_starts(
    objective: _AxisObjective, init: np.ndarray, points: int, starts: int
) -> List[np.ndarray]:
    """``init`` followed by the lowest local minima of a points x points grid on [−4, 4]²."""
    if points < 2:
        return [init]
    axis = np.linspace(-SCAN_HALF_WIDTH, SCAN_HALF_WIDTH, points)
    kx, ky = np.meshgrid(axis, axis, indexing="ij")
    surface = objective.surface(kx, ky)
    minima = np.flatnonzero(surface <= minimum_filter(surface, size=3, mode="nearest"))
    best = minima[np.argsort(surface.flat[minima])][:starts]
    return [init] + [np.array([kx.flat[i], ky.flat[i]]) for i in best]


def _newton(
    objective: _AxisObjective, k: np.ndarray, cost: float, max_iter: int
) -> Tuple[np.ndarray, float, int, bool]:
    """Damped Newton on (F1, F2); steps are accepted only when they lower the cost."""
    for it in range(max_iter):
        try:
            f0 = objective.residuals(k)
            if np.linalg.norm(f0) <= RESIDUAL_TOL:
                return k, cost, it, True
            jac = objective.jacobian(k, f0)
        except ParameterizationError:
            return k, cost, it, False
        step = np.linalg.lstsq(jac, -f0, rcond=None)[0]
        norm = np.linalg.norm(step)
        if not np.isfinite(norm) or norm == 0.0:
            return k, cost, it, False
        if norm > MAX_NEWTON_STEP:
            step *= MAX_NEWTON_STEP / norm
        t = 1.0
        while t >= 1.0 / 64:
            candidate = k + t * step
            c = objective.cost(candidate)
            if c < cost:
                k, cost = candidate, c
                break
            t /= 2
        else:
            return k, cost, it, False
    return k, cost, max_iter, False


def _refine(
    objective: _AxisObjective, start: np.ndarray, max_iter: int
) -> Tuple[np.ndarray, float, int]:
    k, cost = start, objective.cost(start)
    k, cost, iterations, _ = _newton(objective, k, cost, max_iter)
    if cost > ZERO_COST:
        result = minimize(
            objective.cost,
            k,
            method="Nelder-Mead",
            options={"maxiter": 2 * max_iter, "xatol": 1e-10, "fatol": 1e-15},
        )
        if result.fun < cost:
            k, cost = np.asarray(result.x, dtype=float), float(result.fun)
    return k, cost, iterations


def optimum_axis(
    subset: U2Subset,
    init: Tuple[float, float] = (0.0, 0.0),
    side: Side = Side.DOL,
    max_iter: int = 100,
    scan_points: int = SCAN_POINTS,
    seed: Optional[int] = 0,
    starts: int = MAX_STARTS,
) -> AxisSolution:
    """
    Find (kx, ky) minimizing the correction cost.

    Starts from ``init`` and from the ``starts`` lowest local minima of a
    scan_points x scan_points grid over [−4, 4]². Each start is refined by damped
    Newton on the stationarity residuals, then polished by Nelder-Mead on the cost, and
    the best refined point wins. The result never costs more than ``init``.

    DOR subsets are solved through the transpose identity: the DOR cost of {U_b} at
    (kx, ky) equals, up to a constant from the f = 1 members, the DOL cost of {U_bᵀ} at
    (kx, −ky).

    Raises:
        ParameterizationError: If the subset cannot be parameterized at ``init``.
    """
    init_triad = triad_from_k(*init)
    try:
        init_cost = correction_cost(subset, init_triad, side)
    except ParameterizationError as exc:
        raise ParameterizationError(f"subset cannot be parameterized at k={list(init)}") from exc
    if init_cost <= ZERO_COST:
        return AxisSolution(float(init[0]), float(init[1]), init_triad, init_cost)

    if side is Side.DOR:
        mirrored = optimum_axis(
            subset.transposed(),
            (init[0], -init[1]),
            Side.DOL,
            max_iter,
            scan_points,
            seed,
            starts,
        )
        k = np.array([mirrored.kx, -mirrored.ky])
        residual_pair, iterations = mirrored.residuals, mirrored.iterations
    else:
        objective = _AxisObjective(subset, np.random.default_rng(seed))
        best_k, best_cost, iterations = np.asarray(init, dtype=float), np.inf, 0
        for start in _scan_starts(objective, np.asarray(init, dtype=float), scan_points, starts):
            k, cost, steps = _refine(objective, start, max_iter)
            iterations += steps
            if cost < best_cost:
                best_k, best_cost = k, cost
        k = best_k
        try:
            residual_pair = tuple(float(v) for v in objective.residuals(k))
        except ParameterizationError:
            residual_pair = (float("nan"), float("nan"))
        logger.debug(
            f"optimum_axis: scan cost {best_cost:.3e} at k={np.round(k, 6).tolist()} "
            f"after {iterations} Newton steps, {objective.evaluations} evaluations"
        )

    triad = triad_from_k(float(k[0]), float(k[1]))
    try:
        cost = correction_cost(subset, triad, side)
    except ParameterizationError:
        cost = float("inf")
    if cost > init_cost:
        logger.debug(f"optimum_axis kept init: {cost:.3e} > {init_cost:.3e}")
        return AxisSolution(float(init[0]), float(init[1]), init_triad, init_cost)
    return AxisSolution(
        kx=float(k[0]),
        ky=float(k[1]),
        triad=triad,
        cost=cost,
        residuals=residual_pair,  # type: ignore[arg-type]
        iterations=iterations,
    )
