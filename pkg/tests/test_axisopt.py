"""Tests for the weak-axis optimizer."""

import numpy as np
import pytest

from csdcompiler.axisopt import (
    AxisSolution,
    U2Subset,
    correction_cost,
    cost_surface,
    member_gammas,
    optimum_axis,
    residuals,
    triad_from_k,
)
from csdcompiler.circuits.model import rotation_matrix
from csdcompiler.matcore import haar_random_unitary
from csdcompiler.su2param import Side, Triad


def strong_plane_subset(kx, ky, angles):
    """Members that are pure rotations in the strong plane of triad_from_k(kx, ky)."""
    triad = triad_from_k(kx, ky)
    members = [
        rotation_matrix(np.cos(phi) * triad.s1 + np.sin(phi) * triad.s2, theta)
        for phi, theta in angles
    ]
    return U2Subset(members)


@pytest.fixture
def tilted_subset():
    return strong_plane_subset(1.0, -1.0, [(0.2, 0.5), (1.3, 0.9)])


def grid_minimum(subset, side=Side.DOL, points=32):
    axis = np.linspace(-4.0, 4.0, points)
    return min(correction_cost(subset, triad_from_k(kx, ky), side) for kx in axis for ky in axis)


class TestU2Subset:
    """Test subset validation."""

    def test_default_flags(self):
        subset = U2Subset([np.eye(2), np.eye(2)])
        assert subset.flags == [0, 0]

    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            U2Subset([np.eye(2)] * 3)

    def test_rejects_bad_flags(self):
        with pytest.raises(ValueError):
            U2Subset([np.eye(2)] * 2, [0, 2])

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            U2Subset([2 * np.eye(2)])

    def test_transposed(self):
        u = haar_random_unitary(1, 1)
        assert np.array_equal(U2Subset([u]).transposed().members[0], u.T)


class TestTriadFromK:
    """Test the (kx, ky) parameterization."""

    def test_origin_is_standard(self):
        assert np.allclose(triad_from_k(0.0, 0.0).w, Triad.standard().w)

    def test_weak_axis_direction(self):
        triad = triad_from_k(0.5, -2.0)
        expected = np.array([0.5, -2.0, 1.0]) / np.sqrt(1 + 0.25 + 4.0)
        assert np.allclose(triad.w, expected)
        assert triad.s1[2] == 0.0


class TestCost:
    """Test the correction cost and its stationarity residuals."""

    def test_cost_is_non_negative(self):
        subset = U2Subset([haar_random_unitary(1, s) for s in range(4)], [0, 1, 0, 1])
        assert correction_cost(subset, triad_from_k(0.3, 0.1)) >= 0.0

    def test_cost_vanishes_on_own_triad(self, tilted_subset):
        assert correction_cost(tilted_subset, triad_from_k(1.0, -1.0)) < 1e-12
        assert correction_cost(tilted_subset, Triad.standard()) > 1e-3

    def test_member_gammas_shape(self, tilted_subset):
        assert member_gammas(tilted_subset, Triad.standard()).shape == (2,)

    def test_residuals_vanish_at_zero_cost(self):
        subset = strong_plane_subset(0.0, 0.0, [(0.0, 0.3), (np.pi / 2, 0.4)])
        f1, f2 = residuals(0.0, 0.0, subset)
        assert f1 == pytest.approx(0.0, abs=1e-10)
        assert f2 == pytest.approx(0.0, abs=1e-10)


class TestOptimumAxis:
    """Test the optimizer against a grid oracle."""

    def test_finds_the_strong_plane(self, tilted_subset):
        solution = optimum_axis(tilted_subset)
        assert solution.cost < 1e-8
        assert solution.cost <= grid_minimum(tilted_subset) + 1e-3
        assert np.allclose(solution.triad.w, triad_from_k(1.0, -1.0).w, atol=1e-4)

    def test_dor_side(self, tilted_subset):
        solution = optimum_axis(tilted_subset, side=Side.DOR)
        assert solution.cost <= grid_minimum(tilted_subset, Side.DOR) + 1e-3
        assert solution.cost == pytest.approx(
            correction_cost(tilted_subset, solution.triad, Side.DOR)
        )

    def test_zero_cost_init_is_returned(self, tilted_subset):
        solution = optimum_axis(tilted_subset, init=(1.0, -1.0))
        assert (solution.kx, solution.ky) == (1.0, -1.0)
        assert solution.iterations == 0

    @pytest.mark.parametrize("seed", [3, 8])
    def test_never_worse_than_init(self, seed):
        members = [haar_random_unitary(1, seed * 10 + b) for b in range(4)]
        subset = U2Subset(members, [0, 1, 1, 0])
        init_cost = correction_cost(subset, Triad.standard())
        for side in (Side.DOL, Side.DOR):
            solution = optimum_axis(subset, side=side, max_iter=30)
            assert solution.cost <= correction_cost(subset, Triad.standard(), side) + 1e-12
        assert init_cost >= 0.0

    def test_solution_to_dict(self, tilted_subset):
        data = optimum_axis(tilted_subset).to_dict()
        assert set(data) == {"kx", "ky", "cost", "residuals", "iterations"}

    def test_reported_cost_matches_triad(self):
        members = [haar_random_unitary(1, 40 + b) for b in range(2)]
        subset = U2Subset(members)
        solution = optimum_axis(subset, max_iter=20)
        assert isinstance(solution, AxisSolution)
        assert solution.cost == pytest.approx(correction_cost(subset, solution.triad), abs=1e-12)


def random_subset(seed, size=4, flags=None):
    members = [haar_random_unitary(1, seed * 100 + b) for b in range(size)]
    if flags is None:
        flags = list(np.random.default_rng(seed).integers(0, 2, size=size))
    return U2Subset(members, [int(f) for f in flags])


def shifted_k(kx, ky, direction, step):
    """(kx, ky) of the axis ŵ + step·direction, renormalized."""
    w = triad_from_k(kx, ky).w + step * direction
    return w[0] / w[2], w[1] / w[2]


class TestCostSurface:
    """Test the vectorized cost against the member-by-member factorization."""

    @pytest.mark.parametrize("seed", [1, 2, 3])
    def test_matches_correction_cost(self, seed):
        subset = random_subset(seed)
        rng = np.random.default_rng(seed)
        kx, ky = rng.uniform(-4.0, 4.0, size=(2, 20))
        surface = cost_surface(subset, kx, ky)
        assert surface.shape == (20,)
        for i in range(20):
            exact = correction_cost(subset, triad_from_k(kx[i], ky[i]))
            assert surface[i] == pytest.approx(exact, abs=1e-9)

    def test_grid_shape(self, tilted_subset):
        axis = np.linspace(-1.0, 1.0, 5)
        kx, ky = np.meshgrid(axis, axis, indexing="ij")
        assert cost_surface(tilted_subset, kx, ky).shape == (5, 5)

    def test_flipped_members_do_not_depend_on_axis(self):
        subset = random_subset(4, flags=[1, 1, 1, 1])
        costs = cost_surface(subset, np.array([0.0, 1.5, -3.0]), np.array([0.0, -0.7, 2.2]))
        assert np.allclose(costs, costs[0], atol=1e-12)


class TestResidualGradient:
    """Residuals are the directional derivatives of the cost along the strong axes."""

    @pytest.mark.parametrize("seed", [5, 6, 7, 8])
    def test_matches_central_difference(self, seed):
        subset = random_subset(seed)
        kx, ky = np.random.default_rng(seed).uniform(-2.0, 2.0, size=2)
        triad = triad_from_k(kx, ky)
        f = residuals(kx, ky, subset)
        eps = 1e-6
        for j, direction in enumerate((triad.s1, triad.s2)):
            plus = correction_cost(subset, triad_from_k(*shifted_k(kx, ky, direction, eps)))
            minus = correction_cost(subset, triad_from_k(*shifted_k(kx, ky, direction, -eps)))
            derivative = (plus - minus) / (2 * eps)
            assert 4.0 * f[j] == pytest.approx(derivative, rel=1e-4, abs=1e-6)

    def test_reported_residuals_match(self):
        subset = random_subset(9, flags=[0, 0, 0, 0])
        solution = optimum_axis(subset)
        exact = residuals(solution.kx, solution.ky, subset)
        assert np.allclose(solution.residuals, exact, atol=1e-8)


class TestGridOracle:
    """The optimizer matches or beats a dense 64 x 64 grid over [-4, 4]^2."""

    @pytest.mark.parametrize("seed", [11, 12, 13, 14, 15, 16])
    def test_beats_grid(self, seed):
        subset = random_subset(seed)
        axis = np.linspace(-4.0, 4.0, 64)
        kx, ky = np.meshgrid(axis, axis, indexing="ij")
        oracle = float(cost_surface(subset, kx, ky).min())
        solution = optimum_axis(subset)
        assert solution.cost <= oracle + 1e-3

    def test_beats_member_by_member_grid(self):
        subset = random_subset(21, flags=[0, 0, 1, 0])
        solution = optimum_axis(subset)
        assert solution.cost <= grid_minimum(subset, points=24) + 1e-3

    @pytest.mark.parametrize("seed", [31, 32])
    def test_common_axis_family_reaches_zero(self, seed):
        rng = np.random.default_rng(seed)
        kx, ky = rng.uniform(-3.0, 3.0, size=2)
        angles = [tuple(rng.uniform(0.0, 1.4, size=2)) for _ in range(4)]
        solution = optimum_axis(strong_plane_subset(kx, ky, angles))
        assert solution.cost <= 1e-9
