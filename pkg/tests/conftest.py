"""Shared fixtures."""

import numpy as np
import pytest

from csdcompiler.matcore import haar_random_unitary


@pytest.fixture
def rng():
    """Seeded generator so failures reproduce."""
    return np.random.default_rng(1234)


@pytest.fixture
def u2():
    """Haar-random two-qubit unitary."""
    return haar_random_unitary(2, seed=7)


@pytest.fixture
def u3():
    """Haar-random three-qubit unitary."""
    return haar_random_unitary(3, seed=11)
