import numpy as np
import pytest

from sepair.operators.cstar_modules.models import ModuleVector
from sepair.operators.hilbert_core.models import Tolerance
from sepair.operators.hilbert_core.tools import orthonormalize


def complex_gaussian(rng: np.random.Generator, *shape) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_subspace(rng: np.random.Generator, d: int, k: int):
    return orthonormalize(complex_gaussian(rng, d, k))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def tol():
    return Tolerance()


@pytest.fixture
def make_subspace(rng):
    def _make(d: int, k: int):
        return random_subspace(rng, d, k)

    return _make


@pytest.fixture
def e():
    """Standard basis vectors: e(3, 1) is e1 in C^3."""

    def _basis(d: int, i: int) -> np.ndarray:
        vector = np.zeros(d, dtype=np.complex128)
        vector[i - 1] = 1.0
        return vector

    return _basis


def random_module_vector(module, rng: np.random.Generator):
    """A random element of A^m whose blocks have random (possibly deficient) rank."""
    coords = []
    for _ in range(module.m):
        blocks = []
        for n in module.algebra.block_dims:
            rank = int(rng.integers(0, n + 1))
            blocks.append(complex_gaussian(rng, n, rank) @ complex_gaussian(rng, rank, n))
        coords.append(module.algebra.element(blocks))
    return ModuleVector(coords=coords)
