import numpy as np
import pytest

from disorderavg import (BoseHubbardModel, LatticeModel, QubitModel,
                         build_bose_hubbard, build_lattice, build_qubit)


@pytest.fixture(scope="session")
def qubit_bundle():
    return build_qubit(QubitModel(center=10.0, sigma=1.0, alpha=1.0))


@pytest.fixture(scope="session")
def boson_bundle():
    return build_bose_hubbard(BoseHubbardModel())


@pytest.fixture(scope="session")
def small_lattice_bundle():
    return build_lattice(LatticeModel(dim=6, coupling="x0"))


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (a + a.conj().T)
