import numpy as np
import pytest

from disorderavg import (DensityMatrix, HermitianOperator, eigh_hermitian,
                         fidelity, gaussian_initial_state, liouville_flat,
                         liouville_pair, purity, total_coherence, trace)
from disorderavg.states import (sqrtm_psd, superop_hermiticity_defect,
                                unitary_superoperator)

from conftest import random_density_matrix, random_hermitian

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)


def test_trace_examples():
    assert trace(DensityMatrix.maximally_mixed(2)) == pytest.approx(1.0)
    e1 = np.zeros((3, 3), dtype=complex)
    e1[1, 1] = 1.0
    assert trace(DensityMatrix(e1)) == pytest.approx(1.0)
    assert trace(np.diag([0.3, 0.7]).astype(complex)) == pytest.approx(1.0)


def test_density_matrix_invariants():
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[1.0, 0.5], [0.0, 0.0]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityMatrix(0.7 * np.eye(2))  # trace != 1
    rho = DensityMatrix(0.5 * (np.eye(2) + SX))
    assert rho.smallest_eigenvalue() == pytest.approx(0.0, abs=1e-12)


def test_hermitian_operator_rejects_nonhermitian():
    with pytest.raises(ValueError):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))
    op = HermitianOperator(5 * SZ + SX)
    assert op.dim == 2


def test_fidelity_examples():
    rng = np.random.default_rng(5)
    rho = random_density_matrix(rng, 4)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)
    p0 = DensityMatrix.pure([1, 0])
    p1 = DensityMatrix.pure([0, 1])
    assert fidelity(p0, p1) == pytest.approx(0.0, abs=1e-12)
    # closed form: F(|0><0|, Id/2) = sqrt(1/2)
    assert fidelity(p0, DensityMatrix.maximally_mixed(2)) == pytest.approx(
        0.7071067811865476, abs=1e-12)


def test_fidelity_symmetry_and_errors():
    rng = np.random.default_rng(6)
    a = random_density_matrix(rng, 3)
    b = random_density_matrix(rng, 3)
    assert fidelity(a, b) == pytest.approx(fidelity(b, a), abs=1e-10)
    assert 0.0 < fidelity(a, b) < 1.0
    with pytest.raises(ValueError):
        fidelity(a, random_density_matrix(rng, 4))


def test_purity_and_coherence():
    assert total_coherence(np.diag([0.2, 0.5, 0.3])) == pytest.approx(0.0)
    plus = 0.5 * (np.eye(2) + SX)
    assert total_coherence(plus) == pytest.approx(1.0)
    assert purity(plus) == pytest.approx(1.0)
    # direct-summation oracle on the lattice initial state
    rho = gaussian_initial_state(30).matrix
    acc = 0.0
    for j in range(30):
        for k in range(30):
            if j != k:
                acc += abs(rho[j, k])
    assert total_coherence(rho) == pytest.approx(acc, rel=1e-12)


def test_eigh_examples():
    vals, _ = eigh_hermitian(SZ)
    assert np.allclose(vals, [-1.0, 1.0])
    vals, vecs = eigh_hermitian(SX)
    assert np.allclose(vals, [-1.0, 1.0])
    assert np.allclose(np.abs(vecs), 1 / np.sqrt(2))
    # mean qubit Hamiltonian 5*sz + sx: eigenvalues +-sqrt(104)/2
    vals, _ = eigh_hermitian(5 * SZ + SX)
    expected = np.sqrt(104.0) / 2.0
    assert np.allclose(vals, [-expected, expected])


def test_eigh_rejects_nonhermitian():
    with pytest.raises(ValueError):
        eigh_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))


@pytest.mark.parametrize("dim", [2, 5, 17, 64])
def test_eigh_reconstruction(dim):
    rng = np.random.default_rng(dim)
    h = random_hermitian(rng, dim)
    vals, vecs = eigh_hermitian(h)
    rec = (vecs * vals) @ vecs.conj().T
    assert np.linalg.norm(rec - h) / np.linalg.norm(h) <= 1e-12
    assert np.all(np.diff(vals) >= 0)


@pytest.mark.parametrize("dim", [2, 3, 7, 64])
def test_liouville_roundtrip(dim):
    for j in range(dim):
        for k in range(dim):
            flat = liouville_flat(j, k, dim)
            assert liouville_pair(flat, dim) == (j, k)
    # row-major ordering: (0,0), (0,1), ..., (1,0), ...
    assert liouville_flat(0, 1, dim) == 1
    assert liouville_flat(1, 0, dim) == dim
    with pytest.raises(ValueError):
        liouville_flat(dim, 0, dim)
    with pytest.raises(ValueError):
        liouville_pair(dim * dim, dim)


def test_superoperator_hermiticity_symmetry():
    rng = np.random.default_rng(11)
    h = random_hermitian(rng, 3)
    vals, vecs = np.linalg.eigh(h)
    u = (vecs * np.exp(-1j * vals * 0.7)) @ vecs.conj().T
    f = unitary_superoperator(u)
    assert superop_hermiticity_defect(f) <= 1e-14
    # and it acts as rho -> U rho U^dag on vectorized states
    rho = random_density_matrix(rng, 3)
    direct = u @ rho @ u.conj().T
    assert np.allclose((f @ rho.ravel()).reshape(3, 3), direct, atol=1e-13)


def test_sqrtm_psd():
    rng = np.random.default_rng(3)
    rho = random_density_matrix(rng, 4)
    s = sqrtm_psd(rho)
    assert np.allclose(s @ s, rho, atol=1e-12)
