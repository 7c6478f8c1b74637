"""Dense states and operators in a fixed d-dimensional quantization basis.

Everything works in natural units: hbar = 1 and the reference angular
frequency omega0 = 1, so energies are dimensionless and times are measured
in 1/omega0. All heavy lifting is plain numpy on complex arrays; the
wrapper classes only validate invariants at construction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_TOL = 1e-9
TRACE_TOL = 1e-9


def _as_matrix(obj) -> np.ndarray:
    """Accept a wrapper (DensityMatrix/HermitianOperator) or a bare array."""
    m = getattr(obj, "matrix", obj)
    return np.asarray(m, dtype=complex)


def hermiticity_defect(m: np.ndarray) -> float:
    """Frobenius norm of the anti-Hermitian part."""
    m = np.asarray(m)
    return float(np.linalg.norm(m - m.conj().T))


@dataclass(frozen=True)
class HermitianOperator:
    """A d x d Hermitian matrix, energies in units of hbar*omega0."""

    matrix: np.ndarray
    tol: float = HERMITICITY_TOL

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        scale = max(float(np.linalg.norm(m)), 1.0)
        if hermiticity_defect(m) > self.tol * scale:
            raise ValueError("operator is not Hermitian within tolerance")
        object.__setattr__(self, "matrix", 0.5 * (m + m.conj().T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace d x d state.

    Positivity is not enforced here: states produced by the perturbative
    master equation may transiently acquire small negative eigenvalues,
    which are monitored (``smallest_eigenvalue``) rather than clamped.
    """

    matrix: np.ndarray
    tol: float = field(default=TRACE_TOL)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"state must be square, got shape {m.shape}")
        if hermiticity_defect(m) > max(self.tol, HERMITICITY_TOL):
            raise ValueError("state is not Hermitian within tolerance")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > max(self.tol, TRACE_TOL):
            raise ValueError(f"state trace {tr} differs from 1 beyond tolerance")
        object.__setattr__(self, "matrix", 0.5 * (m + m.conj().T))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, amplitudes) -> "DensityMatrix":
        """|psi><psi| from a (not necessarily normalized) amplitude vector."""
        v = np.asarray(amplitudes, dtype=complex).ravel()
        n = np.linalg.norm(v)
        if n == 0:
            raise ValueError("zero state vector")
        v = v / n
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    def smallest_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


def trace(rho) -> complex:
    return complex(np.trace(_as_matrix(rho)))


def purity(rho) -> float:
    m = _as_matrix(rho)
    return float(np.real(np.einsum("jk,kj->", m, m)))


def total_coherence(rho) -> float:
    """Sum of |rho_jk| over all off-diagonal elements."""
    m = _as_matrix(rho)
    return float(np.sum(np.abs(m)) - np.sum(np.abs(np.diag(m))))


def eigh_hermitian(op, tol: float = 1e-9):
    """Eigendecomposition H = U diag(E) U^dag with ascending real eigenvalues.

    Raises if the input is not Hermitian within ``tol`` (relative to norm).
    """
    m = _as_matrix(op)
    scale = max(float(np.linalg.norm(m)), 1.0)
    if hermiticity_defect(m) > tol * scale:
        raise ValueError("eigh_hermitian: input is not Hermitian within tolerance")
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return vals, vecs


def sqrtm_psd(rho, clip: float = 0.0) -> np.ndarray:
    """Hermitian square root with eigenvalues clipped below at ``clip``."""
    m = _as_matrix(rho)
    vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    vals = np.clip(vals, clip, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity F = Tr sqrt(sqrt(rho) sigma sqrt(rho)).

    Both arguments must be unit-trace states of the same dimension. Small
    negative eigenvalues (statistical or integrator noise) are clipped to
    zero inside the square roots; the result is clamped to [0, 1].
    """
    a = _as_matrix(rho)
    b = _as_matrix(sigma)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    sa = sqrtm_psd(a)
    inner = sa @ b @ sa
    vals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    f = float(np.sum(np.sqrt(np.clip(vals, 0.0, None))))
    return min(max(f, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Liouville-space double-index bookkeeping
#
# Pairs (j, k) are 0-based and map to the flat index j*d + k, i.e. row-major
# ordering (0,0), (0,1), ..., (0,d-1), (1,0), ...  This matches the layout
# produced by numpy.kron(U, U.conj()) acting on vectorized matrices.
# ---------------------------------------------------------------------------

def liouville_flat(j: int, k: int, dim: int) -> int:
    if not (0 <= j < dim and 0 <= k < dim):
        raise ValueError(f"pair ({j},{k}) out of range for dim {dim}")
    return j * dim + k


def liouville_pair(index: int, dim: int) -> tuple[int, int]:
    if not (0 <= index < dim * dim):
        raise ValueError(f"flat index {index} out of range for dim {dim}")
    return divmod(index, dim)


def unitary_superoperator(u: np.ndarray) -> np.ndarray:
    """d^2 x d^2 matrix of rho -> U rho U^dag on vectorized states."""
    u = np.asarray(u, dtype=complex)
    return np.kron(u, u.conj())


def superop_hermiticity_defect(f: np.ndarray) -> float:
    """Max |F_{jk,rs} - conj(F_{kj,sr})| over all double-index entries.

    Zero for any map that sends Hermitian matrices to Hermitian matrices.
    """
    f = np.asarray(f)
    d2 = f.shape[0]
    d = int(round(np.sqrt(d2)))
    g = f.reshape(d, d, d, d)
    return float(np.max(np.abs(g - g.transpose(1, 0, 3, 2).conj())))
