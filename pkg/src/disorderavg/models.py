"""The three benchmark systems, packaged for both the generator and the oracle.

Each builder returns a :class:`ModelBundle` carrying the spectral data
(noise-free energies + noise model), the Hermitian zero-diagonal coupling
matrix V, the perturbation strength alpha, and a default initial state.
Energies are in units of hbar*omega0, times in 1/omega0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import (GaussianScalar, IndependentGaussianNoise,
                    SharedGaussianNoise)
from .rates import SpectralData
from .states import DensityMatrix

LATTICE_COUPLINGS = ("x0", "x1", "x3", "nn", "none")


@dataclass(frozen=True)
class ModelBundle:
    """Everything needed to run one system through either evolution path."""

    label: str
    spectral: SpectralData
    coupling: np.ndarray
    alpha: float
    rho0: DensityMatrix

    @property
    def dim(self) -> int:
        return self.spectral.dim

    def mean_hamiltonian(self) -> np.ndarray:
        return np.diag(self.spectral.mean_energies.astype(complex)) \
            + self.alpha * self.coupling

    def hamiltonian(self, shifts: np.ndarray) -> np.ndarray:
        """One noise realization: H = diag(eps + shifts) + alpha * V."""
        return np.diag((self.spectral.energies + shifts).astype(complex)) \
            + self.alpha * self.coupling


# ---------------------------------------------------------------------------
# Two-level system with a random splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QubitModel:
    """H = (x/2) sigma_z + alpha sigma_x with x ~ N(center, sigma^2).

    The non-degeneracy condition |center| >~ sigma + alpha keeps the random
    splitting dominant over the transverse coupling.
    """

    center: float = 10.0
    sigma: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if abs(self.center) < self.sigma + self.alpha:
            raise ValueError(
                f"|center|={abs(self.center)} must exceed sigma+alpha="
                f"{self.sigma + self.alpha} for the perturbative regime")


def build_qubit(model: QubitModel) -> ModelBundle:
    noise = SharedGaussianNoise(GaussianScalar(model.center, model.sigma),
                                weights=np.array([0.5, -0.5]))
    spectral = SpectralData(energies=np.zeros(2), noise=noise)
    v = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    rho0 = DensityMatrix(0.5 * np.array([[1, 1], [1, 1]], dtype=complex))
    return ModelBundle("qubit", spectral, v, model.alpha, rho0)


# ---------------------------------------------------------------------------
# Tilted lattice with independent on-site disorder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeModel:
    """d-site chain: eps_j = j*T, i.i.d. Gaussian on-site shifts, coupling V.

    ``coupling`` picks the range: "nn" for nearest neighbours, "x0"/"x1"/"x3"
    for 1/|k-j|^x with x = 0, 1, 3, or "none". The tilt T sets the smallest
    coupled level spacing, so T >> sigma is required for the rates to apply.
    """

    dim: int = 30
    tilt: float = 10.0
    sigma: float = 1.0
    alpha: float = 1.0
    coupling: str = "x0"

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("need at least two sites")
        if self.tilt == 0:
            raise ValueError("tilt must be nonzero (degenerate levels otherwise)")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if self.coupling not in LATTICE_COUPLINGS:
            raise ValueError(f"coupling must be one of {LATTICE_COUPLINGS}")


def lattice_coupling_matrix(dim: int, kind: str) -> np.ndarray:
    v = np.zeros((dim, dim), dtype=complex)
    if kind == "none":
        return v
    if kind == "nn":
        for j in range(dim - 1):
            v[j, j + 1] = v[j + 1, j] = 1.0
        return v
    x = float(kind[1:])
    for j in range(dim):
        for k in range(j + 1, dim):
            v[j, k] = v[k, j] = 1.0 / abs(k - j) ** x
    return v


def gaussian_initial_state(dim: int) -> DensityMatrix:
    """Pure state with a Gaussian amplitude profile over the sites.

    Amplitudes are proportional to a Gaussian density centred mid-chain at
    (d+1)/2 with width sqrt(d) (site labels 1..d), then L2-normalized.
    """
    if dim < 2:
        raise ValueError("need at least two sites")
    sites = np.arange(1, dim + 1, dtype=float)
    amp = np.exp(-((sites - (dim + 1) / 2.0) ** 2) / (2.0 * dim))
    return DensityMatrix.pure(amp)


def build_lattice(model: LatticeModel) -> ModelBundle:
    import warnings
    if abs(model.tilt) <= 3 * model.sigma:
        warnings.warn("tilt is not large against sigma; coupled levels may "
                      "come close to degeneracy", stacklevel=2)
    noise = IndependentGaussianNoise.iid(model.dim, model.sigma)
    eps = model.tilt * np.arange(1, model.dim + 1, dtype=float)
    spectral = SpectralData(energies=eps, noise=noise)
    v = lattice_coupling_matrix(model.dim, model.coupling)
    rho0 = gaussian_initial_state(model.dim)
    return ModelBundle(f"lattice_{model.coupling}", spectral, v, model.alpha, rho0)


# ---------------------------------------------------------------------------
# Bosons in an asymmetric double well with random interaction strength
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoseHubbardModel:
    """N bosons on two modes: interaction U0 (with Gaussian noise of width
    sigma), tilt T between the wells, hopping J scaled by alpha.

    Fock ordering |N,0>, |N-1,1>, ..., |0,N> (m right-well bosons at position
    m, 0-based). The unperturbed energies are E_m = beta_m U0 + chi_m T with

        beta_m = m(m-1)/2 + (N-m)(N-m-1)/2,    chi_m = 2m - N,

    so the interaction noise enters all levels through the shared weights
    beta_m: a strongly correlated noise model.
    """

    bosons: int = 3
    hopping: float = 1.0
    interaction: float = 1.0
    tilt: float = 10.0
    sigma: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.bosons < 1:
            raise ValueError("need at least one boson")
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")
        if abs(self.tilt) <= 3 * self.sigma:
            raise ValueError("tilt must dominate the interaction noise "
                             f"(|T|={abs(self.tilt)} vs sigma={self.sigma})")
        if not self.alpha * self.hopping < abs(self.interaction + self.tilt):
            raise ValueError("alpha*J must stay below |U0 + T| for the "
                             "perturbative treatment")


def bose_hubbard_weights(bosons: int) -> tuple[np.ndarray, np.ndarray]:
    """(beta_m, chi_m) for m = 0..N in the |N-m, m> Fock ordering."""
    m = np.arange(bosons + 1, dtype=float)
    beta = 0.5 * m * (m - 1) + 0.5 * (bosons - m) * (bosons - m - 1)
    chi = 2 * m - bosons
    return beta, chi


def bose_hubbard_hopping_matrix(bosons: int) -> np.ndarray:
    """Two-mode hopping -(a_L^dag a_R + a_R^dag a_L) in the Fock ordering.

    Between |N-m, m> and |N-m-1, m+1> the matrix element is
    -sqrt((N-m)(m+1)); the prefactor J is applied by the builder.
    """
    n = bosons + 1
    v = np.zeros((n, n), dtype=complex)
    for m in range(bosons):
        amp = -np.sqrt((bosons - m) * (m + 1))
        v[m, m + 1] = v[m + 1, m] = amp
    return v


def build_bose_hubbard(model: BoseHubbardModel) -> ModelBundle:
    beta, chi = bose_hubbard_weights(model.bosons)
    eps = beta * model.interaction + chi * model.tilt
    noise = SharedGaussianNoise(GaussianScalar(0.0, model.sigma), weights=beta)
    spectral = SpectralData(energies=eps, noise=noise)
    v = model.hopping * bose_hubbard_hopping_matrix(model.bosons)
    dim = model.bosons + 1
    rho0 = DensityMatrix.pure(np.ones(dim))
    return ModelBundle("bose_hubbard", spectral, v, model.alpha, rho0)
