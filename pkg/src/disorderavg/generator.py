"""First-order perturbative generator of the disorder-averaged dynamics.

Element-wise, with Pi_jk = |j><k| and the rates of :mod:`disorderavg.rates`,
the averaged state obeys (hbar = 1, all indices 0-based)

    d rho_jk / dt = ups_jk(t) rho_jk                       (dephasing)
                  - i alpha [V, rho]_jk                    (coherent coupling)
                  + alpha gamma_jk(t) V_jk (rho_kk - rho_jj)      (j != k)
                  + alpha sum_{r != j,k} [ Gamma_jkr(t) V_jr rho_rk
                          + conj(Gamma_kjr(t)) V_rk rho_jr ]      (j != k)

    d rho_jj / dt = -i alpha [V, rho]_jj .

The commutator is kept explicit and the gamma/Gamma rates vanish at t = 0, so
at t = 0 the right-hand side reduces to the von Neumann generator of the mean
Hamiltonian. The assembly preserves Hermiticity and trace identically and is
unital (the maximally mixed state is a fixed point).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ode import OdeResult, integrate_adaptive
from .rates import RateTable, SpectralData
from .states import DensityMatrix, _as_matrix, eigh_hermitian, total_coherence

DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    """Output sample times 0, step, 2*step, ..., t_max (units 1/omega0)."""

    t_max: float
    step: float
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL

    def __post_init__(self):
        if not (self.t_max > 0 and self.step > 0):
            raise ValueError("t_max and step must be positive")

    def times(self) -> np.ndarray:
        n = int(round(self.t_max / self.step))
        return np.linspace(0.0, n * self.step, n + 1)


@dataclass(frozen=True)
class Trajectory:
    """Sampled averaged states plus derived observables."""

    times: np.ndarray
    states: np.ndarray  # (n_times, d, d) complex

    @property
    def dim(self) -> int:
        return self.states.shape[-1]

    def state(self, i: int) -> np.ndarray:
        return self.states[i]

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def element(self, j: int, k: int) -> np.ndarray:
        return self.states[:, j, k]

    def coherence(self) -> np.ndarray:
        return np.array([total_coherence(s) for s in self.states])

    def purity(self) -> np.ndarray:
        return np.real(np.einsum("tjk,tkj->t", self.states, self.states))

    def trace_error(self) -> float:
        return float(np.max(np.abs(np.einsum("tjj->t", self.states) - 1.0)))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.states - self.states.conj().transpose(0, 2, 1))))

    def positivity_floor(self) -> float:
        """Smallest eigenvalue over the whole trajectory (monitored, not enforced)."""
        return float(min(np.linalg.eigvalsh(s)[0] for s in self.states))


class PerturbativeGenerator:
    """Right-hand side assembly and integrator for the averaged master equation."""

    def __init__(self, spectral: SpectralData, coupling, alpha: float,
                 gamma_mode: str = "full", big_gamma_mode: str = "quadrature"):
        v = _as_matrix(coupling)
        d = spectral.dim
        if v.shape != (d, d):
            raise ValueError(f"coupling must be {d}x{d}")
        if np.max(np.abs(np.diag(v))) > 1e-12:
            raise ValueError("coupling matrix must have zero diagonal")
        if np.max(np.abs(v - v.conj().T)) > 1e-9 * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("coupling matrix must be Hermitian")
        if alpha < 0:
            raise ValueError("alpha must be >= 0")
        if alpha > 0:
            spectral.validate_coupling(v, alpha)
        self.spectral = spectral
        self.coupling = v
        self.alpha = float(alpha)
        self.rates = RateTable(spectral, v if alpha > 0 else np.zeros_like(v),
                               gamma_mode=gamma_mode, big_gamma_mode=big_gamma_mode)
        self._pop_mask = self.rates.coupling_mask

    @property
    def dim(self) -> int:
        return self.spectral.dim

    def mean_hamiltonian(self) -> np.ndarray:
        return np.diag(self.spectral.mean_energies.astype(complex)) \
            + self.alpha * self.coupling

    def rhs(self, t: float, rho) -> np.ndarray:
        """d rho / dt at time t. Traceless; Hermitian for Hermitian input."""
        m = _as_matrix(rho)
        v = self.coupling
        a = self.alpha
        out = self.rates.upsilon_matrix(t) * m
        if a > 0:
            out = out - 1j * a * (v @ m - m @ v)
            g = self.rates.gamma_matrix(t)
            if g.any():
                pop = np.real(np.diag(m))
                out = out + a * g * v * (pop[None, :] - pop[:, None])
            big = self.rates.big_gamma_tensor(t)
            if big is not None:
                out = out + a * (np.einsum("jkr,jr,rk->jk", big, v, m)
                                 + np.einsum("kjr,rk,jr->jk", big.conj(), v, m))
        return out

    def integrate(self, rho0, grid: TimeGrid) -> Trajectory:
        """Propagate the averaged state over the grid.

        Each accepted step re-symmetrizes rho <- (rho + rho^dag)/2, which
        removes numerical anti-Hermitian drift without changing the solution.
        Trace drift beyond 10x the absolute tolerance aborts.
        """
        r0 = _as_matrix(rho0)
        d = self.dim
        if r0.shape != (d, d):
            raise ValueError(f"initial state must be {d}x{d}")
        DensityMatrix(r0, tol=1e-7)  # validates hermiticity and unit trace
        self.rates.tabulate(grid.t_max)

        def f(t, y):
            return self.rhs(t, y.reshape(d, d)).ravel()

        def symmetrize(y):
            m = y.reshape(d, d)
            return (0.5 * (m + m.conj().T)).ravel()

        res: OdeResult = integrate_adaptive(
            f, r0.ravel(), grid.times(),
            rel_tol=grid.rel_tol, abs_tol=grid.abs_tol, post_step=symmetrize)
        states = res.states.reshape(-1, d, d)
        traj = Trajectory(times=res.times, states=states)
        drift = traj.trace_error()
        if drift > 10 * grid.abs_tol:
            raise RuntimeError(f"trace drifted by {drift:.3e} during integration")
        return traj


def short_time_rhs(mean_hamiltonian, shift_covariance, t: float, rho) -> np.ndarray:
    """Leading-order generator valid for t << 1 (Gaussian-decay regime).

    d rho / dt = -i [Hbar, rho] - t * var(omega_jk) * rho_jk elementwise,
    where var(omega_jk) = C_jj + C_kk - 2 C_jk comes from the covariance C of
    the level shifts. The elementwise coefficient is written in Lindblad form
    (C_jk - (C_jj + C_kk)/2), which preserves the trace exactly.
    """
    h = _as_matrix(mean_hamiltonian)
    m = _as_matrix(rho)
    c = np.asarray(shift_covariance, dtype=float)
    dvar = np.diag(c)
    coeff = 2.0 * t * (c - 0.5 * (dvar[:, None] + dvar[None, :]))
    return -1j * (h @ m - m @ h) + coeff * m


def asymptotic_state(mean_hamiltonian, rho0, degeneracy_tol: float = 1e-9):
    """Projection of rho0 onto the eigenprojectors of the mean Hamiltonian.

    This is the late-time limit of the averaged dynamics at first order: the
    ensemble average dephases in the eigenbasis of the mean Hamiltonian, so
    only the block-diagonal part of the initial state survives. Degenerate
    eigenvalues make the projection ill-defined and raise.
    """
    h = _as_matrix(mean_hamiltonian)
    r0 = _as_matrix(rho0)
    vals, vecs = eigh_hermitian(h)
    gaps = np.diff(vals)
    scale = max(float(np.max(np.abs(vals))), 1.0)
    if gaps.size and gaps.min() <= degeneracy_tol * scale:
        raise ValueError("mean Hamiltonian has (near-)degenerate eigenvalues; "
                         "the asymptotic projection is ill-defined")
    if gaps.size and gaps.min() <= 1e-6 * scale:
        warnings.warn("mean Hamiltonian is nearly degenerate; asymptotic "
                      "projection may be inaccurate", stacklevel=2)
    rot = vecs.conj().T @ r0 @ vecs
    return vecs @ np.diag(np.diag(rot)) @ vecs.conj().T
