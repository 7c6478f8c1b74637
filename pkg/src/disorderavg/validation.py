"""Structural cross-checks of the generator against the exact averaged evolution.

The averaged evolution map at time t has a d^2 x d^2 matrix representation
F(t) = < kron(U(t), U(t)*) > on vectorized states (row-major double index).
From F one can reconstruct the time-local generator Q(t) = dF/dt * F(t)^-1 and
compare it entry by entry against the assembled master-equation generator;
this catches any sign or index-convention error in the rate assembly. These
routines run at small dimension only (dense d^2 x d^2 storage).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generator import PerturbativeGenerator
from .models import ModelBundle
from .noise import SharedGaussianNoise
from .states import _as_matrix, unitary_superoperator

_HG_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_hermite(n: int):
    if n not in _HG_CACHE:
        x, w = np.polynomial.hermite.hermgauss(n)
        _HG_CACHE[n] = (x, w / np.sqrt(np.pi))
    return _HG_CACHE[n]


@dataclass
class DynamicalMatrixEstimate:
    """F(t) per sample time, with per-entry statistical error (MC path only)."""

    times: np.ndarray
    matrices: np.ndarray           # (T, d^2, d^2)
    stderr: np.ndarray | None      # (T, d^2, d^2) real, None for quadrature
    n_real: int | None


def dynamical_matrix_quadrature(bundle: ModelBundle, times,
                                nodes: int = 180) -> DynamicalMatrixEstimate:
    """Deterministic F(t) for shared-scalar noise via Gauss-Hermite quadrature.

    Exact to quadrature precision; preferred over Monte Carlo wherever the
    noise is driven by a single Gaussian scalar.
    """
    noise = bundle.spectral.noise
    if not isinstance(noise, SharedGaussianNoise):
        raise TypeError("quadrature path requires a shared scalar noise model")
    ts = np.asarray(times, dtype=float)
    z, w = _gauss_hermite(nodes)
    xs = noise.scalar.center + np.sqrt(2.0) * noise.scalar.sigma * z
    d = bundle.dim
    out = np.zeros((ts.size, d * d, d * d), dtype=complex)
    for x, wt in zip(xs, w):
        h = bundle.hamiltonian(noise.weights * x)
        evals, u = np.linalg.eigh(h)
        for i, t in enumerate(ts):
            ut = (u * np.exp(-1j * evals * t)) @ u.conj().T
            out[i] += wt * unitary_superoperator(ut)
    return DynamicalMatrixEstimate(times=ts, matrices=out, stderr=None, n_real=None)


def dynamical_matrix_monte_carlo(bundle: ModelBundle, times, n_real: int,
                                 master_seed: int,
                                 chunk_size: int = 4096) -> DynamicalMatrixEstimate:
    """Monte Carlo estimate of F(t) with per-entry standard errors.

    All times share the same realizations (common random numbers), so finite
    differences of neighbouring times benefit from correlated noise
    cancellation.
    """
    ts = np.asarray(times, dtype=float)
    noise = bundle.spectral.noise
    d = bundle.dim
    s1 = np.zeros((ts.size, d * d, d * d), dtype=complex)
    s2 = np.zeros((ts.size, d * d, d * d), dtype=float)
    done = 0
    while done < n_real:
        b = min(chunk_size, n_real - done)
        shifts = np.stack([noise.sample_shifts(master_seed, done + i)
                           for i in range(b)])
        hs = np.zeros((b, d, d), dtype=complex)
        hs[:, np.arange(d), np.arange(d)] = bundle.spectral.energies[None, :] + shifts
        hs += bundle.alpha * bundle.coupling[None]
        evals, u = np.linalg.eigh(hs)
        for i, t in enumerate(ts):
            ut = (u * np.exp(-1j * evals * t)[:, None, :]) @ np.conj(np.transpose(u, (0, 2, 1)))
            f = np.einsum("bjr,bks->bjkrs", ut, ut.conj()).reshape(b, d * d, d * d)
            s1[i] += f.sum(axis=0)
            s2[i] += (np.abs(f) ** 2).sum(axis=0)
        done += b
    mean = s1 / n_real
    var = (s2 / n_real - np.abs(mean) ** 2) * n_real / max(n_real - 1, 1)
    err = np.sqrt(np.maximum(var, 0.0) / n_real)
    return DynamicalMatrixEstimate(times=ts, matrices=mean, stderr=err, n_real=n_real)


def neumann_inverse(f: np.ndarray, f0: np.ndarray, n_terms: int) -> np.ndarray:
    """Series inverse F^-1 = sum_n (Id - F0^-1 F)^n F0^-1, truncated.

    ``f0`` must be diagonal (directly invertible); the spectral radius of
    (Id - F0^-1 F) must be below one for convergence, which is checked.
    """
    f = np.asarray(f, dtype=complex)
    f0 = np.asarray(f0, dtype=complex)
    off = f0 - np.diag(np.diag(f0))
    if np.max(np.abs(off)) > 1e-12 * max(1.0, np.max(np.abs(f0))):
        raise ValueError("reference matrix must be diagonal")
    f0_inv = np.diag(1.0 / np.diag(f0))
    m = np.eye(f.shape[0], dtype=complex) - f0_inv @ f
    radius = np.max(np.abs(np.linalg.eigvals(m)))
    if radius >= 1.0:
        raise ValueError(f"series does not converge (spectral radius {radius:.3f})")
    acc = np.eye(f.shape[0], dtype=complex)
    power = np.eye(f.shape[0], dtype=complex)
    for _ in range(n_terms):
        power = power @ m
        acc = acc + power
    return acc @ f0_inv


def zeroth_order_dynamical_matrix(bundle: ModelBundle, t: float) -> np.ndarray:
    """Diagonal F at zero coupling: entries are the averaged phase factors."""
    sd = bundle.spectral
    d = sd.dim
    diag = np.empty(d * d, dtype=complex)
    for j in range(d):
        for k in range(d):
            diag[j * d + k] = 1.0 if j == k else complex(sd.averaged_phase(j, k, t))
    return np.diag(diag)


def numeric_generator(estimate_f, t: float, step: float = 1e-3,
                      cond_max: float = 1e8, richardson: bool = True):
    """Q(t) = dF/dt * F^-1 with central differences on the supplied F(t).

    ``estimate_f`` maps an array of times to stacked F matrices (evaluated on
    common realizations where statistical). With ``richardson`` the derivative
    combines steps h and h/2 for fourth-order accuracy; the step can then be
    kept large against any statistical noise.
    """
    if richardson:
        ts = np.array([t - step, t - step / 2, t, t + step / 2, t + step])
        fs = estimate_f(ts)
        d1 = (fs[4] - fs[0]) / (2 * step)
        d2 = (fs[3] - fs[1]) / step
        fdot = (4.0 * d2 - d1) / 3.0
        fmid = fs[2]
    else:
        ts = np.array([t - step, t, t + step])
        fs = estimate_f(ts)
        fdot = (fs[2] - fs[0]) / (2 * step)
        fmid = fs[1]
    cond = np.linalg.cond(fmid)
    if cond > cond_max:
        raise ValueError(f"F(t={t}) is ill-conditioned (cond={cond:.2e}); "
                         "restrict to earlier times")
    return fdot @ np.linalg.inv(fmid)


def generator_superoperator(gen: PerturbativeGenerator, t: float) -> np.ndarray:
    """Dense d^2 x d^2 matrix of the assembled right-hand side at time t.

    Built column by column from basis matrices; intended for d <= 12.
    """
    d = gen.dim
    if d > 12:
        raise ValueError("dense superoperator path is for d <= 12")
    q = np.zeros((d * d, d * d), dtype=complex)
    basis = np.zeros((d, d), dtype=complex)
    for r in range(d):
        for s in range(d):
            basis[r, s] = 1.0
            q[:, r * d + s] = gen.rhs(t, basis).ravel()
            basis[r, s] = 0.0
    return q


def qubit_rotated_oracle(bundle: ModelBundle, rho0, times) -> np.ndarray:
    """Analytic two-level trajectory via the mean-Hamiltonian eigenframe.

    In the frame that diagonalizes the mean Hamiltonian the dynamics reduce
    to pure dephasing: populations frozen, the coherence evolving as
    exp(-i*split*t - var*t^2/2) with the mean-level splitting ``split`` of the
    rotated frame and the shift-difference variance ``var``. Valid when the
    random splitting dominates the transverse coupling; terms of order
    coupling*var/splitting are neglected.
    """
    if bundle.dim != 2:
        raise ValueError("rotated-frame oracle is two-level only")
    ts = np.asarray(times, dtype=float)
    r0 = _as_matrix(rho0)
    hbar = bundle.mean_hamiltonian()
    evals, u = np.linalg.eigh(hbar)  # exact numeric frame, ascending
    split = float(evals[1] - evals[0])
    var = float(bundle.spectral.var_diff[0, 1])
    rr = u.conj().T @ r0 @ u
    out = np.empty((ts.size, 2, 2), dtype=complex)
    # rotated basis ordered by ascending energy; coherence rr[1,0] carries
    # exp(-i*split*t) since E_1 - E_0 = +split for element (1,0)
    for i, t in enumerate(ts):
        decay = np.exp(-0.5 * var * t * t)
        phase = np.exp(-1j * split * t)
        m = np.array([[rr[0, 0], rr[0, 1] * np.conj(phase) * decay],
                      [rr[1, 0] * phase * decay, rr[1, 1]]], dtype=complex)
        out[i] = u @ m @ u.conj().T
    return out
