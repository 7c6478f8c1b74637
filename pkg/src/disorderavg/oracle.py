"""Direct Monte Carlo averaging over noise realizations (the brute-force oracle).

Each realization draws a joint shift vector, builds the corresponding
Hamiltonian, evolves the initial state unitarily through one eigendecomposition
(exact at every output time), and the mean state is accumulated together with
elementwise second moments for statistical error estimates.

Reproducibility contract
------------------------
Realization i draws from a Philox stream keyed by (master_seed, i), so samples
never depend on scheduling. Realizations are processed in fixed-size chunks;
within a chunk the partial sums accumulate in a fixed order (numpy's pairwise
batch reduction on the pure-state path, realization order on the general
path), and chunk partials are merged through a binary-counter pairwise tree
in chunk order. Two runs with the same (master_seed, n_real, chunk_size)
therefore produce bit-identical means regardless of the worker count.

Checkpointing
-------------
``average`` can persist its reduction state (version, realizations done,
partial sums of rho, |rho|^2 and rho^2 per element) and resume a long run.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

import numpy as np

from .models import ModelBundle
from .states import _as_matrix

CHECKPOINT_VERSION = 1
THREADS_ENV_VAR = "DISORDERAVG_THREADS"
_PURITY_PURE_TOL = 1e-12


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def evolve_one(hamiltonian, rho0, times) -> np.ndarray:
    """Unitary evolution of one realization at all output times.

    rho(t) = U exp(-i E t) U^dag rho0 U exp(+i E t) U^dag via a single
    eigendecomposition; purity is conserved exactly up to linear algebra
    precision.
    """
    h = _as_matrix(hamiltonian)
    r0 = _as_matrix(rho0)
    ts = np.asarray(times, dtype=float)
    evals, u = np.linalg.eigh(h)
    r_eig = u.conj().T @ r0 @ u
    phases = np.exp(-1j * np.outer(ts, evals))          # (T, d)
    kernel = phases[:, :, None] * phases.conj()[:, None, :]  # exp(-i(E_a-E_b)t)
    return np.einsum("ma,tab,nb->tmn", u, kernel * r_eig[None], u.conj())


@dataclass(frozen=True)
class EnsembleSampler:
    """Model bundle + realization count + master seed + reduction chunking."""

    bundle: ModelBundle
    n_real: int
    master_seed: int
    chunk_size: int = 512

    def __post_init__(self):
        if self.n_real < 1:
            raise ValueError("n_real must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    @property
    def n_chunks(self) -> int:
        return (self.n_real + self.chunk_size - 1) // self.chunk_size

    def chunk_range(self, chunk: int) -> range:
        start = chunk * self.chunk_size
        return range(start, min(start + self.chunk_size, self.n_real))

    def sample_chunk_shifts(self, chunk: int) -> np.ndarray:
        noise = self.bundle.spectral.noise
        idx = self.chunk_range(chunk)
        return np.stack([noise.sample_shifts(self.master_seed, i) for i in idx])


@dataclass
class AveragedTrajectory:
    """Mean trajectory with per-element statistical error estimates."""

    times: np.ndarray
    states: np.ndarray        # (T, d, d) mean
    sum_abs2: np.ndarray      # (T, d, d) real: sum |rho_b|^2 elementwise
    sum_sq: np.ndarray        # (T, d, d) complex: sum rho_b^2 elementwise
    n_real: int
    master_seed: int
    chunk_size: int = 512

    @property
    def dim(self) -> int:
        return self.states.shape[-1]

    def element(self, j: int, k: int) -> np.ndarray:
        return self.states[:, j, k]

    def coherence(self) -> np.ndarray:
        absm = np.abs(self.states)
        return np.sum(absm, axis=(1, 2)) - np.einsum("tjj->t", absm)

    def purity(self) -> np.ndarray:
        return np.real(np.einsum("tjk,tkj->t", self.states, self.states))

    def stderr(self) -> np.ndarray:
        """Standard error of the mean per complex element (Re and Im combined)."""
        n = self.n_real
        if n < 2:
            return np.full_like(self.sum_abs2, np.nan)
        var = (self.sum_abs2 / n - np.abs(self.states) ** 2) * n / (n - 1)
        return np.sqrt(np.maximum(var, 0.0) / n)

    def stderr_real(self) -> np.ndarray:
        """Standard error of the mean of the real part, per element."""
        n = self.n_real
        if n < 2:
            return np.full_like(self.sum_abs2, np.nan)
        mean_re_sq = 0.5 * (np.real(self.sum_sq) + self.sum_abs2) / n
        var = (mean_re_sq - np.real(self.states) ** 2) * n / (n - 1)
        return np.sqrt(np.maximum(var, 0.0) / n)


# ---------------------------------------------------------------------------
# chunk evaluation
# ---------------------------------------------------------------------------

def _chunk_sums_pure(sampler: EnsembleSampler, psi0: np.ndarray,
                     times: np.ndarray, chunk: int, time_block: int = 128):
    """Partial sums over one chunk for a pure initial state.

    Evolving the state vector and accumulating outer products is ~d times
    cheaper than transporting full density matrices.
    """
    bundle = sampler.bundle
    shifts = sampler.sample_chunk_shifts(chunk)
    b, d = shifts.shape
    hs = np.zeros((b, d, d), dtype=complex)
    diag = bundle.spectral.energies[None, :] + shifts
    hs[:, np.arange(d), np.arange(d)] = diag
    hs += bundle.alpha * bundle.coupling[None, :, :]
    evals, u = np.linalg.eigh(hs)
    g = np.einsum("bca,c->ba", u.conj(), psi0)          # eigenbasis amplitudes
    ut = np.ascontiguousarray(u.transpose(0, 2, 1))
    nt = times.size
    s_rho = np.zeros((nt, d, d), dtype=complex)
    s_abs2 = np.zeros((nt, d, d), dtype=float)
    s_sq = np.zeros((nt, d, d), dtype=complex)
    for lo in range(0, nt, time_block):
        hi = min(lo + time_block, nt)
        ph = np.exp(-1j * evals[:, None, :] * times[lo:hi][None, :, None]) * g[:, None, :]
        psi = (ph @ ut).transpose(1, 0, 2)               # (T, b, d)
        s_rho[lo:hi] = psi.transpose(0, 2, 1) @ psi.conj()
        abs2 = np.abs(psi) ** 2
        s_abs2[lo:hi] = np.real(abs2.transpose(0, 2, 1) @ abs2)
        sq = psi * psi
        s_sq[lo:hi] = sq.transpose(0, 2, 1) @ sq.conj()
    return s_rho, s_abs2, s_sq


def _chunk_sums_general(sampler: EnsembleSampler, rho0: np.ndarray,
                        times: np.ndarray, chunk: int):
    bundle = sampler.bundle
    shifts = sampler.sample_chunk_shifts(chunk)
    nt = times.size
    d = rho0.shape[0]
    s_rho = np.zeros((nt, d, d), dtype=complex)
    s_abs2 = np.zeros((nt, d, d), dtype=float)
    s_sq = np.zeros((nt, d, d), dtype=complex)
    for sh in shifts:
        rho = evolve_one(bundle.hamiltonian(sh), rho0, times)
        s_rho += rho
        s_abs2 += np.abs(rho) ** 2
        s_sq += rho * rho
    return s_rho, s_abs2, s_sq


# ---------------------------------------------------------------------------
# pairwise (binary counter) reduction with optional checkpointing
# ---------------------------------------------------------------------------

class _PairwiseReducer:
    """Streaming pairwise summation: level i holds the sum of 2^i chunks."""

    def __init__(self):
        self.levels: list[tuple | None] = []

    def push(self, item: tuple):
        level = 0
        for i in range(len(self.levels)):
            if self.levels[i] is None:
                break
            item = tuple(a + b for a, b in zip(self.levels[i], item))
            self.levels[i] = None
            level = i + 1
        if level == len(self.levels):
            self.levels.append(None)
        self.levels[level] = item

    def total(self) -> tuple:
        acc = None
        for item in self.levels:  # smallest level first: fixed fold order
            if item is None:
                continue
            acc = item if acc is None else tuple(a + b for a, b in zip(acc, item))
        return acc


def _save_checkpoint(path, reducer, chunks_done, sampler, times):
    n_done = sampler.chunk_range(chunks_done - 1).stop if chunks_done else 0
    payload = {
        "version": np.array(CHECKPOINT_VERSION),
        "chunks_done": np.array(chunks_done),
        "n_done": np.array(n_done),
        "master_seed": np.array(sampler.master_seed),
        "n_real": np.array(sampler.n_real),
        "chunk_size": np.array(sampler.chunk_size),
        "times": times,
        "n_levels": np.array(len(reducer.levels)),
    }
    for i, item in enumerate(reducer.levels):
        payload[f"level_{i}_present"] = np.array(item is not None)
        if item is not None:
            payload[f"level_{i}_rho"] = item[0]
            payload[f"level_{i}_abs2"] = item[1]
            payload[f"level_{i}_sq"] = item[2]
    tmp = str(path) + ".tmp.npz"
    np.savez_compressed(tmp, **payload)
    os.replace(tmp, path)


def _load_checkpoint(path, sampler, times):
    with np.load(path) as f:
        if int(f["version"]) != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {int(f['version'])}")
        if (int(f["master_seed"]) != sampler.master_seed
                or int(f["n_real"]) != sampler.n_real
                or int(f["chunk_size"]) != sampler.chunk_size
                or f["times"].shape != times.shape
                or not np.allclose(f["times"], times)):
            raise ValueError("checkpoint does not match this run's parameters")
        reducer = _PairwiseReducer()
        reducer.levels = []
        for i in range(int(f["n_levels"])):
            if bool(f[f"level_{i}_present"]):
                reducer.levels.append((f[f"level_{i}_rho"],
                                       f[f"level_{i}_abs2"],
                                       f[f"level_{i}_sq"]))
            else:
                reducer.levels.append(None)
        return reducer, int(f["chunks_done"])


def average(sampler: EnsembleSampler, rho0=None, times=None, *,
            workers: int | None = None,
            checkpoint_path=None, checkpoint_every: int = 16) -> AveragedTrajectory:
    """Mean trajectory over exactly ``sampler.n_real`` realizations.

    ``rho0`` defaults to the bundle's initial state. Chunks are dispatched to
    a thread pool but folded strictly in chunk order, so the result is
    deterministic for a fixed (seed, n_real, chunk_size) triple.
    """
    bundle = sampler.bundle
    r0 = _as_matrix(rho0 if rho0 is not None else bundle.rho0)
    ts = np.asarray(times, dtype=float) if times is not None else None
    if ts is None:
        raise ValueError("times must be provided")
    workers = workers or default_workers()

    evals0 = np.linalg.eigvalsh(r0)
    is_pure = evals0[-1] > 1.0 - _PURITY_PURE_TOL
    if is_pure:
        vecs = np.linalg.eigh(r0)[1]
        psi0 = np.ascontiguousarray(vecs[:, -1])

    def job(chunk: int):
        if is_pure:
            return _chunk_sums_pure(sampler, psi0, ts, chunk)
        return _chunk_sums_general(sampler, r0, ts, chunk)

    reducer = _PairwiseReducer()
    first_chunk = 0
    if checkpoint_path is not None and os.path.exists(checkpoint_path):
        reducer, first_chunk = _load_checkpoint(checkpoint_path, sampler, ts)

    n_chunks = sampler.n_chunks
    pending: dict[int, tuple] = {}
    next_to_fold = first_chunk
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(job, c): c for c in range(first_chunk, n_chunks)}
        for fut in as_completed(futures):
            pending[futures[fut]] = fut.result()
            while next_to_fold in pending:
                reducer.push(pending.pop(next_to_fold))
                next_to_fold += 1
                if (checkpoint_path is not None
                        and next_to_fold % checkpoint_every == 0
                        and not pending):
                    _save_checkpoint(checkpoint_path, reducer, next_to_fold,
                                     sampler, ts)
    s_rho, s_abs2, s_sq = reducer.total()
    n = sampler.n_real
    if checkpoint_path is not None and os.path.exists(checkpoint_path):
        os.remove(checkpoint_path)
    return AveragedTrajectory(times=ts, states=s_rho / n, sum_abs2=s_abs2,
                              sum_sq=s_sq, n_real=n,
                              master_seed=sampler.master_seed,
                              chunk_size=sampler.chunk_size)
