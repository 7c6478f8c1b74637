"""Ensemble-averaged dynamics of finite quantum systems with static diagonal noise.

Two evolution paths for the same random-Hamiltonian ensemble:

* a first-order perturbative master equation with time-dependent decoherence
  rates (:mod:`disorderavg.generator`, :mod:`disorderavg.rates`), and
* direct Monte Carlo averaging of exact unitary trajectories
  (:mod:`disorderavg.oracle`),

cross-validated on a broadened qubit, a tilted lattice with on-site disorder,
and two-mode bosons with random interaction strength
(:mod:`disorderavg.models`).
"""

__version__ = "0.1.0"

from .generator import (PerturbativeGenerator, TimeGrid, Trajectory,
                        asymptotic_state, short_time_rhs)
from .models import (BoseHubbardModel, LatticeModel, ModelBundle, QubitModel,
                     build_bose_hubbard, build_lattice, build_qubit,
                     gaussian_initial_state)
from .noise import (GaussianCharFn, GaussianScalar, IndependentGaussianNoise,
                    SharedGaussianNoise, charfn_pair, sample_eigenvalue_shifts)
from .oracle import AveragedTrajectory, EnsembleSampler, average, evolve_one
from .rates import RateTable, SpectralData
from .states import (DensityMatrix, HermitianOperator, eigh_hermitian,
                     fidelity, liouville_flat, liouville_pair, purity,
                     total_coherence, trace)

__all__ = [
    "AveragedTrajectory", "BoseHubbardModel", "DensityMatrix", "EnsembleSampler",
    "GaussianCharFn", "GaussianScalar", "HermitianOperator",
    "IndependentGaussianNoise", "LatticeModel", "ModelBundle",
    "PerturbativeGenerator", "QubitModel", "RateTable", "SharedGaussianNoise",
    "SpectralData", "TimeGrid", "Trajectory", "asymptotic_state", "average",
    "build_bose_hubbard", "build_lattice", "build_qubit", "charfn_pair",
    "eigh_hermitian", "evolve_one", "fidelity", "gaussian_initial_state",
    "liouville_flat", "liouville_pair", "purity", "sample_eigenvalue_shifts",
    "short_time_rhs", "total_coherence", "trace",
]
