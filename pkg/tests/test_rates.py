"""Rate tests: closed forms against independent defining-integral oracles.

The oracles (tests/oracles.py) are built from scratch: exact Gaussian
expectations for a shared scalar noise plus composite Gauss-Legendre time
quadrature, sharing no code with the package's own evaluators.
"""

import numpy as np
import pytest

from disorderavg import RateTable, SpectralData
from disorderavg.noise import GaussianScalar, IndependentGaussianNoise, SharedGaussianNoise
from disorderavg.rates import (big_gamma_from_definition, big_gamma_symmetric,
                               gamma_closed_form, gamma_from_definition, upsilon)

from oracles import (SharedOracle, composite_gl, oracle_big_gamma_first,
                     oracle_big_gamma_second, oracle_gamma)


BETA = np.array([3.0, 1.0, 1.0, 3.0])
CHI = np.array([-3.0, -1.0, 1.0, 3.0])


def boson_spectral(u0=1.0, tilt=10.0, sigma=1.0):
    eps = BETA * u0 + CHI * tilt
    noise = SharedGaussianNoise(GaussianScalar(0.0, sigma), BETA)
    return SpectralData(energies=eps, noise=noise), SharedOracle(eps, BETA, 0.0, sigma)


def qubit_spectral(center=10.0, sigma=1.0):
    noise = SharedGaussianNoise(GaussianScalar(center, sigma), np.array([0.5, -0.5]))
    return (SpectralData(energies=np.zeros(2), noise=noise),
            SharedOracle(np.zeros(2), np.array([0.5, -0.5]), center, sigma))


# ---------------------------------------------------------------------------
# dephasing rate
# ---------------------------------------------------------------------------

def test_upsilon_qubit():
    sd, _ = qubit_spectral()
    for t in [0.0, 0.5, 1.0, 2.5]:
        assert upsilon(sd, 0, 1, t) == pytest.approx(-10j - t, abs=1e-12)
    assert upsilon(sd, 0, 0, 1.0) == 0.0


def test_upsilon_lattice():
    # T = 10*alpha, sigma = alpha, alpha = 1: rate -i(j-k)T - 2 sigma^2 t
    noise = IndependentGaussianNoise.iid(6, sigma=1.0)
    eps = 10.0 * np.arange(1, 7, dtype=float)
    sd = SpectralData(energies=eps, noise=noise)
    for (j, k) in [(0, 1), (2, 5), (4, 1)]:
        for t in [0.3, 1.7]:
            expected = -1j * (j - k) * 10.0 - 2.0 * t
            assert upsilon(sd, j, k, t) == pytest.approx(expected, abs=1e-12)


def test_upsilon_bosons_pure_imaginary_for_symmetric_pair():
    sd, _ = boson_spectral(u0=1.0, tilt=10.0)
    # levels 1 and 4 share beta, so only the deterministic splitting remains
    val = upsilon(sd, 0, 3, 5.0)
    assert val == pytest.approx(60j, abs=1e-12)
    assert val.real == 0.0


def test_upsilon_matches_log_derivative_of_charfn():
    sd, _ = boson_spectral()
    h = 1e-5
    for (j, k) in [(0, 1), (1, 3), (2, 0)]:
        phi = sd.pair_charfn(j, k)
        for t in [0.2, 0.9, 1.8]:
            fd = (np.log(np.abs(complex(phi(t + h))))
                  - np.log(np.abs(complex(phi(t - h))))) / (2 * h)
            re = upsilon(sd, j, k, t).real
            if abs(fd) > 1e-12:
                assert re == pytest.approx(fd, rel=1e-6)


# ---------------------------------------------------------------------------
# population-coupling rate
# ---------------------------------------------------------------------------

def test_gamma_zero_at_t0():
    sd, _ = boson_spectral()
    assert gamma_from_definition(sd, 0, 1, 0.0) == 0.0
    assert gamma_closed_form(sd, 0, 1, 0.0, "full") == 0.0
    assert gamma_closed_form(sd, 0, 1, 0.0, "envelope") == 0.0


def test_gamma_qubit_closed_form_value():
    # full mode reproduces -(sigma^2 t/center)(1 - exp(-i*center*t - sigma^2 t^2/2))
    sd, _ = qubit_spectral(center=10.0, sigma=1.0)
    for t in [0.4, 1.0, 2.0]:
        expected = -(t / 10.0) * (1.0 - np.exp(-10j * t - 0.5 * t * t))
        assert gamma_closed_form(sd, 0, 1, t, "full") == pytest.approx(expected, abs=1e-12)


def test_gamma_lattice_envelope_value():
    noise = IndependentGaussianNoise.iid(6, sigma=1.0)
    sd = SpectralData(energies=10.0 * np.arange(1, 7, dtype=float), noise=noise)
    for (j, k) in [(0, 1), (3, 1)]:
        for t in [0.5, 2.0]:
            expected = -2.0 * t / ((j - k) * 10.0)
            assert gamma_closed_form(sd, j, k, t, "envelope") == pytest.approx(
                expected, abs=1e-12)


def test_gamma_antisymmetry():
    sd, _ = boson_spectral()
    rng = np.random.default_rng(0)
    for t in rng.uniform(0.01, 3.0, 20):
        for j in range(4):
            for k in range(4):
                if j == k:
                    continue
                for mode in ("full", "envelope"):
                    a = gamma_closed_form(sd, j, k, t, mode)
                    b = gamma_closed_form(sd, k, j, t, mode)
                    assert abs(a + np.conj(b)) < 1e-10
                a = gamma_from_definition(sd, j, k, t)
                b = gamma_from_definition(sd, k, j, t)
                assert abs(a + np.conj(b)) < 1e-10


def test_gamma_quadrature_matches_independent_oracle():
    sd, orc = boson_spectral()
    for (j, k) in [(0, 1), (1, 2), (3, 2)]:
        for t in [0.3, 1.1, 2.7]:
            mine = gamma_from_definition(sd, j, k, t)
            ref = oracle_gamma(orc, j, k, t)
            assert mine == pytest.approx(ref, abs=2e-9)


def test_gamma_definition_vs_monte_carlo():
    """Defining integral evaluated over a sampled ensemble (1e5 draws)."""
    sd, orc = qubit_spectral()
    rng = np.random.default_rng(314)
    n = 100_000
    x = rng.normal(10.0, 1.0, n)
    omega = x  # mean splitting variable: omega_12 = x for weights (1/2, -1/2)
    for t in [0.5, 1.5, 3.0]:
        phi_t = np.exp(-1j * omega * t)
        integ = np.where(np.abs(omega) > 1e-12,
                         (1.0 - np.exp(-1j * omega * t)) / (1j * omega), t)
        ups = upsilon(sd, 0, 1, t)
        stat = -phi_t + ups * integ
        gamma_mc = 1j * (1.0 + np.mean(stat))
        stderr = np.std(stat) / np.sqrt(n)
        mine = gamma_from_definition(sd, 0, 1, t)
        assert abs(mine - gamma_mc) < 5 * stderr


def test_gamma_closed_form_accuracy_at_late_times():
    """Once the oscillatory transient dies (t*width >= 2) the peaked-noise
    closed form tracks the defining integral to ~10% relative. At early times
    the two genuinely differ at O(1/splitting^2); that gap is physical, not a
    bug, and is covered by the quadrature mode."""
    for sd, _ in (qubit_spectral(), boson_spectral()):
        for j, k in [(0, 1)]:
            width = np.sqrt(sd.var_diff[j, k])
            for t in [2.5 / width, 3.5 / width]:
                exact = gamma_from_definition(sd, j, k, t)
                closed = gamma_closed_form(sd, j, k, t, "full")
                assert abs(exact - closed) <= 0.1 * abs(exact)


# ---------------------------------------------------------------------------
# coherence-coupling rate
# ---------------------------------------------------------------------------

def test_big_gamma_zero_cases():
    sd, _ = boson_spectral()
    assert big_gamma_from_definition(sd, 0, 1, 2, 0.0) == 0.0
    # c_jk = 0 (levels 1 and 4 share the weight): exactly zero at all times
    assert big_gamma_from_definition(sd, 0, 3, 1, 2.0) == 0.0
    # c_rj = 0:
    assert big_gamma_from_definition(sd, 1, 0, 2, 2.0) == 0.0
    with pytest.raises(ValueError):
        big_gamma_from_definition(sd, 0, 1, 1, 1.0)


def test_big_gamma_iid_vanishes():
    noise = IndependentGaussianNoise.iid(5, sigma=1.0)
    sd = SpectralData(energies=10.0 * np.arange(1, 6, dtype=float), noise=noise)
    for t in [0.5, 2.0, 4.0]:
        assert big_gamma_from_definition(sd, 0, 1, 2, t) == 0.0


def test_big_gamma_iid_defining_integral_is_bounded():
    """Independent-shift check of the zero convention.

    The defining correlator ratio, evaluated with factorized single-level
    characteristic functions, does not vanish identically: endpoint
    contributions leave a bounded remainder of order var*t / splitting, the
    same order as the corrections already dropped from the peaked-noise
    closed forms. The shipped rates follow the reference treatment and drop
    it; this test pins its size so the convention stays an informed one.
    """
    sigma, tilt = 1.0, 10.0
    d = 4
    eps = tilt * np.arange(1, d + 1, dtype=float)

    def phi_level(s):  # E[exp(-i s lambda)] per level
        return np.exp(-0.5 * sigma**2 * s * s)

    j, k, r = 0, 1, 2
    mu_rj = eps[r] - eps[j]
    for t in [1.0, 2.5, 4.0]:
        def joint(tp):
            ph = np.exp(-1j * (eps[j] - eps[k]) * t - 1j * mu_rj * tp)
            return ph * phi_level(t - tp) * phi_level(-t) * phi_level(tp)

        def joint_dot(tp):
            # d/dt acting on the j and k factors of the factorized correlator
            lin = (eps[j] - eps[k]) - 1j * sigma**2 * ((t - tp) + t)
            return -1j * lin * joint(tp)

        f = composite_gl(joint, 0.0, t)
        num = composite_gl(joint_dot, 0.0, t)
        phibar_rk = np.exp(-1j * (eps[r] - eps[k]) * t - sigma**2 * t * t)
        ups_jk = -1j * (eps[j] - eps[k]) - 2.0 * sigma**2 * t
        gamma_big = 1j * (ups_jk * f - num) / phibar_rk
        # endpoint estimate: sigma^2 t / |sigma^2 t + i mu_rj|
        bound = 2.0 * sigma**2 * t / np.hypot(sigma**2 * t, mu_rj)
        assert abs(gamma_big) < bound
        # small against the retained dephasing rate 2 sigma^2 t
        assert abs(gamma_big) < 0.1 * 2.0 * sigma**2 * t


def test_big_gamma_benchmark_triple():
    """Triple (1,2,3) of the correlated double-well model: the defining
    integrals give a real rate growing as 2t/19 (brute-force verified), with
    a small decaying oscillatory remainder."""
    sd, orc = boson_spectral(u0=1.0, tilt=10.0, sigma=1.0)
    for t in [0.5, 1.0, 2.0]:
        mine = big_gamma_from_definition(sd, 0, 1, 2, t)
        ref = oracle_big_gamma_first(orc, 0, 1, 2, t)
        assert mine == pytest.approx(ref, abs=5e-9)
        assert abs(mine - 2.0 * t / 19.0) < 5e-3
    # the growing entry the dynamics actually consume, (1,3,2):
    val = big_gamma_from_definition(sd, 0, 2, 1, 1.0)
    assert val == pytest.approx(oracle_big_gamma_first(orc, 0, 2, 1, 1.0), abs=5e-9)
    assert val.real == pytest.approx(2.0 / 9.0, abs=6e-3)


def test_big_gamma_antisymmetry_identity():
    """First-kind and second-kind defining objects satisfy
    Gamma1(j,k,r) = -conj(Gamma2(k,j,r)) (the Hermiticity-reflecting pairing)."""
    _, orc = boson_spectral()
    rng = np.random.default_rng(1)
    for t in rng.uniform(0.05, 2.5, 20):
        for (j, k, r) in [(0, 1, 2), (0, 2, 1), (1, 3, 2), (2, 0, 3), (3, 1, 0)]:
            g1 = oracle_big_gamma_first(orc, j, k, r, t)
            g2 = oracle_big_gamma_second(orc, k, j, r, t)
            assert abs(g1 + np.conj(g2)) < 1e-10


def test_big_gamma_symmetric_mode_formula():
    sd, _ = boson_spectral()
    t = 1.3
    val = big_gamma_symmetric(sd, 0, 1, 2, t)
    expected = t * (sd.var_diff[2, 1] - sd.var_diff[0, 1]) / sd.mean_splitting[0, 1]
    assert val == pytest.approx(expected, abs=1e-14)
    # (0 - 4 sigma^2 t) / (-18): magnitude 2t/9, purely real in this mode
    assert val == pytest.approx(2.0 * t / 9.0, abs=1e-12)


def test_big_gamma_definition_vs_monte_carlo():
    """Defining correlators over a sampled ensemble (1e5 draws, 10 batches)."""
    sd, orc = boson_spectral()
    rng = np.random.default_rng(999)
    n = 100_000
    xs = rng.normal(0.0, 1.0, n)
    j, k, r = 0, 2, 1  # growing entry
    glx, glw = np.polynomial.legendre.leggauss(96)
    for t in [0.8, 2.0]:
        tp = 0.5 * t * (glx + 1)
        wq = 0.5 * t * glw
        om_jk = orc.mu(j, k) + orc.c(j, k) * xs
        om_rj = orc.mu(r, j) + orc.c(r, j) * xs
        om_rk = orc.mu(r, k) + orc.c(r, k) * xs
        phi_jk = np.exp(-1j * om_jk * t)
        integral_rj = np.exp(-1j * np.outer(xs * orc.c(r, j) + orc.mu(r, j), tp)) @ wq
        batches = []
        for chunk in np.array_split(np.arange(n), 10):
            f = np.mean(phi_jk[chunk] * integral_rj[chunk])
            num = np.mean(-1j * om_jk[chunk] * phi_jk[chunk] * integral_rj[chunk])
            den = np.mean(np.exp(-1j * om_rk[chunk] * t))
            ups = orc.upsilon(j, k, t)
            batches.append(1j * (ups * f - num) / den)
        batches = np.array(batches)
        mc = batches.mean()
        stderr = batches.std(ddof=1) / np.sqrt(len(batches))
        mine = big_gamma_from_definition(sd, j, k, r, t)
        assert abs(mine - mc) < 5 * stderr


# ---------------------------------------------------------------------------
# RateTable plumbing
# ---------------------------------------------------------------------------

def test_rate_table_modes_and_masks():
    sd, _ = boson_spectral()
    v = np.zeros((4, 4), complex)
    v[0, 1] = v[1, 0] = 1.0
    with pytest.raises(ValueError):
        RateTable(sd, v, gamma_mode="bogus")
    with pytest.raises(ValueError):
        RateTable(sd, v, big_gamma_mode="bogus")
    rt = RateTable(sd, v, gamma_mode="envelope", big_gamma_mode="none")
    g = rt.gamma_matrix(1.0)
    assert g[0, 1] != 0 and g[2, 3] == 0
    assert rt.big_gamma_tensor(1.0) is None


def test_rate_table_lut_matches_direct():
    sd, _ = boson_spectral()
    v = np.zeros((4, 4), complex)
    for i in range(3):
        v[i, i + 1] = v[i + 1, i] = 1.0
    rt = RateTable(sd, v, gamma_mode="quadrature", big_gamma_mode="quadrature")
    rt.tabulate(8.0)
    for t in [0.37, 2.21, 7.9]:
        g = rt.gamma_matrix(t)
        for (j, k) in np.argwhere(rt.coupling_mask):
            assert g[j, k] == pytest.approx(gamma_from_definition(sd, j, k, t), abs=5e-5)
        big = rt.big_gamma_tensor(t)
        assert big[0, 2, 1] == pytest.approx(
            big_gamma_from_definition(sd, 0, 2, 1, t), abs=5e-5)


def test_validate_coupling_gates():
    # degenerate mean energies on a coupled pair: hard error
    noise = IndependentGaussianNoise.iid(3, sigma=0.5)
    sd = SpectralData(energies=np.array([0.0, 0.0, 5.0]), noise=noise)
    v = np.zeros((3, 3), complex)
    v[0, 1] = v[1, 0] = 1.0
    with pytest.raises(ValueError):
        sd.validate_coupling(v, alpha=0.1)
    # same degeneracy is fine when the pair is not coupled
    v2 = np.zeros((3, 3), complex)
    v2[0, 2] = v2[2, 0] = 1.0
    sd.validate_coupling(v2, alpha=0.1)
    # large coupling only warns
    with pytest.warns(UserWarning):
        sd.validate_coupling(v2, alpha=10.0)


def test_rates_finite_at_large_times():
    sd, _ = qubit_spectral()
    assert np.isfinite(upsilon(sd, 0, 1, 300.0))
    g = gamma_closed_form(sd, 0, 1, 300.0, "full")
    assert np.isfinite(g)
    # envelope factor is fully saturated once the phase factor underflows
    assert g == pytest.approx(gamma_closed_form(sd, 0, 1, 300.0, "envelope"), rel=1e-12)
