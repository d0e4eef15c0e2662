import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.linalg import sqrtm
from scipy.special import gammaln

from conftest import make_cfg
from y00sim import DegenerateMeasurement, LengthError, NumericalError, TooLarge
from y00sim.detection import (
    HypothesisEnsemble,
    build_ensemble,
    coherent_overlap,
    detection_report,
    helstrom_binary,
    induced_prior_mismatch,
    log_sequence_overlap,
    optimality_residuals,
    overlap_bound,
    sequence_overlap,
    srm,
    success_probability,
)
from y00sim.keystream import LfsrSpec, MappingTable
from y00sim.modem import Y00Config

E2 = math.exp(-2)


# -- Fock-space oracle ---------------------------------------------------

def fock_state(alpha, cutoff=30):
    n = np.arange(cutoff)
    log_c = -abs(alpha) ** 2 / 2 - 0.5 * gammaln(n + 1)
    v = np.exp(log_c) * np.power(complex(alpha), n) if alpha != 0 else (n == 0).astype(complex)
    return v.astype(complex)


def sequence_state(seq, cutoff=30):
    v = np.array([1.0 + 0j])
    for a in seq:
        v = np.kron(v, fock_state(a, cutoff))
    return v


def srm_oracle(seqs, priors):
    """SRM built from explicit vectors: mu_j = rho^{-1/2} sqrt(p_j) psi_j."""
    psi = np.array([sequence_state(s) for s in seqs]).T
    rho = (psi * priors) @ psi.conj().T
    lam, vec = np.linalg.eigh(rho)
    keep = lam > 1e-12
    inv_sqrt = (vec[:, keep] / np.sqrt(lam[keep])) @ vec[:, keep].conj().T
    mu = inv_sqrt @ (psi * np.sqrt(priors))
    return np.abs(psi.conj().T @ mu) ** 2


# -- overlaps ------------------------------------------------------------

def test_coherent_overlap_examples():
    assert coherent_overlap(0.7 - 0.2j, 0.7 - 0.2j) == pytest.approx(1.0)
    assert coherent_overlap(0, 1) == pytest.approx(math.exp(-0.5))
    assert coherent_overlap(1, -1) == pytest.approx(E2)


@settings(max_examples=30, deadline=None)
@given(
    a=st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False),
    b=st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False),
)
def test_coherent_overlap_matches_fock_vectors(a, b):
    direct = np.vdot(fock_state(a, 60), fock_state(b, 60))
    assert coherent_overlap(a, b) == pytest.approx(direct, abs=1e-10)
    assert abs(coherent_overlap(a, b)) <= 1 + 1e-15


def test_sequence_overlap_examples():
    seq = [1, 0.5j, -2]
    assert sequence_overlap(seq, seq) == pytest.approx(1.0)
    assert sequence_overlap([1, 2, 3], [1, 2, -3]) == pytest.approx(math.exp(-18))
    assert sequence_overlap([0.3, 1], [0.3, -1]) == pytest.approx(E2)
    T = 10**4
    log_mag, _ = log_sequence_overlap(np.ones(T), -np.ones(T))
    assert log_mag == -2.0 * T
    with pytest.raises(LengthError):
        sequence_overlap([1, 2], [1])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2)), min_size=1, max_size=30))
def test_log_domain_matches_naive_product(pairs):
    a = [complex(p[0], p[1]) for p in pairs]
    b = [complex(p[2], p[3]) for p in pairs]
    naive = np.prod([coherent_overlap(x, y) for x, y in zip(a, b)])
    got = sequence_overlap(a, b)
    if abs(naive) > 1e-250:
        assert abs(got) == pytest.approx(abs(naive), rel=1e-9)
        assert got == pytest.approx(naive, rel=1e-9, abs=1e-300)


# -- ensembles -----------------------------------------------------------

def test_build_ensemble_shape():
    cfg = make_cfg(M=4, alpha0=1.0, w_s=2, w_dx=2)
    ens = build_ensemble(cfg, "0110")
    assert ens.dim == 16
    assert ens.gram.shape == (16, 16)
    np.testing.assert_allclose(np.diag(ens.gram), 1)
    np.testing.assert_allclose(ens.gram, ens.gram.conj().T)
    assert np.linalg.eigvalsh(ens.gram)[0] >= -1e-10 * 16


def test_build_ensemble_gram_matches_pairwise_overlaps():
    cfg = make_cfg(M=4, alpha0=0.8, eta=0.7, w_s=3, w_dx=2, mapping_seed=1)
    ens = build_ensemble(cfg, "10110")
    for i in range(0, ens.dim, 5):
        for j in range(0, ens.dim, 3):
            assert ens.gram[i, j] == pytest.approx(
                sequence_overlap(ens.amplitude_seqs[i], ens.amplitude_seqs[j]), abs=1e-13
            )


def test_build_ensemble_alpha_zero_all_ones():
    ens = build_ensemble(make_cfg(M=4, alpha0=0.0, w_s=2, w_dx=2), "01")
    np.testing.assert_allclose(ens.gram, np.ones((16, 16)))


def test_build_ensemble_reports_colliding_keys():
    # one slot with M=2 reveals only one bit of each register: keys collide
    cfg = make_cfg(M=2, alpha0=1.0, w_s=3, w_dx=2)
    ens = build_ensemble(cfg, "1")
    assert ens.duplicates
    for group in ens.duplicates:
        rows = ens.gram[list(group)]
        np.testing.assert_allclose(rows, np.repeat(rows[:1], len(group), axis=0))


def test_build_ensemble_cap():
    with pytest.raises(TooLarge):
        build_ensemble(make_cfg(M=4, w_s=10, w_dx=10), "01")
    with pytest.raises(TooLarge):
        build_ensemble(make_cfg(M=4, w_s=6, w_dx=5), "01")


# -- square-root measurement ---------------------------------------------

def test_srm_orthogonal():
    ens = HypothesisEnsemble.from_gram(np.eye(8))
    ms = srm(ens)
    np.testing.assert_allclose(ms.cond_prob, np.eye(8), atol=1e-12)
    assert success_probability(ens, ms) == pytest.approx(1.0, abs=1e-12)
    assert overlap_bound(ms) == pytest.approx(1.0)


def test_srm_identical_pair():
    ens = HypothesisEnsemble.from_gram(np.ones((2, 2)))
    ms = srm(ens)
    np.testing.assert_allclose(ms.cond_prob, 0.5)
    assert overlap_bound(ms) == pytest.approx(0.5)


def test_srm_antipodal_pair_is_helstrom():
    ens = HypothesisEnsemble.from_amplitudes([[1.0], [-1.0]])
    ms = srm(ens)
    closed = (1 + math.sqrt(1 - math.exp(-4))) / 2
    assert success_probability(ens, ms) == pytest.approx(closed, abs=1e-12)
    assert success_probability(ens, ms) == pytest.approx(0.99540, abs=1e-5)
    assert 1 - success_probability(ens, ms) == pytest.approx(helstrom_binary(0.5, 0.5, math.exp(-4)), abs=1e-12)


def test_all_ones_gram_is_pure_guessing():
    ens = HypothesisEnsemble.from_gram(np.ones((16, 16)))
    assert success_probability(ens, srm(ens)) == pytest.approx(1 / 16, abs=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_srm_matches_fock_space_oracle(seed):
    rng = np.random.default_rng(seed)
    d, T = 5, 2
    seqs = 0.7 * (rng.normal(size=(d, T)) + 1j * rng.normal(size=(d, T)))
    priors = rng.dirichlet(np.ones(d))
    ens = HypothesisEnsemble.from_amplitudes(seqs, priors)
    np.testing.assert_allclose(srm(ens).cond_prob, srm_oracle(seqs, priors), atol=1e-9)


def test_srm_rejects_non_psd():
    bad = np.array([[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]])
    with pytest.raises(NumericalError):
        srm(HypothesisEnsemble.from_gram(bad))


def random_ensemble(rng, d=None, T=None, scale=None):
    d = d or int(rng.integers(2, 12))
    T = T or int(rng.integers(1, 5))
    scale = rng.uniform(0.1, 1.5) if scale is None else scale
    seqs = scale * (rng.normal(size=(d, T)) + 1j * rng.normal(size=(d, T)))
    return HypothesisEnsemble.from_amplitudes(seqs, rng.dirichlet(np.ones(d)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_completeness_property(seed):
    ms = srm(random_ensemble(np.random.default_rng(seed)))
    np.testing.assert_allclose(ms.cond_prob.sum(axis=1), 1, atol=1e-10)
    assert ms.cond_prob.min() >= 0 and ms.cond_prob.max() <= 1 + 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_uniform_priors_beat_guessing(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 16))
    seqs = rng.uniform(0, 1) * (rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2)))
    ens = HypothesisEnsemble.from_amplitudes(seqs)
    assert success_probability(ens, srm(ens)) >= 1 / d - 1e-12


def test_overlap_bound_strict_below_one():
    ens = HypothesisEnsemble.from_amplitudes([[0.5], [-0.5], [0.5j]])
    ms = srm(ens)
    assert np.any(np.abs(np.diag(ms.measurement_gram)) ** 2 < 1)
    assert overlap_bound(ms) < 1


def test_overlap_bound_degenerate():
    from y00sim.detection import MeasurementSet

    z = np.zeros((2, 2))
    with pytest.raises(DegenerateMeasurement):
        overlap_bound(MeasurementSet(z, z, z, z, 0))


# -- optimality residuals ------------------------------------------------

def test_residuals_orthogonal():
    ens = HypothesisEnsemble.from_gram(np.eye(6))
    pw, psd = optimality_residuals(ens, srm(ens))
    assert pw < 1e-10 and psd < 1e-10


@pytest.mark.parametrize("a", [0.2, 0.7 + 0.3j, 1.5])
def test_residuals_binary_equiprobable(a):
    ens = HypothesisEnsemble.from_amplitudes([[a, 0.1], [-a, 0.4j]])
    ms = srm(ens)
    for weighting in ("induced", "priors"):
        pw, psd = optimality_residuals(ens, ms, weighting)
        assert pw < 1e-8 and psd < 1e-8


def test_residuals_symmetric_psk():
    ens = HypothesisEnsemble.from_amplitudes([[np.exp(1j * np.pi * k / 4)] for k in range(8)])
    pw, psd = optimality_residuals(ens, srm(ens))
    assert pw < 1e-8 and psd < 1e-8


def test_residuals_random_smoke():
    ens = random_ensemble(np.random.default_rng(5), d=8, T=3, scale=0.6)
    pw, psd = optimality_residuals(ens, srm(ens))
    assert np.isfinite(pw) and np.isfinite(psd)


def test_induced_prior_mismatch_zero_when_symmetric():
    ens = HypothesisEnsemble.from_amplitudes([[np.exp(1j * np.pi * k / 2)] for k in range(4)])
    assert induced_prior_mismatch(ens, srm(ens)) < 1e-12


# -- Helstrom ------------------------------------------------------------

def test_helstrom_examples():
    assert helstrom_binary(0.5, 0.5, 0.0) == 0.0
    assert helstrom_binary(0.5, 0.5, 1.0) == 0.5
    assert helstrom_binary(0.5, 0.5, math.exp(-4)) == pytest.approx(0.00460007037, rel=1e-9)
    with pytest.raises(Exception):
        helstrom_binary(0.6, 0.6, 0.5)
    with pytest.raises(Exception):
        helstrom_binary(0.5, 0.5, 1.5)


@settings(max_examples=50, deadline=None)
@given(
    a=st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
    b=st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
)
def test_srm_equals_helstrom_for_pairs(a, b):
    ov = abs(coherent_overlap(a, b)) ** 2
    # near-identical states: both sides lose ~sqrt(eps) to rounding of the overlap
    assume(ov <= 1 - 1e-6)
    ens = HypothesisEnsemble.from_amplitudes([[a], [b]])
    assert 1 - success_probability(ens, srm(ens)) == pytest.approx(helstrom_binary(0.5, 0.5, ov), abs=1e-10)


def test_binary_lower_bound_on_failure():
    rng = np.random.default_rng(8)
    for _ in range(30):
        d = int(rng.integers(2, 10))
        seqs = 0.5 * (rng.normal(size=(d, 2)) + 1j * rng.normal(size=(d, 2)))
        ens = HypothesisEnsemble.from_amplitudes(seqs)
        off = np.abs(ens.gram - np.eye(d)).max()
        fail = 1 - success_probability(ens, srm(ens))
        assert fail >= (2 / d) * helstrom_binary(0.5, 0.5, off**2) - 1e-12


def test_detection_report_keys():
    cfg = make_cfg(M=4, alpha0=1.0, w_s=2, w_dx=2)
    rep = detection_report(build_ensemble(cfg, "0110"))
    for key in ("dimension", "success_probability", "overlap_bound", "pairwise_residual", "psd_deficit", "floor_margin"):
        assert key in rep
    assert rep["floor_margin"] >= 0
