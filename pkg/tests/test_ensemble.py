import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esdsim import ensemble as ens
from esdsim.decompositions import braunstein_decomposition, decomposition_to_composition, effective_bell_composition
from esdsim.ensemble import (
    EnsembleComposition,
    IdenticalMixedEnsemble,
    NumericalInconsistencyError,
    OracleCapacityError,
    apply_unitary,
    collective_distribution,
    density_matrix,
    distribution_moments,
    ensemble_expectation,
    entanglement_census,
    fluctuation_identical_mixed,
    fluctuation_proper,
    full_product_state,
    molecule_expectation,
    oracle_fluctuation,
    same_density_matrix,
)
from esdsim.linalg import DimensionError, basis_state, pauli_matrix, projector
from esdsim.observables import sigma_x_single, sigma_z_single, sigma_zz_pair
from esdsim.verify import random_integer_composition

from conftest import BELL, KET0, KET1, MINUS, PLUS, PSI_MINUS_PAIR, rand_hermitian, rand_state

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def s_one(n):
    return EnsembleComposition([(n / 2, KET0), (n / 2, KET1)])


def s_two(n):
    return EnsembleComposition([(n / 2, PLUS), (n / 2, MINUS)])


def bb84(n):
    return EnsembleComposition([(n / 4, s) for s in (KET0, KET1, PLUS, MINUS)])


# --- composition type -------------------------------------------------------


def test_merges_states_equal_up_to_phase():
    c = EnsembleComposition([(2, KET0), (3, np.exp(0.7j) * KET0), (1, KET1)])
    assert c.n_components == 2
    assert c.counts.tolist() == [5, 1]


def test_rejects_bad_input():
    with pytest.raises(ValueError):
        EnsembleComposition([(-1, KET0)])
    with pytest.raises(ValueError):
        EnsembleComposition([(0, KET0)])
    with pytest.raises(ValueError):
        EnsembleComposition([(1, [1, 1])])
    with pytest.raises(DimensionError):
        EnsembleComposition([(1, KET0), (1, BELL)])


# --- density matrix and expectations ---------------------------------------


def test_density_matrices_of_despagnat_pair():
    np.testing.assert_allclose(density_matrix(s_one(100)), np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(density_matrix(s_two(100)), np.eye(2) / 2, atol=1e-15)
    np.testing.assert_allclose(density_matrix(EnsembleComposition([(7, KET0)])), projector(KET0))


def test_density_matrix_is_state(rng):
    c = EnsembleComposition([(rng.uniform(0.1, 5), rand_state(rng, 3)) for _ in range(4)])
    rho = density_matrix(c)
    assert abs(np.trace(rho) - 1) <= 1e-12
    assert np.max(np.abs(rho - rho.conj().T)) == 0
    assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_molecule_expectation():
    assert molecule_expectation(np.eye(2) / 2, sigma_z_single()) == 0
    assert molecule_expectation(projector(KET0), pauli_matrix("z")) == 1
    assert molecule_expectation(projector(BELL), sigma_zz_pair()) == pytest.approx(1, abs=1e-15)
    with pytest.raises(DimensionError):
        molecule_expectation(np.eye(2) / 2, sigma_zz_pair())


def test_ensemble_expectation():
    assert ensemble_expectation(s_one(100), sigma_z_single()) == 0
    assert ensemble_expectation(EnsembleComposition([(100, KET0)]), sigma_z_single()) == 100
    assert ensemble_expectation(EnsembleComposition([(50, PSI_MINUS_PAIR)]), sigma_zz_pair()) == pytest.approx(-50)
    assert ensemble_expectation(EnsembleComposition([(50, BELL)]), sigma_zz_pair()) == pytest.approx(50)


# --- fluctuations ------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 100, 10**6])
def test_despagnat_fluctuations(n):
    assert fluctuation_proper(s_one(n), sigma_z_single()).fluctuation == 0
    assert abs(fluctuation_proper(s_two(n), sigma_z_single()).fluctuation - math.sqrt(n)) <= 1e-10


@pytest.mark.parametrize("n,eps", [(100, 0.1), (1000, 0.5), (7.5, 0.03)])
def test_effective_bell_sigma_zz_fluctuation_is_zero(n, eps):
    assert fluctuation_proper(effective_bell_composition(n, eps), sigma_zz_pair()).fluctuation <= 1e-12


def test_product_composition_sigma_zz_fluctuation():
    comp = decomposition_to_composition(braunstein_decomposition(0.1), 900)
    assert fluctuation_proper(comp, sigma_zz_pair()).fluctuation == pytest.approx(math.sqrt(800), abs=1e-10)


def test_bb84_sigma_x():
    rep = fluctuation_proper(bb84(100), sigma_x_single())
    assert rep.fluctuation == pytest.approx(math.sqrt(50), abs=1e-12)
    # per-component variances 1, 1, 0, 0 times N/4
    np.testing.assert_allclose(rep.per_component_variance, [25, 25, 0, 0], atol=1e-12)


def test_report_contributions_sum_to_square(rng):
    c = EnsembleComposition([(rng.uniform(0.5, 4), rand_state(rng, 4)) for _ in range(5)])
    rep = fluctuation_proper(c, rand_hermitian(rng, 4))
    assert sum(rep.per_component_variance) == pytest.approx(rep.fluctuation**2, rel=1e-9)


def test_identical_mixed():
    assert fluctuation_identical_mixed(IdenticalMixedEnsemble(100, np.eye(2) / 2), sigma_z_single()) == pytest.approx(10, abs=1e-10)
    assert fluctuation_identical_mixed(IdenticalMixedEnsemble(37, projector(KET0)), sigma_z_single()) == 0
    with pytest.raises(ValueError):
        IdenticalMixedEnsemble(10, np.diag([0.7, 0.7]))


def test_identical_mixed_vs_proper_contrast():
    # same rho, different pictures: sqrt(N) for identical mixed molecules, 0 for S_I
    assert same_density_matrix(s_one(100), EnsembleComposition([(50, KET0), (50, KET1)]))
    mixed = fluctuation_identical_mixed(IdenticalMixedEnsemble(100, density_matrix(s_one(100))), sigma_z_single())
    assert abs(mixed - 10) <= 1e-10
    assert abs(fluctuation_proper(s_one(100), sigma_z_single()).fluctuation) <= 1e-10


def test_single_state_composition_matches_identical_mixed(rng):
    for d in (2, 3, 4):
        psi, omega = rand_state(rng, d), rand_hermitian(rng, d)
        c = EnsembleComposition([(3, psi), (4, psi * 1j)])
        a = fluctuation_proper(c, omega).fluctuation
        b = fluctuation_identical_mixed(IdenticalMixedEnsemble(7, projector(psi)), omega)
        assert abs(a - b) <= 1e-10


def test_fluctuation_zero_iff_eigenstates(rng):
    omega = rand_hermitian(rng, 3)
    _, vecs = np.linalg.eigh(omega)
    eig = EnsembleComposition([(2, vecs[:, 0]), (5, vecs[:, 2])])
    assert fluctuation_proper(eig, omega).fluctuation <= 1e-9
    mixed_in = EnsembleComposition([(2, vecs[:, 0]), (1, rand_state(rng, 3))])
    assert fluctuation_proper(mixed_in, omega).fluctuation > 1e-9


def test_corrupted_variance_raises(monkeypatch):
    monkeypatch.setattr(ens, "_component_moments", lambda comp, m: (np.zeros(comp.n_components), -np.ones(comp.n_components)))
    with pytest.raises(NumericalInconsistencyError):
        fluctuation_proper(s_two(10), sigma_z_single())


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.floats(0.01, 1e4))
def test_scaling_counts(seed, k):
    rng = np.random.default_rng(seed)
    c = EnsembleComposition([(rng.uniform(0.5, 3), rand_state(rng, 2)) for _ in range(3)])
    omega = rand_hermitian(rng, 2)
    a, b = fluctuation_proper(c, omega), fluctuation_proper(c.scaled(k), omega)
    assert b.expectation_ensemble == pytest.approx(k * a.expectation_ensemble, rel=1e-10, abs=1e-12 * k)
    assert b.fluctuation == pytest.approx(math.sqrt(k) * a.fluctuation, rel=1e-10)


# --- same density matrix -----------------------------------------------------


def test_same_density_matrix():
    assert same_density_matrix(s_one(10), s_two(10))
    assert not same_density_matrix(s_one(10), EnsembleComposition([(10, KET0)]))
    assert same_density_matrix(
        effective_bell_composition(100, 0.05), decomposition_to_composition(braunstein_decomposition(0.05), 100)
    )
    with pytest.raises(DimensionError):
        same_density_matrix(s_one(10), EnsembleComposition([(1, BELL)]))


def test_esd_expectation_invariance(rng):
    pairs = [(s_one(100), s_two(100)), (bb84(40), s_one(40))]
    for a, b in pairs:
        assert same_density_matrix(a, b)
        for _ in range(20):
            omega = rand_hermitian(rng, a.dim)
            ea, eb = ensemble_expectation(a, omega), ensemble_expectation(b, omega)
            assert abs(ea - eb) <= 1e-9 * max(1, abs(ea))


# --- full product state oracle ----------------------------------------------


def test_full_product_state_examples():
    np.testing.assert_array_equal(full_product_state(EnsembleComposition([(1, KET0), (1, KET1)])), basis_state("01"))
    np.testing.assert_allclose(full_product_state(EnsembleComposition([(2, PLUS)])), [0.5] * 4)


def test_full_product_state_norm(rng):
    for _ in range(10):
        c = random_integer_composition(rng, 2, 6)
        assert abs(np.linalg.norm(full_product_state(c)) - 1) <= 1e-10


def test_full_product_state_limits():
    with pytest.raises(ValueError):
        full_product_state(EnsembleComposition([(1.5, KET0)]))
    with pytest.raises(OracleCapacityError):
        full_product_state(EnsembleComposition([(11, BELL)]))


def test_oracle_small_cases():
    assert oracle_fluctuation(s_one(4), sigma_z_single()) == pytest.approx((0, 0), abs=1e-12)
    assert oracle_fluctuation(s_two(4), sigma_z_single()) == pytest.approx((0, 2), abs=1e-12)


def test_oracle_equivalence_randomized(rng):
    for _ in range(100):
        d = int(rng.choice([2, 3, 4]))
        c = random_integer_composition(rng, d, 5)
        omega = rand_hermitian(rng, d)
        rep = fluctuation_proper(c, omega)
        mean, std = oracle_fluctuation(c, omega)
        assert abs(rep.fluctuation - std) <= 1e-8
        assert abs(rep.expectation_ensemble - mean) <= 1e-8


def test_oracle_up_to_2_12(rng):
    c = random_integer_composition(rng, 2, 12)
    omega = rand_hermitian(rng, 2)
    assert abs(fluctuation_proper(c, omega).fluctuation - oracle_fluctuation(c, omega)[1]) <= 1e-8


def test_collective_distribution_despagnat():
    dist = collective_distribution(s_two(4), sigma_z_single())
    # binomial over 4 independent +-1 outcomes
    assert dist == pytest.approx({-4: 1 / 16, -2: 4 / 16, 0: 6 / 16, 2: 4 / 16, 4: 1 / 16})
    assert collective_distribution(s_one(4), sigma_z_single()) == pytest.approx({0.0: 1.0})


def test_collective_distribution_agrees_with_oracle(rng):
    for _ in range(20):
        d = int(rng.choice([2, 4]))
        c = random_integer_composition(rng, d, 5)
        omega = rand_hermitian(rng, d)
        mean, std = distribution_moments(collective_distribution(c, omega))
        o_mean, o_std = oracle_fluctuation(c, omega)
        assert abs(mean - o_mean) <= 1e-8 and abs(std - o_std) <= 1e-8


# --- unitary evolution and census -------------------------------------------


def test_apply_unitary_cnot_creates_bell():
    c = EnsembleComposition([(10, np.kron(PLUS, KET0))])
    after = apply_unitary(c, CNOT)
    assert after.counts.tolist() == [10]
    assert abs(abs(np.vdot(after.states[0], BELL)) - 1) <= 1e-12
    assert entanglement_census(c) == 0
    assert entanglement_census(after) == 1


def test_apply_unitary_identity_and_merging():
    c = EnsembleComposition([(3, KET0), (2, KET1)])
    same = apply_unitary(c, np.eye(2))
    assert same.counts.tolist() == [3, 2]
    # unitaries preserve overlaps, so distinct rays stay distinct
    c2 = EnsembleComposition([(1, basis_state("10")), (1, (basis_state("10") + basis_state("11")) / np.sqrt(2))])
    assert apply_unitary(c2, CNOT).n_components == 2
    with pytest.raises(ValueError):
        apply_unitary(c, np.array([[1, 1], [0, 1]]))


def test_apply_unitary_conjugates_density(rng):
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    c = EnsembleComposition([(rng.uniform(1, 3), rand_state(rng, 4)) for _ in range(3)])
    lhs = density_matrix(apply_unitary(c, q))
    assert np.max(np.abs(lhs - q @ density_matrix(c) @ q.conj().T)) <= 1e-10


def test_entanglement_census_values():
    assert entanglement_census(effective_bell_composition(1000, 0.1)) == pytest.approx(0.1)
    for eps in (0.0, 0.05, 1 / 9):
        assert entanglement_census(decomposition_to_composition(braunstein_decomposition(eps), 100)) == 0
    with pytest.raises(DimensionError):
        entanglement_census(s_one(4))
