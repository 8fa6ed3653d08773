import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import sqrtm

from conftest import random_density, random_pure
from qudit_bell.states import (DensityOperator, QuditPairState, apply_symmetric_noise, fidelity,
                               make_gamma_state, maximally_mixed, pure_density, pure_fidelity)


@pytest.mark.parametrize("d, gamma, expected", [
    (2, 1.0, [0.70710678, 0.70710678]),
    (3, 0.0, [0.70710678, 0.0, 0.70710678]),
    (3, 0.5, [0.66666667, 0.33333333, 0.66666667]),
])
def test_gamma_state_amplitudes(d, gamma, expected):
    state = make_gamma_state(d, gamma)
    c = state.coefficients
    np.testing.assert_allclose(np.diag(c).real, expected, atol=1e-8)
    assert np.all(c[~np.eye(d, dtype=bool)] == 0)
    assert abs(np.linalg.norm(state.amplitudes) - 1) < 1e-12


@pytest.mark.parametrize("d, gamma", [(4, 0.5), (1, 0.5), (2, -0.1), (3, 1.2)])
def test_gamma_state_domain(d, gamma):
    with pytest.raises(ValueError):
        make_gamma_state(d, gamma)


def test_row_major_ordering():
    # |1>_A |0>_B is index 1 * d + 0
    c = np.zeros((3, 3))
    c[1, 0] = 1
    state = QuditPairState.from_coefficients(c)
    assert state.amplitudes[3] == 1


def test_pure_density_bell_state():
    rho = pure_density(QuditPairState(2, np.array([1, 0, 0, 1]) / np.sqrt(2)))
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    np.testing.assert_allclose(rho.matrix, expected, atol=1e-15)


def test_pure_density_entry_and_purity():
    rho = pure_density(make_gamma_state(3, 0.5))
    assert rho.matrix[0, 0].real == pytest.approx(4 / 9, abs=1e-12)
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)
    assert rho.eigenvalues().max() == pytest.approx(1.0, abs=1e-12)


def test_density_operator_validation():
    with pytest.raises(ValueError):
        DensityOperator(np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        DensityOperator(np.eye(2))


def test_noise_limits():
    rho = pure_density(make_gamma_state(3, 0.3))
    np.testing.assert_allclose(apply_symmetric_noise(rho, 1.0, 3).matrix, rho.matrix, atol=1e-15)
    mixed = apply_symmetric_noise(rho, 0.0, 3)
    np.testing.assert_allclose(mixed.matrix, np.eye(9) / 9, atol=1e-15)
    with pytest.raises(ValueError):
        apply_symmetric_noise(rho, 1.5, 3)


def test_noise_spectrum_qubit():
    rho = pure_density(make_gamma_state(2, 1.0))
    ev = np.sort(np.linalg.eigvalsh(apply_symmetric_noise(rho, 0.927, 2).matrix))
    # rank-one projector mixed with white noise: one shifted eigenvalue, three flat
    np.testing.assert_allclose(ev, [0.01825, 0.01825, 0.01825, 0.94525], atol=1e-12)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(0, 2**32 - 1))
def test_noise_is_affine(l1, l2, seed):
    rho = random_density(np.random.default_rng(seed), 9)
    twice = apply_symmetric_noise(apply_symmetric_noise(rho, l1, 3), l2, 3)
    once = apply_symmetric_noise(rho, l1 * l2, 3)
    np.testing.assert_allclose(twice.matrix, once.matrix, atol=1e-12)
    assert twice.is_physical()


def test_fidelity_examples():
    rho = random_density(np.random.default_rng(1), 9)
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
    zero = DensityOperator(np.diag([1.0, 0.0]))
    one = DensityOperator(np.diag([0.0, 1.0]))
    assert fidelity(zero, one) == pytest.approx(0.0, abs=1e-12)
    target = pure_density(make_gamma_state(3, 1.0))
    assert fidelity(maximally_mixed(9), target) == pytest.approx(1 / 9, abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError):
        fidelity(maximally_mixed(4), maximally_mixed(9))


def test_fidelity_matches_scipy_sqrtm(rng):
    for _ in range(5):
        a, b = random_density(rng, 4), random_density(rng, 4)
        s = sqrtm(b.matrix)
        ref = np.trace(sqrtm(s @ a.matrix @ s)).real ** 2
        assert fidelity(a, b) == pytest.approx(ref, abs=1e-8)


def test_pure_target_shortcut_agrees(rng):
    for _ in range(100):
        rho = random_density(rng, 9, rank=int(rng.integers(1, 10)))
        psi = random_pure(rng, 9)
        target = QuditPairState(3, psi)
        assert fidelity(rho, pure_density(target)) == pytest.approx(
            pure_fidelity(rho, target), abs=1e-10)


def test_json_round_trip(rng):
    rho = random_density(rng, 4)
    back = DensityOperator.from_json(rho.to_json())
    np.testing.assert_array_equal(back.matrix, rho.matrix)
