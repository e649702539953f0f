import numpy as np
import pytest

from unotsim.qmath import ContractViolation, trace_distance
from unotsim.spinstates import (
    STANDARD_DIRECTIONS,
    SpinPairEnsemble,
    aligned_ensemble,
    aligned_pair_state,
    antialigned_ensemble,
    antialigned_pair_state,
    bloch_state,
    ensemble_density,
    quantum_classical_state,
    unot_apply,
)

RT2 = np.sqrt(2.0)


def random_qubit_dm(rng):
    g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_separable(rng, max_terms=6):
    terms = int(rng.integers(1, max_terms + 1))
    weights = rng.dirichlet(np.ones(terms))
    rho = np.zeros((4, 4), dtype=complex)
    for w in weights:
        a = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        rho += w * np.kron(np.outer(a, a.conj()), np.outer(b, b.conj()))
    return rho


class TestBlochState:
    def test_plus_z(self):
        np.testing.assert_allclose(bloch_state([0, 0, 1]), [1, 0], atol=1e-15)

    def test_minus_z_exact(self):
        v = bloch_state([0, 0, -1])
        assert v[0] == 0 and v[1] == 1

    def test_plus_x(self):
        np.testing.assert_allclose(bloch_state([1, 0, 0]), [1 / RT2, 1 / RT2], atol=1e-15)

    def test_minus_y(self):
        np.testing.assert_allclose(bloch_state([0, -1, 0]), [1 / RT2, -1j / RT2], atol=1e-15)

    def test_projector_matches_bloch_formula(self):
        sx = np.array([[0, 1], [1, 0]])
        sy = np.array([[0, -1j], [1j, 0]])
        sz = np.diag([1.0, -1.0])
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = rng.standard_normal(3)
            n /= np.linalg.norm(n)
            v = bloch_state(n)
            target = (np.eye(2) + n[0] * sx + n[1] * sy + n[2] * sz) / 2
            np.testing.assert_allclose(np.outer(v, v.conj()), target, atol=1e-12)

    def test_up_amplitude_real_nonnegative(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = rng.standard_normal(3)
            n /= np.linalg.norm(n)
            v = bloch_state(n)
            assert v[0].imag == 0 and v[0].real >= 0

    def test_non_unit_vector_rejected(self):
        with pytest.raises(ContractViolation):
            bloch_state([0, 0, 2])


class TestEnsembles:
    def test_single_member(self):
        ens = SpinPairEnsemble(((1.0, np.array([0.0, 0, 1]), np.array([0.0, 0, 1])),))
        rho = ensemble_density(ens)
        expected = np.zeros((4, 4))
        expected[0, 0] = 1.0
        np.testing.assert_allclose(rho, expected, atol=1e-15)

    def test_weights_must_sum_to_one(self):
        with pytest.raises(ContractViolation):
            SpinPairEnsemble(((0.5, np.array([0.0, 0, 1]), np.array([0.0, 0, 1])),))

    def test_aligned_spectrum(self):
        lam = np.linalg.eigvalsh(aligned_pair_state())
        np.testing.assert_allclose(lam, [0, 1 / 3, 1 / 3, 1 / 3], atol=1e-12)

    def test_aligned_equals_triplet_mixture(self):
        # (Phi+ + Phi- + Psi+ projectors)/3, written out literally
        phi_p = np.array([1, 0, 0, 1]) / RT2
        phi_m = np.array([1, 0, 0, -1]) / RT2
        psi_p = np.array([0, 1, 1, 0]) / RT2
        target = sum(np.outer(v, v.conj()) for v in (phi_p, phi_m, psi_p)) / 3
        np.testing.assert_allclose(aligned_pair_state(), target, atol=1e-12)

    def test_antialigned_spectrum(self):
        lam = np.linalg.eigvalsh(antialigned_pair_state())
        np.testing.assert_allclose(lam, [1 / 6, 1 / 6, 1 / 6, 1 / 2], atol=1e-12)

    def test_marginals_are_maximally_mixed(self):
        for rho in (aligned_pair_state(), antialigned_pair_state()):
            r = rho.reshape(2, 2, 2, 2)
            np.testing.assert_allclose(np.einsum("ijkj->ik", r), np.eye(2) / 2, atol=1e-12)
            np.testing.assert_allclose(np.einsum("ijil->jl", r), np.eye(2) / 2, atol=1e-12)


class TestUnot:
    def test_pure_state_antipodal(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = rng.standard_normal(3)
            n /= np.linalg.norm(n)
            v = bloch_state(n)
            w = bloch_state(-n)
            rho = np.kron(np.outer(v, v.conj()), np.eye(2) / 2)
            out = unot_apply(rho, (2, 2), "A")
            expected = np.kron(np.outer(w, w.conj()), np.eye(2) / 2)
            np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_maps_antialigned_to_aligned(self):
        out = unot_apply(antialigned_pair_state(), (2, 2), "A")
        assert trace_distance(out, aligned_pair_state()) <= 1e-12

    def test_maps_aligned_to_antialigned(self):
        out = unot_apply(aligned_pair_state(), (2, 2), "A")
        assert trace_distance(out, antialigned_pair_state()) <= 1e-12

    def test_involution(self):
        # the flip is only a physical channel on separable states, so draw those
        rng = np.random.default_rng(12)
        for _ in range(20):
            rho = random_separable(rng)
            for side in ("A", "B"):
                twice = unot_apply(unot_apply(rho, (2, 2), side), (2, 2), side)
                assert np.abs(twice - rho).max() <= 1e-12

    def test_spectrum_preserved_on_product_states(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            ra = random_qubit_dm(rng)
            rb = random_qubit_dm(rng)
            rho = np.kron(ra, rb)
            lam0 = np.linalg.eigvalsh(rho)
            lam1 = np.linalg.eigvalsh(unot_apply(rho, (2, 2), "A"))
            np.testing.assert_allclose(lam0, lam1, atol=1e-10)

    def test_target_marginal_spectrum_preserved(self):
        # conjugation by an anti-unitary leaves the flipped spin's own spectrum alone
        rng = np.random.default_rng(14)
        for _ in range(20):
            rho = random_separable(rng)
            out = unot_apply(rho, (2, 2), "A")
            lam0 = np.linalg.eigvalsh(np.einsum("ijkj->ik", rho.reshape(2, 2, 2, 2)))
            lam1 = np.linalg.eigvalsh(np.einsum("ijkj->ik", out.reshape(2, 2, 2, 2)))
            np.testing.assert_allclose(lam0, lam1, atol=1e-10)

    def test_mixing_directions_changes_joint_spectrum(self):
        # the two reference mixtures map onto each other yet have different spectra,
        # so no joint-spectrum invariant can hold beyond the product case
        lam_anti = np.linalg.eigvalsh(antialigned_pair_state())
        lam_ali = np.linalg.eigvalsh(aligned_pair_state())
        assert np.abs(lam_anti - lam_ali).max() > 0.1

    def test_xx_zz_mixture_is_local_unitary_equivalent(self):
        # For (|xx><xx| + |zz><zz|)/2 the flip on A equals a pi rotation about y
        x = bloch_state([1, 0, 0])
        z = bloch_state([0, 0, 1])
        rho = (
            np.outer(np.kron(x, x), np.kron(x, x).conj())
            + np.outer(np.kron(z, z), np.kron(z, z).conj())
        ) / 2
        ry = np.array([[0.0, -1.0], [1.0, 0.0]])  # exp(-i pi sigma_y / 2)
        u = np.kron(ry, np.eye(2))
        np.testing.assert_allclose(unot_apply(rho, (2, 2), "A"), u @ rho @ u.conj().T, atol=1e-12)

    def test_non_qubit_target_rejected(self):
        with pytest.raises(ContractViolation):
            unot_apply(np.eye(6) / 6, (3, 2), "A")


class TestQuantumClassical:
    def test_deterministic_block(self):
        rho_b = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        out = quantum_classical_state((1.0, 0.0), [rho_b, np.eye(2) / 2])
        expected = np.zeros((4, 4), dtype=complex)
        expected[:2, :2] = rho_b
        np.testing.assert_allclose(out, expected, atol=1e-15)

    def test_classically_correlated_diagonal(self):
        out = quantum_classical_state(
            (0.5, 0.5), [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        )
        np.testing.assert_allclose(out, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)

    def test_block_dimension_rejected(self):
        with pytest.raises(ContractViolation):
            quantum_classical_state((0.5, 0.5), [np.eye(3) / 3, np.eye(3) / 3])


def test_standard_directions_cover_axes():
    mat = np.stack(STANDARD_DIRECTIONS)
    assert mat.shape == (6, 3)
    np.testing.assert_allclose(mat.sum(axis=0), [0, 0, 0], atol=0)
    assert len(aligned_ensemble()) == 6 and len(antialigned_ensemble()) == 6
