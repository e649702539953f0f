import math

import numpy as np
import pytest
from scipy.linalg import expm

from unotsim.embedding import decode_pair, encode_pair, encoded_unot
from unotsim.qmath import ContractViolation, trace_distance
from unotsim.spinstates import STANDARD_DIRECTIONS, antialigned_ensemble, aligned_pair_state
from unotsim.trapsim import (
    DEFAULT_FOCK_CUTOFF,
    IonState,
    Pulse,
    PulseSequence,
    TruncationError,
    apply_sequence,
    compile_encoded_unot,
    encoded_target,
    flip,
    ground_state,
    ket_fidelity_up_to_phase,
    microwave,
    mw,
    prepare_pair,
    preparation_sequence,
    red_sideband,
    rsb,
    sequence_unitary,
    state_from_encoded,
    swap,
    swap_parameters,
)

NMAX = DEFAULT_FOCK_CUTOFF
DIM = 4 * (NMAX + 1)


def idx(n, m, n_max=NMAX):
    return n * (n_max + 1) + m


def basis(n, m, n_max=NMAX):
    v = np.zeros(4 * (n_max + 1), dtype=complex)
    v[idx(n, m, n_max)] = 1.0
    return v


class TestMicrowave:
    def test_zero_angle_is_identity(self):
        np.testing.assert_allclose(microwave(1, 0.0, 0.3), np.eye(DIM), atol=1e-15)

    def test_pi_pulse_level_one(self):
        out = microwave(1, math.pi, 0.0) @ basis(0, 0)
        np.testing.assert_allclose(out, -1j * basis(1, 0), atol=1e-12)

    def test_half_pulse_level_two(self):
        out = microwave(2, math.pi / 2, math.pi / 2) @ basis(0, 0)
        np.testing.assert_allclose(out, (basis(0, 0) - basis(2, 0)) / np.sqrt(2), atol=1e-12)

    def test_closed_form_matches_matrix_exponential(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(1, 4))
            chi = rng.uniform(0, 2 * math.pi)
            phi = rng.uniform(0, 2 * math.pi)
            h = np.zeros((4, 4), dtype=complex)
            h[n, 0] = np.exp(-1j * phi)
            h[0, n] = np.exp(1j * phi)
            target = np.kron(expm(-1j * chi / 2 * h), np.eye(NMAX + 1))
            np.testing.assert_allclose(microwave(n, chi, phi), target, atol=1e-12)

    def test_invalid_level(self):
        with pytest.raises(ContractViolation):
            microwave(0, math.pi, 0.0)


class TestRedSideband:
    def test_uncoupled_levels_fixed(self):
        u = red_sideband(1.3, 0.7)
        for n in (1, 3):
            for m in range(NMAX - 1):
                np.testing.assert_allclose(u @ basis(n, m), basis(n, m), atol=1e-12)

    def test_pi_transfer_ground_manifold(self):
        out = red_sideband(math.pi, 0.0) @ basis(2, 0)
        np.testing.assert_allclose(out, -basis(0, 1), atol=1e-12)

    def test_sqrt_scaling_pi_transfer_on_m1(self):
        # full transfer |0,2> -> |2,1> needs chi = pi/sqrt(2)
        out = red_sideband(math.pi / math.sqrt(2.0), 0.0) @ basis(0, 2)
        assert abs(out[idx(0, 2)]) <= 1e-12
        assert abs(out[idx(2, 1)]) == pytest.approx(1.0, abs=1e-12)

    def test_sqrt_rate_law_across_manifolds(self):
        # the rotation angle on manifold m is (chi/2) sqrt(m+1): measure it
        chi = 0.4
        u = red_sideband(chi, 0.0)
        for m in range(3):
            amp = u[idx(0, m + 1), idx(0, m + 1)]
            angle = math.acos(np.clip(amp.real, -1, 1))
            assert angle == pytest.approx(chi / 2 * math.sqrt(m + 1), abs=1e-9)

    def test_matches_generator_exponential(self):
        a = np.diag(np.sqrt(np.arange(1, NMAX + 1)), 1)
        sp = np.zeros((4, 4))
        sp[2, 0] = 1.0
        chi, phi = 1.1, 2.3
        gen = np.exp(-1j * phi) * np.kron(sp, a) - np.exp(1j * phi) * np.kron(sp.T, a.T)
        np.testing.assert_allclose(red_sideband(chi, phi), expm(chi / 2 * gen), atol=1e-12)

    def test_small_cutoff_rejected(self):
        with pytest.raises(TruncationError):
            red_sideband(1.0, 0.0, n_max=1)


class TestFlip:
    @pytest.mark.parametrize("phi", [0.0, 0.7, 2.1, 4.4])
    def test_line_by_line(self, phi):
        u = flip(phi)
        half = math.pi / (2 * math.sqrt(2.0))
        # |0,0> fixed
        np.testing.assert_allclose(u @ basis(0, 0), basis(0, 0), atol=1e-9)
        # |0,1> -> e^{-i(phi + pi/(2 sqrt 2))} |2,0>
        np.testing.assert_allclose(
            u @ basis(0, 1), np.exp(-1j * (phi + half)) * basis(2, 0), atol=1e-9
        )
        # |0,2> -> e^{-i(phi + pi/2)} |2,1>
        np.testing.assert_allclose(
            u @ basis(0, 2), np.exp(-1j * (phi + math.pi / 2)) * basis(2, 1), atol=1e-9
        )
        # |1,m>, |3,m> fixed
        for m in range(NMAX - 1):
            np.testing.assert_allclose(u @ basis(1, m), basis(1, m), atol=1e-9)
            np.testing.assert_allclose(u @ basis(3, m), basis(3, m), atol=1e-9)
        # return lines carry the determinant-forced extra minus:
        # a product of SU(2) sideband blocks has det +1, so the return
        # amplitude must be minus the conjugate of the forward amplitude
        np.testing.assert_allclose(
            u @ basis(2, 0), -np.exp(1j * (phi + half)) * basis(0, 1), atol=1e-9
        )
        np.testing.assert_allclose(
            u @ basis(2, 1), -np.exp(1j * (phi + math.pi / 2)) * basis(0, 2), atol=1e-9
        )

    def test_composite_is_three_sideband_pulses(self):
        from unotsim.trapsim import flip_sequence

        seq = flip_sequence(0.3)
        assert len(seq) == 3
        assert all(p.kind == "red_sideband" for p in seq.pulses)


class TestSwap:
    @pytest.mark.parametrize("chi,phi", [(1.0, 0.4), (math.pi / 2, 0.0), (math.pi, 1.2), (2.5, 5.0), (3.5, 2.0)])
    def test_line_by_line(self, chi, phi):
        u = swap(chi, phi)
        c, s = math.cos(chi / 2), math.sin(chi / 2)
        np.testing.assert_allclose(u @ basis(0, 0), basis(0, 0), atol=1e-9)
        np.testing.assert_allclose(
            u @ basis(0, 1),
            c * basis(0, 1) + s * np.exp(-1j * phi) * basis(2, 0),
            atol=1e-9,
        )
        # return line with the unitarity-forced minus on the transfer term
        np.testing.assert_allclose(
            u @ basis(2, 0),
            -s * np.exp(1j * phi) * basis(0, 1) + c * basis(2, 0),
            atol=1e-9,
        )
        for m in range(NMAX - 1):
            np.testing.assert_allclose(u @ basis(1, m), basis(1, m), atol=1e-9)
            np.testing.assert_allclose(u @ basis(3, m), basis(3, m), atol=1e-9)

    @pytest.mark.parametrize("chi,phi", [(1.0, 0.4), (2.5, 5.0)])
    def test_identity_one_rung_up(self, chi, phi):
        # stronger than population preservation: exact identity on {|0,2>, |2,1>}
        u = swap(chi, phi)
        np.testing.assert_allclose(u @ basis(0, 2), basis(0, 2), atol=1e-9)
        np.testing.assert_allclose(u @ basis(2, 1), basis(2, 1), atol=1e-9)

    def test_zero_angle_identity_on_manifold(self):
        u = swap(0.0, 0.9)
        np.testing.assert_allclose(u @ basis(0, 1), basis(0, 1), atol=1e-9)
        np.testing.assert_allclose(u @ basis(2, 0), basis(2, 0), atol=1e-9)

    def test_parameter_equations_satisfied(self):
        ref = math.pi / math.sqrt(2.0)
        for chi in (0.5, 1.7, 3.0):
            alpha, gamma = swap_parameters(chi, 0.8)
            assert math.sin(ref) * math.cos(alpha) == pytest.approx(math.sin(chi / 4), abs=1e-12)
            assert math.tan(ref) * math.cos(0.8 - gamma) == pytest.approx(math.tan(chi / 4), abs=1e-12)

    def test_unsolvable_angle_rejected(self):
        with pytest.raises(ContractViolation):
            swap(3.7, 0.0)


class TestPreparation:
    @pytest.mark.parametrize(
        "sign,i", [(s, i) for s in (1, -1) for i in range(6)],
        ids=lambda v: str(v),
    )
    def test_all_twelve_pairs_reach_encoded_form(self, sign, i):
        dir_b = STANDARD_DIRECTIONS[i]
        dir_a = sign * dir_b
        state = prepare_pair(dir_a, dir_b)
        target = encoded_target(dir_a, dir_b)
        fid = ket_fidelity_up_to_phase(state.encoded_vector(), target)
        assert fid >= 1 - 1e-9

    def test_z_z_is_ground_state(self):
        seq = preparation_sequence([0, 0, 1], [0, 0, 1])
        assert len(seq) == 0
        state = prepare_pair([0, 0, 1], [0, 0, 1])
        np.testing.assert_allclose(state.amplitudes, ground_state().amplitudes, atol=0)

    def test_minus_z_z_single_pulse(self):
        seq = preparation_sequence([0, 0, -1], [0, 0, 1])
        assert len(seq) == 1
        state = prepare_pair([0, 0, -1], [0, 0, 1])
        np.testing.assert_allclose(state.encoded_vector(), [0, 0, 1, 0, 0, 0, 0, 0], atol=1e-12)

    def test_x_x_zero_relative_phase(self):
        # this row comes out with zero phase error, not just up to a phase
        state = prepare_pair([1, 0, 0], [1, 0, 0])
        target = np.zeros(8)
        target[[0, 1, 2, 3]] = 0.5
        np.testing.assert_allclose(state.encoded_vector(), target, atol=1e-12)

    def test_unlisted_pair_rejected(self):
        with pytest.raises(ContractViolation):
            preparation_sequence([1, 0, 0], [0, 0, 1])

    def test_tail_population_negligible(self):
        for n in STANDARD_DIRECTIONS:
            state = prepare_pair(-n, n)
            assert state.tail_population() <= 1e-8


class TestCompiledFlip:
    def test_four_pi_pulses(self):
        seq = compile_encoded_unot()
        assert len(seq) == 4
        assert all(p.kind == "microwave" and p.chi == pytest.approx(math.pi) for p in seq.pulses)

    def test_product_matches_target_up_to_phase(self):
        seq = compile_encoded_unot()
        u = sequence_unitary(seq, n_max=2)[: 4 * 3 : 3, : 4 * 3 : 3]  # internal block at m=0
        target = encoded_unot().astype(complex)
        overlap = np.trace(target.conj().T @ u) / 4
        assert abs(abs(overlap) - 1.0) <= 1e-12
        np.testing.assert_allclose(u, (overlap / abs(overlap)) * target, atol=1e-9)

    def test_end_to_end_flip_of_encoded_mixture(self):
        seq = compile_encoded_unot()
        rho8 = np.zeros((8, 8), dtype=complex)
        for _, dir_a, dir_b in antialigned_ensemble().members:
            state = apply_sequence(prepare_pair(dir_a, dir_b), seq)
            enc = state.encoded_vector()
            rho8 += np.outer(enc, enc.conj()) / 6
        decoded = decode_pair(rho8)
        assert trace_distance(decoded, aligned_pair_state()) <= 1e-9


class TestSequencesAndStates:
    def test_unitarity_of_generated_operators(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            if rng.random() < 0.5:
                u = microwave(int(rng.integers(1, 4)), rng.uniform(0, 6), rng.uniform(0, 6))
            else:
                u = red_sideband(rng.uniform(0, 6), rng.uniform(0, 6))
            np.testing.assert_allclose(u.conj().T @ u, np.eye(DIM), atol=1e-10)

    def test_norm_preserved_under_long_sequences(self):
        rng = np.random.default_rng(19)
        pulses = []
        for _ in range(20):
            if rng.random() < 0.5:
                pulses.append(mw(int(rng.integers(1, 4)), rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi)))
            else:
                pulses.append(rsb(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)))
        u = sequence_unitary(PulseSequence(tuple(pulses)))
        v = rng.standard_normal(DIM) + 1j * rng.standard_normal(DIM)
        v /= np.linalg.norm(v)
        assert np.linalg.norm(u @ v) == pytest.approx(1.0, abs=1e-9)

    def test_tail_guard_trips_on_unhealthy_state(self):
        # park population at the top of the ladder and nudge it
        v = np.zeros(4 * 3, dtype=complex)
        v[idx(2, 2, n_max=2)] = 1.0
        state = IonState(2, v)
        with pytest.raises(TruncationError):
            apply_sequence(state, PulseSequence((rsb(0.1, 0.0),)))

    def test_state_from_encoded_roundtrip(self):
        rng = np.random.default_rng(23)
        v8 = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        v8 /= np.linalg.norm(v8)
        state = state_from_encoded(v8)
        np.testing.assert_allclose(state.encoded_vector(), v8, atol=0)

    def test_pulse_text_roundtrip(self):
        seq = PulseSequence((mw(2, math.pi / 2, 1.25), rsb(math.pi, 0.0)), label="demo")
        text = seq.to_text()
        assert text.splitlines()[0].startswith("R2(")
        assert text.splitlines()[1].startswith("RSB(")
        back = PulseSequence.from_text(text, label="demo")
        assert back.pulses == seq.pulses

    def test_bad_pulse_line_rejected(self):
        with pytest.raises(ContractViolation):
            Pulse.from_text("R4(1.0,0.0)")

    def test_phase_reduced_to_principal_range(self):
        p = mw(1, 0.5, -math.pi / 2)
        assert 0.0 <= p.phi < 2 * math.pi
        assert p.phi == pytest.approx(3 * math.pi / 2)
        q = rsb(0.5, 7.0)
        assert 0.0 <= q.phi < 2 * math.pi
