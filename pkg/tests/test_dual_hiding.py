import numpy as np
import pytest

from qhide.bit_hiding import perfect_oracle, werner_tensor
from qhide.dual_hiding import (
    bell_state,
    bits_from_qubits,
    circuit_sampler,
    generalized_encoder,
    pauli_conjugation_maps,
    process_fidelity_to_identity,
    qubits_from_bits,
    sample_encoding,
)
from qhide.errors import DomainError
from qhide.operators import (
    DensityOperator,
    HilbertLayout,
    layout,
    partial_trace,
    trace_norm,
)
from qhide.pauli import pauli_matrix

from conftest import random_state

ZERO = np.diag([1.0, 0.0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)


def qubit_state(mat):
    return DensityOperator.from_matrix(layout(("Q", 2)), mat)


@pytest.fixture(scope="module")
def werner_qs():
    return qubits_from_bits(werner_tensor(2, 2))


@pytest.fixture(scope="module")
def oracle_qs():
    return qubits_from_bits(perfect_oracle(2))


class TestQubitsFromBits:
    def test_carrier_marginal_maximally_mixed(self, oracle_qs):
        enc = oracle_qs.encode(qubit_state(ZERO))
        red = partial_trace(enc, {"B2"})
        np.testing.assert_allclose(red.mat, np.eye(2) / 2, atol=1e-10)

    def test_round_trip_werner(self, werner_qs, rng):
        for _ in range(5):
            phi = qubit_state(random_state(rng, 2))
            out = werner_qs.decode(werner_qs.encode(phi))
            assert trace_norm(out.mat - phi.mat) < 1e-9

    def test_hiding_marginal_input_independent(self, werner_qs):
        labels = set(werner_qs.core.layout.labels)
        m0 = partial_trace(werner_qs.encode(qubit_state(ZERO)), labels)
        m1 = partial_trace(werner_qs.encode(qubit_state(PLUS)), labels)
        assert trace_norm(m0.mat - m1.mat) < 1e-12

    def test_matches_direct_formula(self, werner_qs, rng):
        cs = werner_qs.core
        phi = random_state(rng, 2)
        expect = np.zeros((32, 32), dtype=complex)
        for i in range(4):
            expect += 0.25 * np.kron(cs.state(i).mat,
                                     pauli_matrix(i, 1) @ phi @ pauli_matrix(i, 1))
        np.testing.assert_allclose(werner_qs.encoder.apply_raw(phi), expect,
                                   atol=1e-10)

    def test_encoder_linearity(self, werner_qs, rng):
        p0, p1 = random_state(rng, 2), random_state(rng, 2)
        lam = 0.37
        mixed = werner_qs.encoder.apply_raw(lam * p0 + (1 - lam) * p1)
        parts = (lam * werner_qs.encoder.apply_raw(p0)
                 + (1 - lam) * werner_qs.encoder.apply_raw(p1))
        np.testing.assert_allclose(mixed, parts, atol=1e-10)

    def test_decode_encode_is_identity_channel(self, werner_qs):
        chan = werner_qs.decoder.compose(werner_qs.encoder)
        assert process_fidelity_to_identity(chan) >= 1 - 1e-9

    def test_odd_arity_rejected(self):
        with pytest.raises(DomainError):
            qubits_from_bits(perfect_oracle(3))

    def test_delta_certificate_scaling(self):
        qs = qubits_from_bits(perfect_oracle(2))
        assert qs.delta_certificate.value == 0.0
        assert qs.delta_certificate.kind == "oracle-perfect"


class TestCircuitSampler:
    def test_exhaustive_average_matches_encoder(self, werner_qs, rng):
        cs = werner_qs.core
        phi = qubit_state(random_state(rng, 2))
        trajs = circuit_sampler(cs, phi)
        avg = sum(p * s.mat for _, p, s in trajs)
        np.testing.assert_allclose(avg, werner_qs.encoder.apply_raw(phi.mat),
                                   atol=1e-10)

    def test_uniform_outcomes(self, werner_qs, rng):
        phi = qubit_state(random_state(rng, 2))
        probs = [p for _, p, _ in circuit_sampler(werner_qs.core, phi)]
        np.testing.assert_allclose(probs, 0.25)

    def test_outcome_zero_trajectory(self, werner_qs, rng):
        cs = werner_qs.core
        phi = qubit_state(random_state(rng, 2))
        index, _, state = circuit_sampler(cs, phi)[0]
        assert index == 0
        np.testing.assert_allclose(state.mat, np.kron(cs.state(0).mat, phi.mat),
                                   atol=1e-12)

    def test_sampled_average_converges(self, werner_qs):
        cs = werner_qs.core
        phi = qubit_state(ZERO)
        rng = np.random.default_rng(7)
        approx = sample_encoding(cs, phi, rng, samples=4000)
        exact = werner_qs.encoder.apply_raw(phi.mat)
        assert trace_norm(approx - exact) < 0.1


class TestBitsFromQubits:
    def test_trivial_identity_encoder(self):
        from qhide.channels import identity_channel
        from qhide.dual_hiding import DeltaCertificate, QubitHidingScheme

        lay = HilbertLayout((("Q", 2),))
        qs = QubitHidingScheme(1, identity_channel(lay), identity_channel(lay),
                               DeltaCertificate(2.0, "heuristic"))
        cs = bits_from_qubits(qs)
        for i in range(4):
            bell = bell_state(i, 1, ("Q", "B2p")).projector().mat
            np.testing.assert_allclose(cs.state(i).mat, bell, atol=1e-12)

    def test_oracle_states_orthogonal(self, oracle_qs):
        cs = bits_from_qubits(oracle_qs)
        gram = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                gram[i, j] = np.trace(cs.state(i).mat @ cs.state(j).mat).real
        # Gram of orthogonal states: zero off-diagonal
        off = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off)) < 1e-9

    def test_decoder_recovers_index(self, oracle_qs, werner_qs):
        for qs in (oracle_qs, werner_qs):
            cs = bits_from_qubits(qs)
            assert cs.decode_success() >= 1 - 1e-9

    def test_werner_states_orthogonal(self, werner_qs):
        cs = bits_from_qubits(werner_qs)
        for i in range(4):
            for j in range(i + 1, 4):
                assert abs(np.trace(cs.state(i).mat @ cs.state(j).mat)) < 1e-9


class TestGeneralizedEncoder:
    def test_identity_maps_hide_nothing_about_input(self, rng):
        from qhide.channels import identity_channel

        cs = perfect_oracle(2)
        ident = identity_channel(HilbertLayout((("Q", 2),)))
        enc = generalized_encoder(cs, tuple(ident for _ in range(4)))
        phi = random_state(rng, 2)
        mix = sum(0.25 * s.mat for s in cs.states)
        np.testing.assert_allclose(enc.apply_raw(phi), np.kron(mix, phi), atol=1e-10)

    def test_pauli_maps_match_teleport_encoder(self, rng):
        cs = werner_tensor(2, 2)
        enc = generalized_encoder(cs, pauli_conjugation_maps(1))
        qs = qubits_from_bits(cs)
        phi = random_state(rng, 2)
        np.testing.assert_allclose(enc.apply_raw(phi), qs.encoder.apply_raw(phi),
                                   atol=1e-12)

    def test_constant_maps_ignore_input(self, rng):
        from qhide.channels import constant_channel

        cs = perfect_oracle(2)
        mixed = DensityOperator.from_matrix(HilbertLayout((("B2", 2),)), np.eye(2) / 2)
        const = constant_channel(HilbertLayout((("Q", 2),)), mixed)
        enc = generalized_encoder(cs, tuple(const for _ in range(4)))
        o0 = enc.apply_raw(random_state(rng, 2))
        o1 = enc.apply_raw(random_state(rng, 2))
        np.testing.assert_allclose(o0, o1, atol=1e-10)

    def test_count_mismatch(self):
        from qhide.channels import identity_channel

        cs = perfect_oracle(2)
        ident = identity_channel(HilbertLayout((("Q", 2),)))
        with pytest.raises(DomainError):
            generalized_encoder(cs, (ident,))


def test_round_trip_structure_oracle():
    qs = qubits_from_bits(perfect_oracle(2))
    cs2 = bits_from_qubits(qs)
    assert cs2.k == 2
    assert cs2.decode_success() >= 1 - 1e-9
    for i in range(4):
        for j in range(i + 1, 4):
            assert abs(np.trace(cs2.state(i).mat @ cs2.state(j).mat)) < 1e-9
