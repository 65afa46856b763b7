import numpy as np
import pytest

from qhide.channels import (
    LoccProtocol,
    Povm,
    QChannel,
    compile_locc,
    conditioned_channel,
    constant_channel,
    depolarizing_channel,
    identity_channel,
    jamiolkowski_state,
    channel_from_jamiolkowski,
    povm_round,
    trace_out_channel,
    unitary_round,
)
from qhide.errors import LabelError, ShapeError, ValidityError
from qhide.operators import (
    DensityOperator,
    layout,
    max_entangled,
    partial_trace,
    qubits,
    trace_norm,
)

from conftest import random_state, random_unitary

X = np.array([[0, 1], [1, 0]], dtype=complex)


def random_channel(rng, din, dout, n_kraus=3):
    """Random TCP map via a Stinespring isometry."""
    g = rng.normal(size=(dout * n_kraus, din)) + 1j * rng.normal(size=(dout * n_kraus, din))
    q, _ = np.linalg.qr(g)
    iso = q[:, :din]
    kraus = tuple(iso[i * dout:(i + 1) * dout, :] for i in range(n_kraus))
    return QChannel(layout(("in", din)), layout(("out", dout)), kraus)


class TestApply:
    def test_identity(self, rng):
        lay = qubits(1)
        rho = DensityOperator.from_matrix(lay, random_state(rng, 2))
        out = identity_channel(lay).apply(rho)
        np.testing.assert_allclose(out.mat, rho.mat, atol=1e-12)

    def test_depolarizing(self, rng):
        lay = layout(("s", 3))
        rho = DensityOperator.from_matrix(lay, random_state(rng, 3))
        out = depolarizing_channel(lay).apply(rho)
        np.testing.assert_allclose(out.mat, np.eye(3) / 3, atol=1e-12)

    def test_kraus_vs_choi_agree(self, rng):
        for _ in range(5):
            chan = random_channel(rng, 3, 2)
            rho = random_state(rng, 3)
            via_kraus = chan.apply_raw(rho)
            # apply via Choi: out[a,b] = sum_ij C[(a,i),(b,j)] rho[i,j]
            c = chan.choi().reshape(2, 3, 2, 3)
            via_choi = np.einsum("aibj,ij->ab", c, rho)
            np.testing.assert_allclose(via_kraus, via_choi, atol=1e-10)

    def test_shape_mismatch(self, rng):
        chan = random_channel(rng, 3, 2)
        with pytest.raises(ShapeError):
            chan.apply(np.eye(4) / 4)

    def test_incomplete_kraus_rejected(self):
        with pytest.raises(ValidityError):
            QChannel(qubits(1), qubits(1), (0.5 * np.eye(2),))


class TestJamiolkowski:
    def test_identity_channel(self):
        lay = qubits(1)
        state = jamiolkowski_state(identity_channel(lay))
        np.testing.assert_allclose(state.mat, max_entangled(2).projector().mat,
                                   atol=1e-12)

    def test_depolarizing(self):
        lay = qubits(1)
        state = jamiolkowski_state(depolarizing_channel(lay))
        np.testing.assert_allclose(state.mat, np.eye(4) / 4, atol=1e-12)

    def test_round_trip(self, rng):
        for _ in range(5):
            chan = random_channel(rng, 2, 2)
            state = jamiolkowski_state(chan)
            back = channel_from_jamiolkowski(state, chan.in_layout, chan.out_layout)
            rho = random_state(rng, 2)
            np.testing.assert_allclose(back.apply_raw(rho), chan.apply_raw(rho),
                                       atol=1e-9)

    def test_injective_on_distinct_channels(self, rng):
        lay = qubits(1)
        chans = [identity_channel(lay), depolarizing_channel(lay),
                 QChannel(lay, lay, (X,)), random_channel(rng, 2, 2)]
        states = [jamiolkowski_state(c).mat for c in chans]
        for i in range(len(states)):
            for j in range(i + 1, len(states)):
                assert trace_norm(states[i] - states[j]) > 1e-6


class TestConditionedChannel:
    def test_trace_ancilla_gives_identity(self, rng):
        lay = layout(("anc", 3), ("sys", 2))
        chan = trace_out_channel(lay, ["sys"])
        anc = DensityOperator.from_matrix(layout(("anc", 3)), random_state(rng, 3))
        cond = conditioned_channel(chan, anc)
        rho = random_state(rng, 2)
        np.testing.assert_allclose(cond.apply_raw(rho), rho, atol=1e-10)

    def test_swap_in_ancilla_gives_constant(self, rng):
        # channel: discard sys, output anc register
        lay = layout(("anc", 2), ("sys", 2))
        chan = trace_out_channel(lay, ["anc"])
        anc = DensityOperator.from_matrix(layout(("anc", 2)), random_state(rng, 2))
        cond = conditioned_channel(chan, anc)
        for _ in range(3):
            out = cond.apply_raw(random_state(rng, 2))
            np.testing.assert_allclose(out, anc.mat, atol=1e-10)

    def test_linearity_of_jamiolkowski_states(self, rng):
        lay = layout(("anc", 2), ("sys", 2))
        chan = random_channel(rng, 4, 2)
        chan = QChannel(lay, chan.out_layout, chan.kraus)
        a0 = DensityOperator.from_matrix(layout(("anc", 2)), random_state(rng, 2))
        a1 = DensityOperator.from_matrix(layout(("anc", 2)), random_state(rng, 2))
        mix = DensityOperator.from_matrix(layout(("anc", 2)),
                                          0.3 * a0.mat + 0.7 * a1.mat)
        w_mix = jamiolkowski_state(conditioned_channel(chan, mix)).mat
        w0 = jamiolkowski_state(conditioned_channel(chan, a0)).mat
        w1 = jamiolkowski_state(conditioned_channel(chan, a1)).mat
        np.testing.assert_allclose(w_mix, 0.3 * w0 + 0.7 * w1, atol=1e-10)

    def test_label_requirements(self, rng):
        lay = layout(("anc", 2), ("sys", 2))
        chan = trace_out_channel(lay, ["sys"])
        bad = DensityOperator.from_matrix(layout(("sys", 2)), np.eye(2) / 2)
        with pytest.raises(LabelError):
            conditioned_channel(chan, bad)

    def test_conditioned_is_tcp(self, rng):
        lay = layout(("anc", 2), ("sys", 2))
        chan = random_channel(rng, 4, 3)
        chan = QChannel(lay, chan.out_layout, chan.kraus)
        anc = DensityOperator.from_matrix(layout(("anc", 2)), random_state(rng, 2))
        cond = conditioned_channel(chan, anc)  # constructor verifies completeness
        assert cond.din == 2


class TestPovm:
    def test_validates(self):
        lay = qubits(1)
        Povm(lay, (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
        with pytest.raises(ValidityError):
            Povm(lay, (np.eye(2), np.eye(2)))
        with pytest.raises(ValidityError):
            Povm(lay, (1.5 * np.eye(2), -0.5 * np.eye(2)))

    def test_probabilities(self, rng):
        lay = qubits(1)
        povm = Povm(lay, (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])))
        p = povm.probabilities(np.diag([0.25, 0.75]).astype(complex))
        np.testing.assert_allclose(p, [0.25, 0.75])


class TestCompileLocc:
    def test_trivial_round_is_identity_on_bob(self, rng):
        lay = layout(("A", 2), ("B", 2))
        proto = LoccProtocol(
            lay, {"A": "alice", "B": "bob"},
            (povm_round("alice", lambda t: [np.eye(2)]),),
            output_labels=("B",),
        )
        chan = compile_locc(proto)
        rho = random_state(rng, 4)
        expect = partial_trace(
            DensityOperator.from_matrix(lay, rho), {"B"}).mat
        np.testing.assert_allclose(chan.apply_raw(rho), expect, atol=1e-10)

    def test_measure_and_correct(self, rng):
        # Alice measures computational basis, Bob applies X^outcome
        lay = layout(("A", 2), ("B", 2))
        proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        proto = LoccProtocol(
            lay, {"A": "alice", "B": "bob"},
            (povm_round("alice", lambda t: proj),
             unitary_round("bob", lambda t: np.linalg.matrix_power(X, t[-1]))),
            output_labels=("B",),
        )
        chan = compile_locc(proto)  # TCP verified on construction
        # classically correlated input: |00><00| + |11><11| halves
        rho = 0.5 * np.diag([1.0, 0, 0, 0]) + 0.5 * np.diag([0.0, 0, 0, 1])
        out = chan.apply_raw(rho.astype(complex))
        np.testing.assert_allclose(out, np.diag([1.0, 0.0]), atol=1e-10)

    def test_sequential_oracle_on_product_states(self, rng):
        # compiled channel on a product state = per-party sequential action
        lay = layout(("A", 2), ("B", 2))
        u_a = random_unitary(rng, 2)
        effects = [u_a @ np.diag([1.0, 0.0]) @ u_a.conj().T,
                   u_a @ np.diag([0.0, 1.0]) @ u_a.conj().T]
        u_b0, u_b1 = random_unitary(rng, 2), random_unitary(rng, 2)
        proto = LoccProtocol(
            lay, {"A": "alice", "B": "bob"},
            (povm_round("alice", lambda t: effects),
             unitary_round("bob", lambda t: [u_b0, u_b1][t[-1]])),
            output_labels=("B",),
        )
        chan = compile_locc(proto)
        ra, rb = random_state(rng, 2), random_state(rng, 2)
        out = chan.apply_raw(np.kron(ra, rb))
        p = [np.trace(e @ ra).real for e in effects]
        expect = (p[0] * u_b0 @ rb @ u_b0.conj().T
                  + p[1] * u_b1 @ rb @ u_b1.conj().T)
        np.testing.assert_allclose(out, expect, atol=1e-10)

    def test_transcript_register(self, rng):
        lay = layout(("A", 2), ("B", 2))
        proj = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]
        proto = LoccProtocol(
            lay, {"A": "alice", "B": "bob"},
            (povm_round("alice", lambda t: proj),),
            output_labels=("B",), keep_transcript=True,
        )
        chan = compile_locc(proto)
        assert chan.out_layout.labels == ("B", "transcript")
        rho = np.diag([0.0, 0, 0, 1]).astype(complex)  # |11>
        out = chan.apply(rho)
        marg = partial_trace(out, {"transcript"})
        np.testing.assert_allclose(marg.mat, np.diag([0.0, 1.0]), atol=1e-10)

    def test_nonlocal_effect_rejected(self):
        lay = layout(("A", 2), ("B", 2))
        proto = LoccProtocol(
            lay, {"A": "alice", "B": "bob"},
            (povm_round("alice", lambda t: [np.eye(4)]),),
            output_labels=("B",),
        )
        with pytest.raises(ValidityError):
            compile_locc(proto)

    def test_compiled_channel_is_tcp(self, rng):
        lay = layout(("A", 2), ("B", 2))
        u = random_unitary(rng, 2)
        effects = [u @ np.diag([1.0, 0.0]) @ u.conj().T,
                   u @ np.diag([0.0, 1.0]) @ u.conj().T]
        proto = LoccProtocol(
            lay, {"A": "alice", "B": "bob"},
            (povm_round("alice", lambda t: effects),
             povm_round("bob", lambda t: [np.eye(2) / 2, np.eye(2) / 2])),
            output_labels=("B",),
        )
        compile_locc(proto)  # completeness asserted in QChannel constructor


class TestConstantChannel:
    def test_output_fixed(self, rng):
        target = DensityOperator.from_matrix(qubits(1), random_state(rng, 2))
        chan = constant_channel(layout(("in", 3)), target)
        out = chan.apply_raw(random_state(rng, 3))
        np.testing.assert_allclose(out, target.mat, atol=1e-10)


def test_channel_json_round_trip(rng):
    chan = random_channel(rng, 2, 3)
    back = QChannel.from_json(chan.to_json())
    rho = random_state(rng, 2)
    np.testing.assert_allclose(back.apply_raw(rho), chan.apply_raw(rho), atol=1e-12)
