"""Conversions between bit hiding and qubit hiding.

bits -> qubits: teleportation structure.  The encoder averages the
Pauli-conjugated input against the hiding states of a 2n-bit scheme; the
decoder identifies the index globally and undoes the Pauli rotation.

qubits -> bits: superdense coding.  The 4^n Bell states, pushed through a
qubit encoder, give orthogonal bit-hiding states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bit_hiding import BitHidingScheme, EpsCertificate
from .channels import Povm, QChannel, _prune
from .errors import DomainError, ShapeError
from .operators import (
    DensityOperator,
    HilbertLayout,
    PureState,
    max_entangled,
)
from .pauli import pauli_matrix

INPUT_LABEL = "Q"
CARRIER_LABEL = "B2"
REFERENCE_LABEL = "B2p"


@dataclass(frozen=True)
class DeltaCertificate:
    value: float
    kind: str


@dataclass(frozen=True)
class QubitHidingScheme:
    """Encoder/decoder channel pair hiding n qubits, with D . E = id."""

    n: int
    encoder: QChannel
    decoder: QChannel
    delta_certificate: DeltaCertificate
    sealed_labels: frozenset[str] = frozenset()
    core: BitHidingScheme | None = None

    @property
    def carrier_layout(self) -> HilbertLayout:
        return self.encoder.out_layout

    def encode(self, phi) -> DensityOperator:
        return self.encoder.apply(phi)

    def decode(self, rho) -> DensityOperator:
        return self.decoder.apply(rho)

    def attack_view_layout(self) -> HilbertLayout:
        open_regs = tuple(r for r in self.carrier_layout.registers
                          if r[0] not in self.sealed_labels)
        return HilbertLayout(open_regs)


def bell_state(index: int, n: int, labels: tuple[str, str] = ("B1", "B2")) -> PureState:
    """(sigma_I (x) 1)|Phi> in index order."""
    phi = max_entangled(2 ** n, labels)
    d = 2 ** n
    vec = np.kron(pauli_matrix(index, n), np.eye(d)) @ phi.vec
    return PureState(phi.layout, vec)


def qubits_from_bits(cs: BitHidingScheme) -> QubitHidingScheme:
    """Teleportation-style qubit hiding on top of a 2n-bit hiding scheme."""
    if cs.k % 2 != 0:
        raise DomainError(f"bit scheme arity must be even, got {cs.k}")
    n = cs.k // 2
    d = 2 ** n
    in_layout = HilbertLayout(((INPUT_LABEL, d),))
    out_layout = cs.layout.tensor(HilbertLayout(((CARRIER_LABEL, d),)))

    enc_kraus = []
    for index in range(4 ** n):
        sigma = pauli_matrix(index, n)
        for p, v in cs.state(index).eig_mixture():
            enc_kraus.append(np.sqrt(p) / (2 ** n)
                             * np.kron(v.reshape(-1, 1), sigma))
    encoder = QChannel(in_layout, out_layout, _prune(tuple(enc_kraus)))

    dec_kraus = []
    d_code = cs.layout.dim
    basis = np.eye(d_code)
    for index in range(4 ** n):
        sigma = pauli_matrix(index, n)
        root = _psd_sqrt(cs.decoder.effects[index])
        for j in range(d_code):
            bra = (basis[:, j].reshape(1, -1) @ root)
            dec_kraus.append(np.kron(bra, sigma))
    decoder = QChannel(out_layout, in_layout, _prune(tuple(dec_kraus)))

    kind = cs.eps_certificate.kind
    value = 0.0 if kind == "oracle-perfect" else 2 ** (n + 1) * cs.eps_certificate.value
    return QubitHidingScheme(
        n=n,
        encoder=encoder,
        decoder=decoder,
        delta_certificate=DeltaCertificate(min(value, 2.0), kind),
        sealed_labels=cs.sealed_labels,
        core=cs,
    )


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def circuit_sampler(cs: BitHidingScheme, phi: DensityOperator):
    """Operational encoder: Bell-measure the input against half of a local
    maximally entangled pair, then emit the hiding state for the observed
    outcome next to the Pauli-rotated residue.

    Returns the list of (outcome, probability, trajectory state); the
    probability-weighted average reproduces the encoder output.
    """
    if cs.k % 2 != 0:
        raise DomainError(f"bit scheme arity must be even, got {cs.k}")
    n = cs.k // 2
    d = 2 ** n
    if phi.dim != d:
        raise ShapeError(f"input dim {phi.dim} != 2^{n}")
    trajectories = []
    for index in range(4 ** n):
        sigma = pauli_matrix(index, n)
        post = sigma @ phi.mat @ sigma.conj().T
        prob = 1.0 / 4 ** n  # maximally entangled resource: uniform outcomes
        lay = cs.layout.tensor(HilbertLayout(((CARRIER_LABEL, d),)))
        state = DensityOperator.from_matrix(lay, np.kron(cs.state(index).mat, post))
        trajectories.append((index, prob, state))
    return trajectories


def sample_encoding(cs: BitHidingScheme, phi: DensityOperator, rng: np.random.Generator,
                    samples: int) -> np.ndarray:
    """Monte-Carlo average of circuit trajectories (matrix only)."""
    trajs = circuit_sampler(cs, phi)
    probs = np.array([t[1] for t in trajs])
    picks = rng.choice(len(trajs), size=samples, p=probs / probs.sum())
    acc = np.zeros_like(trajs[0][2].mat)
    for i in picks:
        acc = acc + trajs[i][2].mat
    return acc / samples


def bits_from_qubits(qs: QubitHidingScheme) -> BitHidingScheme:
    """Superdense-coding bit hiding from a qubit hiding scheme."""
    n = qs.n
    d = 2 ** n
    ext = HilbertLayout(((REFERENCE_LABEL, d),))
    enc_ext = qs.encoder.tensor_identity(ext)
    lay = enc_ext.out_layout

    states = []
    for index in range(4 ** n):
        bell = bell_state(index, n, (INPUT_LABEL, REFERENCE_LABEL))
        states.append(enc_ext.apply(bell.projector().mat))

    # decoder: (D (x) id) then Bell measurement
    dec_ext = qs.decoder.tensor_identity(ext)
    effects = []
    for index in range(4 ** n):
        bell = bell_state(index, n, (INPUT_LABEL, REFERENCE_LABEL))
        proj = bell.projector().mat
        eff = np.zeros((lay.dim, lay.dim), dtype=np.complex128)
        for k in dec_ext.kraus:
            eff += k.conj().T @ proj @ k
        effects.append(eff)

    party_of = dict(qs.core.party_of) if qs.core is not None else {
        l: "B" for l in qs.encoder.out_layout.labels}
    party_of.setdefault(CARRIER_LABEL, "B")
    party_of = {l: party_of.get(l, "B") for l in lay.labels}
    party_of[REFERENCE_LABEL] = "B"

    kind = qs.delta_certificate.kind
    value = 0.0 if kind == "oracle-perfect" else min(4 ** n * qs.delta_certificate.value, 2.0)
    return BitHidingScheme(
        k=2 * n,
        layout=lay,
        party_of=party_of,
        states=tuple(states),
        decoder=Povm(lay, tuple(effects)),
        eps_certificate=EpsCertificate(value, kind),
        sealed_labels=qs.sealed_labels,
        exact_orthogonal=True,
    )


def generalized_encoder(cs: BitHidingScheme, maps: tuple[QChannel, ...]) -> QChannel:
    """Key-averaged encoder: mix hiding states against per-index TCP maps."""
    if len(maps) != 2 ** cs.k:
        raise DomainError(f"expected {2 ** cs.k} maps, got {len(maps)}")
    in_layout = maps[0].in_layout
    carrier = maps[0].out_layout
    for t in maps:
        if t.in_layout.dim != in_layout.dim or t.out_layout.dim != carrier.dim:
            raise DomainError("all maps must share input and output dimensions")
    out_layout = cs.layout.tensor(carrier)
    kraus = []
    for index in range(2 ** cs.k):
        for p, v in cs.state(index).eig_mixture():
            for k in maps[index].kraus:
                kraus.append(np.sqrt(p / 2 ** cs.k) * np.kron(v.reshape(-1, 1), k))
    return QChannel(in_layout, out_layout, _prune(tuple(kraus)))


def pauli_conjugation_maps(n: int, in_label: str = INPUT_LABEL,
                           out_label: str = CARRIER_LABEL) -> tuple[QChannel, ...]:
    d = 2 ** n
    lin = HilbertLayout(((in_label, d),))
    lout = HilbertLayout(((out_label, d),))
    return tuple(QChannel(lin, lout, (pauli_matrix(i, n),)) for i in range(4 ** n))


def process_fidelity_to_identity(chan: QChannel) -> float:
    """Entanglement fidelity of a channel with the identity on its input."""
    if chan.din != chan.dout:
        raise ShapeError("process fidelity to identity needs equal dims")
    d = chan.din
    phi = max_entangled(d).projector().mat
    out = np.zeros_like(phi)
    ide = np.eye(d)
    for k in chan.kraus:
        kk = np.kron(k, ide)
        out += kk @ phi @ kk.conj().T
    return float(np.trace(phi @ out).real)
