"""Trace-preserving completely positive maps, POVMs, and LOCC protocols.

Channels are stored in Kraus form; the Choi matrix is computed on demand
and cached (write-once).  The internal Choi normalization is
(C (x) id)(d * Phi), trace d; ``jamiolkowski_state`` exposes the
unit-trace version.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import LabelError, ShapeError, ValidityError
from .operators import (
    TOL_CMP,
    DenseOperator,
    DensityOperator,
    HilbertLayout,
    partial_trace,
    permute_registers,
)

_TOL_TP = 1e-9


@dataclass
class QChannel:
    """A TCP map given by Kraus operators between labeled layouts."""

    in_layout: HilbertLayout
    out_layout: HilbertLayout
    kraus: tuple[np.ndarray, ...]
    _choi: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        din, dout = self.in_layout.dim, self.out_layout.dim
        ops = []
        for k in self.kraus:
            k = np.asarray(k, dtype=np.complex128)
            if k.shape != (dout, din):
                raise ShapeError(f"Kraus shape {k.shape} != ({dout}, {din})")
            ops.append(k)
        self.kraus = tuple(ops)
        comp = sum(k.conj().T @ k for k in self.kraus)
        if np.max(np.abs(comp - np.eye(din))) > _TOL_TP:
            raise ValidityError("Kraus operators do not satisfy completeness")

    @property
    def din(self) -> int:
        return self.in_layout.dim

    @property
    def dout(self) -> int:
        return self.out_layout.dim

    def apply(self, rho) -> DensityOperator:
        mat = rho.mat if isinstance(rho, (DensityOperator, DenseOperator)) else np.asarray(rho, dtype=np.complex128)
        if mat.shape[0] != self.din:
            raise ShapeError(f"input dim {mat.shape[0]} != channel input {self.din}")
        out = np.zeros((self.dout, self.dout), dtype=np.complex128)
        for k in self.kraus:
            out += k @ mat @ k.conj().T
        return DensityOperator.from_matrix(self.out_layout, out)

    def apply_raw(self, mat: np.ndarray) -> np.ndarray:
        """Linear action without density-operator validation (for differences)."""
        out = np.zeros((self.dout, self.dout), dtype=np.complex128)
        for k in self.kraus:
            out += k @ mat @ k.conj().T
        return out

    def choi(self) -> np.ndarray:
        """Choi matrix on out (x) in, trace = din."""
        if self._choi is None:
            d = self.din
            c = np.zeros((self.dout * d, self.dout * d), dtype=np.complex128)
            for k in self.kraus:
                v = k.reshape(-1, order="C")  # vec of K on out (x) in
                # (K (x) I)|Omega> with |Omega> = sum_i |ii> equals vec(K)
                c += np.outer(v, v.conj())
            self._choi = c
        return self._choi

    def compose(self, inner: "QChannel") -> "QChannel":
        """self after inner: (self . inner)."""
        if inner.dout != self.din:
            raise ShapeError("layout mismatch in composition")
        kraus = tuple(a @ b for a in self.kraus for b in inner.kraus)
        return QChannel(inner.in_layout, self.out_layout, _prune(kraus))

    def tensor_identity(self, extra: HilbertLayout) -> "QChannel":
        """Extend as self (x) id on the extra registers (appended on the right)."""
        ide = np.eye(extra.dim)
        kraus = tuple(np.kron(k, ide) for k in self.kraus)
        return QChannel(self.in_layout.tensor(extra), self.out_layout.tensor(extra), kraus)

    def to_json(self) -> dict:
        return {
            "kraus": [{"re": k.real.tolist(), "im": k.imag.tolist()} for k in self.kraus],
            "in_dims": list(self.in_layout.dims),
            "in_labels": list(self.in_layout.labels),
            "out_dims": list(self.out_layout.dims),
            "out_labels": list(self.out_layout.labels),
        }

    @classmethod
    def from_json(cls, data: dict) -> "QChannel":
        lin = HilbertLayout(tuple(zip(data["in_labels"], data["in_dims"])))
        lout = HilbertLayout(tuple(zip(data["out_labels"], data["out_dims"])))
        kraus = tuple(
            np.array(k["re"], dtype=np.complex128) + 1j * np.array(k["im"])
            for k in data["kraus"]
        )
        return cls(lin, lout, kraus)

    @classmethod
    def from_choi(cls, choi: np.ndarray, in_layout: HilbertLayout,
                  out_layout: HilbertLayout, tol: float = 1e-12) -> "QChannel":
        vals, vecs = np.linalg.eigh((choi + choi.conj().T) / 2)
        kraus = []
        for i, v in enumerate(vals):
            if v > tol:
                kraus.append(np.sqrt(v) * vecs[:, i].reshape(out_layout.dim, in_layout.dim))
        return cls(in_layout, out_layout, tuple(kraus))


def _prune(kraus: Sequence[np.ndarray], tol: float = 1e-14) -> tuple[np.ndarray, ...]:
    kept = tuple(k for k in kraus if np.max(np.abs(k)) > tol)
    return kept if kept else (kraus[0],)


def identity_channel(lay: HilbertLayout) -> QChannel:
    return QChannel(lay, lay, (np.eye(lay.dim),))


def depolarizing_channel(lay: HilbertLayout) -> QChannel:
    """Completely depolarizing map to the maximally mixed state."""
    d = lay.dim
    kraus = tuple(
        np.outer(np.eye(d)[:, i], np.eye(d)[:, j]) / np.sqrt(d)
        for i in range(d) for j in range(d)
    )
    return QChannel(lay, lay, kraus)


def trace_out_channel(lay: HilbertLayout, keep: Sequence[str]) -> QChannel:
    """Partial trace as a channel onto the kept registers (in layout order)."""
    keep_set = set(keep)
    out_layout = lay.subset(keep_set)
    order = list(out_layout.labels) + [l for l in lay.labels if l not in keep_set]
    d_keep = out_layout.dim
    d_rest = lay.dim // d_keep
    perm = _permutation_matrix(lay, order)
    kraus = tuple(
        np.kron(np.eye(d_keep), np.eye(d_rest)[i].reshape(1, -1)) @ perm
        for i in range(d_rest)
    )
    return QChannel(lay, out_layout, kraus)


def constant_channel(in_layout: HilbertLayout, output: DensityOperator) -> QChannel:
    """Maps every input to the fixed output state."""
    kraus = []
    basis = np.eye(in_layout.dim)
    for p, v in output.eig_mixture():
        for j in range(in_layout.dim):
            kraus.append(np.sqrt(p) * np.outer(v, basis[:, j]))
    return QChannel(in_layout, output.layout, tuple(kraus))


def unitary_channel(lay: HilbertLayout, u: np.ndarray) -> QChannel:
    return QChannel(lay, lay, (np.asarray(u, dtype=np.complex128),))


def _permutation_matrix(lay: HilbertLayout, order: Sequence[str]) -> np.ndarray:
    """Unitary that reorders tensor factors of ``lay`` into ``order``."""
    d = lay.dim
    src = [lay.axis(lab) for lab in order]
    t = np.eye(d).reshape(lay.dims + (d,))
    t = t.transpose(tuple(src) + (len(lay.dims),))
    return t.reshape(d, d)


def jamiolkowski_state(chan: QChannel, ref_label: str = "ref") -> DensityOperator:
    """(C (x) id)(Phi) on out (x) reference, unit trace."""
    d = chan.din
    lay = chan.out_layout.tensor(HilbertLayout(((ref_label, d),)))
    return DensityOperator.from_matrix(lay, chan.choi() / d)


def channel_from_jamiolkowski(state: DensityOperator, chan_in: HilbertLayout,
                              chan_out: HilbertLayout) -> QChannel:
    """Invert ``jamiolkowski_state``: the reference register is the last one."""
    d = chan_in.dim
    return QChannel.from_choi(state.mat * d, chan_in, chan_out)


def conditioned_channel(chan: QChannel, ancilla: DensityOperator) -> QChannel:
    """Fix an ancilla input: tau -> chan(ancilla (x) tau).

    The ancilla registers must be the leading registers of the channel's
    input layout; the remaining registers form the new input.
    """
    anc_labels = ancilla.layout.labels
    in_labels = chan.in_layout.labels
    if in_labels[: len(anc_labels)] != anc_labels:
        raise LabelError(
            f"ancilla registers {anc_labels} are not the leading input "
            f"registers {in_labels}"
        )
    sys_layout = HilbertLayout(chan.in_layout.registers[len(anc_labels):])
    if len(sys_layout.registers) == 0:
        raise ShapeError("channel input consists solely of the ancilla")
    d_sys = sys_layout.dim
    kraus = []
    for p, v in ancilla.eig_mixture():
        embed = np.kron(v.reshape(-1, 1), np.eye(d_sys))
        for k in chan.kraus:
            kraus.append(np.sqrt(p) * (k @ embed))
    return QChannel(sys_layout, chan.out_layout, _prune(tuple(kraus)))


# ---------------------------------------------------------------------------
# POVMs


@dataclass(frozen=True)
class Povm:
    """Finite-outcome measurement given by PSD effects summing to identity."""

    layout: HilbertLayout
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        d = self.layout.dim
        ops = []
        total = np.zeros((d, d), dtype=np.complex128)
        for e in self.effects:
            e = np.asarray(e, dtype=np.complex128)
            if e.shape != (d, d):
                raise ShapeError(f"effect shape {e.shape} != ({d}, {d})")
            ev = np.linalg.eigvalsh((e + e.conj().T) / 2)
            if ev.min() < -1e-9:
                raise ValidityError(f"effect has negative eigenvalue {ev.min():.3e}")
            total += e
            ops.append(e)
        if np.max(np.abs(total - np.eye(d))) > 1e-9:
            raise ValidityError("effects do not sum to identity")
        object.__setattr__(self, "effects", tuple(ops))

    @property
    def n_outcomes(self) -> int:
        return len(self.effects)

    def probabilities(self, rho) -> np.ndarray:
        mat = rho.mat if isinstance(rho, (DensityOperator, DenseOperator)) else rho
        return np.array([np.trace(e @ mat).real for e in self.effects])

    def tensor(self, other: "Povm") -> "Povm":
        lay = self.layout.tensor(other.layout)
        effects = tuple(np.kron(a, b) for a in self.effects for b in other.effects)
        return Povm(lay, effects)


# ---------------------------------------------------------------------------
# LOCC protocols

Transcript = tuple[int, ...]


@dataclass(frozen=True)
class LoccRound:
    """One local step: the acting party applies a (possibly transcript-
    conditioned) instrument on its registers.

    ``instrument`` maps the prior transcript to a list of local Kraus
    operators whose completeness sum is the identity on the party's space.
    """

    party: str
    instrument: Callable[[Transcript], Sequence[np.ndarray]]


def povm_round(party: str, effects_for: Callable[[Transcript], Sequence[np.ndarray]]) -> LoccRound:
    """A destructive-free measurement round: Kraus = sqrt(effect)."""

    def instrument(transcript: Transcript) -> Sequence[np.ndarray]:
        return [scipy.linalg.sqrtm(np.asarray(e, dtype=np.complex128)).astype(np.complex128)
                for e in effects_for(transcript)]

    return LoccRound(party, instrument)


def unitary_round(party: str, unitary_for: Callable[[Transcript], np.ndarray]) -> LoccRound:
    """A single-outcome round applying a transcript-conditioned unitary."""

    def instrument(transcript: Transcript) -> Sequence[np.ndarray]:
        return [np.asarray(unitary_for(transcript), dtype=np.complex128)]

    return LoccRound(party, instrument)


@dataclass(frozen=True)
class LoccProtocol:
    """Finitely many rounds of conditioned local instruments.

    ``parties`` assigns each register label to a party; every round's
    operators act only on the acting party's registers (they are embedded
    into the global space here, which enforces locality by construction).
    """

    layout: HilbertLayout
    parties: Mapping[str, str]  # register label -> party name
    rounds: tuple[LoccRound, ...]
    output_labels: tuple[str, ...]
    keep_transcript: bool = False

    def __post_init__(self):
        unknown = set(self.parties) - set(self.layout.labels)
        if unknown:
            raise LabelError(f"party map references unknown registers {sorted(unknown)}")
        missing = set(self.layout.labels) - set(self.parties)
        if missing:
            raise LabelError(f"registers without a party: {sorted(missing)}")
        bad = set(self.output_labels) - set(self.layout.labels)
        if bad:
            raise LabelError(f"unknown output registers {sorted(bad)}")

    def party_labels(self, party: str) -> tuple[str, ...]:
        return tuple(l for l in self.layout.labels if self.parties[l] == party)


def _embed_local(lay: HilbertLayout, local_labels: Sequence[str], op: np.ndarray) -> np.ndarray:
    """Embed an operator on the given registers into the full space."""
    local_dim = int(np.prod([lay.dim_of(l) for l in local_labels], initial=1))
    op = np.asarray(op, dtype=np.complex128)
    if op.shape != (local_dim, local_dim):
        raise ValidityError(
            f"operator shape {op.shape} does not match registers {tuple(local_labels)}"
        )
    rest = [l for l in lay.labels if l not in set(local_labels)]
    order = list(local_labels) + rest
    perm = _permutation_matrix(lay, order)
    d_rest = lay.dim // local_dim
    return perm.conj().T @ np.kron(op, np.eye(d_rest)) @ perm


def compile_locc(protocol: LoccProtocol) -> QChannel:
    """Compile a protocol into the induced global TCP map.

    Non-output registers are traced out; if ``keep_transcript`` is set, a
    classical transcript register is appended to the output.
    """
    lay = protocol.layout
    branches: list[tuple[Transcript, np.ndarray]] = [((), np.eye(lay.dim, dtype=np.complex128))]
    for rnd in protocol.rounds:
        labels = protocol.party_labels(rnd.party)
        if not labels:
            raise ValidityError(f"party {rnd.party!r} holds no registers")
        new_branches = []
        for transcript, op in branches:
            local_ops = rnd.instrument(transcript)
            comp = np.zeros((lay.dim, lay.dim), dtype=np.complex128)
            embedded = []
            for k in local_ops:
                g = _embed_local(lay, labels, k)
                comp += g.conj().T @ g
                embedded.append(g)
            if np.max(np.abs(comp - np.eye(lay.dim))) > 1e-8:
                raise ValidityError(
                    f"round instrument for transcript {transcript} is not trace preserving"
                )
            for outcome, g in enumerate(embedded):
                new_branches.append((transcript + (outcome,), g @ op))
        branches = new_branches

    out_layout = lay.subset(set(protocol.output_labels))
    keep = set(out_layout.labels)
    rest = [l for l in lay.labels if l not in keep]
    order = list(out_layout.labels) + rest
    perm = _permutation_matrix(lay, order)
    d_keep = out_layout.dim
    d_rest = lay.dim // d_keep
    n_branches = len(branches)

    kraus = []
    for b, (transcript, op) in enumerate(branches):
        front = perm @ op
        for i in range(d_rest):
            k = np.kron(np.eye(d_keep), np.eye(d_rest)[i].reshape(1, -1)) @ front
            if protocol.keep_transcript:
                flag = np.zeros((n_branches, 1))
                flag[b, 0] = 1.0
                k = np.kron(k, flag)
            kraus.append(k)
    if protocol.keep_transcript:
        out_layout = out_layout.tensor(HilbertLayout((("transcript", n_branches),)))
    return QChannel(lay, out_layout, _prune(tuple(kraus)))
