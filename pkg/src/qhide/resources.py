"""Resource counting for keyed quantum encryption.

The Pauli one-time pad spends two key bits per message qubit; the
entropy audit replays the counting argument showing no perfectly secret
scheme can do better: on a uniform ensemble of maximally entangled
messages, the key register must carry at least as much entropy as the
messages it protects.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import QChannel
from .dual_hiding import DeltaCertificate, QubitHidingScheme
from .errors import DomainError, ShapeError
from .operators import (
    DenseOperator,
    DensityOperator,
    HilbertLayout,
    conditional_entropy,
    max_entangled,
    mutual_information,
    conditional_mutual_information,
    partial_trace,
    trace_norm,
    von_neumann_entropy,
)
from .pauli import pauli_matrix
from .security import pure_test_states

SECRECY_TOL = 1e-9


@dataclass(frozen=True)
class KeyedEncryption:
    """Uniformly keyed encryption of n qubits: key I selects the TCP map
    T_I.  ``inverses`` holds the per-key decryption maps when they exist."""

    k: int
    n: int
    maps: tuple[QChannel, ...]
    inverses: tuple[QChannel, ...] | None = None

    def __post_init__(self):
        if len(self.maps) != 2 ** self.k:
            raise DomainError(f"expected {2 ** self.k} keyed maps, got {len(self.maps)}")
        d = 2 ** self.n
        for t in self.maps:
            if t.din != d or t.dout != d:
                raise ShapeError(f"keyed map must act on {d} dims")

    def encrypt(self, phi, key: int) -> DensityOperator:
        return self.maps[key].apply(phi)

    def decrypt(self, rho, key: int) -> DensityOperator:
        if self.inverses is None:
            raise DomainError("no decryption maps declared")
        return self.inverses[key].apply(rho)

    def cipher_marginal(self, phi) -> np.ndarray:
        """The eavesdropper's view: the key-averaged output."""
        mat = phi.mat if isinstance(phi, DensityOperator) else np.asarray(phi)
        return sum(t.apply_raw(mat) for t in self.maps) / 2 ** self.k


def pauli_pad(n: int) -> KeyedEncryption:
    """The 2n-bit Pauli one-time pad on n qubits."""
    if n > 2:
        raise DomainError(f"pad audits are desk-scale only, n={n} > 2")
    d = 2 ** n
    lin = HilbertLayout((("Q", d),))
    lout = HilbertLayout((("C", d),))
    maps = tuple(QChannel(lin, lout, (pauli_matrix(i, n),)) for i in range(4 ** n))
    invs = tuple(QChannel(lout, lin, (pauli_matrix(i, n),)) for i in range(4 ** n))
    return KeyedEncryption(k=2 * n, n=n, maps=maps, inverses=invs)


def broken_pad() -> KeyedEncryption:
    """One key bit on one qubit: identity or bit flip.  Leaks phase
    information; the audit must flag it."""
    lin = HilbertLayout((("Q", 2),))
    lout = HilbertLayout((("C", 2),))
    x = pauli_matrix(1, 1)
    maps = (QChannel(lin, lout, (np.eye(2, dtype=complex),)), QChannel(lin, lout, (x,)))
    invs = (QChannel(lout, lin, (np.eye(2, dtype=complex),)), QChannel(lout, lin, (x,)))
    return KeyedEncryption(k=1, n=1, maps=maps, inverses=invs)


def secrecy_check(enc: KeyedEncryption, seed: int = 42,
                  tol: float = SECRECY_TOL) -> tuple[bool, float]:
    """Is the cipher marginal message-independent over the test set?"""
    states = pure_test_states(enc.n, seed=seed, n_random=8)
    margs = [enc.cipher_marginal(s) for s in states]
    worst = max(trace_norm(m - margs[0]) for m in margs[1:])
    return worst <= tol, worst


@dataclass(frozen=True)
class EntropyReport:
    entropies: dict
    checks: dict
    secure: bool

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {"entropies": self.entropies, "checks": self.checks,
                "secure": self.secure}


def composite_state(enc: KeyedEncryption, ensemble=None) -> DensityOperator:
    """The counting state: classical message and key registers alongside
    the encrypted half of a maximally entangled message carrier.

    sum_m p_m |m><m|^M (x) 2^{-k} sum_I |I><I|^K (x) (T_I (x) id)(Phi_m),
    with Phi_m the Bell-basis maximally entangled states.
    """
    if ensemble is None:
        ensemble = [(1.0 / 4 ** enc.n, m) for m in range(4 ** enc.n)]
    probs = [p for p, _ in ensemble]
    if abs(sum(probs) - 1) > 1e-12 or min(probs) < 0:
        raise DomainError("ensemble probabilities must be a distribution")
    d = 2 ** enc.n
    nm = len(ensemble)
    nk = 2 ** enc.k
    lay = HilbertLayout((("M", nm), ("K", nk), ("B2", d), ("B3", d)))
    phi = max_entangled(d, ("B2", "B3")).projector().mat
    total = np.zeros((lay.dim, lay.dim), dtype=np.complex128)
    for slot, (p, m) in enumerate(ensemble):
        sm = np.kron(pauli_matrix(m, enc.n), np.eye(d))
        phim = sm @ phi @ sm.conj().T
        mm = np.zeros((nm, nm))
        mm[slot, slot] = 1.0
        for key in range(nk):
            out = np.zeros_like(phim)
            for kr in enc.maps[key].kraus:
                ke = np.kron(kr, np.eye(d))
                out += ke @ phim @ ke.conj().T
            kk = np.zeros((nk, nk))
            kk[key, key] = 1.0
            total += p / nk * np.kron(np.kron(mm, kk), out)
    return DensityOperator.from_matrix(lay, total)


def entropy_audit(enc: KeyedEncryption, ensemble=None, seed: int = 42,
                  tol: float = 1e-9) -> EntropyReport:
    """Replay the counting argument on the composite state.

    For a secure scheme: the key says nothing about the message, the
    ciphertext alone says nothing either, yet ciphertext plus key say
    everything -- so the key register's entropy must cover the messages.
    """
    rho = composite_state(enc, ensemble)
    secure, leak = secrecy_check(enc, seed=seed)
    s_m = von_neumann_entropy(DensityOperator(partial_trace(rho, {"M"})))
    s_k = von_neumann_entropy(DensityOperator(partial_trace(rho, {"K"})))
    i_mk = mutual_information(rho, {"M"}, {"K"})
    i_mc = mutual_information(rho, {"M"}, {"B2", "B3"})
    i_mc_k = conditional_mutual_information(rho, {"M"}, {"B2", "B3"}, {"K"})
    s_k_rest = conditional_entropy(rho, {"K"}, {"B2", "B3", "M"})
    entropies = {
        "S(M)": s_m,
        "S(K)": s_k,
        "S(M:K)": i_mk,
        "S(M:B2B3)": i_mc,
        "S(M:B2B3|K)": i_mc_k,
        "S(K|B2B3M)": s_k_rest,
        "cipher_leak": leak,
    }
    checks = {
        "key_independent_of_message": i_mk <= tol,
        "cipher_alone_reveals_nothing": (i_mc <= tol) == secure,
        "key_unlocks_message": abs(i_mc_k - s_m) <= tol if secure else True,
        "classical_key_nonnegative_conditional": s_k_rest >= -tol,
        "key_entropy_covers_messages": s_k >= s_m - tol if secure else True,
    }
    return EntropyReport(entropies=entropies, checks=checks, secure=secure)


@dataclass(frozen=True)
class KeyBoundVerdict:
    secure: bool
    passed: bool
    witness: str
    report: EntropyReport

    def to_json(self) -> dict:
        return {"secure": self.secure, "passed": self.passed,
                "witness": self.witness, "report": self.report.to_json()}


def key_lower_bound_check(enc: KeyedEncryption, seed: int = 42) -> KeyBoundVerdict:
    """Check k >= 2n for any scheme that passes the secrecy precondition."""
    report = entropy_audit(enc, seed=seed)
    if not report.secure:
        return KeyBoundVerdict(False, False,
                               "secrecy precondition failed: cipher marginal "
                               f"leaks {report.entropies['cipher_leak']:.3e}",
                               report)
    if enc.k >= 2 * enc.n:
        return KeyBoundVerdict(True, True, "", report)
    witness = (f"S(K) = {report.entropies['S(K)']:.6f} < "
               f"S(M) = {report.entropies['S(M)']:.6f} on the uniform ensemble")
    return KeyBoundVerdict(True, False, witness, report)


def pad_as_qubit_scheme(enc: KeyedEncryption) -> QubitHidingScheme:
    """Recast a keyed pad as a hiding scheme whose sealed registers hold
    two classical copies of the key (the legitimate parties' shares); the
    eavesdropper cut plays the role of the attack cut."""
    if enc.inverses is None:
        raise DomainError("needs declared decryption maps")
    d = 2 ** enc.n
    nk = 2 ** enc.k
    in_lay = HilbertLayout((("Q", d),))
    out_lay = HilbertLayout((("K1", nk), ("K2", nk), ("C", d)))
    keys = np.eye(nk)
    enc_kraus = []
    for key in range(nk):
        pair = np.kron(keys[:, key], keys[:, key]).reshape(-1, 1)
        for kr in enc.maps[key].kraus:
            enc_kraus.append(np.kron(pair, kr) / np.sqrt(nk))
    encoder = QChannel(in_lay, out_lay, tuple(enc_kraus))
    dec_kraus = []
    for key in range(nk):
        pair = np.kron(keys[:, key], keys[:, key]).reshape(1, -1)
        for kr in enc.inverses[key].kraus:
            dec_kraus.append(np.kron(pair, kr))
    # the mismatched-key sector never occurs; route it anywhere trace-preserving
    e0 = np.zeros((d, 1))
    e0[0, 0] = 1.0
    for i in range(nk):
        for j in range(nk):
            if i == j:
                continue
            pair = np.kron(keys[:, i], keys[:, j]).reshape(1, -1)
            for b in range(d):
                eb = np.zeros((1, d))
                eb[0, b] = 1.0
                dec_kraus.append(e0 @ np.kron(pair, eb))
    decoder = QChannel(out_lay, in_lay, tuple(dec_kraus))
    secure, _ = secrecy_check(enc)
    cert = DeltaCertificate(0.0, "oracle-perfect") if secure else \
        DeltaCertificate(2.0, "heuristic")
    return QubitHidingScheme(
        n=enc.n,
        encoder=encoder,
        decoder=decoder,
        delta_certificate=cert,
        sealed_labels=frozenset({"K1", "K2"}),
    )
