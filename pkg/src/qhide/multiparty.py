"""Multiparty hiding: secret sharing through the five-qubit code, access
structures, and the composite hide-then-share security chain.

The quantitative chain runs at bipartite stand-in scale (k in {1, 2});
the five-qubit construction is exercised functionally with the hiding
index held symbolically, trajectory by trajectory, because the full
density matrix of a ten-bit hiding scheme does not fit at desk scale.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bit_hiding import BitHidingScheme
from .channels import QChannel, _prune
from .dual_hiding import QubitHidingScheme, qubits_from_bits
from .errors import AccessError, DomainError, ValidityError
from .operators import (
    DenseOperator,
    DensityOperator,
    HilbertLayout,
    helstrom_channel,
    layout,
    partial_trace,
    trace_norm,
)
from .pauli import PauliString, pauli_coefficients, pauli_matrix
from .security import (
    ChainReport,
    build_guessing_attack,
    certify_eps,
    conditioned_attack,
    correction_attack_channel,
    effective_encoder,
    pure_test_states,
)


@dataclass(frozen=True)
class AccessStructure:
    """Monotone family of authorized party subsets with no-cloning sanity.

    Constructed from minimal generators; the closure under supersets is
    computed eagerly.  Rejects structures where an authorized set and its
    complement are both authorized (both could then reconstruct, cloning
    the secret).
    """

    p: int
    authorized: frozenset[frozenset[int]]

    def __post_init__(self):
        if self.p < 1:
            raise DomainError(f"party count must be positive, got {self.p}")
        parties = frozenset(range(self.p))
        for s in self.authorized:
            if not s <= parties:
                raise DomainError(f"subset {sorted(s)} outside parties 0..{self.p - 1}")
        closed = set()
        for s in self.authorized:
            for r in range(len(s), self.p + 1):
                for sup in itertools.combinations(parties, r):
                    if s <= frozenset(sup):
                        closed.add(frozenset(sup))
        object.__setattr__(self, "authorized", frozenset(closed))
        for s in self.authorized:
            if parties - s in self.authorized:
                raise ValidityError(
                    f"authorized set {sorted(s)} has an authorized complement")

    @classmethod
    def from_generators(cls, p: int, generators) -> "AccessStructure":
        return cls(p, frozenset(frozenset(g) for g in generators))

    @classmethod
    def from_json(cls, data: dict) -> "AccessStructure":
        return cls.from_generators(int(data["p"]), data["authorized"])

    def is_authorized(self, subset) -> bool:
        return frozenset(subset) in self.authorized

    def minimal_sets(self) -> list[frozenset[int]]:
        return sorted(
            (s for s in self.authorized
             if not any(t < s for t in self.authorized)),
            key=lambda s: (len(s), sorted(s)),
        )


@dataclass(frozen=True)
class SharedSecret:
    """Code descriptor plus the per-party register assignment."""

    code: str
    n_logical: int
    shares: dict[int, tuple[str, ...]]
    access: AccessStructure

    @property
    def physical_qubits(self) -> int:
        return sum(len(v) for v in self.shares.values())


# ---------------------------------------------------------------------------
# five-qubit code


def _stabilizer_generators() -> list[PauliString]:
    # cyclic shifts of XZZXI
    base = (1, 3, 3, 1, 0)
    gens = []
    for shift in range(4):
        codes = tuple(base[(i - shift) % 5] for i in range(5))
        gens.append(PauliString(codes, 0))
    return gens


def five_qubit_isometry() -> np.ndarray:
    """32 x 2 encoding isometry of the distance-3 five-qubit code."""
    proj = np.eye(32, dtype=np.complex128)
    for g in _stabilizer_generators():
        proj = proj @ (np.eye(32) + g.matrix()) / 2
    zbar = PauliString((3, 3, 3, 3, 3), 0).matrix()
    xbar = PauliString((1, 1, 1, 1, 1), 0).matrix()
    seed = np.zeros(32, dtype=np.complex128)
    seed[0] = 1.0
    zero = proj @ (np.eye(32) + zbar) / 2 @ seed
    zero /= np.linalg.norm(zero)
    one = xbar @ zero
    return np.column_stack([zero, one])


def five_qubit_access() -> AccessStructure:
    return AccessStructure.from_generators(
        5, itertools.combinations(range(5), 3))


def five_qubit_secret() -> SharedSecret:
    return SharedSecret(
        code="five-qubit",
        n_logical=1,
        shares={i: (f"q{i}",) for i in range(5)},
        access=five_qubit_access(),
    )


def _code_layout() -> HilbertLayout:
    return HilbertLayout(tuple((f"q{i}", 2) for i in range(5)))


def five_qubit_encode(phi: DensityOperator) -> DensityOperator:
    if phi.dim != 2:
        raise DomainError(f"logical input must be one qubit, got dim {phi.dim}")
    v = five_qubit_isometry()
    return DensityOperator.from_matrix(_code_layout(), v @ phi.mat @ v.conj().T)


def recovery_channel(subset) -> QChannel:
    """Erasure-correction channel from an authorized subset's registers
    back to the logical qubit.

    Transpose channel of the erasure map N(phi) = Tr_lost(V phi V*): with
    pi = 1/2, the Kraus operators (1/sqrt 2) N_e* N(pi)^{-1/2} recover any
    correctable erasure exactly; a completing branch handles the subspace
    the code never reaches.
    """
    subset = tuple(sorted(subset))
    if not five_qubit_access().is_authorized(subset):
        raise AccessError(f"subset {list(subset)} cannot reconstruct")
    lost = [i for i in range(5) if i not in subset]
    v = five_qubit_isometry()
    # reorder qubits so the retained ones come first
    order = [f"q{i}" for i in subset] + [f"q{i}" for i in lost]
    from .channels import _permutation_matrix

    perm = _permutation_matrix(_code_layout(), order)
    v = perm @ v
    dk = 2 ** len(subset)
    dl = 2 ** len(lost)
    kraus_n = [np.kron(np.eye(dk), np.eye(dl)[e].reshape(1, -1)) @ v
               for e in range(dl)]
    npi = sum(k @ k.conj().T for k in kraus_n) / 2
    vals, vecs = np.linalg.eigh(npi)
    inv_root = (vecs * [1 / np.sqrt(x) if x > 1e-12 else 0.0 for x in vals]) @ vecs.conj().T
    support = (vecs * (vals > 1e-12)) @ vecs.conj().T
    kraus = [k.conj().T @ inv_root / np.sqrt(2) for k in kraus_n]
    # complete the channel off the code's reachable subspace
    gap = np.eye(dk) - support
    gvals, gvecs = np.linalg.eigh(gap)
    for x, i in zip(gvals, range(dk)):
        if x > 0.5:
            kraus.append(np.array([[1.0], [0.0]]) @ gvecs[:, i].conj().reshape(1, -1))
    in_lay = HilbertLayout(tuple((f"q{i}", 2) for i in subset))
    return QChannel(in_lay, HilbertLayout((("L", 2),)), _prune(tuple(kraus)))


def reconstruct(subset, state: DensityOperator) -> DensityOperator:
    """Recover the logical qubit from an authorized subset of the shares."""
    subset = tuple(sorted(subset))
    chan = recovery_channel(subset)  # raises AccessError when unauthorized
    reduced = DensityOperator(
        partial_trace(state, {f"q{i}" for i in subset}))
    return chan.apply(reduced.mat)


# ---------------------------------------------------------------------------
# composite hiding


def multihide_encode(cs: BitHidingScheme, phi: DensityOperator) -> DensityOperator:
    """Average the Pauli-rotated secret against the hiding states:
    E(phi) = 2^{-2k} sum_I rho_I (x) sigma_I phi sigma_I, with the Pauli
    rotation on the whole share space, not just the code subspace."""
    if cs.k % 2 != 0:
        raise DomainError(f"hiding arity must be even, got {cs.k}")
    k = cs.k // 2
    if phi.dim != 2 ** k:
        raise DomainError(f"secret dim {phi.dim} != 2^{k}")
    return qubits_from_bits(cs).encode(phi)


def multihide_reconstruct_demo(authorized, seed: int = 7) -> float:
    """End-to-end five-qubit demo with the hiding index held symbolically.

    For every Pauli index I the trajectory sigma_I V|phi> is prepared,
    the correction is applied only inside the authorized set (corrections
    on traced-out shares cannot change the reconstruction), and the
    erasure decoder runs.  Returns the minimum fidelity over all 4^5
    trajectories.
    """
    subset = tuple(sorted(authorized))
    chan = recovery_channel(subset)  # access check
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=2) + 1j * rng.normal(size=2)
    raw /= np.linalg.norm(raw)
    target = np.outer(raw, raw.conj())
    v = five_qubit_isometry()
    encoded = v @ raw
    lay = _code_layout()
    worst = 1.0
    for index in range(4 ** 5):
        codes = PauliString.from_index(index, 5).codes
        sigma = pauli_matrix(index, 5)
        traj = sigma @ encoded
        # partial correction: undo sigma only on the authorized shares
        corr = np.array([1.0], dtype=np.complex128)
        for q in range(5):
            local = pauli_matrix(codes[q], 1) if q in subset else np.eye(2)
            corr = np.kron(corr, local)
        fixed = corr @ traj
        rho = DensityOperator.from_matrix(lay, np.outer(fixed, fixed.conj()))
        out = reconstruct(subset, rho)
        fid = float(np.trace(target @ out.mat).real)
        worst = min(worst, fid)
    return worst


# ---------------------------------------------------------------------------
# bipartite stand-in chain


def _compressed_attacks(qs: QubitHidingScheme, seed: int) -> list[QChannel]:
    """Per-index attack maps with single-qubit output.

    The guessing-and-correcting attack is squeezed through the optimal
    two-outcome test separating its responses to |0..0> and |+..+>, so
    every omega_I lives on one output qubit plus the k-qubit reference.
    """
    core = qs.core
    attack = build_guessing_attack(core, seed=seed)
    chan = correction_attack_channel(qs, attack)
    pipeline = chan.compose(effective_encoder(qs))
    probes = pure_test_states(qs.n, seed=seed, n_random=0)
    tau0 = pipeline.apply(probes[0].mat)  # |0..0>
    tau1 = pipeline.apply(probes[2].mat)  # |+..+>
    squeeze = helstrom_channel(tau0, tau1)
    return [squeeze.compose(conditioned_attack(qs, chan, i))
            for i in range(4 ** qs.n)]


def verify_multiparty_chain(cs: BitHidingScheme, seed: int = 42,
                            tol: float = 1e-8) -> ChainReport:
    """Chain at a bipartite stand-in: hiding 2k bits protects a k-qubit
    secret with delta <= eps * 2^{3k+5}, checked through the omega_I
    states on d = 2^{k+1} dimensions."""
    if cs.k % 2 != 0:
        raise DomainError(f"hiding arity must be even, got {cs.k}")
    k = cs.k // 2
    d = 2 ** (k + 1)
    qs = qubits_from_bits(cs)
    attacks = _compressed_attacks(qs, seed)
    from .channels import jamiolkowski_state

    omegas = [jamiolkowski_state(a) for a in attacks]

    eps_cert, _ = certify_eps(cs)
    eps_hat = eps_cert.value

    omega_gap = max(trace_norm(w.mat - omegas[0].mat) for w in omegas)

    # achieved secret-state disturbance through the compressed attack
    states = pure_test_states(k, seed=seed)
    chan_full = _full_pipeline(qs, seed)
    outs = [chan_full.apply_raw(s.mat) for s in states]
    delta_hat = 0.0
    for i in range(len(outs)):
        for j in range(i + 1, len(outs)):
            delta_hat = max(delta_hat, trace_norm(outs[i] - outs[j]))

    coeff_gap = 0.0
    a0 = pauli_coefficients(omegas[0].mat)
    for w in omegas[1:]:
        coeff_gap = max(coeff_gap, float(np.max(np.abs(pauli_coefficients(w.mat) - a0))))

    values = {
        "k": k,
        "d": d,
        "eps_ppt": eps_hat,
        "eps_kind": eps_cert.kind,
        "omega_gap": omega_gap,
        "omega_bound": omega_gap / (2 * d ** 2),
        "delta_hat": delta_hat,
        "delta_bound": delta_hat / 2 ** (3 * k + 5),
        "tomography_gap": coeff_gap,
        "tomography_chain": d ** 2 * coeff_gap,
    }
    checks = {
        "eps_ge_omega_gap": eps_hat >= omega_gap / (2 * d ** 2) - tol,
        "eps_ge_delta_scaled": eps_hat >= delta_hat / 2 ** (3 * k + 5) - tol,
        "tomography_le_eps": coeff_gap / 2 <= eps_hat + tol,
        "omega_le_tomography_chain": omega_gap <= d ** 2 * coeff_gap + tol
        if coeff_gap > 0 else omega_gap <= tol,
    }
    return ChainReport("multiparty", values, checks)


def _full_pipeline(qs: QubitHidingScheme, seed: int) -> QChannel:
    core = qs.core
    attack = build_guessing_attack(core, seed=seed)
    chan = correction_attack_channel(qs, attack)
    pipeline = chan.compose(effective_encoder(qs))
    probes = pure_test_states(qs.n, seed=seed, n_random=0)
    tau0 = pipeline.apply(probes[0].mat)
    tau1 = pipeline.apply(probes[2].mat)
    return helstrom_channel(tau0, tau1).compose(pipeline)
