"""Distinguishability estimators and bound-chain verifiers.

Estimator lattice (per instance):

    seesaw (achievable LOCC, lower) <= PPT SDP (certified upper on LOCC)
                                    <= global trace norm (exact, unrestricted)

The PPT value stands in for the LOCC supremum in every certified claim;
it can only strengthen the inequalities being verified.  All randomized
routines take an explicit seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .bit_hiding import (
    BitHidingScheme,
    EPS_KIND_CERTIFIED,
    EPS_KIND_ORACLE,
    EpsCertificate,
)
from .channels import QChannel, _permutation_matrix, _prune, conditioned_channel, jamiolkowski_state
from .dual_hiding import (
    CARRIER_LABEL,
    REFERENCE_LABEL,
    QubitHidingScheme,
    bell_state,
    bits_from_qubits,
    qubits_from_bits,
)
from .errors import DomainError, ShapeError, SolverError
from .operators import (
    DenseOperator,
    DensityOperator,
    HilbertLayout,
    layout,
    max_entangled,
    partial_trace,
    trace_norm,
)
from .pauli import all_strings, pauli_coefficients, pauli_matrix

SDP_GAP_TOL = 1e-6


@dataclass(frozen=True)
class SecurityReport:
    instance: str
    estimator: str  # global-helstrom | ppt-sdp | locc-seesaw | pauli-tomography
    direction: str  # upper | lower | exact-global
    value: float
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not -1e-9 <= self.value <= 2 + 1e-9:
            raise ValueError(f"distinguishability {self.value} outside [0, 2]")

    def to_json(self) -> dict:
        return {
            "instance": self.instance,
            "estimator": self.estimator,
            "direction": self.direction,
            "value": self.value,
            "diagnostics": {k: v for k, v in self.diagnostics.items()},
        }


def _as_mat(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, (DensityOperator, DenseOperator)) else np.asarray(rho, dtype=np.complex128)


def dist_global(rho, sigma, instance: str = "") -> float:
    """Trace-norm distance; achievable by the Helstrom measurement."""
    a, b = _as_mat(rho), _as_mat(sigma)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    return trace_norm(a - b)


def _group_by_cut(rho: DensityOperator, cut_a: set[str]) -> tuple[np.ndarray, int, int]:
    """Permute registers into (A..., B...) order; return matrix and local dims."""
    lay = rho.layout
    a_labels = [l for l in lay.labels if l in cut_a]
    b_labels = [l for l in lay.labels if l not in cut_a]
    perm = _permutation_matrix(lay, a_labels + b_labels)
    mat = perm @ rho.mat @ perm.conj().T
    da = int(np.prod([lay.dim_of(l) for l in a_labels], initial=1))
    return mat, da, lay.dim // da


def dist_ppt(rho: DensityOperator, sigma: DensityOperator, cut_a: set[str],
             instance: str = "", solver: str = "CLARABEL") -> SecurityReport:
    """Certified upper bound on LOCC distinguishability.

    Maximizes 2 Tr[M (rho - sigma)] over two-outcome POVMs {M, 1-M} whose
    effects both stay positive under partial transposition across the cut.
    The reported gap is the discrepancy between the primal value and the
    dual objective reconstructed from the constraint multipliers.
    """
    ra, da, db = _group_by_cut(rho, cut_a)
    sb, da2, db2 = _group_by_cut(sigma, cut_a)
    if (da, db) != (da2, db2):
        raise ShapeError("states disagree on the bipartite cut")
    delta = ra - sb
    d = da * db
    m = cp.Variable((d, d), hermitian=True)
    eye = np.eye(d)
    c_psd = m >> 0
    c_sub = eye - m >> 0
    c_ppt1 = cp.partial_transpose(m, dims=(da, db), axis=1) >> 0
    c_ppt2 = cp.partial_transpose(eye - m, dims=(da, db), axis=1) >> 0
    problem = cp.Problem(cp.Maximize(2 * cp.real(cp.trace(m @ delta))),
                         [c_psd, c_sub, c_ppt1, c_ppt2])
    attempts = [(solver, {}), ("SCS", {"eps": 1e-9, "max_iters": 50000})]
    value = gap = None
    solver_used = None
    for name, opts in attempts:
        try:
            value = problem.solve(solver=name, **opts)
        except cp.SolverError as exc:  # pragma: no cover - solver availability
            raise SolverError(f"PPT SDP failed: {exc}") from exc
        if problem.status not in ("optimal", "optimal_inaccurate"):
            raise SolverError(f"PPT SDP status {problem.status}")
        # dual objective: Tr(Y_sub) + Tr(Y_ppt2) from the identity-bounded constraints
        dual = 2 * float(np.trace(c_sub.dual_value).real
                         + np.trace(c_ppt2.dual_value).real)
        gap = abs(dual - value)
        solver_used = name
        if problem.status == "optimal" and gap <= SDP_GAP_TOL:
            break
    if gap > SDP_GAP_TOL:
        raise SolverError(f"PPT SDP inaccurate, gap {gap:.2e}")
    return SecurityReport(
        instance=instance,
        estimator="ppt-sdp",
        direction="upper",
        value=float(min(max(value, 0.0), 2.0)),
        diagnostics={"status": problem.status, "gap": gap, "dual": dual,
                     "solver": solver_used, "cut": (da, db)},
    )


def _signed_projector_split(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh((h + h.conj().T) / 2)
    pos = (vecs * (vals >= 0)) @ vecs.conj().T
    return pos, np.eye(h.shape[0]) - pos


def _one_way_seesaw(delta: np.ndarray, da: int, db: int, rng: np.random.Generator,
                    iters: int = 30) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Alternate a binary first-party POVM against conditional Helstrom
    measurements on the second party.  Returns (value, alice effects,
    bob +1-projectors per outcome); the value is achievable one-way LOCC."""
    t = delta.reshape(da, db, da, db)
    g = rng.normal(size=(da, da)) + 1j * rng.normal(size=(da, da))
    h = g @ g.conj().T
    a0 = h / (np.linalg.eigvalsh(h).max() + 1e-12)
    value = -np.inf
    plus = []
    for _ in range(iters):
        effects = [a0, np.eye(da) - a0]
        cond = [np.einsum("ij,ikjl->kl", e.T, t) for e in effects]
        plus = []
        new_value = 0.0
        for c in cond:
            p, _ = _signed_projector_split(c)
            plus.append(p)
            new_value += trace_norm(c)
        # Alice update: maximize Tr[A0 (X0 - X1)] with X_a = Tr_B[(1 x H_a) delta]
        obs = [2 * p - np.eye(db) for p in plus]
        x = [np.einsum("ikjl,kl->ij", t, o.T) for o in obs]
        pos, _ = _signed_projector_split(x[0] - x[1])
        a0 = pos
        if new_value <= value + 1e-12:
            value = max(value, new_value)
            break
        value = new_value
    return value, [a0, np.eye(da) - a0], plus


def dist_locc_seesaw(rho: DensityOperator, sigma: DensityOperator, cut_a: set[str],
                     seed: int = 0, restarts: int = 3,
                     instance: str = "") -> SecurityReport:
    """Achieved one-round-each-way LOCC distinguishability (lower bound).

    The measuring party announces a binary outcome; the other party runs
    the conditional Helstrom test.  Both directions are tried from several
    seeded starts and the best achieved value is returned.
    """
    ra, da, db = _group_by_cut(rho, cut_a)
    sb, _, _ = _group_by_cut(sigma, cut_a)
    delta = ra - sb
    swap = _permutation_matrix(
        layout(("a", da), ("b", db)), ["b", "a"])
    delta_rev = swap @ delta @ swap.conj().T
    rng = np.random.default_rng(seed)
    best = 0.0
    best_dir = "a->b"
    for _ in range(restarts):
        v1, _, _ = _one_way_seesaw(delta, da, db, rng)
        v2, _, _ = _one_way_seesaw(delta_rev, db, da, rng)
        if v1 > best:
            best, best_dir = v1, "a->b"
        if v2 > best:
            best, best_dir = v2, "b->a"
    return SecurityReport(
        instance=instance,
        estimator="locc-seesaw",
        direction="lower",
        value=float(min(best, 2.0)),
        diagnostics={"direction_used": best_dir, "seed": seed, "restarts": restarts},
    )


def dist_tomography_lower(omega_i: DensityOperator, omega_k: DensityOperator,
                          instance: str = "") -> tuple[SecurityReport, float]:
    """Tomographic LOCC lower bound (1/2) max_J |a_IJ - a_KJ| plus the
    d^2 max_J |a_IJ - a_KJ| chain value that upper-bounds the trace norm."""
    ai = pauli_coefficients(omega_i.mat)
    ak = pauli_coefficients(omega_k.mat)
    gap = float(np.max(np.abs(ai - ak)))
    d = omega_i.dim
    report = SecurityReport(
        instance=instance,
        estimator="pauli-tomography",
        direction="lower",
        value=min(gap / 2, 2.0),
        diagnostics={"max_coeff_gap": gap, "dim": d},
    )
    return report, float(d ** 2 * gap)


# ---------------------------------------------------------------------------
# attacks


@dataclass(frozen=True)
class GuessingAttack:
    """LOCC index-guessing measurement on a bit-hiding scheme.

    ``effects`` live on the scheme's open (non-sealed) registers, in layout
    order; each is a product over factors of one-way discrimination
    measurements, so the whole POVM is LOCC-implementable.  For fully
    sealed schemes the guess is uniformly random.
    """

    scheme: BitHidingScheme
    effects: tuple[np.ndarray, ...]
    p_table: np.ndarray  # p_table[guess, true]

    @property
    def open_dim(self) -> int:
        labels = self.scheme.open_labels
        return int(np.prod([self.scheme.layout.dim_of(l) for l in labels], initial=1))


def _embed_on_open(scheme: BitHidingScheme, factor: BitHidingScheme,
                   op: np.ndarray) -> np.ndarray:
    """Embed a factor-local operator into the open-register space."""
    open_labels = scheme.open_labels
    open_lay = HilbertLayout(tuple(
        (l, scheme.layout.dim_of(l)) for l in open_labels))
    from .channels import _embed_local

    return _embed_local(open_lay, factor.layout.labels, op)


def build_guessing_attack(cs: BitHidingScheme, seed: int = 0) -> GuessingAttack:
    k = cs.k
    n_codewords = 2 ** k
    if not cs.open_labels:
        effects = tuple(np.ones((1, 1)) / n_codewords for _ in range(n_codewords))
        p_table = np.full((n_codewords, n_codewords), 1.0 / n_codewords)
        return GuessingAttack(cs, effects, p_table)
    factors = cs.factors or (cs,)
    if sum(f.k for f in factors) != k:
        raise ShapeError("factor arities do not cover the scheme")
    if any(f.k != 1 for f in factors):
        raise DomainError("guessing attack needs arity-1 factors")
    per_factor = []
    rng = np.random.default_rng(seed)
    for f in factors:
        cut_a = set(f.party_labels("A"))
        ra, da, db = _group_by_cut(f.state(0), cut_a)
        sb, _, _ = _group_by_cut(f.state(1), cut_a)
        _, alice, plus = _one_way_seesaw(ra - sb, da, db, rng)
        # F_guess = sum_a A_a (x) Pi_{guess|a}; regroup to the factor's layout order
        lay_grouped = layout(("a", da), ("b", db))
        a_labels = [l for l in f.layout.labels if l in cut_a]
        b_labels = [l for l in f.layout.labels if l not in cut_a]
        back = _permutation_matrix(f.layout, a_labels + b_labels)
        f0 = sum(np.kron(a, p) for a, p in zip(alice, plus))
        f1 = np.eye(da * db) - f0
        per_factor.append((f, [back.conj().T @ f0 @ back,
                               back.conj().T @ f1 @ back]))
    open_dim = int(np.prod([cs.layout.dim_of(l) for l in cs.open_labels], initial=1))
    effects = []
    for guess in range(n_codewords):
        bits = [(guess >> (k - 1 - i)) & 1 for i in range(k)]
        g = np.eye(open_dim, dtype=np.complex128)
        for bit, (f, local) in zip(bits, per_factor):
            g = g @ _embed_on_open(cs, f, local[bit])
        effects.append(g)
    p_table = np.zeros((n_codewords, n_codewords))
    for true in range(n_codewords):
        view = cs.attack_view(true).mat
        for guess in range(n_codewords):
            p_table[guess, true] = np.trace(effects[guess] @ view).real
    return GuessingAttack(cs, tuple(effects), p_table)


def correction_attack_channel(qs: QubitHidingScheme, attack: GuessingAttack) -> QChannel:
    """The cheating map: guess the index by LOCC on the open hiding
    registers, undo the corresponding Pauli on the carrier, output the
    carrier (Bob-side output of Tr_A . L)."""
    n = qs.n
    d = 2 ** n
    cs = attack.scheme
    carrier = HilbertLayout(((CARRIER_LABEL, d),))
    if not cs.open_labels:
        # fully sealed: uniform guess and correction = Pauli twirl on the carrier
        kraus = tuple(pauli_matrix(i, n) / 2 ** n for i in range(4 ** n))
        return QChannel(carrier, carrier, kraus)
    open_lay = HilbertLayout(tuple(
        (l, cs.layout.dim_of(l)) for l in cs.open_labels))
    in_layout = open_lay.tensor(carrier)
    dc = open_lay.dim
    basis = np.eye(dc)
    kraus = []
    for guess in range(4 ** n):
        sigma = pauli_matrix(guess, n)
        root = _psd_sqrt(attack.effects[guess])
        for j in range(dc):
            bra = basis[:, j].reshape(1, -1) @ root
            kraus.append(np.kron(bra, sigma))
    return QChannel(in_layout, carrier, _prune(tuple(kraus)))


def _psd_sqrt(mat: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((mat + mat.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def effective_encoder(qs: QubitHidingScheme) -> QChannel:
    """Encoder followed by discarding sealed registers (attacker's view)."""
    if not qs.sealed_labels:
        return qs.encoder
    from .channels import trace_out_channel

    keep = [l for l in qs.carrier_layout.labels if l not in qs.sealed_labels]
    return trace_out_channel(qs.carrier_layout, keep).compose(qs.encoder)


def conditioned_attack(qs: QubitHidingScheme, attack_chan: QChannel,
                       index: int) -> QChannel:
    """The map L_I(tau) = L(rho_I (x) tau) on the carrier register."""
    cs = qs.core
    if cs is None or not cs.open_labels:
        return attack_chan
    return conditioned_channel(attack_chan, cs.attack_view(index))


def pauli_eigenstate_inputs(n: int) -> list[DensityOperator]:
    """The 6^?->2n standard test states: +-1 eigenstates of X, Y, Z per qubit
    (aligned across qubits), n in {1, 2}."""
    vecs1 = [
        np.array([1, 0]), np.array([0, 1]),
        np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2),
        np.array([1, 1j]) / np.sqrt(2), np.array([1, -1j]) / np.sqrt(2),
    ]
    lay = HilbertLayout((("Q", 2 ** n),))
    states = []
    for v1 in vecs1:
        v = np.array([1.0], dtype=np.complex128)
        for _ in range(n):
            v = np.kron(v, v1)
        states.append(DensityOperator.from_matrix(lay, np.outer(v, v.conj())))
    return states


def pure_test_states(n: int, seed: int, n_random: int = 20) -> list[DensityOperator]:
    """Six aligned Pauli eigenstates plus seeded Haar-random pure states."""
    rng = np.random.default_rng(seed)
    states = pauli_eigenstate_inputs(n)
    d = 2 ** n
    lay = HilbertLayout((("Q", d),))
    for _ in range(n_random):
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        v /= np.linalg.norm(v)
        states.append(DensityOperator.from_matrix(lay, np.outer(v, v.conj())))
    return states


def certify_eps(cs: BitHidingScheme, instance: str = "") -> tuple[EpsCertificate, list[SecurityReport]]:
    """Certified eps upper bound: max over codeword pairs of the PPT value."""
    if not cs.open_labels:
        return EpsCertificate(0.0, EPS_KIND_ORACLE), []
    cut_a = set(cs.party_labels("A"))
    reports = []
    best = 0.0
    for i in range(2 ** cs.k):
        for j in range(i + 1, 2 ** cs.k):
            rep = dist_ppt(cs.attack_view(i), cs.attack_view(j), cut_a,
                           instance=f"{instance}[{i},{j}]")
            reports.append(rep)
            best = max(best, rep.value)
    return EpsCertificate(best, EPS_KIND_CERTIFIED), reports


# ---------------------------------------------------------------------------
# chain verifiers


@dataclass(frozen=True)
class ChainReport:
    name: str
    values: dict
    checks: dict  # name -> bool

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {"name": self.name, "values": self.values, "checks": self.checks}


def verify_c2q_chain(cs: BitHidingScheme, attack: GuessingAttack | None = None,
                     seed: int = 42, tol: float = 1e-8) -> ChainReport:
    """Numerically walk the bits->qubits security argument.

    Measures the achieved attack advantage on the derived qubit scheme,
    relates it to the Jamiolkowski states of the conditioned attack maps,
    replays the carrier-reference decomposition identity, and checks the
    final 2^{n+1} transfer against the certified eps of the bit scheme.
    """
    qs = qubits_from_bits(cs)
    n = qs.n
    d = 2 ** n
    if attack is None:
        attack = build_guessing_attack(cs, seed=seed)
    chan = correction_attack_channel(qs, attack)
    enc = effective_encoder(qs)
    pipeline = chan.compose(enc)

    states = pure_test_states(n, seed=seed)
    outputs = [pipeline.apply_raw(s.mat) for s in states]
    delta_hat = 0.0
    for i in range(len(outputs)):
        for j in range(i + 1, len(outputs)):
            delta_hat = max(delta_hat, trace_norm(outputs[i] - outputs[j]))

    omegas = [jamiolkowski_state(conditioned_attack(qs, chan, i)).mat
              for i in range(4 ** n)]
    deltas = [w - omegas[0] for w in omegas]
    delta_norms = [trace_norm(x) for x in deltas]
    sum_bound = 2 ** (1 - n) * sum(delta_norms)
    max_norm = max(delta_norms)

    # carrier-reference decomposition of xi
    ref = HilbertLayout((("B3", d),))
    phi = max_entangled(d, ("Q", "B3")).projector().mat
    xi = pipeline.tensor_identity(ref).apply_raw(phi)
    w0 = omegas[0]
    lay_w = layout(("Bf", chan.dout), ("ref", d))
    tr_ref = partial_trace(DenseOperator(lay_w, w0), {"Bf"}).mat
    rhs = np.kron(tr_ref, np.eye(d) / d)
    for i in range(4 ** n):
        s = np.kron(np.eye(chan.dout), pauli_matrix(i, n))
        rhs = rhs + (s @ deltas[i] @ s.conj().T) / 4 ** n
    xi_err = float(np.max(np.abs(xi - rhs)))

    eps_cert, _ = certify_eps(cs)
    values = {
        "n": n,
        "delta_hat": delta_hat,
        "sum_bound": sum_bound,
        "max_delta_norm": max_norm,
        "threshold": delta_hat / 2 ** (n + 1),
        "xi_decomposition_error": xi_err,
        "eps_ppt": eps_cert.value,
        "eps_kind": eps_cert.kind,
        "transfer_bound": 2 ** (n + 1) * eps_cert.value,
    }
    checks = {
        "delta_le_sum_bound": delta_hat <= sum_bound + tol,
        "exists_large_delta_i": max_norm >= delta_hat / 2 ** (n + 1) - tol,
        "xi_decomposition": xi_err <= tol,
        "delta_le_transfer": delta_hat <= 2 ** (n + 1) * eps_cert.value + tol,
    }
    return ChainReport("c2q", values, checks)


def verify_q2c_chain(qs: QubitHidingScheme, attack: GuessingAttack | None = None,
                     seed: int = 42, tol: float = 1e-8,
                     delta_pairs: int = 3) -> ChainReport:
    """Numerically walk the qubits->bits security argument.

    Attacks the derived superdense-coding bit states with an LOCC guesser
    plus a Bell test on Bob's side, certifies delta for the qubit scheme by
    PPT, and checks the 4^n transfer plus the Pauli-expansion identities
    behind it.
    """
    n = qs.n
    d = 2 ** n
    csd = bits_from_qubits(qs)
    core = qs.core
    if attack is None:
        if core is None:
            raise DomainError("attack required for schemes without a bit core")
        attack = build_guessing_attack(core, seed=seed)
    chan = correction_attack_channel(qs, attack)

    # attack value on the derived bit states: correct the carrier, then a
    # local Bell measurement against the reference register
    bell_projs = [bell_state(i, n, (CARRIER_LABEL, REFERENCE_LABEL)).projector().mat
                  for i in range(4 ** n)]
    open_labels = [l for l in csd.layout.labels if l not in csd.sealed_labels]
    probs = []
    for i in range(4 ** n):
        view = DensityOperator(partial_trace(csd.state(i), set(open_labels)))
        ext = HilbertLayout(((REFERENCE_LABEL, d),))
        out = chan.tensor_identity(ext).apply_raw(view.mat)
        probs.append(np.array([np.trace(p @ out).real for p in bell_projs]))
    attack_value = 0.0
    for i in range(4 ** n):
        for j in range(i + 1, 4 ** n):
            attack_value = max(attack_value, float(np.sum(np.abs(probs[i] - probs[j]))))

    # PPT-certified delta of the qubit scheme over canonical orthogonal pairs
    enc = effective_encoder(qs)
    test = pauli_eigenstate_inputs(n)
    pairs = [(0, 1), (2, 3), (4, 5)][:delta_pairs]
    delta_upper = 0.0
    if core is not None and core.open_labels:
        cut_a = set(core.party_labels("A"))
        for a, b in pairs:
            ra = enc.apply(test[a].mat)
            rb = enc.apply(test[b].mat)
            rep = dist_ppt(ra, rb, cut_a, instance=f"q2c-delta[{a},{b}]")
            delta_upper = max(delta_upper, rep.value)

    # Pauli-expansion intermediates: Phi_I - Phi_J expansion and the
    # conjugated +/- splits
    from .pauli import PauliString, pm_decomposition

    expansion_err = 0.0
    for (i, j) in [(0, 1), (1, 2)]:
        lhs = (bell_state(i, n).projector().mat
               - bell_state(j, n).projector().mat)
        rhs = np.zeros_like(lhs)
        si, sj = pauli_matrix(i, n), pauli_matrix(j, n)
        for m in all_strings(n):
            sm = m.matrix()
            sign = (-1) ** m.y_count()
            rhs += sign * np.kron(si @ sm @ si - sj @ sm @ sj, sm) / 4 ** n
        expansion_err = max(expansion_err, float(np.max(np.abs(lhs - rhs))))
    split_err = 0.0
    for m in all_strings(n):
        if m.is_identity():
            continue
        plus, minus = pm_decomposition(m)
        for ki in range(4 ** n):
            sk = pauli_matrix(ki, n)
            conj = sk @ m.matrix() @ sk
            rebuilt = 2 ** (n - 1) * (sk @ plus.mat @ sk - sk @ minus.mat @ sk)
            split_err = max(split_err, float(np.max(np.abs(conj - rebuilt))))

    values = {
        "n": n,
        "attack_value": attack_value,
        "delta_upper_ppt": delta_upper,
        "transfer_bound": 4 ** n * delta_upper,
        "bell_expansion_error": expansion_err,
        "pm_split_error": split_err,
    }
    checks = {
        "attack_le_transfer": attack_value <= 4 ** n * delta_upper + tol,
        "bell_expansion": expansion_err <= 1e-10,
        "pm_split": split_err <= 1e-10,
    }
    return ChainReport("q2c", values, checks)
