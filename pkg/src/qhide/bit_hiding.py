"""Bit-hiding scheme providers.

A scheme hides a k-bit string in a family of bipartite states that a
global measurement decodes exactly but LOCC measurements barely
distinguish.  Three providers: the symmetric/antisymmetric subspace pair,
tensor products of smaller schemes, and a perfect test-double whose
hiding register is sealed against every compiled LOCC attack.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .channels import Povm
from .operators import DensityOperator, HilbertLayout, partial_trace

EPS_KIND_CERTIFIED = "certified-upper"
EPS_KIND_HEURISTIC = "heuristic"
EPS_KIND_ORACLE = "oracle-perfect"


@dataclass(frozen=True)
class EpsCertificate:
    value: float
    kind: str


@dataclass(frozen=True)
class BitHidingScheme:
    """Encoder/decoder pair for k hidden bits with a declared security level.

    ``party_of`` maps each register label to "A" or "B" (bipartite cut).
    ``sealed_labels`` marks registers that compiled LOCC attacks must not
    read (used only by the perfect-oracle test double).  ``factors`` lists
    the arity-1 component schemes when the scheme is a tensor product;
    attacks exploit this structure.
    """

    k: int
    layout: HilbertLayout
    party_of: dict[str, str]
    states: tuple[DensityOperator, ...]
    decoder: Povm
    eps_certificate: EpsCertificate
    sealed_labels: frozenset[str] = frozenset()
    factors: tuple["BitHidingScheme", ...] = ()
    exact_orthogonal: bool = True

    def __post_init__(self):
        if len(self.states) != 2 ** self.k:
            raise DomainError(
                f"expected {2 ** self.k} hiding states, got {len(self.states)}")

    def state(self, index: int) -> DensityOperator:
        return self.states[index]

    def party_labels(self, party: str) -> tuple[str, ...]:
        return tuple(l for l in self.layout.labels if self.party_of[l] == party)

    @property
    def open_labels(self) -> tuple[str, ...]:
        return tuple(l for l in self.layout.labels if l not in self.sealed_labels)

    def attack_view(self, index: int) -> DensityOperator:
        """The hiding state as seen by LOCC attacks: sealed registers are
        traced out.  For schemes without sealed registers this is the state
        itself."""
        rho = self.states[index]
        if not self.sealed_labels:
            return rho
        return DensityOperator(partial_trace(rho, set(self.open_labels)))

    def decode_success(self) -> float:
        """Minimum probability of recovering the index over all codewords."""
        return min(
            float(np.trace(self.decoder.effects[i] @ rho.mat).real)
            for i, rho in enumerate(self.states)
        )

    def with_certificate(self, cert: EpsCertificate) -> "BitHidingScheme":
        return replace(self, eps_certificate=cert)


def _swap_matrix(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


def werner_pair(d: int, label_suffix: str = "0") -> BitHidingScheme:
    """One-bit hiding in the symmetric (bit 0) vs antisymmetric (bit 1)
    subspace projectors of C^d (x) C^d.  Exactly orthogonal; decoded by a
    swap-eigenvalue measurement."""
    if d < 2:
        raise DomainError(f"local dimension must be >= 2, got {d}")
    lay = HilbertLayout(((f"A{label_suffix}", d), (f"B{label_suffix}", d)))
    swap = _swap_matrix(d)
    p_sym = (np.eye(d * d) + swap) / 2
    p_anti = (np.eye(d * d) - swap) / 2
    rho_sym = DensityOperator.from_matrix(lay, 2 * p_sym / (d * (d + 1)))
    rho_anti = DensityOperator.from_matrix(lay, 2 * p_anti / (d * (d - 1)))
    scheme = BitHidingScheme(
        k=1,
        layout=lay,
        party_of={f"A{label_suffix}": "A", f"B{label_suffix}": "B"},
        states=(rho_sym, rho_anti),
        decoder=Povm(lay, (p_sym, p_anti)),
        eps_certificate=EpsCertificate(2.0, EPS_KIND_HEURISTIC),
    )
    return replace(scheme, factors=(scheme,))


def perfect_oracle(k: int, label_suffix: str = "0") -> BitHidingScheme:
    """Idealized scheme: the index sits in a sealed classical register.

    Compiled LOCC attacks are denied the sealed register, so every attack
    output is index-independent by construction.  A global decoder reads
    it exactly.  Test double only; never part of certified claims.
    """
    if 2 ** k > 4096:
        raise DomainError(f"oracle arity {k} exceeds the dimension cap")
    label = f"S{label_suffix}"
    lay = HilbertLayout(((label, 2 ** k),))
    basis = np.eye(2 ** k)
    states = tuple(
        DensityOperator.from_matrix(lay, np.outer(basis[:, i], basis[:, i]))
        for i in range(2 ** k)
    )
    effects = tuple(np.outer(basis[:, i], basis[:, i]) for i in range(2 ** k))
    scheme = BitHidingScheme(
        k=k,
        layout=lay,
        party_of={label: "B"},
        states=states,
        decoder=Povm(lay, effects),
        eps_certificate=EpsCertificate(0.0, EPS_KIND_ORACLE),
        sealed_labels=frozenset({label}),
    )
    return replace(scheme, factors=(scheme,) if k == 1 else ())


def _relabel(scheme: BitHidingScheme, offset: int) -> BitHidingScheme:
    """Shift the numeric suffix of every register label by ``offset``."""

    def shift(label: str) -> str:
        head = label.rstrip("0123456789")
        tail = label[len(head):]
        return f"{head}{int(tail) + offset}" if tail else f"{head}{offset}"

    mapping = {l: shift(l) for l in scheme.layout.labels}
    lay = HilbertLayout(tuple((mapping[l], d) for l, d in scheme.layout.registers))
    states = tuple(DensityOperator.from_matrix(lay, s.mat) for s in scheme.states)
    decoder = Povm(lay, scheme.decoder.effects)
    factors = tuple(_relabel(f, offset) for f in scheme.factors)
    return replace(
        scheme,
        layout=lay,
        party_of={mapping[l]: p for l, p in scheme.party_of.items()},
        states=states,
        decoder=decoder,
        sealed_labels=frozenset(mapping[l] for l in scheme.sealed_labels),
        factors=factors,
    )


def _suffix_span(scheme: BitHidingScheme) -> int:
    spans = []
    for label in scheme.layout.labels:
        head = label.rstrip("0123456789")
        tail = label[len(head):]
        spans.append(int(tail) if tail else 0)
    return max(spans) + 1


def _combine_certificates(c1: EpsCertificate, c2: EpsCertificate) -> EpsCertificate:
    if c1.kind == EPS_KIND_ORACLE and c2.kind == EPS_KIND_ORACLE:
        return EpsCertificate(0.0, EPS_KIND_ORACLE)
    # union bound over hybrid substitutions; conservative, labeled heuristic
    return EpsCertificate(c1.value + c2.value, EPS_KIND_HEURISTIC)


def tensor_schemes(s1: BitHidingScheme, s2: BitHidingScheme) -> BitHidingScheme:
    """Hide k1+k2 bits by tensoring codewords; bits of s1 are the high bits."""
    s2 = _relabel(s2, _suffix_span(s1))
    lay = s1.layout.tensor(s2.layout)
    states = tuple(
        DensityOperator.from_matrix(lay, np.kron(a.mat, b.mat))
        for a in s1.states for b in s2.states
    )
    decoder = s1.decoder.tensor(s2.decoder)
    return BitHidingScheme(
        k=s1.k + s2.k,
        layout=lay,
        party_of={**s1.party_of, **s2.party_of},
        states=states,
        decoder=decoder,
        eps_certificate=_combine_certificates(s1.eps_certificate, s2.eps_certificate),
        sealed_labels=s1.sealed_labels | s2.sealed_labels,
        factors=(s1.factors or (s1,)) + (s2.factors or (s2,)),
        exact_orthogonal=s1.exact_orthogonal and s2.exact_orthogonal,
    )


def werner_tensor(d: int, copies: int) -> BitHidingScheme:
    """``copies`` independent Werner pairs hiding one bit each."""
    scheme = werner_pair(d)
    for _ in range(copies - 1):
        scheme = tensor_schemes(scheme, werner_pair(d))
    return scheme
