"""Pauli-string algebra with exact phase tracking.

A string is a word over {I, X, Y, Z} (codes 0..3) with a global phase that
is always one of {+1, +i, -1, -i}, stored as an exact power of i.  Indices
enumerate strings in base-4, big-endian on qubit position, so index 0 is
the all-identity string.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import DomainError, ShapeError
from .operators import DenseOperator, DensityOperator, HilbertLayout, qubits

_SIGMA = (
    np.eye(2, dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)

_LETTER = "IXYZ"

# single-qubit products: sigma_a sigma_b = i^_PHASE[a][b] * sigma_(_CODE[a][b])
# convention sigma_x sigma_y = i sigma_z
_CODE = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
_PHASE = [[0, 0, 0, 0], [0, 0, 1, 3], [0, 3, 0, 1], [0, 1, 3, 0]]

_PHASE_LABEL = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PHASE_VALUE = {0: 1.0 + 0j, 1: 1j, 2: -1.0 + 0j, 3: -1j}


@dataclass(frozen=True)
class PauliString:
    codes: tuple[int, ...]
    phase_exp: int = 0  # phase = i ** phase_exp

    def __post_init__(self):
        codes = tuple(int(c) for c in self.codes)
        if not codes:
            raise DomainError("empty Pauli string")
        if any(c not in (0, 1, 2, 3) for c in codes):
            raise DomainError(f"invalid Pauli codes {codes}")
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "phase_exp", int(self.phase_exp) % 4)

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def phase(self) -> complex:
        return _PHASE_VALUE[self.phase_exp]

    @property
    def index(self) -> int:
        out = 0
        for c in self.codes:
            out = 4 * out + c
        return out

    @classmethod
    def from_index(cls, index: int, n: int) -> "PauliString":
        if not 0 <= index < 4 ** n:
            raise DomainError(f"index {index} out of range for n={n}")
        codes = []
        for _ in range(n):
            codes.append(index % 4)
            index //= 4
        return cls(tuple(reversed(codes)))

    def y_count(self) -> int:
        return sum(1 for c in self.codes if c == 2)

    def is_identity(self) -> bool:
        return all(c == 0 for c in self.codes)

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=np.complex128)
        for c in self.codes:
            out = np.kron(out, _SIGMA[c])
        return self.phase * out

    def __mul__(self, other: "PauliString") -> "PauliString":
        if self.n != other.n:
            raise ShapeError("Pauli strings of different length")
        phase = self.phase_exp + other.phase_exp
        codes = []
        for a, b in zip(self.codes, other.codes):
            codes.append(_CODE[a][b])
            phase += _PHASE[a][b]
        return PauliString(tuple(codes), phase)

    def label(self) -> str:
        word = "".join(_LETTER[c] for c in self.codes)
        prefix = _PHASE_LABEL[self.phase_exp]
        return word if prefix == "+" else prefix + word


def all_strings(n: int):
    """Deterministic sweep over all 4^n phase-free strings, index order."""
    for index in range(4 ** n):
        yield PauliString.from_index(index, n)


def to_dense(p: PauliString, layout: HilbertLayout | None = None) -> DenseOperator:
    lay = layout if layout is not None else qubits(p.n)
    return DenseOperator(lay, p.matrix())


def pauli_matrix(index: int, n: int) -> np.ndarray:
    return PauliString.from_index(index, n).matrix()


def _require_qubit_dim(dim: int) -> int:
    n = int(round(np.log2(dim)))
    if 2 ** n != dim:
        raise ShapeError(f"dimension {dim} is not a power of two")
    return n


def twirl(phi):
    """Average conjugation by all Pauli strings; maps any state to 1/2^n."""
    mat = phi.mat if isinstance(phi, (DensityOperator, DenseOperator)) else np.asarray(phi, dtype=np.complex128)
    n = _require_qubit_dim(mat.shape[0])
    out = np.zeros_like(mat)
    for p in all_strings(n):
        s = p.matrix()
        out += s @ mat @ s
    out /= 4 ** n
    if isinstance(phi, DensityOperator):
        return DensityOperator.from_matrix(phi.layout, out)
    if isinstance(phi, DenseOperator):
        return DenseOperator(phi.layout, out)
    return out


def phi_pauli_expansion(n: int) -> np.ndarray:
    """Projector onto the maximally entangled state of 2^n x 2^n, built as
    4^{-n} sum_M (-1)^{#Y(M)} sigma_M (x) sigma_M."""
    d = 2 ** n
    out = np.zeros((d * d, d * d), dtype=np.complex128)
    for p in all_strings(n):
        s = p.matrix()
        out += (-1) ** p.y_count() * np.kron(s, s)
    return out / 4 ** n


def pm_decomposition(p: PauliString) -> tuple[DensityOperator, DensityOperator]:
    """Split sigma_M = 2^{n-1} (rho_+ - rho_-) with rho_+- separable.

    Each rho_+- is an equal mixture of 2^{n-1} product eigenvectors, so
    separability holds by construction.  Requires a real phase and at
    least one non-identity factor.
    """
    if p.phase_exp % 2 != 0:
        raise DomainError("pm decomposition needs a Hermitian string (phase +-1)")
    if p.is_identity():
        raise DomainError("the all-identity string has no +/- decomposition")
    sign0 = 1 if p.phase_exp == 0 else -1
    per_qubit = []
    for c in p.codes:
        if c == 0:
            vecs = [np.array([1, 0], dtype=np.complex128),
                    np.array([0, 1], dtype=np.complex128)]
            signs = [1, 1]
        else:
            vals, vecs_m = np.linalg.eigh(_SIGMA[c])
            vecs = [vecs_m[:, i] for i in range(2)]
            signs = [int(round(v)) for v in vals]
        per_qubit.append(list(zip(vecs, signs)))
    n = p.n
    d = 2 ** n
    plus = np.zeros((d, d), dtype=np.complex128)
    minus = np.zeros((d, d), dtype=np.complex128)
    for combo in product(*per_qubit):
        vec = np.ones(1, dtype=np.complex128)
        sign = sign0
        for v, s in combo:
            vec = np.kron(vec, v)
            sign *= s
        proj = np.outer(vec, vec.conj())
        if sign > 0:
            plus += proj
        else:
            minus += proj
    half = d // 2
    lay = qubits(n)
    return (DensityOperator.from_matrix(lay, plus / half),
            DensityOperator.from_matrix(lay, minus / half))


def pauli_coefficients(omega) -> np.ndarray:
    """Coefficients a_J = Tr(sigma_J omega), index order; a_0 = Tr(omega)."""
    mat = omega.mat if isinstance(omega, (DensityOperator, DenseOperator)) else np.asarray(omega, dtype=np.complex128)
    n = _require_qubit_dim(mat.shape[0])
    coeffs = np.empty(4 ** n)
    for p in all_strings(n):
        coeffs[p.index] = np.trace(p.matrix() @ mat).real
    return coeffs


def from_pauli_coefficients(coeffs: np.ndarray, n: int) -> np.ndarray:
    """Reconstruct (1/d) sum_J a_J sigma_J."""
    d = 2 ** n
    out = np.zeros((d, d), dtype=np.complex128)
    for p in all_strings(n):
        out += coeffs[p.index] * p.matrix()
    return out / d
