"""Dense linear algebra over labeled multi-register Hilbert spaces.

Registers are addressed by label everywhere; tensor factors are laid out
left-to-right in declaration order.  All values are immutable after
construction and every operation is a pure function.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InvalidStateError, LabelError, ShapeError

TOL_HERM = 1e-9
TOL_TRACE = 1e-9
TOL_PSD = 1e-9
TOL_NORM = 1e-9
TOL_CMP = 1e-8

DEFAULT_DIM_CAP = 4096


def dim_cap() -> int:
    """Maximum total Hilbert-space dimension; override via QHIDE_DIM_CAP."""
    return int(os.environ.get("QHIDE_DIM_CAP", DEFAULT_DIM_CAP))


@dataclass(frozen=True)
class HilbertLayout:
    """Ordered sequence of labeled registers spanning a tensor-product space."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(lab), int(d)) for lab, d in self.registers)
        object.__setattr__(self, "registers", regs)
        labels = [lab for lab, _ in regs]
        if len(set(labels)) != len(labels):
            raise LabelError(f"duplicate register labels in {labels}")
        for lab, d in regs:
            if d < 1:
                raise DomainError(f"register {lab!r} has non-positive dim {d}")
        if self.dim > dim_cap():
            raise DomainError(
                f"total dimension {self.dim} exceeds cap {dim_cap()}"
            )

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.registers)

    @property
    def dim(self) -> int:
        out = 1
        for _, d in self.registers:
            out *= d
        return out

    def axis(self, label: str) -> int:
        for i, (lab, _) in enumerate(self.registers):
            if lab == label:
                return i
        raise LabelError(f"unknown register label {label!r}")

    def dim_of(self, label: str) -> int:
        return self.registers[self.axis(label)][1]

    def subset(self, keep: Iterable[str]) -> "HilbertLayout":
        keep = set(keep)
        unknown = keep - set(self.labels)
        if unknown:
            raise LabelError(f"unknown register labels {sorted(unknown)}")
        return HilbertLayout(tuple(r for r in self.registers if r[0] in keep))

    def tensor(self, other: "HilbertLayout") -> "HilbertLayout":
        collide = set(self.labels) & set(other.labels)
        if collide:
            raise LabelError(f"register labels collide: {sorted(collide)}")
        return HilbertLayout(self.registers + other.registers)


def layout(*registers: tuple[str, int]) -> HilbertLayout:
    return HilbertLayout(tuple(registers))


def qubits(n: int, prefix: str = "q") -> HilbertLayout:
    return HilbertLayout(tuple((f"{prefix}{i}", 2) for i in range(1, n + 1)))


def _as_matrix(mat) -> np.ndarray:
    m = np.asarray(mat, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ShapeError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class DenseOperator:
    """A square operator on the space described by its layout."""

    layout: HilbertLayout
    mat: np.ndarray

    def __post_init__(self):
        m = _as_matrix(self.mat)
        if m.shape[0] != self.layout.dim:
            raise ShapeError(
                f"matrix side {m.shape[0]} != layout dim {self.layout.dim}"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def adjoint(self) -> "DenseOperator":
        return DenseOperator(self.layout, self.mat.conj().T)

    def trace(self) -> complex:
        return complex(np.trace(self.mat))

    def is_hermitian(self, tol: float = TOL_HERM) -> bool:
        return bool(np.max(np.abs(self.mat - self.mat.conj().T)) <= tol)

    def tensor(self, other: "DenseOperator") -> "DenseOperator":
        return DenseOperator(self.layout.tensor(other.layout),
                             np.kron(self.mat, other.mat))

    def to_json(self) -> dict:
        return {
            "dims": list(self.layout.dims),
            "labels": list(self.layout.labels),
            "re": self.mat.real.tolist(),
            "im": self.mat.imag.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "DenseOperator":
        dims = data["dims"]
        labels = data.get("labels") or [f"r{i}" for i in range(len(dims))]
        lay = HilbertLayout(tuple(zip(labels, dims)))
        mat = np.array(data["re"], dtype=np.complex128)
        mat = mat + 1j * np.array(data["im"], dtype=np.float64)
        return cls(lay, mat)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, PSD, unit-trace operator; validated on construction."""

    op: DenseOperator

    def __post_init__(self):
        m = self.op.mat
        if np.max(np.abs(m - m.conj().T)) > TOL_HERM:
            raise InvalidStateError("matrix is not Hermitian within tolerance")
        ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
        if ev.min() < -TOL_PSD:
            raise InvalidStateError(f"negative eigenvalue {ev.min():.3e}")
        if abs(np.trace(m).real - 1.0) > TOL_TRACE or abs(np.trace(m).imag) > TOL_TRACE:
            raise InvalidStateError(f"trace {np.trace(m)} != 1 within tolerance")

    @property
    def layout(self) -> HilbertLayout:
        return self.op.layout

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    @property
    def dim(self) -> int:
        return self.op.dim

    @classmethod
    def from_matrix(cls, lay: HilbertLayout, mat) -> "DensityOperator":
        return cls(DenseOperator(lay, mat))

    def eig_mixture(self, tol: float = 1e-12) -> list[tuple[float, np.ndarray]]:
        """Spectral decomposition as a list of (probability, unit vector)."""
        vals, vecs = np.linalg.eigh(self.mat)
        return [(float(v), vecs[:, i]) for i, v in enumerate(vals) if v > tol]


@dataclass(frozen=True)
class PureState:
    """Unit vector on a labeled layout."""

    layout: HilbertLayout
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.layout.dim:
            raise ShapeError(f"vector length {v.shape[0]} != dim {self.layout.dim}")
        if abs(np.linalg.norm(v) - 1.0) > TOL_NORM:
            raise InvalidStateError("state vector is not normalized")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)

    def projector(self) -> DensityOperator:
        return DensityOperator.from_matrix(self.layout, np.outer(self.vec, self.vec.conj()))


# ---------------------------------------------------------------------------
# core operations


def trace_norm(A) -> float:
    """Sum of singular values; eigendecomposition fast path for Hermitian input."""
    m = A.mat if isinstance(A, (DenseOperator,)) else (A.op.mat if isinstance(A, DensityOperator) else _as_matrix(A))
    if np.max(np.abs(m - m.conj().T)) <= TOL_HERM:
        return float(np.sum(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2))))
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def _tensor_form(A: DenseOperator) -> np.ndarray:
    dims = A.layout.dims
    return A.mat.reshape(dims + dims)


def _matrix_form(t: np.ndarray, k: int) -> np.ndarray:
    d = int(np.prod(t.shape[:k], initial=1))
    return t.reshape(d, d)


def partial_trace(A, keep: Iterable[str]) -> DenseOperator:
    """Trace out every register not in ``keep``; output layout preserves order."""
    dense = A.op if isinstance(A, DensityOperator) else A
    keep = set(keep)
    unknown = keep - set(dense.layout.labels)
    if unknown:
        raise LabelError(f"unknown register labels {sorted(unknown)}")
    t = _tensor_form(dense)
    k = len(dense.layout.registers)
    # trace removed axes from the right to keep axis bookkeeping simple
    remaining = list(dense.layout.registers)
    for i in range(k - 1, -1, -1):
        if remaining[i][0] not in keep:
            nrem = len(remaining)
            t = np.trace(t, axis1=i, axis2=i + nrem)
            remaining.pop(i)
    out_layout = HilbertLayout(tuple(remaining))
    mat = _matrix_form(t, len(remaining)) if remaining else t.reshape(1, 1)
    if not remaining:
        out_layout = HilbertLayout((("unit", 1),))
    result = DenseOperator(out_layout, mat)
    return result


def partial_transpose(A, labels: Iterable[str]) -> DenseOperator:
    """Transpose the factors named in ``labels``, leaving the rest untouched."""
    dense = A.op if isinstance(A, DensityOperator) else A
    labels = set(labels)
    unknown = labels - set(dense.layout.labels)
    if unknown:
        raise LabelError(f"unknown register labels {sorted(unknown)}")
    t = _tensor_form(dense)
    k = len(dense.layout.registers)
    perm = list(range(2 * k))
    for i, (lab, _) in enumerate(dense.layout.registers):
        if lab in labels:
            perm[i], perm[i + k] = perm[i + k], perm[i]
    return DenseOperator(dense.layout, _matrix_form(t.transpose(perm), k))


def permute_registers(A, order: Sequence[str]) -> DenseOperator:
    """Reorder tensor factors to the given label order."""
    dense = A.op if isinstance(A, DensityOperator) else A
    if sorted(order) != sorted(dense.layout.labels):
        raise LabelError(f"order {order} is not a permutation of {dense.layout.labels}")
    k = len(dense.layout.registers)
    src = [dense.layout.axis(lab) for lab in order]
    perm = src + [s + k for s in src]
    t = _tensor_form(dense).transpose(perm)
    new_layout = HilbertLayout(tuple(dense.layout.registers[s] for s in src))
    return DenseOperator(new_layout, _matrix_form(t, k))


def permute_vector(lay: HilbertLayout, vec: np.ndarray, order: Sequence[str]) -> tuple[HilbertLayout, np.ndarray]:
    if sorted(order) != sorted(lay.labels):
        raise LabelError(f"order {order} is not a permutation of {lay.labels}")
    src = [lay.axis(lab) for lab in order]
    t = np.asarray(vec, dtype=np.complex128).reshape(lay.dims).transpose(src)
    new_layout = HilbertLayout(tuple(lay.registers[s] for s in src))
    return new_layout, t.reshape(-1)


def max_entangled(dim: int, labels: tuple[str, str] = ("1", "2")) -> PureState:
    """d^{-1/2} sum_k |k>|k> on a fresh two-register layout."""
    if dim < 1:
        raise DomainError(f"dimension must be positive, got {dim}")
    lay = HilbertLayout(((labels[0], dim), (labels[1], dim)))
    vec = np.eye(dim, dtype=np.complex128).reshape(-1) / np.sqrt(dim)
    return PureState(lay, vec)


def ricochet(phi: DensityOperator, Phi: PureState) -> DensityOperator:
    """Pull a state back through a maximally entangled pair.

    Returns d * Tr_2((id (x) phi^*) |Phi><Phi|), which reproduces phi when
    Phi is maximally entangled in the computational basis.
    """
    regs = Phi.layout.registers
    if len(regs) != 2 or regs[0][1] != regs[1][1]:
        raise ShapeError("ricochet needs a two-register state with equal dims")
    d = regs[0][1]
    if phi.dim != d:
        raise ShapeError(f"state dim {phi.dim} != register dim {d}")
    proj = Phi.projector().mat
    conj = np.kron(np.eye(d), phi.mat.conj())
    prod = conj @ proj
    out = d * partial_trace(DenseOperator(Phi.layout, prod), {regs[0][0]}).mat
    return DensityOperator.from_matrix(phi.layout, out)


def helstrom_channel(tau0: DensityOperator, tau1: DensityOperator):
    """Two-outcome projective channel onto the +/- subspaces of tau0 - tau1.

    The trace distance between its two outputs equals ||tau0 - tau1||_1.
    Returns a channel with single-qubit (classical) output.
    """
    from .channels import QChannel  # deferred: channels builds on this module

    if tau0.dim != tau1.dim:
        raise ShapeError("states must act on the same space")
    diff = tau0.mat - tau1.mat
    vals, vecs = np.linalg.eigh((diff + diff.conj().T) / 2)
    e0 = np.array([1.0, 0.0], dtype=np.complex128)
    e1 = np.array([0.0, 1.0], dtype=np.complex128)
    kraus = []
    for v, i in zip(vals, range(len(vals))):
        flag = e0 if v >= 0 else e1
        kraus.append(np.outer(flag, vecs[:, i].conj()))
    out_layout = HilbertLayout((("outcome", 2),))
    return QChannel(tau0.layout, out_layout, tuple(kraus))


# ---------------------------------------------------------------------------
# entropies (base-2 throughout)


def von_neumann_entropy(rho: DensityOperator) -> float:
    ev = np.linalg.eigvalsh(rho.mat)
    if ev.min() < -TOL_PSD:
        raise InvalidStateError(f"negative eigenvalue {ev.min():.3e}")
    ev = ev[ev > 1e-15]
    return float(-np.sum(ev * np.log2(ev)))


def _marginal_entropy(rho: DensityOperator, labels: Iterable[str]) -> float:
    labels = set(labels)
    if not labels:
        return 0.0
    red = partial_trace(rho, labels)
    return von_neumann_entropy(DensityOperator(red))


def conditional_entropy(rho: DensityOperator, target: Iterable[str], given: Iterable[str]) -> float:
    """S(target | given) = S(target, given) - S(given)."""
    target, given = set(target), set(given)
    return _marginal_entropy(rho, target | given) - _marginal_entropy(rho, given)


def mutual_information(rho: DensityOperator, x: Iterable[str], y: Iterable[str]) -> float:
    """S(X:Y) = S(X) + S(Y) - S(XY)."""
    x, y = set(x), set(y)
    return (_marginal_entropy(rho, x) + _marginal_entropy(rho, y)
            - _marginal_entropy(rho, x | y))


def conditional_mutual_information(rho: DensityOperator, x: Iterable[str], y: Iterable[str], given: Iterable[str]) -> float:
    """S(X:Y|Z) = S(XZ) + S(YZ) - S(Z) - S(XYZ)."""
    x, y, z = set(x), set(y), set(given)
    return (_marginal_entropy(rho, x | z) + _marginal_entropy(rho, y | z)
            - _marginal_entropy(rho, z) - _marginal_entropy(rho, x | y | z))
