"""Quantum data hiding toolkit: hiding schemes, LOCC security estimators,
secret sharing, and key-resource audits."""

__version__ = "0.1.0"

from .bit_hiding import BitHidingScheme, perfect_oracle, werner_pair, werner_tensor
from .dual_hiding import QubitHidingScheme, bits_from_qubits, qubits_from_bits
from .operators import DenseOperator, DensityOperator, HilbertLayout, trace_norm
from .security import dist_global, dist_locc_seesaw, dist_ppt

__all__ = [
    "BitHidingScheme",
    "DenseOperator",
    "DensityOperator",
    "HilbertLayout",
    "QubitHidingScheme",
    "bits_from_qubits",
    "dist_global",
    "dist_locc_seesaw",
    "dist_ppt",
    "perfect_oracle",
    "qubits_from_bits",
    "trace_norm",
    "werner_pair",
    "werner_tensor",
]
