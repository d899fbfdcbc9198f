"""Operator containers shared by the circuit, spectrum and dynamics modules.

All energies are linear frequencies in GHz. Large composite operators are kept
in scipy.sparse CSR form; small ones are dense numpy arrays.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg

from ..errors import DimensionMismatchError

Matrix = Union[np.ndarray, sparse.spmatrix]

HERMITIAN_RTOL = 1e-12


class BasisTag(Enum):
    """Basis in which an operator is expressed"""
    BARE_PRODUCT = "bare-product"
    DRESSED = "dressed"
    PROJECTED = "projected"


@dataclass(frozen=True)
class OperatorMatrix:
    """Square operator with basis bookkeeping.

    dims holds the subsystem dimensions of the product basis the operator was built
    in. kept maps projected indices back to full product-basis indices and is None
    for unprojected operators.
    """
    entries: Matrix
    basis_tag: BasisTag = BasisTag.BARE_PRODUCT
    dims: Tuple[int, ...] = ()
    kept: Optional[np.ndarray] = field(default=None, compare=False)
    unit: str = "GHz"

    def __post_init__(self):
        shape = self.entries.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise DimensionMismatchError(f"Operator must be square, got shape {shape}")
        if self.dims and self.kept is None and int(np.prod(self.dims)) != shape[0]:
            raise DimensionMismatchError(
                f"Subsystem dims {self.dims} do not multiply to operator dimension {shape[0]}"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.entries)

    def dense(self) -> np.ndarray:
        """Dense copy of the entries"""
        if self.is_sparse:
            return self.entries.toarray()
        return np.asarray(self.entries)

    def diagonal(self) -> np.ndarray:
        return np.real(self.entries.diagonal())

    def hermiticity_residual(self) -> float:
        """Relative Frobenius norm of H - H^dagger"""
        diff = self.entries - self.entries.conj().T
        if self.is_sparse:
            num = sparse_linalg.norm(diff)
            den = sparse_linalg.norm(self.entries)
        else:
            num = np.linalg.norm(diff)
            den = np.linalg.norm(self.entries)
        return float(num / den) if den > 0 else float(num)

    def is_hermitian(self, rtol: float = HERMITIAN_RTOL) -> bool:
        return self.hermiticity_residual() <= rtol

    def with_entries(self, entries: Matrix, basis_tag: Optional[BasisTag] = None) -> "OperatorMatrix":
        """Same bookkeeping, new entries"""
        return OperatorMatrix(
            entries=entries,
            basis_tag=basis_tag or self.basis_tag,
            dims=self.dims,
            kept=self.kept,
            unit=self.unit,
        )


def real_if_close(matrix: Matrix) -> Matrix:
    """Drop a vanishing imaginary part so eigen-solvers can use the real kernels"""
    data = matrix.data if sparse.issparse(matrix) else matrix
    if np.iscomplexobj(data) and not np.any(np.abs(np.imag(data)) > 0.0):
        return matrix.real
    return matrix


def ladder_operator(n_levels: int) -> np.ndarray:
    """Truncated annihilation operator"""
    return np.diag(np.sqrt(np.arange(1, n_levels)), k=1)
