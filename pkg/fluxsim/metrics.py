"""Gate metrics for the computational block of an evolution operator.

Computational basis states are ordered with Q0 as the most significant bit, so
index j of an (N+1)-qubit operator has qubit q in state (j >> (N - q)) & 1.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, optimize

from .dynamics import EvolutionResult
from .errors import MetricsError, NotDiagonalDominantError

logger = logging.getLogger(__name__)

DIAGONAL_THRESHOLD = 0.1

Subset = Tuple[int, ...]
UnitaryLike = Union[np.ndarray, EvolutionResult]


def _as_matrix(u: UnitaryLike) -> np.ndarray:
    matrix = u.u_comp if isinstance(u, EvolutionResult) else np.asarray(u, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise MetricsError(f"Expected a square matrix, got shape {matrix.shape}")
    return matrix


def _qubit_count(n: int) -> int:
    n_qubits = int(round(np.log2(n)))
    if n_qubits < 1 or 2**n_qubits != n:
        raise MetricsError(f"Dimension {n} is not a power of two")
    return n_qubits


def basis_bits(n_qubits: int) -> np.ndarray:
    """(2^n, n) array of qubit occupations, Q0 in the first column"""
    j = np.arange(2**n_qubits)[:, None]
    shifts = np.arange(n_qubits - 1, -1, -1)[None, :]
    return (j >> shifts) & 1


def wrap_phase(x):
    """Wrap phases to (-pi, pi]"""
    wrapped = np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)
    return wrapped if np.ndim(x) else float(wrapped)


def controlled_z_target(n_qubits: int) -> np.ndarray:
    """diag(1, ..., 1, -1) on n_qubits qubits"""
    diagonal = np.ones(2**n_qubits, dtype=complex)
    diagonal[-1] = -1.0
    return np.diag(diagonal)


def target_unitary(name: Optional[str], n_qubits: int) -> np.ndarray:
    """Ideal gate for a named target; None means the controlled Z"""
    if name == "identity":
        return np.eye(2**n_qubits, dtype=complex)
    return controlled_z_target(n_qubits)


def average_gate_fidelity(u_actual: UnitaryLike, u_ideal: np.ndarray) -> float:
    """State-averaged fidelity [Tr(U^dag U) + |Tr(U_i^dag U)|^2] / (n (n + 1)) of a possibly leaky U"""
    u = _as_matrix(u_actual)
    ideal = _as_matrix(u_ideal)
    if u.shape != ideal.shape:
        raise MetricsError(f"Dimension mismatch: {u.shape} vs {ideal.shape}")
    n = u.shape[0]
    retained = float(np.real(np.trace(u.conj().T @ u)))
    overlap = abs(np.trace(ideal.conj().T @ u)) ** 2
    return (retained + overlap) / (n * (n + 1))


def local_z_unitary(phases: Sequence[float]) -> np.ndarray:
    """Z(theta_0) x ... x Z(theta_N) with Z(theta) = diag(1, e^{i theta})"""
    bits = basis_bits(len(phases))
    return np.diag(np.exp(1j * bits @ np.asarray(phases, dtype=float)))


@dataclass
class LocalZResult:
    phases: np.ndarray
    fidelity: float
    uncorrected_fidelity: float


def optimize_local_z(u_actual: UnitaryLike, target: Optional[np.ndarray] = None) -> LocalZResult:
    """Best fidelity over single-qubit Z pre-rotations, U -> U Z(theta).

    Only the overlap term depends on theta: |sum_j d_j exp(i theta . b_j)|^2 with
    d = diag(T^dag U). The search starts from a least-squares fit of the diagonal
    phases and from zero, is refined with BFGS and never returns less than the
    uncorrected fidelity.
    """
    u = _as_matrix(u_actual)
    n = u.shape[0]
    n_qubits = _qubit_count(n)
    target = controlled_z_target(n_qubits) if target is None else _as_matrix(target)
    if target.shape != u.shape:
        raise MetricsError(f"Dimension mismatch: {u.shape} vs {target.shape}")

    d = np.diag(target.conj().T @ u)
    bits = basis_bits(n_qubits).astype(float)
    retained = float(np.real(np.trace(u.conj().T @ u)))
    norm = n * (n + 1)

    def negative_overlap(theta: np.ndarray) -> Tuple[float, np.ndarray]:
        terms = d * np.exp(1j * bits @ theta)
        total = terms.sum()
        gradient = 2.0 * np.real(np.conj(total) * (1j * terms) @ bits)
        return -abs(total) ** 2, -gradient

    # Unknown global phase rides along as the last least-squares column
    design = np.hstack([bits, np.ones((n, 1))])
    weights = np.abs(d)
    fit, *_ = np.linalg.lstsq(design * weights[:, None], -np.angle(d) * weights, rcond=None)

    best_theta = np.zeros(n_qubits)
    best_overlap = abs(d.sum()) ** 2
    uncorrected = (retained + best_overlap) / norm
    for start in (fit[:n_qubits], np.zeros(n_qubits)):
        result = optimize.minimize(negative_overlap, start, jac=True, method="BFGS")
        if -result.fun > best_overlap:
            best_overlap = -result.fun
            best_theta = result.x

    fidelity = (retained + best_overlap) / norm
    logger.debug(f"Local-Z optimization: {uncorrected:.6f} -> {fidelity:.6f}")
    return LocalZResult(phases=wrap_phase(best_theta), fidelity=float(fidelity), uncorrected_fidelity=float(uncorrected))


def leakage(evolution: UnitaryLike) -> float:
    """1 - (1/n) sum_ij |U_ij|^2, the average population leaving the computational block"""
    u = _as_matrix(evolution)
    return float(1.0 - np.sum(np.abs(u) ** 2) / u.shape[0])


def diagonal_phases(u: UnitaryLike) -> np.ndarray:
    return np.angle(np.diag(_as_matrix(u)))


def off_diagonal_weight(u: UnitaryLike) -> float:
    """Largest off-diagonal population in any column"""
    matrix = _as_matrix(u)
    populations = np.abs(matrix) ** 2
    return float(np.max(populations.sum(axis=0) - np.diag(populations)))


def check_diagonal_dominance(u: UnitaryLike, threshold: float = DIAGONAL_THRESHOLD) -> None:
    weight = off_diagonal_weight(u)
    if weight >= threshold:
        raise NotDiagonalDominantError(f"Off-diagonal weight {weight:.3f} exceeds {threshold}")


def _index(bits: Sequence[int]) -> int:
    index = 0
    for bit in bits:
        index = (index << 1) | int(bit)
    return index


def conditional_phase(phases: Sequence[float], reference_neighbor: int = 1) -> float:
    """[phi(1, 1..1) - phi(0, 1..1)] - [phi(1, s') - phi(0, s')], wrapped.

    s' is the all-ones neighbor configuration with `reference_neighbor` flipped to 0.
    """
    phases = np.asarray(phases, dtype=float)
    n_qubits = _qubit_count(phases.size)
    if not 1 <= reference_neighbor < n_qubits:
        raise MetricsError(f"Reference neighbor {reference_neighbor} outside 1..{n_qubits - 1}")
    ones = [1] * (n_qubits - 1)
    flipped = list(ones)
    flipped[reference_neighbor - 1] = 0
    gate = phases[_index([1] + ones)] - phases[_index([0] + ones)]
    reference = phases[_index([1] + flipped)] - phases[_index([0] + flipped)]
    return wrap_phase(gate - reference)


def gate_conditional_phase(u: UnitaryLike, threshold: float = DIAGONAL_THRESHOLD) -> float:
    check_diagonal_dominance(u, threshold)
    return conditional_phase(diagonal_phases(u))


def _mask(subset: Subset, n_qubits: int) -> int:
    return sum(1 << (n_qubits - 1 - q) for q in subset)


def _subsets(n_qubits: int) -> List[Subset]:
    return [s for order in range(n_qubits + 1) for s in combinations(range(n_qubits), order)]


def multiqubit_phase_decomposition(phases: Sequence[float]) -> Dict[Subset, float]:
    """Walsh coefficients c_S with phi_j = sum_S c_S prod_{q in S} z_q(j), z = +1 for |0>, -1 for |1>.

    Keys are tuples of qubit indices; () is the global phase and the full tuple the
    (N+1)-qubit conditional term.
    """
    phases = np.asarray(phases, dtype=float)
    n = phases.size
    n_qubits = _qubit_count(n)
    coefficients = linalg.hadamard(n) @ phases / n
    return {subset: float(coefficients[_mask(subset, n_qubits)]) for subset in _subsets(n_qubits)}


def reconstruct_phases(coefficients: Dict[Subset, float], n_qubits: int) -> np.ndarray:
    """Inverse of multiqubit_phase_decomposition"""
    n = 2**n_qubits
    c = np.zeros(n)
    for subset, value in coefficients.items():
        c[_mask(subset, n_qubits)] = value
    return linalg.hadamard(n) @ c


def subset_name(subset: Subset) -> str:
    return "".join(f"Z{q}" for q in subset) or "I"


@dataclass
class GateReport:
    fidelity: float
    leakage: float
    z_corrections: List[float]
    conditional_phase: float
    target_phase_error: float
    uncorrected_fidelity: float
    diagonal_dominant: bool
    phase_terms: Dict[Subset, float] = field(default_factory=dict)

    @property
    def error(self) -> float:
        return 1.0 - self.fidelity

    def to_dict(self) -> dict:
        def number(x: float) -> Optional[float]:
            return None if not np.isfinite(x) else float(x)

        return {
            "fidelity": self.fidelity,
            "error": self.error,
            "leakage": self.leakage,
            "z_corrections": [float(p) for p in self.z_corrections],
            "phase_terms": {subset_name(s): v for s, v in self.phase_terms.items()},
            "conditional_phase": number(self.conditional_phase),
            "target_phase_error": number(self.target_phase_error),
            "uncorrected_fidelity": self.uncorrected_fidelity,
            "diagonal_dominant": self.diagonal_dominant,
        }


def gate_report(
    evolution: UnitaryLike,
    target: Optional[np.ndarray] = None,
    threshold: float = DIAGONAL_THRESHOLD,
    strict: bool = False,
) -> GateReport:
    """Fidelity after local-Z optimization, leakage and phase analysis of a gate.

    Phase quantities need a diagonal-dominant gate; otherwise they are NaN (or
    NotDiagonalDominantError is raised when strict).
    """
    u = _as_matrix(evolution)
    local_z = optimize_local_z(u, target)
    target_phi = np.pi if target is None else conditional_phase(diagonal_phases(target))
    dominant = off_diagonal_weight(u) < threshold
    if dominant:
        phases = diagonal_phases(u)
        phi = conditional_phase(phases)
        terms = multiqubit_phase_decomposition(phases)
    elif strict:
        check_diagonal_dominance(u, threshold)
    else:
        logger.warning(f"Gate is not diagonal-dominant (threshold {threshold}); phase analysis skipped")
        phi, terms = float("nan"), {}

    return GateReport(
        fidelity=local_z.fidelity,
        leakage=leakage(u),
        z_corrections=[float(p) for p in local_z.phases],
        conditional_phase=phi,
        target_phase_error=wrap_phase(phi - target_phi) if dominant else float("nan"),
        uncorrected_fidelity=local_z.uncorrected_fidelity,
        diagonal_dominant=dominant,
        phase_terms=terms,
    )
