"""Dressed spectra, state labeling and neighbor-state-dependent plasmon shifts.

Dressed eigenstates are labeled by the bare product state they overlap most,
assigned greedily in descending overlap so that no eigenstate carries two labels.
"""

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .circuit.operators import OperatorMatrix, real_if_close
from .circuit.system import (
    Label,
    StarSystem,
    basis_index,
    bare_energies,
    build_system_hamiltonian,
    project_low_energy,
)
from .errors import DiagonalizationError, FluxsimError, LabelingAmbiguityError, UnassignedLabelError

logger = logging.getLogger(__name__)

AMBIGUITY_FLOOR = 0.5
LABEL_CANDIDATES = 8
ENERGY_MARGIN_GHZ = 2.0
SHIFT_FLOOR_GHZ = 1e-3
ADDITIVITY_MIN_SHIFT_GHZ = 1e-6


@dataclass(frozen=True)
class NeighborConfig:
    """Computational state (bits) of a set of neighbor fluxoniums"""
    bits: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"Neighbor configuration bits must be 0 or 1, got {self.bits}")

    @property
    def n(self) -> int:
        return len(self.bits)

    @classmethod
    def zeros(cls, n: int) -> "NeighborConfig":
        return cls((0,) * n)

    @classmethod
    def ones(cls, n: int) -> "NeighborConfig":
        return cls((1,) * n)

    @classmethod
    def unit(cls, n: int, j: int) -> "NeighborConfig":
        """Only neighbor j (0-based) in |1>"""
        return cls(tuple(1 if i == j else 0 for i in range(n)))

    @classmethod
    def enumerate(cls, n: int) -> List["NeighborConfig"]:
        return [cls(bits) for bits in itertools.product((0, 1), repeat=n)]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True, eq=False)
class LabeledSpectrum:
    """Dressed eigenpairs with bare-product labels.

    eigenvectors are columns in the basis of the diagonalized Hamiltonian; kept
    maps that basis to product-basis indices when it was projected.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: Dict[Label, int]
    overlaps: Dict[Label, float]
    dims: Tuple[int, ...]
    kept: Optional[np.ndarray] = None
    ambiguity_floor: float = AMBIGUITY_FLOOR
    ambiguous: Tuple[Label, ...] = field(default=())

    def index(self, label: Label) -> int:
        try:
            return self.labels[tuple(label)]
        except KeyError:
            raise UnassignedLabelError(tuple(label)) from None

    def energy(self, label: Label) -> float:
        return float(self.eigenvalues[self.index(label)])

    def overlap(self, label: Label) -> float:
        self.index(label)
        return self.overlaps[tuple(label)]

    def vector(self, label: Label) -> np.ndarray:
        return self.eigenvectors[:, self.index(label)]

    def is_ambiguous(self, label: Label) -> bool:
        return self.overlap(label) < self.ambiguity_floor

    def require(self, labels: Iterable[Label]) -> None:
        """Raise if any label is unassigned or below the ambiguity floor"""
        for label in labels:
            if self.is_ambiguous(label):
                raise LabelingAmbiguityError(tuple(label), self.overlap(label))

    def basis_index(self, label: Label) -> Optional[int]:
        return basis_index(label, self.dims, self.kept)


def _diagonalize(h: OperatorMatrix, max_energy: Optional[float]) -> Tuple[np.ndarray, np.ndarray]:
    matrix = real_if_close(h.dense())
    matrix = 0.5 * (matrix + matrix.conj().T)
    try:
        if max_energy is None:
            return linalg.eigh(matrix)
        return linalg.eigh(matrix, subset_by_value=(-np.inf, max_energy), driver="evr")
    except linalg.LinAlgError as e:
        raise DiagonalizationError(f"Dressed diagonalization of dim {h.dim} failed: {e}") from e


def solve_and_label(
    h: OperatorMatrix,
    labels: Sequence[Label],
    max_energy: Optional[float] = None,
    ambiguity_floor: float = AMBIGUITY_FLOOR,
) -> LabeledSpectrum:
    """Diagonalize h and assign each bare label to its maximum-overlap eigenstate.

    Labels whose product state was projected out of h are skipped. Eigenpairs are
    computed up to max_energy (all of them when None). A label whose best overlap
    falls below ambiguity_floor is kept but flagged.
    """
    eigenvalues, eigenvectors = _diagonalize(h, max_energy)
    if eigenvalues.size == 0:
        raise DiagonalizationError(f"No eigenvalues below {max_energy} GHz")

    rows: Dict[Label, int] = {}
    for label in labels:
        index = basis_index(tuple(label), h.dims, h.kept)
        if index is not None:
            rows[tuple(label)] = index

    candidates = []
    for label, row in rows.items():
        weights = np.abs(eigenvectors[row, :]) ** 2
        top = np.argsort(weights)[::-1][:LABEL_CANDIDATES]
        candidates.extend((float(weights[col]), label, int(col)) for col in top)
    candidates.sort(key=lambda item: -item[0])

    assigned: Dict[Label, int] = {}
    overlaps: Dict[Label, float] = {}
    used = set()
    for weight, label, col in candidates:
        if label in assigned or col in used:
            continue
        assigned[label] = col
        overlaps[label] = weight
        used.add(col)

    # Labels whose candidates were all taken fall back to their best free eigenstate
    for label, row in rows.items():
        if label in assigned:
            continue
        weights = np.abs(eigenvectors[row, :]) ** 2
        weights[list(used)] = -1.0
        col = int(np.argmax(weights))
        if weights[col] < 0:
            continue
        assigned[label] = col
        overlaps[label] = float(weights[col])
        used.add(col)

    ambiguous = tuple(label for label, value in overlaps.items() if value < ambiguity_floor)
    for label in ambiguous:
        logger.warning(f"Ambiguous label {label}: best overlap {overlaps[label]:.3f}")
    logger.debug(
        f"Labeled {len(assigned)}/{len(rows)} states from {eigenvalues.size} eigenpairs "
        f"(min overlap {min(overlaps.values(), default=1.0):.4f})"
    )
    return LabeledSpectrum(
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        labels=assigned,
        overlaps=overlaps,
        dims=h.dims,
        kept=h.kept,
        ambiguity_floor=ambiguity_floor,
        ambiguous=ambiguous,
    )


def dressed_transition(spectrum: LabeledSpectrum, from_label: Label, to_label: Label) -> float:
    """E(to) - E(from) in GHz"""
    return spectrum.energy(to_label) - spectrum.energy(from_label)


def system_hamiltonian(system: StarSystem, projection_cutoff: Optional[float] = None) -> OperatorMatrix:
    h = build_system_hamiltonian(system)
    if projection_cutoff is not None:
        h = project_low_energy(h, projection_cutoff)
    return h


@lru_cache(maxsize=16)
def labeled_spectrum(
    system: StarSystem,
    projection_cutoff: Optional[float] = None,
    labels: Optional[Tuple[Label, ...]] = None,
) -> LabeledSpectrum:
    """Labeled dressed spectrum of a star system.

    Defaults to every label with fluxonium occupations up to 2 and grounded
    couplers. Eigenpairs are computed up to the highest bare energy among those
    labels plus a margin.
    """
    labels = tuple(system.required_labels()) if labels is None else labels
    diagonal = bare_energies(system)
    max_energy = max(diagonal[system.label_index(label)] for label in labels) + ENERGY_MARGIN_GHZ
    h = system_hamiltonian(system, projection_cutoff)
    return solve_and_label(h, labels, max_energy=max_energy)


def _with_levels(system: StarSystem, k: int, level: int, others: NeighborConfig) -> Label:
    levels = list(others.bits)
    levels.insert(k, level)
    return system.label(levels)


def plasmon_frequency(
    spectrum: LabeledSpectrum, system: StarSystem, k: int, others: NeighborConfig, strict: bool = True
) -> float:
    """Dressed |1>-|2> frequency of fluxonium k with the other fluxoniums in `others`"""
    lower = _with_levels(system, k, 1, others)
    upper = _with_levels(system, k, 2, others)
    if strict:
        spectrum.require([lower, upper])
    return dressed_transition(spectrum, lower, upper)


def state_dependent_shift(
    system: StarSystem,
    config: NeighborConfig,
    spectrum: Optional[LabeledSpectrum] = None,
    projection_cutoff: Optional[float] = None,
) -> float:
    """Shift of the central plasmon frequency with neighbors in `config`, relative to all-zero"""
    if config.n != system.n_neighbors:
        raise ValueError(f"Configuration {config} has {config.n} bits, system has {system.n_neighbors} neighbors")
    if not any(config.bits):
        return 0.0
    spectrum = spectrum or labeled_spectrum(system, projection_cutoff)
    reference = plasmon_frequency(spectrum, system, 0, NeighborConfig.zeros(system.n_neighbors))
    return plasmon_frequency(spectrum, system, 0, config) - reference


@dataclass
class ShiftSweepRow:
    """Shifts at one coupling value; singles[j] is the shift with only neighbor j in |1>"""
    j_ck: float
    singles: Tuple[float, ...] = ()
    all_ones: float = float("nan")
    residual: Optional[float] = None
    additivity_flag: bool = False
    jump_flag: bool = False
    error: Optional[str] = None

    @property
    def sum_singles(self) -> float:
        return float(sum(self.singles)) if self.singles else float("nan")

    @property
    def breakdown(self) -> bool:
        return self.additivity_flag or self.jump_flag


@dataclass
class ShiftSweep:
    rows: List[ShiftSweepRow]
    additivity_threshold: float
    jump_factor: float

    @property
    def first_breakdown(self) -> Optional[float]:
        for row in self.rows:
            if row.breakdown:
                return row.j_ck
        return None


def shift_point(system: StarSystem, j_ck: float, projection_cutoff: Optional[float] = None) -> ShiftSweepRow:
    """Single-neighbor and all-ones shifts at one fluxonium-coupler coupling value"""
    row = ShiftSweepRow(j_ck=float(j_ck))
    try:
        swept = system.with_coupler_couplings(j_ck)
        spectrum = labeled_spectrum(swept, projection_cutoff)
        n = system.n_neighbors
        row.singles = tuple(
            state_dependent_shift(swept, NeighborConfig.unit(n, j), spectrum) for j in range(n)
        )
        row.all_ones = state_dependent_shift(swept, NeighborConfig.ones(n), spectrum)
    except FluxsimError as e:
        row.error = str(e)
        logger.warning(f"Shift point J={j_ck} GHz failed: {e}")
    return row


def flag_breakdown(rows: List[ShiftSweepRow], additivity_threshold: float = 0.2, jump_factor: float = 5.0) -> None:
    """Set additivity and jump flags in place on an ascending list of sweep rows"""
    for row in rows:
        if row.error is not None:
            continue
        if abs(row.all_ones) >= ADDITIVITY_MIN_SHIFT_GHZ:
            row.residual = abs(row.all_ones - row.sum_singles) / abs(row.all_ones)
            row.additivity_flag = row.residual > additivity_threshold

    valid = [row for row in rows if row.error is None]
    if not valid:
        return
    n_series = len(valid[0].singles) + 1
    for s in range(n_series):
        series = [(row.singles + (row.all_ones,))[s] for row in valid]
        for i in range(1, len(valid)):
            previous, current = series[i - 1], series[i]
            step = current - previous
            trend = abs(series[i - 1] - series[i - 2]) if i >= 2 else 0.0
            jumped = i >= 2 and abs(step) > jump_factor * max(trend, SHIFT_FLOOR_GHZ)
            flipped = previous * current < 0 and min(abs(previous), abs(current)) > SHIFT_FLOOR_GHZ
            if jumped or flipped:
                valid[i].jump_flag = True


def shift_sweep(
    system: StarSystem,
    j_ck_values: Sequence[float],
    additivity_threshold: float = 0.2,
    jump_factor: float = 5.0,
    projection_cutoff: Optional[float] = None,
) -> ShiftSweep:
    """Neighbor-state-dependent shifts versus the fluxonium-coupler coupling.

    A point is flagged when the all-ones shift departs from the sum of
    single-neighbor shifts by more than additivity_threshold, or when any shift
    jumps by more than jump_factor times its previous step or changes sign.
    """
    values = [float(v) for v in j_ck_values]
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError("j_ck_values must be sorted ascending")
    rows = [shift_point(system, j, projection_cutoff) for j in values]
    flag_breakdown(rows, additivity_threshold, jump_factor)
    for row in rows:
        if row.breakdown:
            logger.warning(f"Additivity breakdown at J={row.j_ck} GHz (residual {row.residual})")
    return ShiftSweep(rows=rows, additivity_threshold=additivity_threshold, jump_factor=jump_factor)


@dataclass(frozen=True)
class TransitionRow:
    """Plasmon frequency of fluxonium k with the other fluxoniums in `others`"""
    fluxonium: int
    others: NeighborConfig
    frequency: float
    is_gate: bool = False


@dataclass
class TransitionTable:
    rows: List[TransitionRow]
    gate_frequency: float
    min_detuning: float
    nearest: Optional[TransitionRow] = None

    def detuning(self, row: TransitionRow) -> float:
        return row.frequency - self.gate_frequency

    def central_detunings(self) -> Dict[NeighborConfig, float]:
        """Detuning of the central plasmon for every neighbor configuration"""
        return {row.others: self.detuning(row) for row in self.rows if row.fluxonium == 0}


def build_transition_table(rows: List[TransitionRow]) -> TransitionTable:
    gate = next(row for row in rows if row.is_gate)
    others = [row for row in rows if not row.is_gate]
    nearest = min(others, key=lambda row: abs(row.frequency - gate.frequency)) if others else None
    min_detuning = nearest.frequency - gate.frequency if nearest else float("nan")
    return TransitionTable(rows=rows, gate_frequency=gate.frequency, min_detuning=min_detuning, nearest=nearest)


def transition_table(
    system: StarSystem,
    spectrum: Optional[LabeledSpectrum] = None,
    projection_cutoff: Optional[float] = None,
) -> TransitionTable:
    """Dressed plasmon frequencies of every fluxonium for every configuration of the others.

    The gate row is the central fluxonium with all neighbors in |1>; min_detuning is
    the signed detuning of the row nearest to it.
    """
    if spectrum is None:
        spectrum = labeled_spectrum(system, projection_cutoff, tuple(system.transition_labels()))
    n = system.n_neighbors
    rows = []
    for k in range(system.n_qubits):
        for others in NeighborConfig.enumerate(n):
            rows.append(
                TransitionRow(
                    fluxonium=k,
                    others=others,
                    frequency=plasmon_frequency(spectrum, system, k, others),
                    is_gate=(k == 0 and all(others.bits)),
                )
            )
    table = build_transition_table(rows)
    logger.info(
        f"Gate transition {table.gate_frequency:.6f} GHz, "
        f"min detuning {table.min_detuning * 1e3:.2f} MHz"
    )
    return table
