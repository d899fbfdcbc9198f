"""Star-coupled fluxonium system: one central fluxonium Q0, N neighbors, N couplers.

Sites are ordered (Q0, Q1, C1, Q2, C2, ...). The composite Hamiltonian is built in
the product basis of the subsystem eigenbases:

    H = H_0 + sum_j [H_j + H_cj + J_c0 n_0 n_cj + J_cj n_j n_cj + J_0j n_0 n_j]
"""

import itertools
import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from ..errors import CircuitError, DimensionMismatchError, EmptyProjectionError
from .coupler import CouplerDerived, TransmonCouplerSpec, coupler_oscillator
from .fluxonium import DEFAULT_BASIS_SIZE, FluxoniumSpec, FluxoniumSpectrum, diagonalize_fluxonium
from .operators import BasisTag, Matrix, OperatorMatrix, real_if_close

logger = logging.getLogger(__name__)

MAX_NEIGHBORS = 4

Label = Tuple[int, ...]


@dataclass(frozen=True)
class StarSystem:
    """Central fluxonium coupled to N neighbors through N transmon couplers.

    Coupling constants are charge-charge couplings in GHz; list position j-1
    belongs to neighbor j.
    """
    central: FluxoniumSpec
    neighbors: Tuple[FluxoniumSpec, ...]
    couplers: Tuple[TransmonCouplerSpec, ...]
    j_c0: Tuple[float, ...]
    j_cj: Tuple[float, ...]
    j_0j: Tuple[float, ...]
    basis_size: int = DEFAULT_BASIS_SIZE

    def __post_init__(self):
        for name in ("neighbors", "couplers", "j_c0", "j_cj", "j_0j"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name in ("j_c0", "j_cj", "j_0j"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

        n = len(self.neighbors)
        if not 1 <= n <= MAX_NEIGHBORS:
            raise CircuitError(f"Star system needs 1 to {MAX_NEIGHBORS} neighbors, got {n}")
        for name in ("couplers", "j_c0", "j_cj", "j_0j"):
            if len(getattr(self, name)) != n:
                raise CircuitError(f"{name} has length {len(getattr(self, name))}, expected {n}")

    @property
    def n_neighbors(self) -> int:
        return len(self.neighbors)

    @property
    def n_qubits(self) -> int:
        return self.n_neighbors + 1

    @property
    def fluxoniums(self) -> Tuple[FluxoniumSpec, ...]:
        return (self.central,) + self.neighbors

    @property
    def site_names(self) -> Tuple[str, ...]:
        names = ["Q0"]
        for j in range(1, self.n_neighbors + 1):
            names.extend([f"Q{j}", f"C{j}"])
        return tuple(names)

    @property
    def dims(self) -> Tuple[int, ...]:
        dims = [self.central.n_levels]
        for neighbor, coupler in zip(self.neighbors, self.couplers):
            dims.extend([neighbor.n_levels, coupler.n_levels])
        return tuple(dims)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims))

    @staticmethod
    def qubit_site(k: int) -> int:
        """Site index of fluxonium Qk"""
        return 0 if k == 0 else 2 * k - 1

    @staticmethod
    def coupler_site(j: int) -> int:
        """Site index of coupler Cj (j >= 1)"""
        return 2 * j

    @property
    def qubit_sites(self) -> Tuple[int, ...]:
        return tuple(self.qubit_site(k) for k in range(self.n_qubits))

    def fluxonium_spectra(self) -> List[FluxoniumSpectrum]:
        return [diagonalize_fluxonium(spec, self.basis_size) for spec in self.fluxoniums]

    def coupler_data(self) -> List[CouplerDerived]:
        return [coupler_oscillator(spec) for spec in self.couplers]

    def with_coupler_biases(self, phi_ext: Sequence[float]) -> "StarSystem":
        """Copy with new coupler flux biases (radians)"""
        if len(phi_ext) != self.n_neighbors:
            raise CircuitError(f"Expected {self.n_neighbors} coupler biases, got {len(phi_ext)}")
        couplers = tuple(replace(c, phi_ext=float(phi)) for c, phi in zip(self.couplers, phi_ext))
        return replace(self, couplers=couplers)

    def with_coupler_couplings(self, j_c0: float, j_cj: Optional[float] = None) -> "StarSystem":
        """Copy with every fluxonium-coupler coupling set to a common value (GHz)"""
        j_cj = j_c0 if j_cj is None else j_cj
        n = self.n_neighbors
        return replace(self, j_c0=(j_c0,) * n, j_cj=(j_cj,) * n)

    def coupler_biases(self) -> Tuple[float, ...]:
        return tuple(c.phi_ext for c in self.couplers)

    # Labels are occupation tuples in site order.

    def label(self, qubit_levels: Sequence[int], coupler_levels: Optional[Sequence[int]] = None) -> Label:
        """Site-order label from fluxonium occupations (Q0..QN) and coupler occupations"""
        if len(qubit_levels) != self.n_qubits:
            raise CircuitError(f"Expected {self.n_qubits} fluxonium occupations, got {len(qubit_levels)}")
        coupler_levels = coupler_levels if coupler_levels is not None else (0,) * self.n_neighbors
        site = [int(qubit_levels[0])]
        for j in range(self.n_neighbors):
            site.extend([int(qubit_levels[j + 1]), int(coupler_levels[j])])
        return tuple(site)

    def qubit_levels(self, label: Label) -> Tuple[int, ...]:
        return tuple(label[s] for s in self.qubit_sites)

    def computational_labels(self) -> List[Label]:
        """All 2^(N+1) computational labels, Q0 as the most significant bit"""
        return [self.label(bits) for bits in itertools.product((0, 1), repeat=self.n_qubits)]

    def transition_labels(self) -> List[Label]:
        """Computational labels plus those with exactly one fluxonium in |2>"""
        labels = self.computational_labels()
        for k in range(self.n_qubits):
            for others in itertools.product((0, 1), repeat=self.n_neighbors):
                levels = list(others)
                levels.insert(k, 2)
                labels.append(self.label(levels))
        return labels

    def required_labels(self) -> List[Label]:
        """Every label with fluxonium occupations <= 2 and couplers in the ground state"""
        return [self.label(levels) for levels in itertools.product((0, 1, 2), repeat=self.n_qubits)]

    def label_index(self, label: Label) -> int:
        """Flat product-basis index of a label"""
        if len(label) != len(self.dims):
            raise DimensionMismatchError(f"Label {label} does not match site count {len(self.dims)}")
        return int(np.ravel_multi_index(label, self.dims))


def _kron_chain(factors: Mapping[int, Matrix], dims: Sequence[int]) -> sparse.csr_matrix:
    """Kronecker product with the given local factors and identities elsewhere"""
    result = None
    for site, dim in enumerate(dims):
        factor = factors.get(site)
        block = sparse.identity(dim, format="csr") if factor is None else sparse.csr_matrix(factor)
        result = block if result is None else sparse.kron(result, block, format="csr")
    return result


def embed_operator(
    local: Union[OperatorMatrix, np.ndarray], site_index: int, system: StarSystem
) -> OperatorMatrix:
    """Embed a single-site operator into the full product space with identities elsewhere"""
    dims = system.dims
    if not 0 <= site_index < len(dims):
        raise DimensionMismatchError(f"Site index {site_index} outside 0..{len(dims) - 1}")
    entries = local.entries if isinstance(local, OperatorMatrix) else np.asarray(local)
    if entries.shape != (dims[site_index], dims[site_index]):
        raise DimensionMismatchError(
            f"Operator of shape {entries.shape} does not fit site {system.site_names[site_index]} "
            f"of dimension {dims[site_index]}"
        )
    return OperatorMatrix(
        entries=_kron_chain({site_index: entries}, dims),
        basis_tag=BasisTag.BARE_PRODUCT,
        dims=dims,
    )


def bare_energies(system: StarSystem) -> np.ndarray:
    """Diagonal of the uncoupled Hamiltonian in the product basis"""
    spectra = system.fluxonium_spectra()
    couplers = system.coupler_data()
    site_energies: List[np.ndarray] = [spectra[0].energies]
    for j in range(system.n_neighbors):
        site_energies.extend([spectra[j + 1].energies, couplers[j].energies])
    total = site_energies[0]
    for energies in site_energies[1:]:
        total = np.add.outer(total, energies).ravel()
    return np.asarray(total, dtype=float)


def charge_operators(system: StarSystem) -> Dict[int, np.ndarray]:
    """Local charge operator of every site, keyed by site index"""
    ops: Dict[int, np.ndarray] = {}
    spectra = system.fluxonium_spectra()
    couplers = system.coupler_data()
    for k in range(system.n_qubits):
        ops[system.qubit_site(k)] = spectra[k].n_op
    for j in range(1, system.n_neighbors + 1):
        ops[system.coupler_site(j)] = couplers[j - 1].n_op
    return ops


def build_system_hamiltonian(system: StarSystem) -> OperatorMatrix:
    """Full star Hamiltonian in the bare product eigenbasis (sparse CSR)"""
    dims = system.dims
    ops = charge_operators(system)
    hamiltonian = sparse.diags(bare_energies(system), format="csr").astype(complex)

    for j in range(1, system.n_neighbors + 1):
        q0, qj, cj = 0, system.qubit_site(j), system.coupler_site(j)
        couplings = (
            (system.j_c0[j - 1], q0, cj),
            (system.j_cj[j - 1], qj, cj),
            (system.j_0j[j - 1], q0, qj),
        )
        for strength, site_a, site_b in couplings:
            if strength == 0.0:
                continue
            hamiltonian = hamiltonian + strength * _kron_chain({site_a: ops[site_a], site_b: ops[site_b]}, dims)

    hamiltonian = real_if_close(hamiltonian.tocsr())
    result = OperatorMatrix(entries=hamiltonian, basis_tag=BasisTag.BARE_PRODUCT, dims=dims)
    logger.debug(
        f"Built star Hamiltonian N={system.n_neighbors}: dim {result.dim}, nnz {hamiltonian.nnz}"
    )
    return result


def restrict(matrix: Matrix, kept: np.ndarray) -> Matrix:
    """Rows and columns of a matrix at the kept indices"""
    if sparse.issparse(matrix):
        return matrix.tocsr()[kept][:, kept]
    return np.asarray(matrix)[np.ix_(kept, kept)]


def project_low_energy(h: OperatorMatrix, cutoff: float) -> OperatorMatrix:
    """Keep bare product states whose diagonal energy lies below the cutoff (GHz).

    The returned operator carries the kept product-basis indices in ``kept``.
    """
    diagonal = h.diagonal()
    local = np.flatnonzero(diagonal < cutoff)
    if local.size == 0:
        raise EmptyProjectionError(
            f"Cutoff {cutoff} GHz is below the lowest bare energy {diagonal.min():.4f} GHz"
        )
    kept = local if h.kept is None else np.asarray(h.kept)[local]
    kept.setflags(write=False)
    logger.debug(f"Projected {h.dim} states to {local.size} below {cutoff} GHz")
    return OperatorMatrix(
        entries=restrict(h.entries, local),
        basis_tag=BasisTag.PROJECTED,
        dims=h.dims,
        kept=kept,
        unit=h.unit,
    )


def basis_index(label: Label, dims: Sequence[int], kept: Optional[np.ndarray] = None) -> Optional[int]:
    """Index of a label in a (possibly projected) product basis, None if projected out"""
    flat = int(np.ravel_multi_index(label, tuple(dims)))
    if kept is None:
        return flat
    position = int(np.searchsorted(kept, flat))
    if position < len(kept) and kept[position] == flat:
        return position
    return None
