"""Fluxonium qubit Hamiltonian and its truncated eigenbasis.

H = 4 E_C n^2 + (E_L/2)(phi - phi_ext)^2 - E_J cos(phi), diagonalized in the
harmonic-oscillator basis of the (E_C, E_L) oscillator centred on phi_ext.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy import linalg

from ..errors import CircuitError, DiagonalizationError
from .operators import ladder_operator

logger = logging.getLogger(__name__)

DEFAULT_BASIS_SIZE = 60
MIN_BASIS_SIZE = 40
GAUGE_TOL = 1e-12


@dataclass(frozen=True)
class FluxoniumSpec:
    """Circuit energies (GHz) and flux bias (rad) of one fluxonium"""
    e_c: float
    e_l: float
    e_j: float
    phi_ext: float = np.pi
    n_levels: int = 4

    def __post_init__(self):
        if self.e_c <= 0 or self.e_l <= 0 or self.e_j <= 0:
            raise CircuitError(
                f"Fluxonium energies must be positive (E_C={self.e_c}, E_L={self.e_l}, E_J={self.e_j})"
            )
        if self.n_levels < 3:
            raise CircuitError(f"Fluxonium needs at least 3 levels, got {self.n_levels}")

    @property
    def oscillator_frequency(self) -> float:
        """Plasma frequency sqrt(8 E_C E_L) of the inductive oscillator"""
        return float(np.sqrt(8.0 * self.e_c * self.e_l))

    @property
    def oscillator_length(self) -> float:
        """Phase oscillator length (8 E_C / E_L)^(1/4)"""
        return float((8.0 * self.e_c / self.e_l) ** 0.25)


@dataclass(frozen=True)
class FluxoniumSpectrum:
    """Lowest eigenlevels with charge and phase operators in that eigenbasis"""
    spec: FluxoniumSpec
    energies: np.ndarray
    n_op: np.ndarray
    phi_op: np.ndarray

    def transition(self, lower: int, upper: int) -> float:
        return float(self.energies[upper] - self.energies[lower])

    @property
    def omega01(self) -> float:
        return self.transition(0, 1)

    @property
    def omega12(self) -> float:
        return self.transition(1, 2)

    @property
    def omega03(self) -> float:
        return self.transition(0, 3)


def _gauge_fixed(vectors: np.ndarray, n_basis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Multiply eigenvector k by (-i)^k and a sign so <k-1|n|k> is real positive.

    Returns the charge operator in the gauge-fixed eigenbasis.
    """
    n_levels = vectors.shape[1]
    phases = (-1j) ** np.arange(n_levels)
    n_eig = vectors.conj().T @ n_basis @ vectors
    n_eig = np.conj(phases)[:, None] * n_eig * phases[None, :]

    signs = np.ones(n_levels)
    for k in range(1, n_levels):
        element = signs[k - 1] * n_eig[k - 1, k]
        if np.real(element) < 0 or (abs(np.real(element)) < GAUGE_TOL and np.imag(element) < 0):
            signs[k] = -1.0
    n_eig = signs[:, None] * n_eig * signs[None, :]
    return n_eig, phases * signs


def _drop_vanishing_imag(matrix: np.ndarray) -> np.ndarray:
    scale = max(np.max(np.abs(matrix)), 1.0)
    if np.max(np.abs(np.imag(matrix))) <= GAUGE_TOL * scale:
        return np.real(matrix).copy()
    return matrix


@lru_cache(maxsize=256)
def diagonalize_fluxonium(spec: FluxoniumSpec, basis_size: int = DEFAULT_BASIS_SIZE) -> FluxoniumSpectrum:
    """Diagonalize a fluxonium and return its lowest n_levels.

    Energies are shifted so the ground state sits at zero. The eigenvectors are
    phase-fixed so <k-1|n|k> is real and non-negative; at phi_ext = pi every charge
    matrix element is then real.
    """
    if basis_size < spec.n_levels:
        raise CircuitError(f"basis_size {basis_size} is smaller than n_levels {spec.n_levels}")
    if basis_size < MIN_BASIS_SIZE:
        raise CircuitError(f"basis_size {basis_size} is below the convergence floor {MIN_BASIS_SIZE}")

    a = ladder_operator(basis_size)
    length = spec.oscillator_length
    theta = (length / np.sqrt(2.0)) * (a + a.T)
    n_basis = (1j / (np.sqrt(2.0) * length)) * (a.T - a)

    # cos(theta + phi_ext) expanded so only real symmetric matrix functions are needed
    cos_phi = np.cos(spec.phi_ext) * linalg.cosm(theta) - np.sin(spec.phi_ext) * linalg.sinm(theta)
    hamiltonian = np.diag(spec.oscillator_frequency * (np.arange(basis_size) + 0.5))
    hamiltonian = hamiltonian - spec.e_j * np.real(cos_phi)
    hamiltonian = 0.5 * (hamiltonian + hamiltonian.T)

    try:
        energies, vectors = linalg.eigh(hamiltonian, subset_by_index=[0, spec.n_levels - 1])
    except linalg.LinAlgError as e:
        raise DiagonalizationError(f"Fluxonium diagonalization failed for {spec}: {e}") from e

    n_op, phases = _gauge_fixed(vectors.astype(complex), n_basis)
    gauged = vectors * phases[None, :]
    phi_op = gauged.conj().T @ (theta + spec.phi_ext * np.eye(basis_size)) @ gauged

    energies = energies - energies[0]
    n_op = _drop_vanishing_imag(n_op)
    phi_op = _drop_vanishing_imag(phi_op)
    for array in (energies, n_op, phi_op):
        array.setflags(write=False)

    logger.debug(
        f"Fluxonium E_C={spec.e_c} E_L={spec.e_l} E_J={spec.e_j}: "
        f"levels {np.round(energies, 4).tolist()} GHz (basis {basis_size})"
    )
    return FluxoniumSpectrum(spec=spec, energies=energies, n_op=n_op, phi_op=phi_op)
