"""Transmon tunable coupler reduced to a weakly anharmonic oscillator.

The flux-tunable coupler behaves as a transmon with effective Josephson energy
E_J cos(phi_ext / 2). Its lowest levels follow from the quartic expansion of the
cosine potential, which gives closed forms for the transition frequency and the
anharmonicity in terms of the small parameter lambda.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg

from ..errors import CircuitError, DegeneratePotentialError, DiagonalizationError
from .operators import ladder_operator

logger = logging.getLogger(__name__)

# E_J cos(phi/2) below this fraction of E_J is treated as a vanishing potential
DEGENERATE_FRACTION = 1e-12


@dataclass(frozen=True)
class TransmonCouplerSpec:
    """Charging and Josephson energies (GHz) and flux bias (rad) of a coupler"""
    e_c: float
    e_j: float
    phi_ext: float = 0.0
    n_levels: int = 3

    def __post_init__(self):
        if self.e_c <= 0 or self.e_j <= 0:
            raise CircuitError(f"Coupler energies must be positive (E_C={self.e_c}, E_J={self.e_j})")
        if self.n_levels < 2:
            raise CircuitError(f"Coupler needs at least 2 levels, got {self.n_levels}")

    @property
    def e_j_eff(self) -> float:
        return float(self.e_j * np.cos(self.phi_ext / 2.0))

    @property
    def phi_ext_over_2pi(self) -> float:
        return self.phi_ext / (2.0 * np.pi)


@dataclass(frozen=True)
class CouplerDerived:
    """Oscillator parameters and truncated operators of one coupler.

    The charge operator is n_zpf (a + a^dagger), the real gauge of
    i n_zpf (a^dagger - a) obtained by a -> -i a.
    """
    spec: TransmonCouplerSpec
    omega_p: float
    lam: float
    omega_c: float
    alpha_c: float
    n_zpf: float
    phi_zpf: float
    energies: np.ndarray
    a_op: np.ndarray
    adag_op: np.ndarray
    n_op: np.ndarray

    @property
    def omega12(self) -> float:
        return self.omega_c + self.alpha_c

    def hamiltonian(self) -> np.ndarray:
        """Diagonal anharmonic-oscillator Hamiltonian in the Fock basis"""
        return np.diag(self.energies)


@lru_cache(maxsize=256)
def coupler_oscillator(spec: TransmonCouplerSpec) -> CouplerDerived:
    """Closed-form coupler frequency, anharmonicity and ladder operators.

    omega_c = omega_p (1 - 3 lam - 9 lam^2) and
    alpha_c = -omega_p (3 lam + 162/8 lam^2) with
    lam = sqrt(E_C / (8 E_J_eff)) / 3.
    """
    e_j_eff = spec.e_j_eff
    if e_j_eff <= DEGENERATE_FRACTION * spec.e_j:
        raise DegeneratePotentialError(
            f"Coupler effective Josephson energy {e_j_eff:.3e} GHz is not positive "
            f"at phi_ext/2pi={spec.phi_ext_over_2pi:.4f}"
        )

    omega_p = np.sqrt(8.0 * e_j_eff * spec.e_c)
    lam = np.sqrt(spec.e_c / (8.0 * e_j_eff)) / 3.0
    omega_c = omega_p * (1.0 - 3.0 * lam - 9.0 * lam**2)
    alpha_c = -omega_p * (3.0 * lam + (162.0 / 8.0) * lam**2)
    n_zpf = (e_j_eff / (8.0 * spec.e_c)) ** 0.25 / np.sqrt(2.0)
    phi_zpf = (8.0 * spec.e_c / e_j_eff) ** 0.25 / np.sqrt(2.0)

    levels = np.arange(spec.n_levels)
    energies = omega_c * levels + 0.5 * alpha_c * levels * (levels - 1)
    a = ladder_operator(spec.n_levels)
    n_op = n_zpf * (a + a.T)
    for array in (energies, a, n_op):
        array.setflags(write=False)

    logger.debug(
        f"Coupler phi_ext/2pi={spec.phi_ext_over_2pi:.4f}: "
        f"omega_c={omega_c:.4f} GHz alpha_c={alpha_c:.4f} GHz lambda={lam:.5f}"
    )
    return CouplerDerived(
        spec=spec,
        omega_p=float(omega_p),
        lam=float(lam),
        omega_c=float(omega_c),
        alpha_c=float(alpha_c),
        n_zpf=float(n_zpf),
        phi_zpf=float(phi_zpf),
        energies=energies,
        a_op=a,
        adag_op=a.T,
        n_op=n_op,
    )


def transmon_charge_spectrum(spec: TransmonCouplerSpec, n_cut: int = 30, offset_charge: float = 0.0) -> np.ndarray:
    """Lowest levels of the full cosine-potential transmon in the charge basis.

    Used to cross-check the closed-form oscillator reduction.
    """
    e_j_eff = spec.e_j_eff
    if e_j_eff <= DEGENERATE_FRACTION * spec.e_j:
        raise DegeneratePotentialError(f"Coupler effective Josephson energy {e_j_eff:.3e} GHz is not positive")

    charges = np.arange(-n_cut, n_cut + 1)
    diagonal = 4.0 * spec.e_c * (charges - offset_charge) ** 2
    off_diagonal = np.full(2 * n_cut, -0.5 * e_j_eff)
    try:
        energies = linalg.eigh_tridiagonal(
            diagonal, off_diagonal, eigvals_only=True, select="i", select_range=(0, spec.n_levels - 1)
        )
    except linalg.LinAlgError as e:
        raise DiagonalizationError(f"Transmon charge-basis diagonalization failed: {e}") from e
    return energies - energies[0]
