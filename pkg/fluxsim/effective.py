"""Perturbative plasmon-manifold model of the star system.

Focusing on the |1>-|2> plasmon transitions, each fluxonium couples to its coupler
with g12_k = J_ck n_zpf <1|n_k|2>. Eliminating the couplers to second order gives an
effective plasmon-plasmon exchange g_0j, and in the dispersive regime a
state-dependent shift chi_j = g_0j^2 / Delta_0j of the central plasmon.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

import numpy as np
from scipy import linalg

from .circuit.operators import BasisTag, OperatorMatrix
from .circuit.system import StarSystem
from .errors import EffectiveModelError, MissingConfigurationError, PoleError
from .spectrum import NeighborConfig, TransitionRow, TransitionTable, build_transition_table

logger = logging.getLogger(__name__)

POLE_TOL = 1e-12


@dataclass(frozen=True)
class PlasmonCouplings:
    """Plasmon-coupler couplings of Q0 and Qj and their direct plasmon coupling (GHz)"""
    g12_0: float
    g12_j: float
    g12_0j: float


@dataclass(frozen=True)
class EffectiveStarModel:
    omega12: Tuple[float, ...]
    g0j: Tuple[float, ...]
    chi: Tuple[float, ...]

    @property
    def n_neighbors(self) -> int:
        return len(self.g0j)

    def delta0j(self, j: int) -> float:
        """Plasmon detuning between Q0 and neighbor j (1-based)"""
        return self.omega12[0] - self.omega12[j]


def _plasmon_element(n_op: np.ndarray) -> float:
    return float(np.real(n_op[1, 2]))


def plasmon_couplings(system: StarSystem, j: int) -> PlasmonCouplings:
    """Couplings of the central and j-th (1-based) fluxonium plasmons to coupler j"""
    if not 1 <= j <= system.n_neighbors:
        raise EffectiveModelError(f"Neighbor index {j} outside 1..{system.n_neighbors}")
    spectra = system.fluxonium_spectra()
    coupler = system.coupler_data()[j - 1]
    n12_0 = _plasmon_element(spectra[0].n_op)
    n12_j = _plasmon_element(spectra[j].n_op)
    return PlasmonCouplings(
        g12_0=system.j_c0[j - 1] * coupler.n_zpf * n12_0,
        g12_j=system.j_cj[j - 1] * coupler.n_zpf * n12_j,
        g12_0j=system.j_0j[j - 1] * n12_0 * n12_j,
    )


def effective_g01(pc: PlasmonCouplings, omega12_0: float, omega12_1: float, omega_c: float) -> float:
    """Coupler-mediated plasmon exchange plus the direct term.

    g01 = g12_01 + (g0 g1 / 2) sum_k (1/Delta_k - 1/Sigma_k) with
    Delta_k = omega_k - omega_c and Sigma_k = omega_k + omega_c.
    """
    mediated = 0.0
    for omega in (omega12_0, omega12_1):
        delta = omega - omega_c
        total = omega + omega_c
        if abs(delta) < POLE_TOL or abs(total) < POLE_TOL:
            raise PoleError(f"Plasmon at {omega} GHz is resonant with the coupler at {omega_c} GHz")
        mediated += 1.0 / delta - 1.0 / total
    return pc.g12_0j + 0.5 * pc.g12_0 * pc.g12_j * mediated


def dispersive_chi(g01: float, delta01: float) -> float:
    """Signed dispersive shift g^2 / Delta"""
    if abs(delta01) < POLE_TOL:
        raise PoleError("Zero detuning in dispersive shift")
    return g01**2 / delta01


def exact_exchange_shift(g: float, delta: float) -> float:
    """Exact level repulsion of two states split by delta and coupled by g"""
    return float(np.sign(delta) * (np.sqrt(delta**2 / 4.0 + g**2) - abs(delta) / 2.0))


def build_effective_star_model(system: StarSystem) -> EffectiveStarModel:
    """Plasmon frequencies, mediated couplings and dispersive shifts of a star system"""
    spectra = system.fluxonium_spectra()
    couplers = system.coupler_data()
    omega12 = tuple(spectrum.omega12 for spectrum in spectra)
    g0j: List[float] = []
    chi: List[float] = []
    for j in range(1, system.n_neighbors + 1):
        pc = plasmon_couplings(system, j)
        g = effective_g01(pc, omega12[0], omega12[j], couplers[j - 1].omega_c)
        g0j.append(g)
        chi.append(dispersive_chi(g, omega12[0] - omega12[j]))
    model = EffectiveStarModel(omega12=omega12, g0j=tuple(g0j), chi=tuple(chi))
    logger.debug(
        f"Effective model: g0j={[round(g * 1e3, 3) for g in g0j]} MHz, "
        f"chi={[round(c * 1e3, 3) for c in chi]} MHz"
    )
    return model


def predicted_shift(model: EffectiveStarModel, config: NeighborConfig) -> float:
    """Dispersive prediction sum_j s_j chi_j of the central plasmon shift"""
    if config.n != model.n_neighbors:
        raise MissingConfigurationError(f"Configuration {config} does not have {model.n_neighbors} bits")
    return float(sum(bit * chi for bit, chi in zip(config.bits, model.chi)))


def effective_transition_table(model: EffectiveStarModel) -> TransitionTable:
    """Dispersive-model plasmon frequencies in the same layout as the full-model table.

    The central plasmon is pushed by +chi_j for each excited neighbor; neighbor j is
    pushed by -chi_j when the central fluxonium is excited.
    """
    n = model.n_neighbors
    rows = []
    for k in range(n + 1):
        for others in NeighborConfig.enumerate(n):
            if k == 0:
                frequency = model.omega12[0] + predicted_shift(model, others)
            else:
                frequency = model.omega12[k] - others.bits[0] * model.chi[k - 1]
            rows.append(TransitionRow(k, others, frequency, is_gate=(k == 0 and all(others.bits))))
    return build_transition_table(rows)


def effective_min_detuning(model: EffectiveStarModel) -> float:
    return effective_transition_table(model).min_detuning


def two_plasmon_hamiltonian(omega12_0: float, omega12_1: float, g01: float) -> np.ndarray:
    """4-level plasmon model in the basis |11>, |12>, |21>, |22> with a g01 X0 X1 coupling"""
    h = np.diag([0.0, omega12_1, omega12_0, omega12_0 + omega12_1])
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    return h + g01 * np.kron(x, x)


def build_rotating_gate_model(
    model: EffectiveStarModel, omega: float, detunings: Mapping[NeighborConfig, float]
) -> OperatorMatrix:
    """Block-diagonal gate model in the frame of the drive.

    One (|1>, |2>) block per neighbor configuration, in binary order, each
    (delta'/2) Z + (Omega/2) X with Z = diag(-1, +1). The all-ones block must be
    resonant.
    """
    n = model.n_neighbors
    configs = NeighborConfig.enumerate(n)
    missing = [str(c) for c in configs if c not in detunings]
    if missing:
        raise MissingConfigurationError(f"No detuning for configurations {missing}")
    if abs(detunings[NeighborConfig.ones(n)]) > POLE_TOL:
        raise EffectiveModelError("The all-ones configuration must be resonant with the drive")

    z = np.diag([-1.0, 1.0])
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    blocks = [0.5 * detunings[config] * z + 0.5 * omega * x for config in configs]
    return OperatorMatrix(entries=linalg.block_diag(*blocks), basis_tag=BasisTag.DRESSED, dims=(2,) * (n + 1))


def rotating_gate_unitary(h: OperatorMatrix, t_g: float) -> np.ndarray:
    """exp(-2 pi i H t_g) of the rotating gate model"""
    return linalg.expm(-2j * np.pi * h.dense() * t_g)


def ac_stark_estimate(omega: float, delta_prime: float, t_g: float) -> float:
    """Phase 2 pi Omega^2 t_g / (4 delta') picked up by an off-resonant configuration"""
    if abs(delta_prime) < POLE_TOL:
        raise PoleError("Zero detuning in ac-Stark estimate")
    return 2.0 * np.pi * omega**2 * t_g / (4.0 * delta_prime)


def ac_stark_phases(omega: float, detunings: Mapping[NeighborConfig, float], t_g: float) -> Dict[NeighborConfig, float]:
    """ac-Stark estimate for every off-resonant configuration"""
    return {
        config: ac_stark_estimate(omega, delta, t_g)
        for config, delta in detunings.items()
        if abs(delta) > POLE_TOL
    }
