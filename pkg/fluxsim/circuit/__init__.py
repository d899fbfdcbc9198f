"""Circuit Hamiltonians: fluxonium, transmon coupler and the star-coupled system"""

from .coupler import CouplerDerived, TransmonCouplerSpec, coupler_oscillator, transmon_charge_spectrum
from .fluxonium import FluxoniumSpec, FluxoniumSpectrum, diagonalize_fluxonium
from .operators import BasisTag, OperatorMatrix
from .system import (
    StarSystem,
    bare_energies,
    basis_index,
    build_system_hamiltonian,
    charge_operators,
    embed_operator,
    project_low_energy,
)

__all__ = [
    "BasisTag",
    "CouplerDerived",
    "FluxoniumSpec",
    "FluxoniumSpectrum",
    "OperatorMatrix",
    "StarSystem",
    "TransmonCouplerSpec",
    "bare_energies",
    "basis_index",
    "build_system_hamiltonian",
    "charge_operators",
    "coupler_oscillator",
    "diagonalize_fluxonium",
    "embed_operator",
    "project_low_energy",
    "transmon_charge_spectrum",
]
