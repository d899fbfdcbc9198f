"""Shared fixtures: circuit parameters of the bundled star systems"""

import numpy as np
import pytest

from fluxsim.circuit import FluxoniumSpec, StarSystem, TransmonCouplerSpec
from fluxsim.configs import FLUXONIUM_PARAMETERS, INTERACTION_BIASES, J_COUPLER, J_DIRECT

# (omega01, omega12, omega03) in GHz for Q0..Q4
FLUXONIUM_TRANSITIONS = [
    (0.298, 5.621, 8.347),
    (0.222, 5.269, 7.461),
    (0.273, 5.049, 7.474),
    (0.273, 5.198, 7.660),
    (0.306, 5.134, 7.771),
]


def fluxonium(k: int) -> FluxoniumSpec:
    e_c, e_l, e_j = FLUXONIUM_PARAMETERS[k]
    return FluxoniumSpec(e_c=e_c, e_l=e_l, e_j=e_j, phi_ext=np.pi)


def coupler(bias_over_2pi: float = 0.0) -> TransmonCouplerSpec:
    return TransmonCouplerSpec(e_c=0.32, e_j=55.0, phi_ext=2.0 * np.pi * bias_over_2pi)


def star_system(n: int, j_c: float = J_COUPLER, j_direct: float = J_DIRECT) -> StarSystem:
    return StarSystem(
        central=fluxonium(0),
        neighbors=tuple(fluxonium(k) for k in range(1, n + 1)),
        couplers=tuple(coupler(b) for b in INTERACTION_BIASES[n]),
        j_c0=(j_c,) * n,
        j_cj=(j_c,) * n,
        j_0j=(j_direct,) * n,
    )


@pytest.fixture(scope="session")
def cz_system() -> StarSystem:
    return star_system(1)


@pytest.fixture(scope="session")
def ccz_system() -> StarSystem:
    return star_system(2)


@pytest.fixture(scope="session")
def uncoupled_cz_system() -> StarSystem:
    return star_system(1, j_c=0.0, j_direct=0.0)
