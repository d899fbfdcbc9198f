"""Microwave drive envelopes, the charge-drive Hamiltonian and coupler flux ramps.

Envelopes are linear amplitudes in GHz. A DRAG quadrature alpha dA/dt / (2 pi delta')
is carried in the imaginary part, with delta' the detuning (GHz) of the spurious
transition to suppress. The carrier couples to the fluxonium charge operators as

    H_d(t) = sum_k Re[A(t) exp(i (w t + phi_k))] n_k
           = sum_k [Re A(t) cos(w t + phi_k) - Im A(t) sin(w t + phi_k)] n_k

so a spurious transition detuned by delta' from the carrier sees the spectral
weight of A at delta' scaled by (1 - alpha).
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy.special import erf

from .circuit.operators import Matrix
from .errors import CarrierMismatchError, PulseError, PulseTimeError, VanishingMatrixElementError

logger = logging.getLogger(__name__)

TIME_TOL = 1e-9
VANISHING_ELEMENT = 1e-8

ArrayLike = Union[float, np.ndarray]


class PulseShape(str, Enum):
    COSINE = "cosine"
    GAUSSIAN = "gaussian"
    FLAT_TOP = "flat_top_cosine"


@dataclass(frozen=True)
class DrivePulse:
    """Shaped drive shared by every driven site.

    phases holds (fluxonium index, carrier phase in rad) pairs; sites missing from it
    are not driven.
    """
    shape: PulseShape
    omega_d_amp: float
    omega_drive: float
    t_g: float
    t_r: float = 0.0
    drag_alpha: float = 0.0
    drag_detuning: float = 0.0
    phases: Tuple[Tuple[int, float], ...] = ((0, 0.0),)

    def __post_init__(self):
        object.__setattr__(self, "shape", PulseShape(self.shape))
        object.__setattr__(self, "phases", tuple((int(s), float(p)) for s, p in self.phases))
        if self.t_g <= 0:
            raise PulseError(f"Gate length must be positive, got {self.t_g} ns")
        if self.shape is PulseShape.FLAT_TOP and not 0 <= 2 * self.t_r <= self.t_g:
            raise PulseError(f"Flat-top ramp time {self.t_r} ns does not fit in gate length {self.t_g} ns")
        if self.drag_alpha != 0 and self.drag_detuning == 0:
            raise PulseError("DRAG needs a nonzero reference detuning")

    @property
    def sigma(self) -> float:
        return self.t_g / 2.0

    @property
    def sites(self) -> Tuple[int, ...]:
        return tuple(site for site, _ in self.phases)

    def phase_for(self, site: int) -> float:
        return dict(self.phases).get(site, 0.0)

    def drives(self) -> Tuple[Tuple[int, "DrivePulse"], ...]:
        return tuple((site, self) for site in self.sites)

    def with_amplitude(self, omega_d_amp: float) -> "DrivePulse":
        return replace(self, omega_d_amp=float(omega_d_amp))

    def with_frequency(self, omega_drive: float) -> "DrivePulse":
        return replace(self, omega_drive=float(omega_drive))


def _gaussian_floor(pulse: DrivePulse) -> float:
    return float(np.exp(-((pulse.t_g / 2.0) ** 2) / (2.0 * pulse.sigma**2)))


def _shape_and_derivative(pulse: DrivePulse, t: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit-amplitude real envelope and its time derivative"""
    t_g = pulse.t_g
    if pulse.shape is PulseShape.COSINE:
        w = 2.0 * np.pi / t_g
        return 1.0 - np.cos(w * t), w * np.sin(w * t)

    if pulse.shape is PulseShape.GAUSSIAN:
        floor = _gaussian_floor(pulse)
        gauss = np.exp(-((t - t_g / 2.0) ** 2) / (2.0 * pulse.sigma**2))
        value = (gauss - floor) / (1.0 - floor)
        derivative = -(t - t_g / 2.0) / pulse.sigma**2 * gauss / (1.0 - floor)
        return value, derivative

    t_r = pulse.t_r
    value = np.ones_like(t)
    derivative = np.zeros_like(t)
    if t_r > 0:
        rise = t < t_r
        fall = t > t_g - t_r
        w = np.pi / t_r
        value[rise] = 0.5 * (1.0 - np.cos(w * t[rise]))
        derivative[rise] = 0.5 * w * np.sin(w * t[rise])
        value[fall] = 0.5 * (1.0 - np.cos(w * (t_g - t[fall])))
        derivative[fall] = -0.5 * w * np.sin(w * (t_g - t[fall]))
    return value, derivative


def _check_window(t: np.ndarray, t_g: float) -> None:
    if np.any(t < -TIME_TOL) or np.any(t > t_g + TIME_TOL):
        raise PulseTimeError(f"Pulse evaluated outside [0, {t_g}] ns")


def envelope(pulse: DrivePulse, t: ArrayLike) -> ArrayLike:
    """Complex envelope A(t) in GHz; the imaginary part is the DRAG quadrature"""
    times = np.atleast_1d(np.asarray(t, dtype=float))
    _check_window(times, pulse.t_g)
    times = np.clip(times, 0.0, pulse.t_g)
    value, derivative = _shape_and_derivative(pulse, times)
    result = pulse.omega_d_amp * value.astype(complex)
    if pulse.drag_alpha != 0:
        result = result + 1j * pulse.drag_alpha * pulse.omega_d_amp * derivative / (2.0 * np.pi * pulse.drag_detuning)
    return result if np.ndim(t) else complex(result[0])


def unit_area(shape: PulseShape, t_g: float, t_r: float = 0.0) -> float:
    """Area of the real envelope per unit Omega_d (ns)"""
    shape = PulseShape(shape)
    if shape is PulseShape.COSINE:
        return t_g
    if shape is PulseShape.FLAT_TOP:
        return t_g - t_r
    sigma = t_g / 2.0
    floor = np.exp(-((t_g / 2.0) ** 2) / (2.0 * sigma**2))
    gauss_integral = sigma * np.sqrt(2.0 * np.pi) * erf(t_g / (2.0 * np.sqrt(2.0) * sigma))
    return float((gauss_integral - t_g * floor) / (1.0 - floor))


def pulse_area(pulse: DrivePulse) -> float:
    """Integral of Re A(t) over the pulse (GHz ns)"""
    return pulse.omega_d_amp * unit_area(pulse.shape, pulse.t_g, pulse.t_r)


def carrier_quadratures(pulse: DrivePulse, t: ArrayLike) -> Tuple[ArrayLike, ArrayLike]:
    """Coefficients (a, b) with H_d(t) = a C + b S.

    C = sum_k cos(phi_k) n_k and S = sum_k sin(phi_k) n_k.
    """
    amplitude = envelope(pulse, t)
    phase = 2.0 * np.pi * pulse.omega_drive * np.asarray(t, dtype=float)
    cos_wt, sin_wt = np.cos(phase), np.sin(phase)
    a = np.real(amplitude) * cos_wt - np.imag(amplitude) * sin_wt
    b = -np.imag(amplitude) * cos_wt - np.real(amplitude) * sin_wt
    return a, b


def quadrature_operators(pulse: DrivePulse, charge_ops: Mapping[int, Matrix]) -> Tuple[Matrix, Matrix]:
    """Phase-weighted sums C and S of the driven sites' charge operators"""
    missing = [site for site in pulse.sites if site not in charge_ops]
    if missing:
        raise PulseError(f"No charge operator for driven sites {missing}")
    c = sum(np.cos(phi) * charge_ops[site] for site, phi in pulse.phases)
    s = sum(np.sin(phi) * charge_ops[site] for site, phi in pulse.phases)
    return c, s


def drive_hamiltonian(t: float, pulses: Sequence[Tuple[int, DrivePulse]], charge_ops: Mapping[int, Matrix]) -> Matrix:
    """Drive Hamiltonian at time t for simultaneous drives sharing carrier and envelope"""
    if not pulses:
        raise PulseError("No drives given")
    reference = pulses[0][1]
    for _, pulse in pulses[1:]:
        same_envelope = (pulse.shape, pulse.omega_d_amp, pulse.t_g, pulse.t_r, pulse.drag_alpha) == (
            reference.shape,
            reference.omega_d_amp,
            reference.t_g,
            reference.t_r,
            reference.drag_alpha,
        )
        if pulse.omega_drive != reference.omega_drive or not same_envelope:
            raise CarrierMismatchError("Simultaneous drives must share carrier frequency and envelope")

    amplitude = envelope(reference, t)
    phase0 = 2.0 * np.pi * reference.omega_drive * t
    total = None
    for site, pulse in pulses:
        if site not in charge_ops:
            raise PulseError(f"No charge operator for driven site {site}")
        phase = phase0 + pulse.phase_for(site)
        term = (np.real(amplitude) * np.cos(phase) - np.imag(amplitude) * np.sin(phase)) * charge_ops[site]
        total = term if total is None else total + term
    return total


def drive_matrix_elements(
    initial: np.ndarray, excited: np.ndarray, charge_ops: Mapping[int, Matrix], sites: Sequence[int]
) -> Dict[int, complex]:
    """<excited| n_k |initial> for each drive site"""
    return {site: complex(np.vdot(excited, charge_ops[site] @ initial)) for site in sites}


def relative_drive_phase(elements: Mapping[int, complex], reference_site: int, site: int) -> float:
    """Carrier phase of `site` relative to `reference_site` that adds both drives in phase"""
    for s in (reference_site, site):
        if abs(elements[s]) < VANISHING_ELEMENT:
            raise VanishingMatrixElementError(f"Drive matrix element of site {s} vanishes ({abs(elements[s]):.2e})")
    return float(np.angle(elements[site]) - np.angle(elements[reference_site]))


def combined_drive_element(elements: Mapping[int, complex], phases: Mapping[int, float]) -> complex:
    """Resonant coupling sum_k exp(-i phi_k) m_k of phased drives on one transition"""
    return complex(sum(np.exp(-1j * phases.get(site, 0.0)) * m for site, m in elements.items() if site in phases))


def in_phase_drive_phases(elements: Mapping[int, complex], sites: Sequence[int]) -> Tuple[Tuple[int, float], ...]:
    """Phases for every drive site, relative to the first, that maximize the combined element"""
    reference = sites[0]
    phases = [(reference, 0.0)]
    for site in sites[1:]:
        phases.append((site, relative_drive_phase(elements, reference, site)))
    return tuple(phases)


@dataclass(frozen=True)
class FluxRamp:
    """Coupler bias trajectory: cosine rise, hold, cosine fall (radians, ns)"""
    idle_bias: float
    interaction_bias: float
    ramp_time: float
    hold_time: float

    def __post_init__(self):
        if self.ramp_time < 0 or self.hold_time < 0:
            raise PulseError(f"Ramp and hold times must be non-negative ({self.ramp_time}, {self.hold_time})")

    @property
    def duration(self) -> float:
        return 2.0 * self.ramp_time + self.hold_time


def flux_bias_at(ramp: FluxRamp, t: float) -> float:
    """Coupler bias at time t"""
    if t < -TIME_TOL or t > ramp.duration + TIME_TOL:
        raise PulseTimeError(f"Ramp evaluated at {t} ns outside [0, {ramp.duration}] ns")
    span = ramp.interaction_bias - ramp.idle_bias
    if ramp.ramp_time == 0:
        return ramp.idle_bias if t <= 0 or t >= ramp.duration else ramp.interaction_bias
    if t < ramp.ramp_time:
        return ramp.idle_bias + span * 0.5 * (1.0 - np.cos(np.pi * t / ramp.ramp_time))
    if t <= ramp.ramp_time + ramp.hold_time:
        return ramp.interaction_bias
    remaining = ramp.duration - t
    return ramp.idle_bias + span * 0.5 * (1.0 - np.cos(np.pi * max(remaining, 0.0) / ramp.ramp_time))
