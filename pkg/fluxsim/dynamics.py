"""Time propagation of the driven star system.

The Schroedinger equation i d psi/dt = 2 pi H(t) psi is integrated with a fixed-step
fourth-order commutator-free exponential scheme built on two Gauss-Legendre points
per step. Gate simulations run in the dressed eigenbasis at the interaction bias,
truncated to states below the dressed cutoff.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from .circuit.operators import Matrix, OperatorMatrix
from .circuit.system import Label, StarSystem, bare_energies, build_system_hamiltonian, embed_operator, restrict
from .errors import NonFiniteStateError, PropagationError, PulseError, StepSizeError
from .pulses import (
    DrivePulse,
    FluxRamp,
    PulseShape,
    carrier_quadratures,
    drive_matrix_elements,
    flux_bias_at,
    in_phase_drive_phases,
)
from .spectrum import (
    ENERGY_MARGIN_GHZ,
    LabeledSpectrum,
    TransitionTable,
    solve_and_label,
    system_hamiltonian,
    transition_table,
)

logger = logging.getLogger(__name__)

DENSE_LIMIT = 1500
NORM_TOL = 1e-9

_SQRT3 = np.sqrt(3.0)
GAUSS_NODES = (0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0)
CF4_WEIGHTS = (0.25 - _SQRT3 / 6.0, 0.25 + _SQRT3 / 6.0)

Observer = Callable[[float, np.ndarray], None]


@dataclass(frozen=True)
class PropagationConfig:
    """Integrator and working-basis settings (ns, GHz)"""
    dt: float = 2e-3
    frame: str = "interaction"
    projection_cutoff: Optional[float] = None
    dressed_cutoff: float = 20.0
    ramp_step: float = 0.05
    max_cycles_per_step: float = 0.02

    def __post_init__(self):
        if self.dt <= 0 or self.ramp_step <= 0:
            raise PropagationError(f"Time steps must be positive (dt={self.dt}, ramp_step={self.ramp_step})")
        if self.frame not in ("lab", "interaction"):
            raise PropagationError(f"Unknown frame '{self.frame}'")
        if self.dressed_cutoff <= 0:
            raise PropagationError(f"Dressed cutoff must be positive, got {self.dressed_cutoff}")


@dataclass
class PopulationTrace:
    times: np.ndarray
    populations: Dict[Label, np.ndarray]


@dataclass
class EvolutionResult:
    """Computational-subspace block of the evolution operator, columns in label order"""
    u_comp: np.ndarray
    column_norms: np.ndarray
    labels: List[Label]
    duration: float
    population_traces: Optional[PopulationTrace] = None

    @property
    def n(self) -> int:
        return self.u_comp.shape[0]

    @property
    def column_leakage(self) -> np.ndarray:
        return 1.0 - self.column_norms


def _check_finite(psi: np.ndarray) -> None:
    if not np.all(np.isfinite(psi)):
        raise NonFiniteStateError("State acquired non-finite amplitudes")


def _apply_exponential(matrix: Matrix, step: float, psi: np.ndarray) -> np.ndarray:
    """exp(-2 pi i step M) psi"""
    generator = (-2j * np.pi * step) * matrix
    if matrix.shape[0] <= DENSE_LIMIT and not hasattr(matrix, "tocsr"):
        return linalg.expm(generator) @ psi
    return sparse_linalg.expm_multiply(generator, psi)


def _n_steps(duration: float, dt: float) -> int:
    return max(1, int(np.ceil(duration / dt - 1e-9)))


def propagate(
    h_static: Union[OperatorMatrix, Matrix],
    h_drive_fn: Callable[[float], Matrix],
    psi0: np.ndarray,
    t_span: Tuple[float, float],
    config: Optional[PropagationConfig] = None,
    max_frequency: Optional[float] = None,
    observer: Optional[Observer] = None,
) -> np.ndarray:
    """Propagate psi0 (a vector or a matrix of column states) over t_span.

    max_frequency is the fastest explicit oscillation of h_drive_fn in GHz; the
    step must resolve it with at most config.max_cycles_per_step cycles.
    """
    config = config or PropagationConfig()
    static = h_static.entries if isinstance(h_static, OperatorMatrix) else h_static
    t0, t1 = t_span
    n_steps = _n_steps(t1 - t0, config.dt)
    step = (t1 - t0) / n_steps
    if max_frequency is not None and step * abs(max_frequency) > config.max_cycles_per_step:
        raise StepSizeError(
            f"Step {step:.2e} ns resolves {max_frequency} GHz with "
            f"{step * abs(max_frequency):.3f} cycles per step (limit {config.max_cycles_per_step})"
        )

    psi = np.array(psi0, dtype=complex)
    w1, w2 = CF4_WEIGHTS
    for i in range(n_steps):
        t = t0 + i * step
        h1 = static + h_drive_fn(t + GAUSS_NODES[0] * step)
        h2 = static + h_drive_fn(t + GAUSS_NODES[1] * step)
        psi = _apply_exponential(w2 * h1 + w1 * h2, step, psi)
        psi = _apply_exponential(w1 * h1 + w2 * h2, step, psi)
        if observer is not None:
            observer(t + step, psi)
    _check_finite(psi)
    return psi


def _ramps_duration(ramps: Sequence[FluxRamp]) -> Tuple[float, float]:
    ramp_times = {round(r.ramp_time, 12) for r in ramps}
    hold_times = {round(r.hold_time, 12) for r in ramps}
    if len(ramp_times) != 1 or len(hold_times) != 1:
        raise PulseError("All coupler ramps must share ramp and hold times")
    return ramps[0].ramp_time, ramps[0].hold_time


class GateSimulator:
    """Driven-gate simulations of one star system at its interaction bias.

    The labeled spectrum, working basis and drive operators are computed once and
    reused by every evolution, so repeated calls during a tune-up only propagate.
    drive_sites are fluxonium indices (0 is the central fluxonium).
    """

    def __init__(
        self,
        system: StarSystem,
        config: Optional[PropagationConfig] = None,
        drive_sites: Sequence[int] = (0, 1),
        idle_biases: Optional[Sequence[float]] = None,
    ):
        self.system = system
        self.config = config or PropagationConfig()
        self.drive_sites = tuple(int(k) for k in drive_sites)
        if not self.drive_sites or any(not 0 <= k < system.n_qubits for k in self.drive_sites):
            raise PulseError(f"Drive sites {self.drive_sites} outside 0..{system.n_qubits - 1}")
        self.idle_biases = tuple(idle_biases) if idle_biases is not None else (0.0,) * system.n_neighbors

        self.hamiltonian = system_hamiltonian(system, self.config.projection_cutoff)
        self.labels = system.computational_labels()
        self.gate_initial = system.label((1,) * system.n_qubits)
        self.gate_excited = system.label((2,) + (1,) * system.n_neighbors)

        transition_labels = system.transition_labels()
        diagonal = bare_energies(system)
        label_ceiling = max(diagonal[system.label_index(label)] for label in transition_labels)
        max_energy = max(self.config.dressed_cutoff, label_ceiling + ENERGY_MARGIN_GHZ)
        self.spectrum: LabeledSpectrum = solve_and_label(self.hamiltonian, transition_labels, max_energy=max_energy)
        self.spectrum.require(self.labels + [self.gate_excited])

        ground = float(self.spectrum.eigenvalues[0])
        shifted = self.spectrum.eigenvalues - ground
        n_working = int(np.count_nonzero(shifted < self.config.dressed_cutoff))
        self.ground_energy = ground
        self.energies = shifted[:n_working]
        self.basis = self.spectrum.eigenvectors[:, :n_working]
        self.comp_indices = np.array([self.spectrum.index(label) for label in self.labels])
        for label in self.labels + [self.gate_excited]:
            if self.spectrum.index(label) >= n_working:
                raise PropagationError(f"Label {label} lies above the {self.config.dressed_cutoff} GHz working cutoff")

        self.charge_ops = {k: self._to_working(self._charge_operator(k)) for k in self.drive_sites}
        self._reference_cache: Dict[Tuple, np.ndarray] = {}
        self._idle_states: Optional[np.ndarray] = None
        logger.info(
            f"Gate simulator N={system.n_neighbors}: bare dim {self.hamiltonian.dim}, "
            f"working basis {n_working} states below {self.config.dressed_cutoff} GHz"
        )

    @property
    def n_working(self) -> int:
        return self.energies.size

    def _charge_operator(self, k: int) -> Matrix:
        spectrum = self.system.fluxonium_spectra()[k]
        full = embed_operator(spectrum.n_op, self.system.qubit_site(k), self.system).entries
        if self.hamiltonian.kept is not None:
            full = restrict(full, self.hamiltonian.kept)
        return full

    def _to_working(self, matrix: Matrix) -> np.ndarray:
        """V^dagger M V in the truncated dressed basis"""
        return self.basis.conj().T @ np.asarray(matrix @ self.basis)

    def working_index(self, label: Label) -> int:
        index = self.spectrum.index(label)
        if index >= self.n_working:
            raise PropagationError(f"Label {label} is outside the working basis")
        return index

    # Gate transition data

    def gate_frequency(self) -> float:
        return float(self.energies[self.working_index(self.gate_excited)] - self.energies[self.working_index(self.gate_initial)])

    def drive_elements(self) -> Dict[int, complex]:
        """Dressed charge matrix elements of the gate transition for every drive site"""
        initial = np.zeros(self.n_working, dtype=complex)
        excited = np.zeros(self.n_working, dtype=complex)
        initial[self.working_index(self.gate_initial)] = 1.0
        excited[self.working_index(self.gate_excited)] = 1.0
        return drive_matrix_elements(initial, excited, self.charge_ops, self.drive_sites)

    def drive_phases(self) -> Tuple[Tuple[int, float], ...]:
        return in_phase_drive_phases(self.drive_elements(), self.drive_sites)

    def transition_table(self) -> TransitionTable:
        return transition_table(self.system, spectrum=self.spectrum)

    def make_pulse(
        self,
        shape: PulseShape,
        t_g: float,
        omega_d_amp: float,
        omega_drive: Optional[float] = None,
        t_r: float = 0.0,
        drag_alpha: float = 0.0,
        drag_detuning: float = 0.0,
    ) -> DrivePulse:
        """Pulse on every drive site with in-phase carrier phases"""
        return DrivePulse(
            shape=shape,
            omega_d_amp=omega_d_amp,
            omega_drive=self.gate_frequency() if omega_drive is None else omega_drive,
            t_g=t_g,
            t_r=t_r,
            drag_alpha=drag_alpha,
            drag_detuning=drag_detuning,
            phases=self.drive_phases() if len(self.drive_sites) > 1 else ((self.drive_sites[0], 0.0),),
        )

    # Propagation segments

    def _drive_window(
        self, pulse: DrivePulse, psi: np.ndarray, t_offset: float = 0.0, observer: Optional[Observer] = None
    ) -> np.ndarray:
        unknown = [k for k in pulse.sites if k not in self.charge_ops]
        if unknown:
            raise PulseError(f"Pulse drives sites {unknown} not prepared by this simulator")

        n_steps = _n_steps(pulse.t_g, self.config.dt)
        step = pulse.t_g / n_steps
        if pulse.omega_d_amp == 0.0 and observer is None:
            free = np.exp(-2j * np.pi * self.energies * pulse.t_g)
            return free[:, None] * psi if psi.ndim == 2 else free * psi
        if step * abs(pulse.omega_drive) > self.config.max_cycles_per_step:
            raise StepSizeError(
                f"dt={step:.2e} ns gives {step * abs(pulse.omega_drive):.3f} carrier cycles per step "
                f"(limit {self.config.max_cycles_per_step})"
            )

        c_op = sum(np.cos(phi) * self.charge_ops[k] for k, phi in pulse.phases)
        s_op = sum(np.sin(phi) * self.charge_ops[k] for k, phi in pulse.phases)
        starts = np.arange(n_steps) * step
        a1, b1 = carrier_quadratures(pulse, starts + GAUSS_NODES[0] * step)
        a2, b2 = carrier_quadratures(pulse, starts + GAUSS_NODES[1] * step)
        w1, w2 = CF4_WEIGHTS
        static = np.diag(0.5 * self.energies).astype(complex)

        psi = np.array(psi, dtype=complex)
        for i in range(n_steps):
            first = static + (w2 * a1[i] + w1 * a2[i]) * c_op + (w2 * b1[i] + w1 * b2[i]) * s_op
            second = static + (w1 * a1[i] + w2 * a2[i]) * c_op + (w1 * b1[i] + w2 * b2[i]) * s_op
            psi = _apply_exponential(first, step, psi)
            psi = _apply_exponential(second, step, psi)
            if observer is not None:
                observer(t_offset + starts[i] + step, psi)
        _check_finite(psi)
        return psi

    def _ramp_segment(
        self, ramps: Sequence[FluxRamp], t_start: float, t_end: float, psi: np.ndarray,
        observer: Optional[Observer] = None,
    ) -> np.ndarray:
        """Piecewise-constant coupler biases between two times of the ramp schedule"""
        duration = t_end - t_start
        if duration <= 0:
            return psi
        n_sub = _n_steps(duration, self.config.ramp_step)
        sub = duration / n_sub
        identity_shift = self.ground_energy
        for i in range(n_sub):
            t_mid = t_start + (i + 0.5) * sub
            biases = [flux_bias_at(ramp, t_mid) for ramp in ramps]
            h = build_system_hamiltonian(self.system.with_coupler_biases(biases)).entries
            if self.hamiltonian.kept is not None:
                h = restrict(h, self.hamiltonian.kept)
            working = self._to_working(h) - identity_shift * np.eye(self.n_working)
            psi = linalg.expm(-2j * np.pi * sub * 0.5 * (working + working.conj().T)) @ psi
            if observer is not None:
                observer(t_start + (i + 1) * sub, psi)
        _check_finite(psi)
        return psi

    def idle_states(self) -> np.ndarray:
        """Idle-bias dressed computational states in the working basis, one per column"""
        if self._idle_states is None:
            idle_system = self.system.with_coupler_biases(self.idle_biases)
            h_idle = build_system_hamiltonian(idle_system)
            if self.hamiltonian.kept is not None:
                h_idle = OperatorMatrix(
                    entries=restrict(h_idle.entries, self.hamiltonian.kept),
                    basis_tag=self.hamiltonian.basis_tag,
                    dims=h_idle.dims,
                    kept=self.hamiltonian.kept,
                )
            diagonal = bare_energies(idle_system)
            ceiling = max(diagonal[idle_system.label_index(label)] for label in self.labels) + ENERGY_MARGIN_GHZ
            idle = solve_and_label(h_idle, self.labels, max_energy=ceiling)
            idle.require(self.labels)
            vectors = np.column_stack([idle.vector(label) for label in self.labels])
            self._idle_states = self.basis.conj().T @ vectors
        return self._idle_states

    def ramps_for(self, pulse: DrivePulse, ramp_time: float) -> Tuple[FluxRamp, ...]:
        """Ramps from the idle biases to this system's biases around a pulse"""
        return tuple(
            FluxRamp(idle_bias=idle, interaction_bias=active, ramp_time=ramp_time, hold_time=pulse.t_g)
            for idle, active in zip(self.idle_biases, self.system.coupler_biases())
        )

    def _run(
        self, pulse: DrivePulse, ramps: Optional[Sequence[FluxRamp]], psi: np.ndarray, observer: Optional[Observer]
    ) -> Tuple[np.ndarray, float]:
        if not ramps:
            return self._drive_window(pulse, psi, observer=observer), pulse.t_g
        if len(ramps) != self.system.n_neighbors:
            raise PulseError(f"Expected {self.system.n_neighbors} coupler ramps, got {len(ramps)}")
        ramp_time, hold_time = _ramps_duration(ramps)
        if abs(hold_time - pulse.t_g) > 1e-9:
            raise PulseError(f"Ramp hold time {hold_time} ns differs from gate length {pulse.t_g} ns")
        psi = self._ramp_segment(ramps, 0.0, ramp_time, psi, observer)
        psi = self._drive_window(pulse, psi, t_offset=ramp_time, observer=observer)
        total = 2.0 * ramp_time + hold_time
        psi = self._ramp_segment(ramps, ramp_time + hold_time, total, psi, observer)
        return psi, total

    def _initial_states(self, ramps: Optional[Sequence[FluxRamp]]) -> np.ndarray:
        if ramps:
            return self.idle_states()
        states = np.zeros((self.n_working, len(self.labels)), dtype=complex)
        states[self.comp_indices, np.arange(len(self.labels))] = 1.0
        return states

    def _reference_phases(self, pulse: DrivePulse, ramps: Sequence[FluxRamp]) -> np.ndarray:
        key = tuple(ramps) + (pulse.t_g,)
        if key not in self._reference_cache:
            idle = self.idle_states()
            undriven, _ = self._run(pulse.with_amplitude(0.0), ramps, idle, None)
            diagonal = np.einsum("ij,ij->j", idle.conj(), undriven)
            self._reference_cache[key] = np.exp(-1j * np.angle(diagonal))
        return self._reference_cache[key]

    def evolve(self, pulse: DrivePulse, ramps: Optional[Sequence[FluxRamp]] = None) -> EvolutionResult:
        """Truncated computational evolution operator of a driven gate.

        Columns are the propagated computational states projected back onto the
        computational states. In the interaction frame the free phases of the
        undriven evolution are removed, so a zero-amplitude pulse gives the identity.
        """
        initial = self._initial_states(ramps)
        final, duration = self._run(pulse, ramps, initial, None)
        u_comp = initial.conj().T @ final

        if self.config.frame == "interaction":
            if ramps:
                u_comp = self._reference_phases(pulse, ramps)[:, None] * u_comp
            else:
                u_comp = np.exp(2j * np.pi * self.energies[self.comp_indices] * duration)[:, None] * u_comp

        column_norms = np.sum(np.abs(u_comp) ** 2, axis=0)
        if np.any(column_norms > 1.0 + NORM_TOL):
            logger.warning(f"Column norm exceeds 1 by {column_norms.max() - 1.0:.2e}")
        logger.debug(
            f"Evolved {len(self.labels)} states over {duration:.1f} ns, "
            f"mean retained population {column_norms.mean():.6f}"
        )
        return EvolutionResult(u_comp=u_comp, column_norms=column_norms, labels=list(self.labels), duration=duration)

    def trace(
        self,
        pulse: DrivePulse,
        initial_label: Label,
        observables: Sequence[Label],
        stride: float = 0.5,
        ramps: Optional[Sequence[FluxRamp]] = None,
    ) -> PopulationTrace:
        """Dressed-state populations |<label|psi(t)>|^2 sampled about every `stride` ns"""
        rows = {tuple(label): self.working_index(label) for label in observables}
        if ramps:
            if tuple(initial_label) not in self.labels:
                raise PropagationError("Ramped traces start from a computational state")
            psi0 = self.idle_states()[:, self.labels.index(tuple(initial_label))]
        else:
            psi0 = np.zeros(self.n_working, dtype=complex)
            psi0[self.working_index(initial_label)] = 1.0

        times: List[float] = [0.0]
        samples: List[np.ndarray] = [np.abs(psi0[list(rows.values())]) ** 2]
        next_sample = [stride]

        def observer(t: float, psi: np.ndarray) -> None:
            if t + 1e-12 >= next_sample[0]:
                times.append(t)
                samples.append(np.abs(psi[list(rows.values())]) ** 2)
                next_sample[0] += stride

        self._run(pulse, ramps, psi0, observer)
        stacked = np.array(samples)
        return PopulationTrace(
            times=np.array(times),
            populations={label: stacked[:, i] for i, label in enumerate(rows)},
        )


def computational_evolution_operator(
    system: StarSystem,
    pulse: DrivePulse,
    ramps: Optional[Sequence[FluxRamp]] = None,
    config: Optional[PropagationConfig] = None,
    drive_sites: Sequence[int] = (0, 1),
    idle_biases: Optional[Sequence[float]] = None,
) -> EvolutionResult:
    return GateSimulator(system, config, drive_sites, idle_biases).evolve(pulse, ramps)


def population_trace(
    system: StarSystem,
    pulse: DrivePulse,
    initial_label: Label,
    observables: Sequence[Label],
    stride: float = 0.5,
    config: Optional[PropagationConfig] = None,
    drive_sites: Sequence[int] = (0, 1),
) -> PopulationTrace:
    return GateSimulator(system, config, drive_sites).trace(pulse, initial_label, observables, stride)
