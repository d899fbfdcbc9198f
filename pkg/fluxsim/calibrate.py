"""Drive tune-up for multi-controlled-Z gates and gate-error sweeps over gate length.

A gate is a full Rabi cycle on the gate transition. The tune-up adjusts the drive
amplitude and frequency with a bounded Nelder-Mead search to minimize leakage plus
the squared error of the conditional phase; the fidelity after local-Z correction is
reported, not optimized.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .dynamics import GateSimulator
from .errors import CalibrationError, FluxsimError, VanishingMatrixElementError
from .metrics import GateReport, gate_report
from .pulses import VANISHING_ELEMENT, DrivePulse, FluxRamp, PulseShape, combined_drive_element, unit_area

logger = logging.getLogger(__name__)

DEFAULT_RAMP_TIMES = {1: 10.0, 2: 10.0, 3: 20.0, 4: 30.0}
MIN_SELECTIVE_DETUNING = 1e-4
INITIAL_SIMPLEX = np.array([[1.0, 0.0], [1.05, 0.0], [1.0, 0.1]])


@dataclass(frozen=True)
class CalibrationSettings:
    """Tune-up settings.

    Frequency offsets are searched in units of half the minimum gate detuning, and
    amplitudes as a ratio to the pulse-area estimate.
    """
    shape: PulseShape = PulseShape.FLAT_TOP
    t_r: Optional[float] = None
    drag: bool = True
    drag_alpha: float = 1.0
    phase_weight: float = 1.0
    max_evaluations: int = 200
    xatol: float = 1e-4
    fatol: float = 1e-7
    amplitude_bounds: Tuple[float, float] = (0.5, 2.0)
    detuning_bound: float = 1.0
    coupler_ramp_time: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "shape", PulseShape(self.shape))
        if self.max_evaluations < 1:
            raise CalibrationError(f"max_evaluations must be positive, got {self.max_evaluations}")
        low, high = self.amplitude_bounds
        if not 0 < low <= 1.0 <= high:
            raise CalibrationError(f"Amplitude bounds {self.amplitude_bounds} must bracket 1")
        if self.detuning_bound <= 0:
            raise CalibrationError(f"Detuning bound must be positive, got {self.detuning_bound}")

    def ramp_time(self, n_neighbors: int) -> float:
        """Flat-top ramp time; other shapes have none"""
        if self.shape is not PulseShape.FLAT_TOP:
            return 0.0
        if self.t_r is not None:
            return self.t_r
        return DEFAULT_RAMP_TIMES[n_neighbors]


@dataclass
class TuneUpResult:
    omega_d_amp: float
    omega_drive: float
    report: GateReport
    cost_trace: List[Tuple[int, float]] = field(default_factory=list)
    converged: bool = False
    failure: Optional[str] = None

    @property
    def initial_cost(self) -> float:
        return self.cost_trace[0][1]

    @property
    def final_cost(self) -> float:
        return min(cost for _, cost in self.cost_trace)


def initial_guess(simulator: GateSimulator, shape: PulseShape, t_g: float, t_r: float = 0.0) -> Tuple[float, float]:
    """Amplitude completing one Rabi cycle on the gate transition, and its frequency"""
    phases = dict(simulator.drive_phases())
    element = combined_drive_element(simulator.drive_elements(), phases)
    if abs(element) < VANISHING_ELEMENT:
        raise VanishingMatrixElementError(f"Gate transition drive element vanishes ({abs(element):.2e})")
    omega_d_amp = 1.0 / (unit_area(shape, t_g, t_r) * abs(element))
    return omega_d_amp, simulator.gate_frequency()


def gate_error_cost(report: GateReport, phase_weight: float = 1.0) -> float:
    """leakage + w * (phi_cond - pi)^2; gates without a phase readout get the largest phase penalty"""
    phase_error = report.target_phase_error if report.diagonal_dominant else np.pi
    return report.leakage + phase_weight * phase_error**2


def _ramps(simulator: GateSimulator, pulse: DrivePulse, settings: CalibrationSettings) -> Optional[Tuple[FluxRamp, ...]]:
    if settings.coupler_ramp_time is None:
        return None
    return simulator.ramps_for(pulse, settings.coupler_ramp_time)


def evaluate_gate(simulator: GateSimulator, pulse: DrivePulse, settings: CalibrationSettings) -> GateReport:
    evolution = simulator.evolve(pulse, _ramps(simulator, pulse, settings))
    return gate_report(evolution)


def build_pulse(
    simulator: GateSimulator,
    t_g: float,
    settings: Optional[CalibrationSettings] = None,
    omega_d_amp: Optional[float] = None,
    omega_drive: Optional[float] = None,
) -> DrivePulse:
    """Gate pulse at the pulse-area amplitude and spectroscopic frequency unless overridden.

    DRAG, when enabled, targets the transition nearest to the gate transition.
    """
    settings = settings or CalibrationSettings()
    t_r = settings.ramp_time(simulator.system.n_neighbors)
    if omega_d_amp is None or omega_drive is None:
        guess_amp, guess_drive = initial_guess(simulator, settings.shape, t_g, t_r)
        omega_d_amp = guess_amp if omega_d_amp is None else omega_d_amp
        omega_drive = guess_drive if omega_drive is None else omega_drive
    min_detuning = simulator.transition_table().min_detuning
    drag = settings.drag and abs(min_detuning) >= MIN_SELECTIVE_DETUNING
    return simulator.make_pulse(
        settings.shape,
        t_g,
        omega_d_amp=omega_d_amp,
        omega_drive=omega_drive,
        t_r=t_r,
        drag_alpha=settings.drag_alpha if drag else 0.0,
        drag_detuning=min_detuning if drag else 0.0,
    )


def tune_up(simulator: GateSimulator, t_g: float, settings: Optional[CalibrationSettings] = None) -> TuneUpResult:
    """Optimize drive amplitude and frequency of one gate length.

    The best iterate is returned even if the simplex did not converge. Systems whose
    gate transition is not separated from the other configurations are reported as
    failed after a single evaluation at the initial guess.
    """
    settings = settings or CalibrationSettings()
    base = build_pulse(simulator, t_g, settings)
    omega0, drive0 = base.omega_d_amp, base.omega_drive
    min_detuning = simulator.transition_table().min_detuning
    half_width = abs(min_detuning) / 2.0

    def pulse_for(x: np.ndarray) -> DrivePulse:
        return base.with_amplitude(omega0 * x[0]).with_frequency(drive0 + x[1] * half_width)

    trace: List[Tuple[int, float]] = []
    best = {"cost": np.inf, "x": np.array([1.0, 0.0]), "report": None}

    def objective(x: np.ndarray) -> float:
        report = evaluate_gate(simulator, pulse_for(x), settings)
        cost = gate_error_cost(report, settings.phase_weight)
        trace.append((len(trace), cost))
        if cost < best["cost"]:
            best.update(cost=cost, x=np.array(x), report=report)
        logger.debug(f"Tune-up eval {len(trace)}: x={np.round(x, 5).tolist()} cost={cost:.3e}")
        return cost

    if abs(min_detuning) < MIN_SELECTIVE_DETUNING:
        objective(np.array([1.0, 0.0]))
        failure = f"No state-selective gate transition (min detuning {min_detuning * 1e3:.3f} MHz)"
        logger.warning(failure)
        return TuneUpResult(omega0, drive0, best["report"], trace, converged=False, failure=failure)

    low, high = settings.amplitude_bounds
    result = optimize.minimize(
        objective,
        x0=np.array([1.0, 0.0]),
        method="Nelder-Mead",
        bounds=[(low, high), (-settings.detuning_bound, settings.detuning_bound)],
        options={
            "maxfev": settings.max_evaluations,
            "xatol": settings.xatol,
            "fatol": settings.fatol,
            "initial_simplex": INITIAL_SIMPLEX,
        },
    )
    x = best["x"]
    converged = bool(result.success)
    tuned = TuneUpResult(
        omega_d_amp=omega0 * x[0],
        omega_drive=drive0 + x[1] * half_width,
        report=best["report"],
        cost_trace=trace,
        converged=converged,
        failure=None if converged else str(result.message),
    )
    log = logger.info if converged else logger.warning
    log(
        f"Tune-up t_g={t_g} ns: error {tuned.report.error:.3e}, leakage {tuned.report.leakage:.3e}, "
        f"{len(trace)} evaluations, converged={converged}"
    )
    return tuned


@dataclass
class SweepPoint:
    t_g: float
    error: float = float("nan")
    leakage: float = float("nan")
    omega_d_amp: float = float("nan")
    omega_drive: float = float("nan")
    converged: bool = False
    failure: Optional[str] = None
    result: Optional[TuneUpResult] = None


def sweep_point(simulator: GateSimulator, t_g: float, settings: Optional[CalibrationSettings] = None) -> SweepPoint:
    """Independent tune-up of one gate length; failures are recorded in the point"""
    try:
        result = tune_up(simulator, t_g, settings)
    except FluxsimError as e:
        logger.warning(f"Sweep point t_g={t_g} ns failed: {e}")
        return SweepPoint(t_g=t_g, failure=str(e))
    return SweepPoint(
        t_g=t_g,
        error=result.report.error,
        leakage=result.report.leakage,
        omega_d_amp=result.omega_d_amp,
        omega_drive=result.omega_drive,
        converged=result.converged,
        failure=result.failure,
        result=result,
    )


def check_ascending(t_g_values: Sequence[float]) -> List[float]:
    values = [float(t) for t in t_g_values]
    if not values or any(b <= a for a, b in zip(values, values[1:])):
        raise CalibrationError(f"Gate lengths must be a non-empty ascending list, got {values}")
    return values


def error_vs_length_sweep(
    simulator: GateSimulator, t_g_values: Sequence[float], settings: Optional[CalibrationSettings] = None
) -> List[SweepPoint]:
    points = []
    for t_g in check_ascending(t_g_values):
        logger.info(f"Sweep point t_g={t_g} ns")
        points.append(sweep_point(simulator, t_g, settings))
    return points
