"""Experiment engine for fluxsim.

Runs one subcommand of a validated configuration and writes its artifacts.
Independent points of a sweep are dispatched to an executor (a process pool when
more than one job is requested) and written in input order regardless of
completion order.
"""

import asyncio
import logging
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from functools import partial
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .calibrate import SweepPoint, build_pulse, check_ascending, sweep_point, tune_up
from .circuit.system import StarSystem
from .config import DEFAULT_J_CK_GRID, RunConfig
from .dynamics import GateSimulator
from .effective import build_effective_star_model, effective_transition_table
from .errors import CalibrationError, FluxsimError
from .metrics import gate_report, target_unitary
from .reporter import ResultWriter
from .spectrum import NeighborConfig, ShiftSweepRow, flag_breakdown, labeled_spectrum, shift_point, transition_table

logger = logging.getLogger(__name__)

COMMANDS = ("spectrum", "shifts", "transitions", "gate", "calibrate", "sweep", "trace")

_SIMULATORS: Dict[str, GateSimulator] = {}


def gate_simulator(config: RunConfig) -> GateSimulator:
    """Per-process cache of simulators keyed by the parts of the config they depend on"""
    key = config.model_dump_json(include={"system", "gate", "simulation"})
    if key not in _SIMULATORS:
        _SIMULATORS[key] = GateSimulator(
            config.star_system(),
            config.propagation_config(),
            drive_sites=config.gate.drive_sites,
            idle_biases=config.system.idle_biases(),
        )
    return _SIMULATORS[key]


def _ramps(simulator: GateSimulator, config: RunConfig, pulse):
    if not config.simulation.ramp:
        return None
    return simulator.ramps_for(pulse, config.simulation.ramp_time_ns)


# Work units; module level so that process pools can pickle them


def compute_shift_row(config: RunConfig, j_ck: float) -> ShiftSweepRow:
    return shift_point(config.star_system(), j_ck, config.simulation.projection_cutoff_GHz)


def compute_sweep_point(config: RunConfig, t_g: float) -> SweepPoint:
    point = sweep_point(gate_simulator(config), t_g, config.calibration_settings())
    point.result = None
    return point


def compute_spectrum(config: RunConfig) -> Dict[str, List[List[Any]]]:
    system = config.star_system()
    sites = []
    for k, spectrum in enumerate(system.fluxonium_spectra()):
        sites.append([f"Q{k}", spectrum.omega01, spectrum.omega12, spectrum.omega03, None])
    for j, coupler in enumerate(system.coupler_data(), start=1):
        sites.append([f"C{j}", coupler.omega_c, coupler.omega12, None, coupler.alpha_c])

    labels = tuple(system.transition_labels())
    dressed = labeled_spectrum(system, config.simulation.projection_cutoff_GHz, labels)
    ground = float(dressed.eigenvalues[0])
    levels = [
        [
            "".join(str(n) for n in system.qubit_levels(label)),
            dressed.energy(label) - ground,
            dressed.overlap(label),
            dressed.is_ambiguous(label),
        ]
        for label in labels
    ]
    return {"sites": sites, "levels": levels}


def compute_transitions(config: RunConfig) -> Dict[str, Any]:
    system = config.star_system()
    table = transition_table(system, projection_cutoff=config.simulation.projection_cutoff_GHz)
    try:
        model = build_effective_star_model(system)
        effective_table = effective_transition_table(model)
        effective = {(row.fluxonium, row.others): row.frequency for row in effective_table.rows}
        effective_min = effective_table.min_detuning
    except FluxsimError as e:
        logger.warning(f"Effective model unavailable: {e}")
        effective, effective_min = {}, None

    rows = [
        [
            f"Q{row.fluxonium}",
            str(row.others),
            row.frequency,
            table.detuning(row) * 1e3,
            effective.get((row.fluxonium, row.others)),
            row.is_gate,
        ]
        for row in table.rows
    ]
    nearest = table.nearest
    summary = {
        "gate_frequency_GHz": table.gate_frequency,
        "min_detuning_MHz": table.min_detuning * 1e3,
        "nearest_transition": None if nearest is None else {"fluxonium": nearest.fluxonium, "others": str(nearest.others)},
        "effective_min_detuning_MHz": None if effective_min is None else effective_min * 1e3,
    }
    return {"rows": rows, "summary": summary}


def compute_gate(config: RunConfig) -> Dict[str, Any]:
    simulator = gate_simulator(config)
    gate = config.gate
    pulse = build_pulse(
        simulator, gate.t_g_ns, config.calibration_settings(), gate.omega_d_amp_GHz, gate.omega_drive_GHz
    )
    evolution = simulator.evolve(pulse, _ramps(simulator, config, pulse))
    target = gate.target or config.gate_name
    report = gate_report(evolution, target_unitary(target, config.system.n_neighbors + 1))
    return {
        "gate": config.gate_name,
        "target": target,
        "t_g_ns": pulse.t_g,
        "t_r_ns": pulse.t_r,
        "omega_d_amp_GHz": pulse.omega_d_amp,
        "omega_drive_GHz": pulse.omega_drive,
        "drive_phases": {f"Q{site}": phase for site, phase in pulse.phases},
        "duration_ns": evolution.duration,
        "report": report.to_dict(),
    }


def compute_calibration(config: RunConfig) -> Dict[str, Any]:
    result = tune_up(gate_simulator(config), config.gate.t_g_ns, config.calibration_settings())
    return {
        "gate": config.gate_name,
        "t_g_ns": config.gate.t_g_ns,
        "omega_d_amp_GHz": result.omega_d_amp,
        "omega_drive_GHz": result.omega_drive,
        "converged": result.converged,
        "failure": result.failure,
        "report": result.report.to_dict(),
        "cost_trace": [[i, cost] for i, cost in result.cost_trace],
    }


def compute_trace(config: RunConfig) -> Dict[str, Any]:
    simulator = gate_simulator(config)
    gate = config.gate
    pulse = build_pulse(
        simulator, gate.t_g_ns, config.calibration_settings(), gate.omega_d_amp_GHz, gate.omega_drive_GHz
    )
    system: StarSystem = simulator.system
    observables = [simulator.gate_initial, simulator.gate_excited]
    trace = simulator.trace(
        pulse,
        simulator.gate_initial,
        observables,
        stride=config.simulation.trace_stride_ns,
        ramps=_ramps(simulator, config, pulse),
    )
    names = ["P_" + "".join(str(n) for n in system.qubit_levels(label)) for label in observables]
    rows = [[t] + [trace.populations[label][i] for label in observables] for i, t in enumerate(trace.times)]
    return {"header": ["t_ns"] + names, "rows": rows}


@dataclass
class RunStats:
    """Bookkeeping for one engine run"""
    command: str
    started: datetime = field(default_factory=datetime.now)
    finished: Optional[datetime] = None
    points: int = 0
    failed_points: int = 0
    status: str = "running"
    error: Optional[str] = None

    @property
    def duration_seconds(self) -> float:
        end = self.finished or datetime.now()
        return (end - self.started).total_seconds()


class ExperimentEngine:
    """Runs subcommands of one configuration"""

    def __init__(self, config: RunConfig, writer: Optional[ResultWriter] = None, jobs: int = 1):
        if jobs < 1:
            raise ValueError(f"jobs must be at least 1, got {jobs}")
        self.config = config
        self.writer = writer or ResultWriter(config.output.directory, config.output.gnuplot)
        self.jobs = jobs
        self.executor: Optional[Executor] = None

    async def __aenter__(self):
        """Async context manager entry"""
        self.executor = ProcessPoolExecutor(max_workers=self.jobs) if self.jobs > 1 else ThreadPoolExecutor(max_workers=1)
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb):
        """Async context manager exit"""
        if self.executor is not None:
            self.executor.shutdown(wait=True)
            self.executor = None

    async def _call(self, fn: Callable, *args) -> Any:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self.executor, partial(fn, *args))

    async def _map(self, fn: Callable, values: Sequence[float]) -> List[Any]:
        """Apply fn(config, value) to every value; results keep the input order"""
        return list(await asyncio.gather(*(self._call(fn, self.config, v) for v in values)))

    async def run(self, command: str) -> RunStats:
        """Run a subcommand, write its artifacts and the manifest"""
        if command not in COMMANDS:
            raise ValueError(f"Unknown command: {command}. Available: {', '.join(COMMANDS)}")
        if self.executor is None:
            raise RuntimeError("ExperimentEngine must be used as an async context manager")

        stats = RunStats(command=command)
        logger.info(f"Starting {command}: {self.config.name} ({self.config.gate_name}, {self.jobs} job(s))")
        handler = getattr(self, f"_run_{command}")
        try:
            await handler(stats)
            stats.status = "ok"
        except FluxsimError as e:
            stats.status = "failed"
            stats.error = str(e)
            logger.error(f"{command} failed: {e}")
            raise
        finally:
            stats.finished = datetime.now()
            self.writer.write_manifest(self.config, command, stats.started, stats.status, stats.error)
            logger.info(f"Finished {command} in {stats.duration_seconds:.1f} s with status {stats.status}")
        return stats

    async def _run_spectrum(self, stats: RunStats) -> None:
        tables = await self._call(compute_spectrum, self.config)
        self.writer.write_csv(
            "spectrum", ["site", "omega01_GHz", "omega12_GHz", "omega03_GHz", "anharmonicity_GHz"], tables["sites"]
        )
        self.writer.write_csv("dressed_levels", ["label", "energy_GHz", "overlap", "ambiguous"], tables["levels"])

    async def _run_shifts(self, stats: RunStats) -> None:
        sweep = self.config.sweep
        values = sweep.values if sweep.parameter == "j_ck_GHz" and sweep.values else DEFAULT_J_CK_GRID
        rows: List[ShiftSweepRow] = await self._map(compute_shift_row, values)
        flag_breakdown(rows)

        n = self.config.system.n_neighbors
        single_names = [f"delta_{NeighborConfig.unit(n, j)}_MHz" for j in range(n)]
        header = ["j_ck_GHz"] + single_names + [
            "delta_all_MHz", "sum_singles_MHz", "residual", "breakdown", "error"
        ]
        body = []
        for row in rows:
            singles = [s * 1e3 for s in row.singles] if row.error is None else [None] * n
            ok = row.error is None
            body.append(
                [row.j_ck]
                + singles
                + [row.all_ones * 1e3 if ok else None, row.sum_singles * 1e3 if ok else None]
                + [row.residual, row.breakdown, row.error]
            )
            if row.breakdown:
                logger.warning(f"Additivity breakdown flagged at J={row.j_ck} GHz")
        stats.points = len(rows)
        stats.failed_points = sum(row.error is not None for row in rows)
        self.writer.write_csv("shifts", header, body, plot_columns=range(2, n + 4))

    async def _run_transitions(self, stats: RunStats) -> None:
        result = await self._call(compute_transitions, self.config)
        self.writer.write_csv(
            "transitions",
            ["fluxonium", "others", "frequency_GHz", "detuning_MHz", "effective_frequency_GHz", "is_gate"],
            result["rows"],
            plot_columns=[4],
        )
        self.writer.write_json("transitions_summary", result["summary"])
        logger.info(f"Minimum gate detuning {result['summary']['min_detuning_MHz']:.2f} MHz")

    async def _run_gate(self, stats: RunStats) -> None:
        result = await self._call(compute_gate, self.config)
        self.writer.write_json("gate_report", result)
        logger.info(f"Gate error {result['report']['error']:.3e}, leakage {result['report']['leakage']:.3e}")

    async def _run_calibrate(self, stats: RunStats) -> None:
        result = await self._call(compute_calibration, self.config)
        self.writer.write_json("calibration", result)
        self.writer.write_csv("cost_trace", ["iteration", "cost"], result["cost_trace"])

    async def _run_sweep(self, stats: RunStats) -> None:
        sweep = self.config.sweep
        if sweep.parameter == "j_ck_GHz":
            await self._run_shifts(stats)
            return
        values = check_ascending(sweep.values) if sweep.values else None
        if values is None:
            raise CalibrationError("sweep.values must list the gate lengths to sweep")
        points: List[SweepPoint] = await self._map(compute_sweep_point, values)
        stats.points = len(points)
        stats.failed_points = sum(np.isnan(p.error) for p in points)
        rows = [
            [p.t_g, p.error, p.leakage, p.omega_d_amp, p.omega_drive, p.converged, p.failure]
            for p in points
        ]
        self.writer.write_csv(
            "sweep",
            ["t_g_ns", "error", "leakage", "omega_d_amp_GHz", "omega_drive_GHz", "converged", "failure"],
            rows,
            plot_columns=[2, 3],
        )

    async def _run_trace(self, stats: RunStats) -> None:
        result = await self._call(compute_trace, self.config)
        self.writer.write_csv("trace", result["header"], result["rows"])
