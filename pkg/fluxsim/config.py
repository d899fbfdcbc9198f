"""Run configuration for fluxsim.

Provides pydantic models for the circuit, gate, simulation, calibration, sweep and
output sections of a YAML run file. Physical keys carry their unit in the name.
"""

from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .calibrate import CalibrationSettings
from .circuit import FluxoniumSpec, StarSystem, TransmonCouplerSpec
from .circuit.system import MAX_NEIGHBORS
from .dynamics import PropagationConfig
from .errors import ConfigError
from .pulses import PulseShape

GATE_NAMES = {1: "cz", 2: "ccz", 3: "cccz", 4: "ccccz"}
DEFAULT_J_CK_GRID = [round(0.05 * k, 2) for k in range(1, 17)]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FluxoniumConfig(StrictModel):
    """One fluxonium; the default bias is the half-flux sweet spot"""
    e_c_GHz: float = Field(..., gt=0.0)
    e_l_GHz: float = Field(..., gt=0.0)
    e_j_GHz: float = Field(..., gt=0.0)
    phi_ext_over_2pi: float = 0.5
    n_levels: int = Field(default=4, ge=3)

    def to_spec(self) -> FluxoniumSpec:
        return FluxoniumSpec(
            e_c=self.e_c_GHz,
            e_l=self.e_l_GHz,
            e_j=self.e_j_GHz,
            phi_ext=2.0 * np.pi * self.phi_ext_over_2pi,
            n_levels=self.n_levels,
        )


class CouplerConfig(StrictModel):
    """One transmon coupler with its interaction and idle flux biases"""
    e_c_GHz: float = Field(..., gt=0.0)
    e_j_GHz: float = Field(..., gt=0.0)
    phi_ext_over_2pi: float = 0.0
    idle_phi_ext_over_2pi: float = 0.0
    n_levels: int = Field(default=3, ge=2)

    @field_validator("phi_ext_over_2pi", "idle_phi_ext_over_2pi")
    @classmethod
    def validate_bias(cls, v):
        if not -0.5 < v < 0.5:
            raise ValueError("coupler bias must lie in (-0.5, 0.5) so that E_J cos(phi/2) stays positive")
        return v

    def to_spec(self, idle: bool = False) -> TransmonCouplerSpec:
        bias = self.idle_phi_ext_over_2pi if idle else self.phi_ext_over_2pi
        return TransmonCouplerSpec(e_c=self.e_c_GHz, e_j=self.e_j_GHz, phi_ext=2.0 * np.pi * bias, n_levels=self.n_levels)


class SystemConfig(StrictModel):
    """Star circuit: fluxoniums[0] is the central qubit, couplers[j-1] links it to neighbor j"""
    fluxoniums: List[FluxoniumConfig]
    couplers: List[CouplerConfig]
    j_c0_GHz: List[float]
    j_cj_GHz: List[float]
    j_0j_GHz: List[float]
    basis_size: int = Field(default=60, ge=40)

    @model_validator(mode="after")
    def validate_star(self):
        n = len(self.fluxoniums) - 1
        if not 1 <= n <= MAX_NEIGHBORS:
            raise ValueError(f"need 2 to {MAX_NEIGHBORS + 1} fluxoniums, got {len(self.fluxoniums)}")
        for name in ("couplers", "j_c0_GHz", "j_cj_GHz", "j_0j_GHz"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        return self

    @property
    def n_neighbors(self) -> int:
        return len(self.fluxoniums) - 1

    def to_star_system(self, idle: bool = False) -> StarSystem:
        specs = [f.to_spec() for f in self.fluxoniums]
        return StarSystem(
            central=specs[0],
            neighbors=tuple(specs[1:]),
            couplers=tuple(c.to_spec(idle) for c in self.couplers),
            j_c0=self.j_c0_GHz,
            j_cj=self.j_cj_GHz,
            j_0j=self.j_0j_GHz,
            basis_size=self.basis_size,
        )

    def idle_biases(self) -> List[float]:
        return [2.0 * np.pi * c.idle_phi_ext_over_2pi for c in self.couplers]


class GateConfig(StrictModel):
    """Gate drive; omega_d_amp_GHz / omega_drive_GHz override the pulse-area estimate"""
    target: Optional[Literal["cz", "ccz", "cccz", "ccccz", "identity"]] = None
    t_g_ns: float = Field(..., gt=0.0)
    shape: PulseShape = PulseShape.FLAT_TOP
    t_r_ns: Optional[float] = Field(default=None, ge=0.0)
    drag: bool = True
    drag_alpha: float = 1.0
    drive_sites: List[int] = Field(default_factory=lambda: [0, 1])
    omega_d_amp_GHz: Optional[float] = Field(default=None, ge=0.0)
    omega_drive_GHz: Optional[float] = Field(default=None, gt=0.0)

    @field_validator("drive_sites")
    @classmethod
    def validate_drive_sites(cls, v):
        if not v or len(set(v)) != len(v) or min(v) < 0:
            raise ValueError("drive_sites must be distinct non-negative fluxonium indices")
        return v


class SimulationSettings(StrictModel):
    dt_ns: float = Field(default=2e-3, gt=0.0)
    frame: Literal["lab", "interaction"] = "interaction"
    projection_cutoff_GHz: Optional[float] = Field(default=None, gt=0.0)
    dressed_cutoff_GHz: float = Field(default=20.0, gt=0.0)
    ramp: bool = False
    ramp_time_ns: float = Field(default=3.0, ge=0.0)
    ramp_step_ns: float = Field(default=0.05, gt=0.0)
    trace_stride_ns: float = Field(default=0.5, gt=0.0)


class CalibrationConfig(StrictModel):
    phase_weight: float = Field(default=1.0, ge=0.0)
    max_evaluations: int = Field(default=200, gt=0)
    amplitude_bounds: Tuple[float, float] = (0.5, 2.0)
    detuning_bound: float = Field(default=1.0, gt=0.0)


class SweepConfig(StrictModel):
    parameter: Literal["t_g_ns", "j_ck_GHz"] = "t_g_ns"
    values: List[float] = Field(default_factory=list)

    @field_validator("values")
    @classmethod
    def validate_ascending(cls, v):
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("sweep values must be strictly ascending")
        return v


class OutputConfig(StrictModel):
    directory: str = "results"
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    gnuplot: bool = False


class RunConfig(StrictModel):
    """Complete run description"""
    name: str = "fluxsim run"
    description: str = ""
    system: SystemConfig
    gate: GateConfig
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    calibration: CalibrationConfig = Field(default_factory=CalibrationConfig)
    sweep: SweepConfig = Field(default_factory=SweepConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def validate_gate_fits_system(self):
        n = self.system.n_neighbors
        if self.gate.target not in (None, "identity", GATE_NAMES[n]):
            raise ValueError(f"gate target {self.gate.target} does not match a system with {n} neighbors")
        if max(self.gate.drive_sites) > n:
            raise ValueError(f"drive site {max(self.gate.drive_sites)} outside 0..{n}")
        return self

    @property
    def gate_name(self) -> str:
        return GATE_NAMES[self.system.n_neighbors]

    def star_system(self) -> StarSystem:
        return self.system.to_star_system()

    def propagation_config(self) -> PropagationConfig:
        sim = self.simulation
        return PropagationConfig(
            dt=sim.dt_ns,
            frame=sim.frame,
            projection_cutoff=sim.projection_cutoff_GHz,
            dressed_cutoff=sim.dressed_cutoff_GHz,
            ramp_step=sim.ramp_step_ns,
        )

    def calibration_settings(self) -> CalibrationSettings:
        return CalibrationSettings(
            shape=self.gate.shape,
            t_r=self.gate.t_r_ns,
            drag=self.gate.drag,
            drag_alpha=self.gate.drag_alpha,
            phase_weight=self.calibration.phase_weight,
            max_evaluations=self.calibration.max_evaluations,
            amplitude_bounds=tuple(self.calibration.amplitude_bounds),
            detuning_bound=self.calibration.detuning_bound,
            coupler_ramp_time=self.simulation.ramp_time_ns if self.simulation.ramp else None,
        )


Location = Tuple[Union[str, int], ...]


def _node_lines(node: Optional[yaml.Node], path: Location = (), lines: Optional[Dict[Location, int]] = None) -> Dict[Location, int]:
    """1-based line of every mapping key and sequence item under node"""
    lines = {} if lines is None else lines
    if node is None:
        return lines
    lines.setdefault(path, node.start_mark.line + 1)
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            child = path + (key.value,)
            lines[child] = key.start_mark.line + 1
            _node_lines(value, child, lines)
    elif isinstance(node, yaml.SequenceNode):
        for i, item in enumerate(node.value):
            lines[path + (i,)] = item.start_mark.line + 1
            _node_lines(item, path + (i,), lines)
    return lines


def _line_for(loc: Location, lines: Dict[Location, int]) -> Optional[int]:
    for end in range(len(loc), 0, -1):
        if loc[:end] in lines:
            return lines[loc[:end]]
    return None


def _violations(error: ValidationError, lines: Dict[Location, int]) -> List[str]:
    messages = []
    for item in error.errors():
        loc = tuple(item["loc"])
        where = ".".join(str(part) for part in loc) or "<root>"
        line = _line_for(loc, lines)
        prefix = f"line {line}: " if line is not None else ""
        messages.append(f"{prefix}{where}: {item['msg']}")
    return messages


def validate_config_data(data: object, lines: Optional[Dict[Location, int]] = None, path: Optional[str] = None) -> RunConfig:
    """Validate parsed YAML, reporting every violation at once"""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"top level must be a mapping, got {type(data).__name__}"], path)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(_violations(e, lines or {}), path) from e


def parse_config(path: Union[str, Path]) -> RunConfig:
    """Load and validate a YAML run configuration"""
    config_path = Path(path)
    if not config_path.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")
    text = config_path.read_text()
    try:
        data = yaml.safe_load(text)
        lines = _node_lines(yaml.compose(text))
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ConfigError([f"{where}invalid YAML: {e}"], str(config_path)) from e
    return validate_config_data(data, lines, str(config_path))
