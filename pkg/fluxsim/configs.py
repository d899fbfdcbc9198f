"""Bundled run configurations.

Provides loading of run configurations from YAML files and pre-built star systems
for the CZ, CCZ, CCCZ and CCCCZ gates. The built-in systems share one set of
circuit parameters; the coupler interaction biases differ per gate. The
ccccz_mitigated variant lowers Q1 E_J against spectral crowding at N = 4.
"""

from pathlib import Path
from typing import Dict, List, Optional, Union

import yaml

from .config import RunConfig, parse_config, validate_config_data

CONFIGS_DIR = Path(__file__).resolve().parent.parent / "configs"

# (E_C, E_L, E_J) in GHz; Q0 is the central fluxonium
FLUXONIUM_PARAMETERS = [
    (1.41, 0.80, 6.27),
    (1.30, 0.59, 5.71),
    (1.33, 0.60, 5.40),
    (1.35, 0.63, 5.60),
    (1.35, 0.70, 5.60),
]
COUPLER_E_C = 0.32
COUPLER_E_J = 55.0
J_COUPLER = 0.5
J_DIRECT = 0.125

INTERACTION_BIASES = {
    1: [0.413],
    2: [0.413, 0.420],
    3: [0.403, 0.420, 0.410],
    4: [0.395, 0.419, 0.413, 0.411],
}

# Q1 E_J lowered to widen the Q0-Q1 plasmon detuning, with rebiased first coupler
MITIGATED_Q1_E_J = 5.60
MITIGATED_BIASES = [0.410, 0.419, 0.413, 0.411]


def _star_config(n: int, name: str, description: str, t_g_ns: float, projection_cutoff: Optional[float] = None) -> dict:
    data = {
        "name": name,
        "description": description,
        "system": {
            "fluxoniums": [
                {"e_c_GHz": e_c, "e_l_GHz": e_l, "e_j_GHz": e_j, "phi_ext_over_2pi": 0.5}
                for e_c, e_l, e_j in FLUXONIUM_PARAMETERS[: n + 1]
            ],
            "couplers": [
                {"e_c_GHz": COUPLER_E_C, "e_j_GHz": COUPLER_E_J, "phi_ext_over_2pi": bias}
                for bias in INTERACTION_BIASES[n]
            ],
            "j_c0_GHz": [J_COUPLER] * n,
            "j_cj_GHz": [J_COUPLER] * n,
            "j_0j_GHz": [J_DIRECT] * n,
        },
        "gate": {"t_g_ns": t_g_ns, "shape": "cosine" if n == 1 else "flat_top_cosine"},
    }
    if projection_cutoff is not None:
        data["simulation"] = {"projection_cutoff_GHz": projection_cutoff}
    return data


def _crowding_mitigated_config() -> dict:
    data = _star_config(
        4,
        "CCCCZ gate, mitigated crowding",
        "Four neighbors with a wider Q0-Q1 plasmon detuning",
        200.0,
        projection_cutoff=24.0,
    )
    data["system"]["fluxoniums"][1]["e_j_GHz"] = MITIGATED_Q1_E_J
    for coupler, bias in zip(data["system"]["couplers"], MITIGATED_BIASES):
        coupler["phi_ext_over_2pi"] = bias
    return data


BUILTIN_CONFIGS: Dict[str, dict] = {
    "cz": _star_config(1, "CZ gate", "Q0 and Q1 through one coupler", 50.0),
    "ccz": _star_config(2, "CCZ gate", "Central Q0 with neighbors Q1 and Q2", 100.0),
    "cccz": _star_config(3, "CCCZ gate", "Central Q0 with neighbors Q1 to Q3", 150.0, projection_cutoff=24.0),
    "ccccz": _star_config(4, "CCCCZ gate", "Central Q0 with neighbors Q1 to Q4", 200.0, projection_cutoff=24.0),
    "ccccz_mitigated": _crowding_mitigated_config(),
}


class ConfigLoader:
    """Loads run configurations from YAML files"""

    def __init__(self, configs_dir: Union[str, Path] = CONFIGS_DIR):
        self.configs_dir = Path(configs_dir)

    def load_config(self, config_name: str) -> RunConfig:
        """Load a configuration by name or file path"""
        if config_name.endswith(".yaml") or config_name.endswith(".yml"):
            return parse_config(config_name)
        return parse_config(self.configs_dir / f"{config_name}.yaml")

    def list_configs(self) -> List[str]:
        """List available configurations in the configs directory"""
        if not self.configs_dir.exists():
            return []
        return sorted(path.stem for path in self.configs_dir.glob("*.yaml"))


def get_builtin_config(name: str) -> RunConfig:
    """Get a built-in configuration by name"""
    if name not in BUILTIN_CONFIGS:
        available = ", ".join(BUILTIN_CONFIGS)
        raise ValueError(f"Unknown built-in configuration: {name}. Available: {available}")
    return validate_config_data(BUILTIN_CONFIGS[name])


def create_config_file(config_name: str, config: RunConfig, output_dir: Union[str, Path] = CONFIGS_DIR) -> Path:
    """Write a RunConfig as a YAML file"""
    output_path = Path(output_dir)
    output_path.mkdir(parents=True, exist_ok=True)
    config_file = output_path / f"{config_name}.yaml"
    with open(config_file, "w") as f:
        yaml.safe_dump(config.model_dump(mode="json", exclude_none=True), f, default_flow_style=False, sort_keys=False, indent=2)
    return config_file
