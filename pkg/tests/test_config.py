import copy
from pathlib import Path

import numpy as np
import pytest
import yaml

from fluxsim.config import RunConfig, parse_config, validate_config_data
from fluxsim.configs import BUILTIN_CONFIGS, CONFIGS_DIR, ConfigLoader, create_config_file, get_builtin_config
from fluxsim.errors import ConfigError
from fluxsim.pulses import PulseShape

MINIMAL = """\
name: minimal
system:
  fluxoniums:
    - {e_c_GHz: 1.41, e_l_GHz: 0.80, e_j_GHz: 6.27}
    - {e_c_GHz: 1.30, e_l_GHz: 0.59, e_j_GHz: 5.71}
  couplers:
    - {e_c_GHz: 0.32, e_j_GHz: 55.0, phi_ext_over_2pi: 0.413}
  j_c0_GHz: [0.5]
  j_cj_GHz: [0.5]
  j_0j_GHz: [0.125]
gate:
  t_g_ns: 50.0
  shape: cosine
"""


def write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return path


def cz_data() -> dict:
    return copy.deepcopy(BUILTIN_CONFIGS["cz"])


class TestParseConfig:
    def test_minimal(self, tmp_path):
        config = parse_config(write(tmp_path, MINIMAL))
        assert config.name == "minimal"
        assert config.gate_name == "cz"
        assert config.gate.shape is PulseShape.COSINE
        assert config.simulation.dt_ns == 2e-3
        assert config.output.directory == "results"

    def test_defaults_to_sweet_spot(self, tmp_path):
        system = parse_config(write(tmp_path, MINIMAL)).star_system()
        assert system.central.phi_ext == pytest.approx(np.pi)
        assert system.couplers[0].phi_ext == pytest.approx(2 * np.pi * 0.413)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_config(tmp_path / "absent.yaml")

    def test_empty_file_lists_every_missing_section(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, ""))
        joined = "\n".join(info.value.violations)
        assert "system" in joined
        assert "gate" in joined
        assert len(info.value.violations) == 2

    def test_unknown_key_reports_line(self, tmp_path):
        text = MINIMAL + "  colour: red\n"
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, text))
        assert info.value.violations == ["line 14: gate.colour: Extra inputs are not permitted"]
        assert str(info.value.path).endswith("run.yaml")

    def test_every_violation_reported(self, tmp_path):
        text = MINIMAL.replace("t_g_ns: 50.0", "t_g_ns: -1").replace("phi_ext_over_2pi: 0.413", "phi_ext_over_2pi: 0.5")
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, text))
        violations = info.value.violations
        assert len(violations) == 2
        assert any(v.startswith("line 7: system.couplers.0.phi_ext_over_2pi") for v in violations)
        assert any(v.startswith("line 12: gate.t_g_ns") for v in violations)

    def test_invalid_yaml(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            parse_config(write(tmp_path, "system: [unclosed\n"))
        assert "invalid YAML" in info.value.violations[0]

    def test_top_level_must_be_mapping(self):
        with pytest.raises(ConfigError):
            validate_config_data([1, 2, 3])


class TestSchema:
    def test_neighbor_count(self):
        data = cz_data()
        data["system"]["fluxoniums"] = data["system"]["fluxoniums"][:1]
        with pytest.raises(ConfigError):
            validate_config_data(data)

    def test_list_lengths(self):
        data = cz_data()
        data["system"]["j_0j_GHz"] = [0.1, 0.1]
        with pytest.raises(ConfigError, match="j_0j_GHz"):
            validate_config_data(data)

    def test_target_must_match_neighbors(self):
        data = cz_data()
        data["gate"]["target"] = "ccz"
        with pytest.raises(ConfigError, match="gate target"):
            validate_config_data(data)

    def test_identity_target_with_zero_drive(self):
        data = cz_data()
        data["gate"]["target"] = "identity"
        data["gate"]["omega_d_amp_GHz"] = 0.0
        config = validate_config_data(data)
        assert config.gate.target == "identity"
        assert config.gate.omega_d_amp_GHz == 0.0
        data["gate"]["omega_d_amp_GHz"] = -0.01
        with pytest.raises(ConfigError, match="omega_d_amp_GHz"):
            validate_config_data(data)

    def test_drive_sites(self):
        data = cz_data()
        data["gate"]["drive_sites"] = [0, 2]
        with pytest.raises(ConfigError):
            validate_config_data(data)
        data["gate"]["drive_sites"] = [0, 0]
        with pytest.raises(ConfigError):
            validate_config_data(data)

    def test_sweep_values_ascend(self):
        data = cz_data()
        data["sweep"] = {"parameter": "t_g_ns", "values": [50.0, 30.0]}
        with pytest.raises(ConfigError):
            validate_config_data(data)

    def test_calibration_settings(self):
        data = cz_data()
        data["simulation"] = {"ramp": True, "ramp_time_ns": 4.0}
        data["calibration"] = {"max_evaluations": 20}
        settings = validate_config_data(data).calibration_settings()
        assert settings.shape is PulseShape.COSINE
        assert settings.max_evaluations == 20
        assert settings.coupler_ramp_time == 4.0

    def test_propagation_config(self):
        data = cz_data()
        data["simulation"] = {"dt_ns": 1e-3, "frame": "lab", "projection_cutoff_GHz": 24.0}
        config = validate_config_data(data).propagation_config()
        assert config.dt == 1e-3
        assert config.frame == "lab"
        assert config.projection_cutoff == 24.0

    def test_idle_biases(self):
        data = cz_data()
        data["system"]["couplers"][0]["idle_phi_ext_over_2pi"] = 0.1
        config = validate_config_data(data)
        assert config.system.idle_biases() == pytest.approx([2 * np.pi * 0.1])
        assert config.system.to_star_system(idle=True).coupler_biases() == pytest.approx((2 * np.pi * 0.1,))


class TestBundledConfigs:
    @pytest.mark.parametrize("name", sorted(BUILTIN_CONFIGS))
    def test_builtin(self, name):
        config = get_builtin_config(name)
        assert isinstance(config, RunConfig)
        assert config.gate_name == name.split("_")[0]

    def test_unknown_builtin(self):
        with pytest.raises(ValueError):
            get_builtin_config("cnot")

    def test_bundled_files_validate(self):
        loader = ConfigLoader()
        names = loader.list_configs()
        assert {"two_neighbor_shifts", "cz", "ccz", "cccz", "ccccz"} <= set(names)
        for name in names:
            loader.load_config(name)

    def test_two_neighbor_shift_sweep(self):
        config = ConfigLoader().load_config(str(CONFIGS_DIR / "two_neighbor_shifts.yaml"))
        assert config.gate_name == "ccz"
        assert config.sweep.parameter == "j_ck_GHz"
        assert config.sweep.values[0] == 0.05
        assert config.sweep.values[-1] == 0.8

    def test_round_trip_through_file(self, tmp_path):
        original = get_builtin_config("ccz")
        path = create_config_file("copy", original, tmp_path)
        assert ConfigLoader(tmp_path).load_config("copy") == original
        assert yaml.safe_load(path.read_text())["name"] == "CCZ gate"
