import json
from pathlib import Path

import pytest

from run import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


class TestUtilityFlags:
    def test_list_configs(self, capsys):
        assert main(["--list-configs"]) == 0
        out = capsys.readouterr().out
        assert "cz:" in out
        assert "two_neighbor_shifts.yaml" in out

    def test_validate_bundled_file(self, capsys):
        assert main(["--validate-config", str(CONFIGS / "two_neighbor_shifts.yaml")]) == 0
        assert "is valid" in capsys.readouterr().out

    def test_validate_reports_violations(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("name: bad\n")
        assert main(["--validate-config", str(path)]) == 1
        assert "validation failed" in capsys.readouterr().out

    def test_validate_missing_file(self, tmp_path):
        assert main(["--validate-config", str(tmp_path / "absent.yaml")]) == 1

    def test_command_required(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2

    def test_jobs_checked(self):
        with pytest.raises(SystemExit):
            main(["spectrum", "--config", "cz", "--jobs", "0"])


class TestCommands:
    def test_transitions(self, tmp_path):
        assert main(["transitions", "--config", "cz", "--out", str(tmp_path), "--gnuplot"]) == 0
        assert (tmp_path / "transitions.csv").exists()
        assert (tmp_path / "transitions.gp").exists()
        assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "ok"

    def test_failure_exit_status(self, tmp_path):
        # the built-in configurations carry no gate lengths to sweep
        assert main(["sweep", "--config", "cz", "--out", str(tmp_path)]) == 1
        assert json.loads((tmp_path / "manifest.json").read_text())["status"] == "failed"

    def test_unknown_config(self, tmp_path):
        assert main(["spectrum", "--config", "nonexistent", "--out", str(tmp_path)]) == 1
