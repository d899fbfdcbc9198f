"""Result files for fluxsim runs.

Tables are written as RFC-4180 CSV (CRLF line ends, header row with units in the
column names) with floats in a fixed `.10g` format, so identical runs give
byte-identical bodies. Every run also leaves a manifest.json describing it.
"""

import csv
import hashlib
import json
import logging
import platform
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pydantic
import scipy
import yaml

from . import __version__
from .config import RunConfig

logger = logging.getLogger(__name__)

Cell = Union[str, int, float, bool, None]


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical JSON form of a configuration"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def package_versions() -> Dict[str, str]:
    return {
        "fluxsim": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
        "PyYAML": yaml.__version__,
    }


def gnuplot_script(csv_name: str, header: Sequence[str], x_column: int = 1, y_columns: Optional[Sequence[int]] = None) -> str:
    """Companion script plotting columns of a CSV against its first column"""
    y_columns = list(y_columns) if y_columns is not None else list(range(2, len(header) + 1))
    plots = ", \\\n     ".join(
        f"'{csv_name}' using {x_column}:{col} with linespoints title '{header[col - 1]}'" for col in y_columns
    )
    return (
        "set datafile separator ','\n"
        f"set xlabel '{header[x_column - 1]}'\n"
        "set key outside\n"
        "set grid\n"
        f"plot {plots}\n"
    )


class ResultWriter:
    """Writes CSV tables, JSON documents and the run manifest into one directory"""

    def __init__(self, output_dir: Union[str, Path] = "results", gnuplot: bool = False):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.gnuplot = gnuplot
        self.artifacts: List[str] = []

    def _register(self, path: Path) -> Path:
        self.artifacts.append(path.name)
        logger.info(f"Wrote {path}")
        return path

    def write_csv(
        self,
        name: str,
        header: Sequence[str],
        rows: Sequence[Sequence[Cell]],
        plot_columns: Optional[Sequence[int]] = None,
    ) -> Path:
        """Write a table; with gnuplot enabled a .gp script is written next to it"""
        filepath = self.output_dir / f"{name}.csv"
        with open(filepath, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\r\n")
            writer.writerow(header)
            for row in rows:
                if len(row) != len(header):
                    raise ValueError(f"Row {row} does not match header {list(header)}")
                writer.writerow([format_cell(v) for v in row])
        self._register(filepath)

        if self.gnuplot:
            script = self.output_dir / f"{name}.gp"
            script.write_text(gnuplot_script(filepath.name, header, y_columns=plot_columns))
            self._register(script)
        return filepath

    def write_json(self, name: str, data: Dict[str, Any]) -> Path:
        filepath = self.output_dir / f"{name}.json"
        with open(filepath, "w") as f:
            json.dump(data, f, indent=2, default=str)
        return self._register(filepath)

    def write_manifest(
        self,
        config: RunConfig,
        command: str,
        started: datetime,
        status: str = "ok",
        error: Optional[str] = None,
    ) -> Path:
        finished = datetime.now()
        manifest = {
            "command": command,
            "config_name": config.name,
            "config_hash": config_hash(config),
            "versions": package_versions(),
            "started": started.isoformat(),
            "finished": finished.isoformat(),
            "wall_time_s": (finished - started).total_seconds(),
            "status": status,
            "error": error,
            "artifacts": list(self.artifacts),
        }
        filepath = self.output_dir / "manifest.json"
        with open(filepath, "w") as f:
            json.dump(manifest, f, indent=2)
        logger.info(f"Wrote {filepath}")
        return filepath
