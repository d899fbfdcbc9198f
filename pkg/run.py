#!/usr/bin/env python3
"""
fluxsim CLI

Command-line interface for star-coupled fluxonium simulations: spectra,
state-dependent shifts, transition tables, driven multi-controlled-Z gates,
drive tune-up and gate-length sweeps.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Optional

sys.path.insert(0, str(Path(__file__).parent))

from fluxsim.config import RunConfig
from fluxsim.configs import BUILTIN_CONFIGS, ConfigLoader, get_builtin_config
from fluxsim.engine import COMMANDS, ExperimentEngine
from fluxsim.errors import ConfigError, FluxsimError
from fluxsim.reporter import ResultWriter

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.StreamHandler(),
        logging.FileHandler('fluxsim.log')
    ]
)

logger = logging.getLogger(__name__)


def load_config(name: str) -> RunConfig:
    """Built-in configuration name, bundled configuration name or YAML path"""
    if name in BUILTIN_CONFIGS:
        logger.info(f"Using built-in configuration: {name}")
        return get_builtin_config(name)
    config = ConfigLoader().load_config(name)
    logger.info(f"Loaded configuration from {name}")
    return config


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Command-line flags take precedence over the output section"""
    if args.out:
        config.output.directory = args.out
    if args.gnuplot:
        config.output.gnuplot = True
    return config


def log_summary(config: RunConfig, command: str, jobs: int) -> None:
    system = config.system
    logger.info("=== Run Configuration ===")
    logger.info(f"Command: {command}")
    logger.info(f"Name: {config.name}")
    logger.info(f"Gate: {config.gate_name} ({system.n_neighbors} neighbor(s))")
    logger.info(f"Coupler biases: {[c.phi_ext_over_2pi for c in system.couplers]} (x 2 pi)")
    logger.info(f"Gate length: {config.gate.t_g_ns} ns, shape {config.gate.shape.value}")
    logger.info(f"Projection cutoff: {config.simulation.projection_cutoff_GHz or 'none'}")
    logger.info(f"Output: {config.output.directory}")
    logger.info(f"Jobs: {jobs}")
    logger.info("=" * 25)


async def run_command(command: str, config: RunConfig, jobs: int) -> int:
    """Run one subcommand; returns the exit status"""
    writer = ResultWriter(config.output.directory, config.output.gnuplot)
    try:
        async with ExperimentEngine(config, writer, jobs) as engine:
            stats = await engine.run(command)
    except FluxsimError as e:
        logger.error(f"{command} failed: {e}")
        return 1
    if stats.failed_points:
        logger.warning(f"{stats.failed_points} of {stats.points} point(s) failed; see the error column")
    return 0


def list_configs() -> None:
    print("Built-in configurations:")
    for name, data in BUILTIN_CONFIGS.items():
        print(f"  {name}: {data.get('description', 'No description')}")

    print("\nConfiguration files:")
    configs = ConfigLoader().list_configs()
    if configs:
        for name in configs:
            print(f"  {name}.yaml")
    else:
        print("  (no configuration files found)")


def validate_config(path: str) -> int:
    try:
        config = load_config(path)
    except (ConfigError, FileNotFoundError) as e:
        print(f"Configuration validation failed: {e}")
        return 1
    print(f"Configuration '{path}' is valid")
    print(f"   Name: {config.name}")
    print(f"   Gate: {config.gate_name}")
    print(f"   Fluxoniums: {len(config.system.fluxoniums)}")
    print(f"   Gate length: {config.gate.t_g_ns} ns")
    return 0


def main(argv: Optional[list] = None) -> int:
    """Main CLI entry point"""
    parser = argparse.ArgumentParser(
        description="fluxsim - star-coupled fluxonium gate simulator",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Subsystem and dressed spectrum of the bundled two-neighbor system
  python run.py spectrum --config configs/two_neighbor_shifts.yaml

  # Transition table and minimum gate detuning of the CZ system
  python run.py transitions --config cz

  # Gate error versus gate length with four worker processes
  python run.py sweep --config configs/ccz.yaml --jobs 4 --gnuplot

Built-in configurations:
  - cz, ccz, cccz, ccccz: one to four neighbors around Q0
"""
    )

    parser.add_argument(
        "command",
        nargs="?",
        choices=COMMANDS,
        help="What to compute"
    )

    parser.add_argument(
        "--config",
        default="two_neighbor_shifts",
        help="Built-in name, bundled configuration name or YAML file path (default: two_neighbor_shifts)"
    )

    parser.add_argument(
        "--out",
        help="Output directory (default: from configuration)"
    )

    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="Worker processes for sweep points (default: 1)"
    )

    parser.add_argument(
        "--gnuplot",
        action="store_true",
        help="Write a gnuplot script next to every CSV"
    )

    # Utility commands
    parser.add_argument(
        "--list-configs",
        action="store_true",
        help="List available configurations and exit"
    )

    parser.add_argument(
        "--validate-config",
        help="Validate a configuration file and exit"
    )

    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable verbose logging"
    )

    args = parser.parse_args(argv)

    if args.verbose:
        logging.getLogger().setLevel(logging.DEBUG)

    if args.list_configs:
        list_configs()
        return 0

    if args.validate_config:
        return validate_config(args.validate_config)

    if args.command is None:
        parser.error("a command is required")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")

    try:
        config = apply_overrides(load_config(args.config), args)
    except (ConfigError, FileNotFoundError) as e:
        logger.error(str(e))
        return 1

    log_summary(config, args.command, args.jobs)
    try:
        return asyncio.run(run_command(args.command, config, args.jobs))
    except KeyboardInterrupt:
        print("\nRun interrupted by user")
        return 1


if __name__ == "__main__":
    sys.exit(main())
