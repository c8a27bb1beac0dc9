#!/usr/bin/env python3
"""
Command-line front end for the Tavis-Cummings saturation toolkit

Runs spectrum, drive and diagonal sweeps, critical-drive tables and the
analytic classical model, and writes CSV tables plus JSON metadata.

Exit status: 0 success, 2 configuration error, 3 solve failure
(including any failed row), 4 I/O failure.
"""

import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Add src to path
sys.path.append(str(Path(__file__).parent / "src"))

from config.logging_config import get_logger, setup_logging
from config.settings import CRITICAL_GAMMA_E_SCAN, LOG_LEVEL
from errors import ConfigError, OutputError, SimulationError
from parsers.config_parser import RunConfig, parse_config
from report_generator import ResultWriter
from sweeps.sweep_runner import CriticalScan, GridSpec, TruncationSpec, classical_sweep, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVE = 3
EXIT_IO = 4

SUBCOMMAND_MODES = {
    "spectrum": "spectrum",
    "drive-sweep": "drive",
    "diagonals": "diagonals",
    "critical-table": "critical_table",
}

logger = get_logger(__name__)


def parse_grid(text: str) -> GridSpec:
    """'start:stop:count:log|lin' -> GridSpec."""
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError(f"--grid expects start:stop:count:log|lin, got '{text}'")
    try:
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise ConfigError(f"--grid has a non-numeric field in '{text}'") from e
    return GridSpec(start, stop, count, parts[3])


def parse_int_list(text: str, flag: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"{flag} expects comma-separated integers, got '{text}'") from e


def parse_float_list(text: str, flag: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"{flag} expects comma-separated numbers, got '{text}'") from e


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML run configuration")
    common.add_argument("--out", type=Path, help="CSV output path (metadata goes next to it)")
    common.add_argument("--threads", type=int, help="Worker threads for the sweep")
    common.add_argument("--n", help="Emitter counts, e.g. 1,2,3")
    common.add_argument("--nmax", help="Fock cutoff M or 'auto'")
    common.add_argument("--nmax-cap", type=int, help="Hard cap for automatic truncation")
    common.add_argument("--grid", help="Sweep grid start:stop:count:log|lin")
    common.add_argument("--classical", action="store_true", help="Add classical companion columns")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-file", action="store_true", help="Also log to a file under logs/")

    parser = argparse.ArgumentParser(
        description="Driven dissipative Tavis-Cummings steady-state sweeps"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("spectrum", parents=[common],
                          help="Sweep the drive frequency (grid in units of omega_c)")
    subparsers.add_parser("drive-sweep", parents=[common],
                          help="Sweep the resonant drive strength (grid in units of g_col)")
    subparsers.add_parser("diagonals", parents=[common],
                          help="Drive sweep that also stores rho_{n,G} and Poisson overlays")

    table = subparsers.add_parser("critical-table", parents=[common],
                                  help="Predicted versus detected nonlinear onset")
    table.add_argument("--scan", choices=("gamma_e", "g_col"), help="Scanned parameter")
    table.add_argument("--values", help="Comma-separated scan values")

    classical = subparsers.add_parser("classical", parents=[common],
                                      help="Analytic coupled-oscillator model only")
    classical.add_argument("--axis", choices=("spectrum", "drive"), help="Sweep axis")
    return parser


def load_config(path: Optional[Path]) -> RunConfig:
    if path is None:
        return parse_config("")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"could not read configuration {path}: {e}") from e
    return parse_config(text)


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    """Command-line flags take precedence over configuration values."""
    changes = {}
    if args.command in SUBCOMMAND_MODES:
        changes["mode"] = SUBCOMMAND_MODES[args.command]
    if args.threads is not None:
        changes["threads"] = args.threads
    if args.n:
        changes["n_list"] = tuple(parse_int_list(args.n, "--n"))
    if args.grid:
        changes["grid"] = parse_grid(args.grid)
    if args.classical:
        changes["include_classical"] = True

    truncation = config.truncation
    if args.nmax:
        if args.nmax == "auto":
            n_max = None
        elif args.nmax.isdigit():
            n_max = int(args.nmax)
        else:
            raise ConfigError(f"--nmax expects an integer or 'auto', got '{args.nmax}'")
        truncation = TruncationSpec(n_max=n_max, tail_tol=truncation.tail_tol, cap=truncation.cap)
    if args.nmax_cap is not None:
        truncation = TruncationSpec(n_max=truncation.n_max, tail_tol=truncation.tail_tol,
                                    cap=args.nmax_cap)
    changes["truncation"] = truncation

    if args.command == "critical-table":
        scan = config.critical or CriticalScan("gamma_e", CRITICAL_GAMMA_E_SCAN)
        if args.scan or args.values:
            values = parse_float_list(args.values, "--values") if args.values else scan.values
            scan = CriticalScan(args.scan or scan.parameter, tuple(values))
        changes["critical"] = scan
    if args.command == "classical" and args.axis:
        changes["classical_axis"] = args.axis

    return config.with_updates(**changes)


def run(args: argparse.Namespace) -> int:
    config = apply_overrides(load_config(args.config), args)

    if args.command == "classical":
        result = classical_sweep(config.sweep_spec(mode=config.classical_axis))
    else:
        result = run_sweep(config.sweep_spec())

    csv_path = args.out or (Path(config.output.csv) if config.output.csv else None)
    metadata_path = Path(config.output.metadata) if config.output.metadata else None
    csv_path, metadata_path = ResultWriter().write(result, csv_path, metadata_path,
                                                   label=args.command.replace("-", "_"))

    print(f"✅ {len(result.rows)} rows written to {csv_path}")
    for n, estimate in result.diagnostics.get("emitter_estimate", {}).items():
        slope = result.diagnostics["plateau_slope"][n]
        slope_text = "n/a" if slope is None else f"{slope:.2f}"
        print(f"📈 N={n}: plateau slope {slope_text}, inferred emitter count {estimate}")
    if not result.complete:
        print(f"❌ {result.failed_rows} row(s) failed, see the status column")
        return EXIT_SOLVE
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or LOG_LEVEL, log_to_file=args.log_file)

    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except OutputError as e:
        logger.error(f"Output error: {e}")
        return EXIT_IO
    except SimulationError as e:
        logger.error(f"Solve failed: {e}")
        return EXIT_SOLVE


if __name__ == "__main__":
    sys.exit(main())
