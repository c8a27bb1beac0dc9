"""
Run Configuration Parser

This module parses YAML run configurations into validated RunConfig
objects and serializes them back. The schema is strict: unknown keys are
rejected with their full key path, parse errors report the offending line,
and invalid physical values are rejected naming the field.

An empty document yields the baseline parameters in spectrum mode.
"""

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

import yaml

from config.settings import DEFAULT_N_LIST, DEFAULT_THREADS, NMAX_HARD_CAP, TAIL_TOL
from errors import ConfigError
from quantum.model import SystemParams
from sweeps.sweep_runner import MODES, CriticalScan, GridSpec, SweepSpec, TruncationSpec

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = ("mode", "params", "grid", "n_list", "truncation", "include_classical",
                  "threads", "critical_table", "classical_axis", "output")
PARAM_KEYS = tuple(f.name for f in fields(SystemParams) if f.name != "n_emitters")
GRID_KEYS = ("start", "stop", "count", "spacing")
TRUNCATION_KEYS = ("n_max", "tail_tol", "cap")
CRITICAL_KEYS = ("parameter", "values")
OUTPUT_KEYS = ("csv", "metadata")
CLASSICAL_AXES = ("spectrum", "drive")


@dataclass(frozen=True)
class OutputSpec:
    """Where results go; None leaves the choice to the command line."""

    csv: Optional[str] = None
    metadata: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    """A validated run configuration."""

    mode: str = "spectrum"
    params: SystemParams = field(default_factory=SystemParams)
    grid: Optional[GridSpec] = None
    n_list: Tuple[int, ...] = DEFAULT_N_LIST
    truncation: TruncationSpec = field(default_factory=TruncationSpec)
    include_classical: bool = False
    threads: int = DEFAULT_THREADS
    critical: Optional[CriticalScan] = None
    classical_axis: str = "spectrum"
    output: OutputSpec = field(default_factory=OutputSpec)

    def sweep_spec(self, mode: Optional[str] = None) -> SweepSpec:
        """
        Build the SweepSpec for this configuration.

        Args:
            mode: Override the configured mode (the classical subcommand
                passes its axis here)

        Returns:
            Validated SweepSpec; the grid defaults to the mode's default grid
        """
        return SweepSpec(
            mode=mode or self.mode,
            params=self.params,
            grid=self.grid,
            n_list=self.n_list,
            truncation=self.truncation,
            include_classical=self.include_classical,
            threads=self.threads,
            critical=self.critical,
        )

    def with_updates(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        params = self.params.to_dict()
        params.pop("n_emitters")
        document: Dict[str, Any] = {
            "mode": self.mode,
            "params": params,
            "n_list": list(self.n_list),
            "truncation": self.truncation.to_dict(),
            "include_classical": self.include_classical,
            "threads": self.threads,
            "classical_axis": self.classical_axis,
        }
        if self.grid is not None:
            document["grid"] = self.grid.to_dict()
        if self.critical is not None:
            document["critical_table"] = self.critical.to_dict()
        output = {k: v for k, v in (("csv", self.output.csv), ("metadata", self.output.metadata)) if v}
        if output:
            document["output"] = output
        return document


def _check_keys(section: Any, allowed: Tuple[str, ...], path: str) -> Dict[str, Any]:
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"'{path}' must be a mapping, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            location = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown configuration key '{location}' (allowed: {', '.join(allowed)})")
    return section


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"'{path}' must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"'{path}' must be a number, got {value!r}") from None


def _integer(value: Any, path: str) -> int:
    number = _number(value, path)
    if not number.is_integer():
        raise ConfigError(f"'{path}' must be an integer, got {value!r}")
    return int(number)


def _params(section: Dict[str, Any]) -> SystemParams:
    values = {}
    for key, value in section.items():
        values[key] = _number(value, f"params.{key}")
        if values[key] < 0:
            raise ConfigError(f"'params.{key}' must be non-negative, got {value}")
    if "gamma_c" in values and "gamma_c_rad" not in values:
        values["gamma_c_rad"] = values["gamma_c"]
    return SystemParams(**values)


def _grid(section: Dict[str, Any]) -> Optional[GridSpec]:
    if not section:
        return None
    for key in ("start", "stop", "count"):
        if key not in section:
            raise ConfigError(f"missing configuration key 'grid.{key}'")
    return GridSpec(
        start=_number(section["start"], "grid.start"),
        stop=_number(section["stop"], "grid.stop"),
        count=_integer(section["count"], "grid.count"),
        spacing=str(section.get("spacing", "log")),
    )


def _truncation(section: Dict[str, Any]) -> TruncationSpec:
    n_max = section.get("n_max", "auto")
    if n_max is not None and n_max != "auto":
        n_max = _integer(n_max, "truncation.n_max")
    else:
        n_max = None
    return TruncationSpec(
        n_max=n_max,
        tail_tol=_number(section.get("tail_tol", TAIL_TOL), "truncation.tail_tol"),
        cap=_integer(section.get("cap", NMAX_HARD_CAP), "truncation.cap"),
    )


def _critical(section: Dict[str, Any]) -> Optional[CriticalScan]:
    if not section:
        return None
    values = section.get("values", [])
    if not isinstance(values, list):
        raise ConfigError("'critical_table.values' must be a list")
    return CriticalScan(
        parameter=str(section.get("parameter", "gamma_e")),
        values=tuple(_number(v, "critical_table.values") for v in values),
    )


def _n_list(value: Any) -> Tuple[int, ...]:
    if value is None:
        return DEFAULT_N_LIST
    if not isinstance(value, list):
        value = [value]
    return tuple(_integer(n, "n_list") for n in value)


def _flag(value: Any, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"'{path}' must be true or false, got {value!r}")
    return value


def parse_config(text: str) -> RunConfig:
    """
    Parse and validate a YAML run configuration.

    Args:
        text: Configuration document (may be empty)

    Returns:
        RunConfig with defaults filled in

    Raises:
        ConfigError: On YAML syntax errors (with line number), unknown keys,
            wrong types or invalid physical values
    """
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        problem = getattr(e, "problem", None) or str(e)
        raise ConfigError(f"configuration parse error{where}: {problem}") from e

    document = _check_keys(document, TOP_LEVEL_KEYS, "")

    mode = str(document.get("mode", "spectrum"))
    if mode not in MODES:
        raise ConfigError(f"'mode' must be one of {MODES}, got '{mode}'")
    classical_axis = str(document.get("classical_axis", "spectrum"))
    if classical_axis not in CLASSICAL_AXES:
        raise ConfigError(f"'classical_axis' must be one of {CLASSICAL_AXES}, got '{classical_axis}'")

    output = _check_keys(document.get("output"), OUTPUT_KEYS, "output")
    config = RunConfig(
        mode=mode,
        params=_params(_check_keys(document.get("params"), PARAM_KEYS, "params")),
        grid=_grid(_check_keys(document.get("grid"), GRID_KEYS, "grid")),
        n_list=_n_list(document.get("n_list")),
        truncation=_truncation(_check_keys(document.get("truncation"), TRUNCATION_KEYS, "truncation")),
        include_classical=_flag(document.get("include_classical", False), "include_classical"),
        threads=_integer(document.get("threads", DEFAULT_THREADS), "threads"),
        critical=_critical(_check_keys(document.get("critical_table"), CRITICAL_KEYS, "critical_table")),
        classical_axis=classical_axis,
        output=OutputSpec(
            csv=str(output["csv"]) if output.get("csv") else None,
            metadata=str(output["metadata"]) if output.get("metadata") else None,
        ),
    )

    # builds the sweep once so cross-field problems surface at parse time
    config.sweep_spec()
    logger.debug(f"parsed configuration: mode={config.mode}, N={list(config.n_list)}")
    return config


def serialize_config(config: RunConfig) -> str:
    """Dump a RunConfig to YAML that parses back to an equal RunConfig."""
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=False)
