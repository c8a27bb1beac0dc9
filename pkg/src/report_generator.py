"""
Result Writer for sweep output
Writes plot-ready CSV tables with a JSON metadata sidecar
"""

import logging
from datetime import datetime
from pathlib import Path
from typing import Optional, Tuple

import pandas as pd

from config.settings import CSV_FLOAT_FORMAT, RESULTS_DIR, VERSION
from errors import OutputError
from sweeps.sweep_runner import SweepResult
from utils import save_json

logger = logging.getLogger(__name__)


def metadata_path_for(csv_path: Path) -> Path:
    """Sidecar location next to a CSV file: results.csv -> results.json."""
    return Path(csv_path).with_suffix(".json")


def write_csv(frame: pd.DataFrame, csv_path: Path):
    """
    Write a table as comma-separated values with 17 significant digits

    Args:
        frame: Table to write, first column is the sweep variable
        csv_path: Destination

    Raises:
        OutputError: If the file cannot be written
    """
    csv_path = Path(csv_path)
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(csv_path, index=False, sep=",", float_format=CSV_FLOAT_FORMAT,
                     lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"could not write {csv_path}: {e}") from e


def emit_results(result: SweepResult, csv_path: Path,
                 metadata_path: Optional[Path] = None) -> Tuple[Path, Path]:
    """
    Write a sweep result to CSV plus JSON metadata

    Args:
        result: Sweep result
        csv_path: CSV destination
        metadata_path: JSON destination (defaults to the CSV path with .json)

    Returns:
        The two paths written
    """
    csv_path = Path(csv_path)
    metadata_path = Path(metadata_path) if metadata_path else metadata_path_for(csv_path)

    frame = result.to_frame()
    write_csv(frame, csv_path)

    metadata = {
        "version": VERSION,
        "generated_at": datetime.now().isoformat(timespec="seconds"),
        "spec": result.spec.to_dict(),
        "diagnostics": result.diagnostics,
        "columns": list(frame.columns),
        "rows": len(frame),
        "csv": str(csv_path),
    }
    save_json(metadata, metadata_path)

    logger.info(f"Wrote {len(frame)} rows to {csv_path} (metadata: {metadata_path})")
    return csv_path, metadata_path


class ResultWriter:
    """Write sweep results under an output directory with timestamped names"""

    def __init__(self, output_dir: Path = None):
        self.output_dir = Path(output_dir or RESULTS_DIR)

    def default_path(self, label: str) -> Path:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return self.output_dir / f"{label}_{timestamp}.csv"

    def write(self, result: SweepResult, csv_path: Optional[Path] = None,
              metadata_path: Optional[Path] = None, label: Optional[str] = None) -> Tuple[Path, Path]:
        """
        Write a result, choosing a timestamped CSV name if none is given

        Args:
            result: Sweep result
            csv_path: Explicit CSV destination
            metadata_path: Explicit JSON destination
            label: File stem prefix for generated names (defaults to the sweep mode)

        Returns:
            The two paths written
        """
        if csv_path is None:
            csv_path = self.default_path(label or result.spec.mode)
        return emit_results(result, csv_path, metadata_path)
