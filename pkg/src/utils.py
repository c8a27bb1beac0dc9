"""
Utility functions for the Tavis-Cummings saturation toolkit
"""

import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict

import numpy as np

from errors import OutputError

logger = logging.getLogger(__name__)


def to_serializable(value: Any) -> Any:
    """
    Convert numpy scalars/arrays, complex numbers and paths into JSON types

    Args:
        value: Arbitrary value

    Returns:
        JSON-compatible value
    """
    if isinstance(value, dict):
        return {str(k): to_serializable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_serializable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_serializable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    if isinstance(value, Path):
        return str(value)
    return value


def save_json(data: Dict, file_path: Path):
    """
    Save data to a JSON file

    Args:
        data: Data to save
        file_path: Path to save file

    Raises:
        OutputError: If the file cannot be written
    """
    file_path = Path(file_path)
    try:
        file_path.parent.mkdir(parents=True, exist_ok=True)
        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(to_serializable(data), f, indent=2, ensure_ascii=False)
    except OSError as e:
        raise OutputError(f"could not write {file_path}: {e}") from e


def format_duration(seconds: float) -> str:
    """
    Format duration in human-readable format

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted duration string
    """
    if seconds < 60:
        return f"{seconds:.1f}s"
    elif seconds < 3600:
        minutes = int(seconds / 60)
        return f"{minutes}m {int(seconds % 60)}s"
    else:
        hours = int(seconds / 3600)
        return f"{hours}h {int((seconds % 3600) / 60)}m"


class ProgressTracker:
    """Simple progress tracker for long-running sweeps"""

    def __init__(self, total: int, description: str = "Processing"):
        self.total = total
        self.current = 0
        self.description = description
        self.start_time = datetime.now()

    def update(self, increment: int = 1):
        """Update progress"""
        self.current += increment
        if self.current % max(1, self.total // 20) == 0:  # every 5%
            self.log_progress()

    @property
    def elapsed_seconds(self) -> float:
        return (datetime.now() - self.start_time).total_seconds()

    def log_progress(self):
        if self.total > 0:
            percentage = (self.current / self.total) * 100
            logger.info(
                f"{self.description}: {self.current}/{self.total} ({percentage:.1f}%) "
                f"- Elapsed: {format_duration(self.elapsed_seconds)}"
            )

    def finish(self):
        """Mark as finished"""
        self.current = self.total
        logger.info(f"{self.description}: Complete! Total time: {format_duration(self.elapsed_seconds)}")
