from __future__ import annotations

from collections.abc import Iterable, Sequence
import csv
from pathlib import Path
from typing import Any

import numpy as np


def format_value(value: Any) -> str:
    """Format a CSV cell: floats with 9 significant digits, None as empty."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def write_table_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    header_comment: str | None = None,
) -> Path:
    """Write ``rows`` under ``header``, preceded by an optional ``# comment`` line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        if header_comment:
            handle.write(f"# {header_comment}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])
    return path


def provenance_comment(config_hash: str, seed: int) -> str:
    """Header comment carried by every CSV output."""
    return f"config_hash={config_hash} seed={seed}"


def decimate(values: np.ndarray, factor: int) -> np.ndarray:
    """Keep every ``factor``-th row."""
    if factor < 1:
        raise ValueError(f"decimation factor must be >= 1, got {factor}")
    return values[::factor]


def format_vector(values: Iterable[float], digits: int = 4) -> str:
    """Compact ``x/y/z`` rendering for log messages."""
    return "/".join(f"{v:.{digits}g}" for v in values)
