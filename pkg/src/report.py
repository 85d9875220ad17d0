"""Report assembly and export utilities."""

from __future__ import annotations

import logging
import math
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable

import numpy as np
import pandas as pd

from . import __version__, io
from .quality import check_sweep_table


LOGGER = logging.getLogger(__name__)

REPORT_SCHEMA = "report_v1"


def exact_rational(value: Fraction) -> Dict[str, Any]:
    """``{numerator, denominator_power, float}`` for dyadic values, else ``{numerator, denominator, float}``."""

    value = Fraction(value)
    denominator = value.denominator
    encoded: Dict[str, Any] = {"numerator": value.numerator}
    if denominator & (denominator - 1) == 0:
        encoded["denominator_power"] = denominator.bit_length() - 1
    else:
        encoded["denominator"] = denominator
    encoded["float"] = float(value)
    return encoded


def encode(value: Any) -> Any:
    """Convert results into JSON-safe values, keeping probabilities exact."""

    if isinstance(value, bool) or value is None or isinstance(value, (str, int)):
        return value
    if isinstance(value, Fraction):
        return exact_rational(value)
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isinf(number) or math.isnan(number):
            return str(number)
        return number
    if isinstance(value, dict):
        return {str(key): encode(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(item) for item in value]
    if isinstance(value, pd.DataFrame):
        return [encode(row) for row in value.to_dict(orient="records")]
    raise TypeError(f"Cannot encode {type(value).__name__} in a report")


def build_report(command: str, config: Dict[str, Any], results: Dict[str, Any]) -> Dict[str, Any]:
    return {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "command": command,
        "config": encode(config),
        "results": encode(results),
    }


def write_report(report: Dict[str, Any], output_path: Path) -> Path:
    LOGGER.info("Exporting %s report to %s", report.get("command"), output_path)
    return io.write_json(report, output_path)


def export_sweep_table(df: pd.DataFrame, output_path: Path, numeric_columns: Iterable[str] = ()) -> Path:
    """Validate and write a sweep table as CSV, or Parquet for a ``.parquet`` path."""

    check_sweep_table(df, numeric_columns)
    if output_path.suffix == ".parquet":
        return io.write_parquet(df, output_path)
    return io.write_csv(df, output_path)
