"""Input/output utilities for circuits, reports and tables."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd

from .circuit import CircuitDistribution, parse, serialize
from .exact import ExactDistribution, distribution_frame
from .quantum import DensityMatrix, density_from_pairs, density_to_pairs
from .utils import ensure_directories


LOGGER = logging.getLogger(__name__)


def read_circuit(path: Path) -> CircuitDistribution:
    """Read a CKT v1 file."""

    if not path.exists():
        raise FileNotFoundError(f"Circuit file not found: {path}")
    circuit = parse(path.read_text(encoding="ascii"))
    LOGGER.debug("Read circuit with %d inputs and %d gates from %s", circuit.n_inputs, circuit.n_gates, path)
    return circuit


def write_circuit(circuit: CircuitDistribution, output_path: Path) -> Path:
    ensure_directories(output_path.parent)
    output_path.write_text(serialize(circuit), encoding="ascii")
    LOGGER.info("Wrote circuit to %s", output_path)
    return output_path


def read_json(path: Path) -> Dict[str, Any]:
    if not path.exists():
        raise FileNotFoundError(f"JSON file not found: {path}")
    with path.open("r", encoding="utf-8") as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ValueError(f"Unexpected JSON structure in {path}")
    return data


def write_json(payload: Dict[str, Any], output_path: Path) -> Path:
    """Write ``payload`` with sorted keys so equal payloads give equal bytes."""

    ensure_directories(output_path.parent)
    with output_path.open("w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")
    LOGGER.info("Wrote JSON file to %s", output_path)
    return output_path


def write_parquet(df: pd.DataFrame, output_path: Path) -> Path:
    """Write a DataFrame to a Parquet file."""

    ensure_directories(output_path.parent)
    df.to_parquet(output_path, engine="pyarrow", index=False)
    LOGGER.info("Wrote Parquet file to %s", output_path)
    return output_path


def write_csv(df: pd.DataFrame, output_path: Path) -> Path:
    """Write a DataFrame to CSV."""

    ensure_directories(output_path.parent)
    df.to_csv(output_path, index=False)
    LOGGER.info("Wrote CSV file to %s", output_path)
    return output_path


def write_distribution(x: ExactDistribution, output_path: Path) -> Path:
    """Write ``bitstring,numerator,denominator_power`` rows."""

    frame = distribution_frame(x)
    if output_path.suffix == ".parquet":
        return write_parquet(frame, output_path)
    return write_csv(frame, output_path)


def read_density(path: Path) -> DensityMatrix:
    """Read a density matrix stored as row-major ``[re, im]`` pairs."""

    if not path.exists():
        raise FileNotFoundError(f"Density matrix file not found: {path}")
    with path.open("r", encoding="utf-8") as handle:
        rows = json.load(handle)
    if not isinstance(rows, list):
        raise ValueError(f"Expected a list of rows in {path}")
    return density_from_pairs(rows)


def write_density(x: DensityMatrix, output_path: Path) -> Path:
    ensure_directories(output_path.parent)
    with output_path.open("w", encoding="utf-8") as handle:
        json.dump(density_to_pairs(x), handle)
        handle.write("\n")
    LOGGER.info("Wrote density matrix to %s", output_path)
    return output_path
