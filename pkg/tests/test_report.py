"""Tests for report assembly and file helpers."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src import __version__, io
from src.circuit import identity_circuit
from src.exact import enumerate_circuit
from src.quantum import diagonal_state
from src.reductions import Regime
from src.report import REPORT_SCHEMA, build_report, encode, exact_rational, export_sweep_table, write_report
from src.utils import SettingsConfig


def _settings() -> SettingsConfig:
    return SettingsConfig(
        enumeration_budget_bits=24,
        gate_budget=20000,
        enumeration_chunk_bits=16,
        invariant_tolerance=1e-10,
        identity_tolerance=1e-9,
        report_dir=Path("reports"),
        default_seed=7,
    )


def test_exact_rational_prefers_denominator_power() -> None:
    assert exact_rational(Fraction(3, 8)) == {"numerator": 3, "denominator_power": 3, "float": 0.375}
    assert exact_rational(Fraction(0)) == {"numerator": 0, "denominator_power": 0, "float": 0.0}
    assert exact_rational(Fraction(1, 3))["denominator"] == 3


def test_encode_handles_nested_results() -> None:
    frame = pd.DataFrame({"trial": [0], "holds": [np.bool_(True)]})
    encoded = encode(
        {
            "sd": Fraction(1, 4),
            "regime": Regime.YES,
            "path": Path("a/b.ckt"),
            "counts": [np.int64(3), np.float64(0.5)],
            "bound": -math.inf,
            "table": frame,
        }
    )

    assert encoded["sd"]["denominator_power"] == 2
    assert encoded["regime"] == "yes"
    assert encoded["path"] == "a/b.ckt"
    assert encoded["counts"] == [3, 0.5]
    assert encoded["bound"] == "-inf"
    assert encoded["table"] == [{"trial": 0, "holds": True}]


def test_encode_rejects_unknown_types() -> None:
    with pytest.raises(TypeError, match="Cannot encode"):
        encode({"value": object()})


def test_build_report_layout() -> None:
    built = build_report("sd", {"seed": 1}, {"sd": Fraction(1, 2)})

    assert built["schema"] == REPORT_SCHEMA
    assert built["tool_version"] == __version__
    assert built["command"] == "sd"
    assert built["results"]["sd"]["float"] == 0.5


def test_write_report_is_byte_stable(tmp_path: Path) -> None:
    built = build_report("sd", {"seed": 1, "budget": 24}, {"sd": Fraction(1, 2), "mut_disj": Fraction(0)})

    first = write_report(built, tmp_path / "one.json").read_bytes()
    second = write_report(built, tmp_path / "nested" / "two.json").read_bytes()

    assert first == second
    assert first.endswith(b"\n")
    assert json.loads(first)["config"]["budget"] == 24


def test_circuit_file_round_trip(tmp_path: Path) -> None:
    circuit = identity_circuit(3)

    path = io.write_circuit(circuit, tmp_path / "circuits" / "x.ckt")

    assert io.read_circuit(path) == circuit
    with pytest.raises(FileNotFoundError):
        io.read_circuit(tmp_path / "missing.ckt")


def test_write_distribution_csv(tmp_path: Path) -> None:
    distribution = enumerate_circuit(identity_circuit(1), _settings())

    path = io.write_distribution(distribution, tmp_path / "dist.csv")

    assert path.read_text().splitlines() == ["bitstring,numerator,denominator_power", "0,1,1", "1,1,1"]


def test_density_file_round_trip(tmp_path: Path) -> None:
    state = diagonal_state([0.75, 0.25])

    restored = io.read_density(io.write_density(state, tmp_path / "state.json"))

    assert np.allclose(restored.entries, state.entries)


def test_read_json_rejects_non_objects(tmp_path: Path) -> None:
    path = tmp_path / "list.json"
    path.write_text("[1, 2]")

    with pytest.raises(ValueError, match="Unexpected JSON structure"):
        io.read_json(path)


def test_export_sweep_table_validates_before_writing(tmp_path: Path) -> None:
    table = pd.DataFrame({"trial": pd.Series([0, 1], dtype="int64"), "holds": [True, True], "sd": [0.5, 0.25]})

    csv_path = export_sweep_table(table, tmp_path / "sweep.csv", ["sd"])
    parquet_path = export_sweep_table(table, tmp_path / "sweep.parquet", ["sd"])

    assert pd.read_csv(csv_path)["sd"].tolist() == [0.5, 0.25]
    assert pd.read_parquet(parquet_path)["trial"].tolist() == [0, 1]
    with pytest.raises(ValueError, match="empty"):
        export_sweep_table(table.iloc[0:0], tmp_path / "empty.csv")
