"""Tests for configuration loading and error helpers."""

from __future__ import annotations

from pathlib import Path

import pytest

from src.utils import (
    BUDGET_ENV_VAR,
    BudgetExceededError,
    CircuitSyntaxError,
    PreconditionError,
    check_input_budget,
    default_parameters,
    load_parameters,
    load_settings,
    with_budget,
)

_SETTINGS_YAML = """\
enumeration_budget_bits: 20
gate_budget: 500
enumeration_chunk_bits: 12
invariant_tolerance: 1.0e-10
identity_tolerance: 1.0e-9
report_dir: reports
default_seed: 99
"""

_PARAMETERS_YAML = """\
polarization:
  max_coin_bits: 6
ea_bar:
  copies: 3
  security: 2
  hash_structure: {structure}
protocol:
  repetitions: 5
quantum:
  direct_cutoff_qubits: 12
"""


def _write_settings(tmp_path: Path) -> Path:
    config_dir = tmp_path / "config"
    config_dir.mkdir()
    path = config_dir / "settings.yaml"
    path.write_text(_SETTINGS_YAML)
    return path


def test_load_settings_resolves_report_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(BUDGET_ENV_VAR, raising=False)

    settings = load_settings(_write_settings(tmp_path))

    assert settings.enumeration_budget_bits == 20
    assert settings.gate_budget == 500
    assert settings.report_dir == (tmp_path / "reports").resolve()
    assert settings.max_workers == 1


def test_budget_env_var_overrides_file(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.setenv(BUDGET_ENV_VAR, "12")

    settings = load_settings(_write_settings(tmp_path))

    assert settings.enumeration_budget_bits == 12


def test_load_settings_rejects_missing_file(tmp_path: Path) -> None:
    with pytest.raises(FileNotFoundError):
        load_settings(tmp_path / "absent.yaml")


def test_load_parameters_and_structure_check(tmp_path: Path) -> None:
    good = tmp_path / "parameters.yaml"
    good.write_text(_PARAMETERS_YAML.format(structure="Full"))
    bad = tmp_path / "bad.yaml"
    bad.write_text(_PARAMETERS_YAML.format(structure="sparse"))

    parameters = load_parameters(good)

    assert parameters.hash_structure == "full"
    assert parameters.ea_copies == 3
    assert parameters.protocol_repetitions == 5
    with pytest.raises(ValueError, match="Unknown hash structure"):
        load_parameters(bad)


def test_repository_parameters_load() -> None:
    parameters = default_parameters()

    assert parameters.protocol_repetitions % 2 == 1
    assert parameters.hash_structure in {"toeplitz", "full"}


def test_with_budget_and_input_check(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(BUDGET_ENV_VAR, raising=False)
    settings = with_budget(load_settings(_write_settings(tmp_path)), 4)

    check_input_budget(4, settings, "enumeration")
    with pytest.raises(BudgetExceededError, match="enumeration needs 5 input bits") as excinfo:
        check_input_budget(5, settings, "enumeration")

    assert isinstance(excinfo.value, PreconditionError)
    assert excinfo.value.achievable == {}
    with pytest.raises(ValueError, match="must be >= 1"):
        with_budget(settings, 0)


def test_circuit_syntax_error_carries_line_number() -> None:
    error = CircuitSyntaxError("unknown operation NAND", 4)

    assert str(error) == "line 4: unknown operation NAND"
    assert error.line_number == 4
