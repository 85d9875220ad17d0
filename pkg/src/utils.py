"""Configuration, logging and error helpers for the desk toolkit."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

import yaml


LOGGER = logging.getLogger(__name__)

BUDGET_ENV_VAR = "ZK_BUDGET_BITS"


class PreconditionError(ValueError):
    """An operation was called outside its declared preconditions."""


class BudgetExceededError(PreconditionError):
    """A construction or enumeration would exceed the configured budget."""

    def __init__(
        self,
        message: str,
        required: Optional[int] = None,
        budget: Optional[int] = None,
        achievable: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message)
        self.required = required
        self.budget = budget
        self.achievable = achievable or {}


class NaturalImageError(PreconditionError):
    """A probabilistic circuit has an argument without a majority output."""

    def __init__(self, message: str, argument: Optional[str] = None) -> None:
        super().__init__(message)
        self.argument = argument


class PluggableDependencyError(PreconditionError):
    """A reduction needs a caller-supplied sub-reduction that was not given."""


class InvariantViolationError(PreconditionError):
    """A value failed its structural invariants (e.g. a density matrix)."""


class CircuitSyntaxError(ValueError):
    """CKT text could not be parsed."""

    def __init__(self, message: str, line_number: int) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class SettingsConfig:
    """Typed representation of values stored in ``config/settings.yaml``."""

    enumeration_budget_bits: int
    gate_budget: int
    enumeration_chunk_bits: int
    invariant_tolerance: float
    identity_tolerance: float
    report_dir: Path
    default_seed: int
    max_workers: int = 1


@dataclass(frozen=True)
class DeskParameters:
    """Typed representation of values stored in ``config/parameters.yaml``."""

    max_coin_bits: int
    ea_copies: int
    ea_security: int
    hash_structure: str
    protocol_repetitions: int
    direct_cutoff_qubits: int


def configure_logging(level: int = logging.INFO) -> None:
    """Configure root logging with a structured format once per process."""

    logging.basicConfig(
        level=level,
        format="%(asctime)s | %(levelname)s | %(name)s | %(message)s",
    )


def load_yaml(path: Path) -> Dict[str, Any]:
    """Load a YAML file into a dictionary."""

    if not path.exists():
        raise FileNotFoundError(f"Configuration file not found: {path}")

    with path.open("r", encoding="utf-8") as handle:
        data = yaml.safe_load(handle) or {}
    LOGGER.debug("Loaded YAML configuration from %s", path)
    if not isinstance(data, dict):
        raise ValueError(f"Unexpected YAML structure in {path}")
    return data


def load_settings(path: Path) -> SettingsConfig:
    """Parse the settings file into ``SettingsConfig`` and apply env overrides."""

    raw = load_yaml(path)
    budget = int(raw["enumeration_budget_bits"])
    override = os.environ.get(BUDGET_ENV_VAR)
    if override:
        budget = int(override)
        LOGGER.info("Enumeration budget overridden by %s=%d", BUDGET_ENV_VAR, budget)
    if budget < 1:
        raise ValueError(f"Enumeration budget must be >= 1, got {budget}")

    settings = SettingsConfig(
        enumeration_budget_bits=budget,
        gate_budget=int(raw["gate_budget"]),
        enumeration_chunk_bits=int(raw["enumeration_chunk_bits"]),
        invariant_tolerance=float(raw["invariant_tolerance"]),
        identity_tolerance=float(raw["identity_tolerance"]),
        report_dir=_resolve_path(path.parent.parent, raw["report_dir"]),
        default_seed=int(raw["default_seed"]),
        max_workers=int(raw.get("max_workers", 1)),
    )
    LOGGER.debug("Parsed settings: %s", settings)
    return settings


def load_parameters(path: Path) -> DeskParameters:
    """Parse the desk parameter file into ``DeskParameters``."""

    raw = load_yaml(path)
    structure = str(raw["ea_bar"]["hash_structure"]).lower()
    if structure not in {"toeplitz", "full"}:
        raise ValueError(f"Unknown hash structure in {path}: {structure}")
    parameters = DeskParameters(
        max_coin_bits=int(raw["polarization"]["max_coin_bits"]),
        ea_copies=int(raw["ea_bar"]["copies"]),
        ea_security=int(raw["ea_bar"]["security"]),
        hash_structure=structure,
        protocol_repetitions=int(raw["protocol"]["repetitions"]),
        direct_cutoff_qubits=int(raw["quantum"]["direct_cutoff_qubits"]),
    )
    LOGGER.debug("Parsed desk parameters: %s", parameters)
    return parameters


@lru_cache(maxsize=1)
def default_parameters() -> DeskParameters:
    """Desk parameters from the repository config, loaded once."""

    return load_parameters(project_root() / "config" / "parameters.yaml")


def with_budget(settings: SettingsConfig, budget: int) -> SettingsConfig:
    """Copy of ``settings`` with a different enumeration budget."""

    if budget < 1:
        raise ValueError(f"Enumeration budget must be >= 1, got {budget}")
    return SettingsConfig(
        enumeration_budget_bits=budget,
        gate_budget=settings.gate_budget,
        enumeration_chunk_bits=settings.enumeration_chunk_bits,
        invariant_tolerance=settings.invariant_tolerance,
        identity_tolerance=settings.identity_tolerance,
        report_dir=settings.report_dir,
        default_seed=settings.default_seed,
        max_workers=settings.max_workers,
    )


def check_input_budget(n_inputs: int, settings: SettingsConfig, what: str) -> None:
    """Raise ``BudgetExceededError`` when ``n_inputs`` is over budget."""

    if n_inputs > settings.enumeration_budget_bits:
        raise BudgetExceededError(
            f"{what} needs {n_inputs} input bits; budget is {settings.enumeration_budget_bits}",
            required=n_inputs,
            budget=settings.enumeration_budget_bits,
        )


def ensure_directories(*paths: Path) -> None:
    """Create directories if they do not exist."""

    for path in paths:
        if path is None:
            continue
        resolved_path = Path(path)
        resolved_path.mkdir(parents=True, exist_ok=True)
        LOGGER.debug("Ensured directory exists: %s", resolved_path)


def _resolve_path(base: Path, relative: str) -> Path:
    """Resolve a repository-relative path."""

    candidate = Path(relative)
    if candidate.is_absolute():
        return candidate
    return (base / candidate).resolve()


def project_root() -> Path:
    """Return the repository root (two levels up from this file)."""

    return Path(__file__).resolve().parent.parent
