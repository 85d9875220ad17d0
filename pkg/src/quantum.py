"""Desk-scale density-matrix checks: trace distance, entropy and the QSCU to QEA map."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.linalg import eigvalsh
from scipy.stats import unitary_group

from .utils import DeskParameters, InvariantViolationError, PreconditionError


LOGGER = logging.getLogger(__name__)

INVARIANT_TOLERANCE = 1e-10

QSCU_YES = "yes"
QSCU_NO = "no"
QSCU_UNKNOWN = "unknown"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix on ``qubits`` qubits."""

    qubits: int
    entries: np.ndarray
    tolerance: float = INVARIANT_TOLERANCE

    def __post_init__(self) -> None:
        matrix = np.array(self.entries, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)
        validate_density(self)

    @property
    def dimension(self) -> int:
        return 1 << self.qubits

    def eigenvalues(self) -> np.ndarray:
        return eigvalsh(self.entries)


def validate_density(state: DensityMatrix) -> None:
    dimension = 1 << state.qubits
    matrix = state.entries
    if state.qubits < 1:
        raise InvariantViolationError(f"Density matrices need at least one qubit, got {state.qubits}")
    if matrix.shape != (dimension, dimension):
        raise InvariantViolationError(
            f"Matrix shape {matrix.shape} does not match {state.qubits} qubits"
        )
    if not np.allclose(matrix, matrix.conj().T, rtol=0.0, atol=state.tolerance):
        raise InvariantViolationError("Density matrix is not Hermitian")
    trace = complex(np.trace(matrix))
    if abs(trace - 1.0) > state.tolerance:
        raise InvariantViolationError(f"Density matrix trace is {trace.real:.12f}, expected 1")
    lowest = float(eigvalsh(matrix)[0])
    if lowest < -state.tolerance:
        raise InvariantViolationError(f"Density matrix has negative eigenvalue {lowest:.3e}")


def _same_dimension(x: DensityMatrix, y: DensityMatrix) -> None:
    if x.qubits != y.qubits:
        raise PreconditionError(f"Dimension mismatch: {x.qubits} vs {y.qubits} qubits")


def trace_distance(x: DensityMatrix, y: DensityMatrix) -> float:
    """Half the sum of the absolute eigenvalues of ``X - Y``."""

    _same_dimension(x, y)
    difference = x.entries - y.entries
    return float(min(max(0.5 * np.sum(np.abs(eigvalsh(difference))), 0.0), 1.0))


def von_neumann_entropy(x: DensityMatrix) -> float:
    """``-sum λ log2 λ`` with eigenvalues clipped at zero."""

    eigenvalues = np.clip(x.eigenvalues(), 0.0, None)
    positive = eigenvalues[eigenvalues > 0.0]
    return max(-float(np.sum(positive * np.log2(positive))), 0.0)


def totally_mixed(qubits: int) -> DensityMatrix:
    dimension = 1 << qubits
    return DensityMatrix(qubits, np.eye(dimension, dtype=complex) / dimension)


def pure_state(vector: Sequence[complex]) -> DensityMatrix:
    """``|v><v|`` for a normalised copy of ``vector``."""

    ket = np.asarray(vector, dtype=complex)
    qubits = int(round(math.log2(len(ket)))) if len(ket) else 0
    if len(ket) != 1 << qubits or qubits < 1:
        raise PreconditionError(f"State vector length {len(ket)} is not a power of two >= 2")
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise PreconditionError("State vector is zero")
    ket = ket / norm
    return DensityMatrix(qubits, np.outer(ket, ket.conj()))


def pure_zero(qubits: int) -> DensityMatrix:
    ket = np.zeros(1 << qubits, dtype=complex)
    ket[0] = 1.0
    return pure_state(ket)


def depolarized(state: DensityMatrix, p: float) -> DensityMatrix:
    """``(1 - p) X + p I``."""

    if not 0.0 <= p <= 1.0:
        raise PreconditionError(f"Depolarizing weight must be in [0, 1], got {p}")
    mixed = totally_mixed(state.qubits)
    return DensityMatrix(state.qubits, (1.0 - p) * state.entries + p * mixed.entries)


def diagonal_state(probabilities: Sequence[float]) -> DensityMatrix:
    weights = np.asarray(probabilities, dtype=float)
    qubits = int(round(math.log2(len(weights)))) if len(weights) else 0
    if len(weights) != 1 << qubits or qubits < 1:
        raise PreconditionError(f"Spectrum length {len(weights)} is not a power of two >= 2")
    return DensityMatrix(qubits, np.diag(weights).astype(complex))


def random_unitary(qubits: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(1 << qubits, random_state=rng)


def conjugate(state: DensityMatrix, unitary: np.ndarray) -> DensityMatrix:
    """``U X U^dagger``."""

    unitary = np.asarray(unitary, dtype=complex)
    if unitary.shape != state.entries.shape:
        raise PreconditionError(f"Unitary shape {unitary.shape} does not match the state")
    rotated = unitary @ state.entries @ unitary.conj().T
    return DensityMatrix(state.qubits, 0.5 * (rotated + rotated.conj().T))


def random_density_matrix(
    qubits: int, rng: np.random.Generator, rank: Optional[int] = None
) -> DensityMatrix:
    """Normalised Wishart product ``G G^dagger`` with a complex Gaussian ``G``."""

    dimension = 1 << qubits
    columns = dimension if rank is None else rank
    if not 1 <= columns <= dimension:
        raise PreconditionError(f"Rank must be in 1..{dimension}, got {rank}")
    gaussian = rng.standard_normal((dimension, columns)) + 1j * rng.standard_normal((dimension, columns))
    product = gaussian @ gaussian.conj().T
    product = 0.5 * (product + product.conj().T)
    return DensityMatrix(qubits, product / np.trace(product).real)


@dataclass(frozen=True)
class EntropyBoundCheck:
    """Both trace-distance/entropy implications evaluated at ``α = β = ‖X - I‖``.

    The lower implication is a theorem. The upper one fails for some mixed
    states and is only recorded with its margin; it is tight on pure states.
    """

    qubits: int
    distance: float
    entropy: float
    lower_bound: float
    upper_bound: float

    @property
    def lower_margin(self) -> float:
        return self.entropy - self.lower_bound

    @property
    def upper_margin(self) -> float:
        return self.upper_bound - self.entropy

    def lower_holds(self, tolerance: float = 1e-9) -> bool:
        return self.lower_margin >= -tolerance

    def upper_holds(self, tolerance: float = 1e-9) -> bool:
        return self.upper_margin >= -tolerance

    def as_dict(self) -> Dict[str, Any]:
        return {
            "qubits": self.qubits,
            "distance": self.distance,
            "entropy": self.entropy,
            "lower_bound": self.lower_bound,
            "upper_bound": self.upper_bound,
            "lower_margin": self.lower_margin,
            "upper_margin": self.upper_margin,
            "lower_holds": self.lower_holds(),
            "upper_holds": self.upper_holds(),
        }


def fact_check_entropy_bounds(x: DensityMatrix) -> EntropyBoundCheck:
    n = x.qubits
    distance = trace_distance(x, totally_mixed(n))
    entropy = von_neumann_entropy(x)
    lower = n * (1.0 - distance - 2.0 ** -n)
    remaining = 1.0 - distance
    upper = n + math.log2(remaining) if remaining > 0.0 else -math.inf
    return EntropyBoundCheck(n, distance, entropy, lower, upper)


@dataclass(frozen=True, eq=False)
class QeaInstance:
    """QEA instance produced from a QSCU instance."""

    state: DensityMatrix
    threshold: int
    regime: str
    resolved_directly: bool
    distance: float
    entropy: float


def qscu_regime(distance: float, qubits: int, tolerance: float = 1e-9) -> str:
    """Yes within ``1/n`` of the totally mixed state, No at ``1 - 1/n`` or beyond.

    The two ranges overlap for a single qubit, so ``n >= 2`` is required. At
    ``n = 2`` they meet at distance 1/2, which is labelled Yes.
    """

    if qubits < 2:
        raise PreconditionError(f"QSCU needs at least 2 qubits, got {qubits}")
    if distance <= 1.0 / qubits + tolerance:
        return QSCU_YES
    if distance >= 1.0 - 1.0 / qubits - tolerance:
        return QSCU_NO
    return QSCU_UNKNOWN


def qscu_to_qea_map(x: DensityMatrix, parameters: DeskParameters) -> QeaInstance:
    """Map ``X`` to ``(X, n - 3)``; below the cutoff, decide directly.

    Small instances are replaced by a fixed QEA Yes instance (totally mixed on
    two qubits, threshold 1) or No instance (a pure qubit, threshold 1).
    """

    n = x.qubits
    distance = trace_distance(x, totally_mixed(n))
    entropy = von_neumann_entropy(x)
    regime = qscu_regime(distance, n)

    if n < parameters.direct_cutoff_qubits and regime != QSCU_UNKNOWN:
        target = totally_mixed(2) if regime == QSCU_YES else pure_zero(1)
        LOGGER.info("QSCU instance on %d qubits decided directly: %s", n, regime)
        return QeaInstance(target, 1, regime, True, distance, entropy)

    return QeaInstance(x, n - 3, regime, False, distance, entropy)


def density_to_pairs(x: DensityMatrix) -> list:
    """Row-major ``[[re, im], ...]`` rows for JSON export."""

    return [[[float(value.real), float(value.imag)] for value in row] for row in x.entries]


def density_from_pairs(rows: Sequence[Sequence[Sequence[float]]]) -> DensityMatrix:
    matrix = np.array([[complex(pair[0], pair[1]) for pair in row] for row in rows], dtype=complex)
    dimension = matrix.shape[0]
    qubits = int(round(math.log2(dimension))) if dimension else 0
    if dimension != 1 << qubits or matrix.shape != (dimension, dimension):
        raise InvariantViolationError(f"Matrix shape {matrix.shape} is not 2^n x 2^n")
    return DensityMatrix(qubits, matrix)
