"""Tests for src.quantum."""

from __future__ import annotations

import numpy as np
import pytest

from src.generate import make_rng
from src.quantum import (
    QSCU_NO,
    QSCU_UNKNOWN,
    QSCU_YES,
    DensityMatrix,
    conjugate,
    density_from_pairs,
    density_to_pairs,
    depolarized,
    diagonal_state,
    fact_check_entropy_bounds,
    pure_state,
    pure_zero,
    qscu_regime,
    qscu_to_qea_map,
    random_density_matrix,
    random_unitary,
    totally_mixed,
    trace_distance,
    von_neumann_entropy,
)
from src.utils import DeskParameters, InvariantViolationError, PreconditionError


def _parameters(cutoff: int = 16) -> DeskParameters:
    return DeskParameters(
        max_coin_bits=8,
        ea_copies=2,
        ea_security=1,
        hash_structure="toeplitz",
        protocol_repetitions=3,
        direct_cutoff_qubits=cutoff,
    )


def test_trace_distance_basics() -> None:
    mixed = totally_mixed(2)

    assert trace_distance(mixed, mixed) == pytest.approx(0.0, abs=1e-12)
    assert trace_distance(pure_zero(2), mixed) == pytest.approx(0.75)
    assert trace_distance(pure_state([1, 0]), pure_state([0, 1])) == pytest.approx(1.0)


def test_trace_distance_rejects_dimension_mismatch() -> None:
    with pytest.raises(PreconditionError, match="Dimension mismatch"):
        trace_distance(totally_mixed(1), totally_mixed(2))


def test_entropy_of_standard_states() -> None:
    assert von_neumann_entropy(totally_mixed(2)) == pytest.approx(2.0)
    assert von_neumann_entropy(pure_zero(3)) == pytest.approx(0.0, abs=1e-9)
    assert von_neumann_entropy(diagonal_state([0.5, 0.5, 0.0, 0.0])) == pytest.approx(1.0)


def test_density_invariants_are_enforced() -> None:
    with pytest.raises(InvariantViolationError, match="not Hermitian"):
        DensityMatrix(1, np.array([[0.5, 0.1], [0.3, 0.5]]))
    with pytest.raises(InvariantViolationError, match="trace"):
        DensityMatrix(1, np.eye(2))
    with pytest.raises(InvariantViolationError, match="negative eigenvalue"):
        DensityMatrix(1, np.diag([1.5, -0.5]))
    with pytest.raises(InvariantViolationError, match="does not match"):
        DensityMatrix(2, np.eye(2) / 2)


def test_density_entries_are_read_only() -> None:
    state = totally_mixed(1)

    with pytest.raises(ValueError):
        state.entries[0, 0] = 1.0


def test_unitary_invariance_and_triangle_inequality() -> None:
    rng = make_rng(5)
    for _ in range(20):
        x = random_density_matrix(2, rng)
        y = random_density_matrix(2, rng)
        z = random_density_matrix(2, rng)
        unitary = random_unitary(2, rng)

        assert von_neumann_entropy(conjugate(x, unitary)) == pytest.approx(von_neumann_entropy(x), abs=1e-9)
        assert trace_distance(conjugate(x, unitary), conjugate(y, unitary)) == pytest.approx(
            trace_distance(x, y), abs=1e-9
        )
        assert trace_distance(x, z) <= trace_distance(x, y) + trace_distance(y, z) + 1e-9


def test_random_density_matrix_rank() -> None:
    state = random_density_matrix(2, make_rng(3), rank=1)

    assert von_neumann_entropy(state) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(PreconditionError, match="Rank"):
        random_density_matrix(2, make_rng(3), rank=5)


def test_fact_check_is_tight_on_extreme_states() -> None:
    mixed = fact_check_entropy_bounds(totally_mixed(3))
    pure = fact_check_entropy_bounds(pure_zero(3))

    assert mixed.distance == pytest.approx(0.0, abs=1e-12)
    assert mixed.lower_bound == pytest.approx(3 * (1 - 1 / 8))
    assert mixed.upper_margin == pytest.approx(0.0, abs=1e-9)
    assert pure.lower_margin == pytest.approx(0.0, abs=1e-9)
    assert pure.upper_margin == pytest.approx(0.0, abs=1e-9)
    assert pure.lower_holds() and pure.upper_holds()


def test_fact_check_upper_implication_can_fail() -> None:
    check = fact_check_entropy_bounds(diagonal_state([0.75, 0.25]))

    assert check.distance == pytest.approx(0.25)
    assert check.lower_holds()
    assert not check.upper_holds()
    assert check.as_dict()["upper_holds"] is False


def test_fact_check_lower_implication_on_random_states() -> None:
    rng = make_rng(2024)
    for _ in range(200):
        qubits = int(rng.integers(1, 5))
        check = fact_check_entropy_bounds(random_density_matrix(qubits, rng))
        assert check.lower_holds()


def test_qscu_regime_thresholds() -> None:
    assert qscu_regime(0.2, 5) == QSCU_YES
    assert qscu_regime(0.9, 5) == QSCU_NO
    assert qscu_regime(0.5, 5) == QSCU_UNKNOWN
    assert qscu_regime(0.5, 2) == QSCU_YES


def test_qscu_regime_rejects_a_single_qubit() -> None:
    with pytest.raises(PreconditionError, match="at least 2 qubits"):
        qscu_regime(0.3, 1)
    with pytest.raises(PreconditionError, match="at least 2 qubits"):
        qscu_to_qea_map(pure_zero(1), _parameters())


def test_qscu_below_cutoff_is_decided_directly() -> None:
    yes = qscu_to_qea_map(totally_mixed(3), _parameters())
    no = qscu_to_qea_map(pure_zero(3), _parameters())

    assert yes.resolved_directly and yes.regime == QSCU_YES
    assert yes.state.qubits == 2 and yes.threshold == 1
    assert no.resolved_directly and no.regime == QSCU_NO
    assert no.state.qubits == 1 and no.threshold == 1


def test_qscu_map_keeps_state_above_cutoff() -> None:
    parameters = _parameters(cutoff=1)

    yes = qscu_to_qea_map(totally_mixed(4), parameters)
    no = qscu_to_qea_map(pure_zero(4), parameters)

    assert not yes.resolved_directly
    assert yes.threshold == 1
    assert yes.entropy >= yes.threshold + 1
    assert no.threshold == 1
    assert no.entropy <= no.threshold - 1 + 1e-9


@pytest.mark.parametrize("p", np.linspace(0.0, 1.0, 11).tolist())
def test_lowered_cutoff_maps_yes_states_to_high_entropy(p: float) -> None:
    instance = qscu_to_qea_map(depolarized(pure_zero(4), p), _parameters(cutoff=4))

    assert not instance.resolved_directly
    assert instance.threshold == 1
    assert instance.state.qubits == 4
    if instance.regime == QSCU_YES:
        assert instance.entropy >= instance.threshold + 1 - 1e-9


@pytest.mark.parametrize("p", np.linspace(0.0, 1.0, 11).tolist())
def test_depolarized_family_maps_consistently(p: float) -> None:
    state = depolarized(pure_zero(3), p)

    instance = qscu_to_qea_map(state, _parameters())
    target_entropy = von_neumann_entropy(instance.state)

    if instance.regime == QSCU_YES:
        assert target_entropy >= instance.threshold + 1 - 1e-9
    elif instance.regime == QSCU_NO:
        assert target_entropy <= instance.threshold - 1 + 1e-9
    else:
        assert not instance.resolved_directly


def test_density_pairs_round_trip() -> None:
    state = random_density_matrix(2, make_rng(9))

    restored = density_from_pairs(density_to_pairs(state))

    assert np.allclose(restored.entries, state.entries)
    with pytest.raises(InvariantViolationError, match="not 2\\^n"):
        density_from_pairs([[[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]] * 3)
