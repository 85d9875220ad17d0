"""Tests for src.protocol."""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import pytest

from src.circuit import CircuitBuilder, constant_circuit, identity_circuit
from src.generate import make_rng, one_sided_pair, overlap_pair
from src.protocol import (
    ACCEPT,
    HONEST,
    OPTIMAL,
    REJECT,
    ProtocolRun,
    ProtocolSpec,
    build_iid_protocol,
    measure,
    polarized_regime,
    run_protocol,
)
from src.reductions import Problem, PromisePair, Regime
from src.utils import PreconditionError, SettingsConfig


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


def _protocol(overlap: int, regime: Regime = Regime.UNKNOWN) -> ProtocolSpec:
    x, y = overlap_pair(1, overlap)
    return build_iid_protocol(PromisePair(x, y, Problem.IID, {}, regime), _settings())


def test_build_iid_protocol_widths() -> None:
    spec = _protocol(1, Regime.NO)

    assert spec.help_width == 3
    assert spec.message_width == 2
    assert spec.verifier.n_inputs == 5
    assert spec.regime == "no"


def test_identical_pair_is_complete_sound_and_simulatable() -> None:
    result = measure(_protocol(2), _settings())

    assert result.completeness == 1
    assert result.soundness == 1
    assert result.deviation == 0
    assert result.abort_mass == 0


def test_partly_disjoint_pair_matches_disjointness() -> None:
    result = measure(_protocol(1), _settings())

    # Disj(X', Y') = 1/2 and SD(X', Y') = 1/2 for this pair.
    assert result.soundness == Fraction(1, 2)
    assert result.completeness == Fraction(1, 2)
    assert result.abort_mass == Fraction(1, 2)
    assert result.deviation == Fraction(1, 2)
    assert result.deviation <= Fraction(1, 2) + result.abort_mass


def test_optimal_prover_matches_honest_without_verifier_coins() -> None:
    spec = _protocol(1)

    honest = measure(spec, _settings())
    optimal = measure(replace(spec, prover_strategy=OPTIMAL), _settings())

    assert optimal.as_dict() == honest.as_dict()


def test_aborting_prover_is_never_accepted() -> None:
    spec = replace(_protocol(2), prover_strategy=lambda help_value: None)

    result = measure(spec, _settings())

    assert result.completeness == 0
    assert result.abort_mass == 1
    assert result.deviation == 1


def test_custom_prover_message_width_is_checked() -> None:
    spec = replace(_protocol(2), prover_strategy=lambda help_value: "0")

    with pytest.raises(PreconditionError, match="wrong width"):
        measure(spec, _settings())


def test_protocol_spec_rejects_mismatched_circuits() -> None:
    spec = _protocol(1)

    with pytest.raises(PreconditionError, match="Dealer outputs"):
        replace(spec, dealer=identity_circuit(2))
    with pytest.raises(PreconditionError, match="Simulator outputs"):
        replace(spec, simulator=constant_circuit("0"))
    with pytest.raises(PreconditionError, match="Unknown prover strategy"):
        replace(spec, prover_strategy="greedy")


def test_build_iid_protocol_rejects_width_mismatch() -> None:
    pair = PromisePair(identity_circuit(1), identity_circuit(2), Problem.IID)

    with pytest.raises(PreconditionError, match="Width mismatch"):
        build_iid_protocol(pair, _settings())


def test_run_protocol_is_seeded() -> None:
    spec = _protocol(2)

    first = [run_protocol(spec, rng, _settings()) for rng in [make_rng(11)] * 5]
    second = [run_protocol(spec, rng, _settings()) for rng in [make_rng(11)] * 5]

    assert first == second
    assert all(run.verdict == ACCEPT for run in first)
    assert all(run.simulated_view[0] in {"000", "001"} for run in first)


def test_run_protocol_aborts_outside_the_image() -> None:
    spec = _protocol(0)
    runs = [run_protocol(spec, make_rng(seed), _settings()) for seed in range(8)]

    for run in runs:
        if run.help.startswith("1"):
            assert run.message is None
            assert run.verdict == REJECT


def test_aborted_run_cannot_be_accepted() -> None:
    with pytest.raises(PreconditionError, match="aborted run"):
        ProtocolRun(help="000", message=None, verdict=ACCEPT, simulated_view=("000", "00"))


def _coin_protocol() -> ProtocolSpec:
    # Verifier accepts when the message bit or its own coin is 1.
    verifier = CircuitBuilder(3)
    _, message, coin = verifier.inputs(0, 3)
    return ProtocolSpec(
        dealer=constant_circuit("0"),
        simulator=constant_circuit("01"),
        verifier=verifier.build([verifier.or_(message, coin)]),
        help_width=1,
        message_width=1,
        verifier_coin_bits=1,
    )


def test_honest_prover_differs_from_optimal_with_verifier_coins() -> None:
    spec = _coin_protocol()

    honest = measure(replace(spec, prover_strategy=HONEST), _settings())
    optimal = measure(replace(spec, prover_strategy=OPTIMAL), _settings())

    assert honest.completeness == Fraction(3, 4)
    assert honest.deviation == Fraction(1, 2)
    assert optimal.completeness == 1
    assert optimal.deviation == 0
    assert honest.soundness == optimal.soundness == 1


@pytest.mark.parametrize("cleared", [1, 2, 3])
def test_one_sided_pair_protocol_aborts_off_the_image(cleared: int) -> None:
    x, y = one_sided_pair(3, cleared, mask=5)
    spec = build_iid_protocol(PromisePair(x, y, Problem.IID, {}, Regime.NO), _settings())
    share = Fraction(1, 1 << cleared)

    result = measure(spec, _settings())

    assert result.soundness == share
    assert result.completeness == share
    assert result.abort_mass == 1 - share
    assert result.deviation <= (1 - share) + result.abort_mass


def test_one_sided_pair_reversed_is_always_answered() -> None:
    x, y = one_sided_pair(3, 2, mask=5)
    spec = build_iid_protocol(PromisePair(y, x, Problem.IID), _settings())

    result = measure(spec, _settings())

    assert result.soundness == 1
    assert result.completeness == 1
    assert result.abort_mass == 0
    assert result.deviation == Fraction(3, 4)


def test_polarized_regime_labels_pairs() -> None:
    settings = _settings()
    same_x, same_y = overlap_pair(1, 2)
    half_x, half_y = overlap_pair(1, 1)
    apart_x, apart_y = overlap_pair(1, 0)

    assert polarized_regime(same_x, same_y, 3, settings) == Regime.YES
    assert polarized_regime(half_x, half_y, 1, settings) == Regime.YES
    assert polarized_regime(apart_x, apart_y, 4, settings) == Regime.NO
    with pytest.raises(PreconditionError, match="polarized"):
        polarized_regime(half_x, half_y, 2, settings)
    with pytest.raises(PreconditionError, match="k must be >= 1"):
        polarized_regime(same_x, same_y, 0, settings)


def test_build_iid_protocol_with_k_sets_regime() -> None:
    x, y = overlap_pair(1, 0)

    spec = build_iid_protocol(PromisePair(x, y, Problem.IID), _settings(), k=2)

    assert spec.regime == "no"
