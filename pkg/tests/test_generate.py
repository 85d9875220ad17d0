"""Tests for src.generate."""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

import pytest

from src.circuit import serialize, validate
from src.exact import (
    disjointness,
    enumerate_circuit,
    epsilon_of,
    mut_disjointness,
    shannon_entropy,
    statistical_difference,
)
from src.generate import (
    EA_INJECTIVE,
    EA_INSTANCE,
    EA_POINT,
    NO_IID,
    RANDOM_CIRCUIT,
    YES_IID,
    ea_instance,
    generate,
    injective_circuit,
    make_rng,
    no_iid,
    one_sided_pair,
    overlap_pair,
    random_circuit,
    random_probabilistic_circuit,
    yes_iid,
)
from src.reductions import Problem, Regime
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


def test_overlap_pair_statistics_are_equal() -> None:
    settings = _settings()
    x, y = overlap_pair(3, 5, mask=6)
    left, right = enumerate_circuit(x, settings), enumerate_circuit(y, settings)

    assert x.m == y.m == 5
    assert statistical_difference(left, right) == Fraction(3, 8)


def test_overlap_pair_rejects_bad_overlap() -> None:
    with pytest.raises(PreconditionError, match="outside"):
        overlap_pair(2, 5)


def test_yes_iid_certificate_respects_a() -> None:
    instance = yes_iid(4, 0.25, 0.75, make_rng(1), _settings(), seed=1)

    assert instance.certificate.regime == "yes"
    assert instance.certificate.statistics["sd"] <= Fraction(1, 4)
    assert instance.pair.problem == Problem.IID
    assert instance.pair.regime == Regime.YES


def test_no_iid_certificate_respects_b() -> None:
    instance = no_iid(4, 0.25, 0.75, make_rng(2), _settings(), seed=2)
    disjoint = no_iid(3, 0.25, 0.75, make_rng(2), _settings(), disjoint=True)

    assert instance.certificate.statistics["disj"] >= Fraction(3, 4)
    assert instance.certificate.statistics["mut_disj"] == instance.certificate.statistics["disj"]
    assert disjoint.certificate.statistics["mut_disj"] == 1


def test_one_sided_pair_disjointness_depends_on_direction() -> None:
    settings = _settings()
    x, y = one_sided_pair(3, 2, mask=5)
    left, right = enumerate_circuit(x, settings), enumerate_circuit(y, settings)

    assert disjointness(left, right) == Fraction(3, 4)
    assert disjointness(right, left) == 0
    assert mut_disjointness(left, right) == 0
    assert statistical_difference(left, right) == Fraction(3, 4)
    with pytest.raises(PreconditionError, match="outside"):
        one_sided_pair(2, 3)


def test_no_iid_one_sided_certificate() -> None:
    instance = no_iid(3, 0.1, 0.6, make_rng(4), _settings(), one_sided=True)
    statistics = instance.certificate.statistics

    assert instance.certificate.params["cleared"] == 2
    assert statistics["disj"] == Fraction(3, 4)
    assert statistics["disj_reverse"] == 0
    assert statistics["mut_disj"] == 0
    assert instance.pair.regime == Regime.NO
    with pytest.raises(PreconditionError, match="unachievable"):
        no_iid(2, 0.1, 0.9, make_rng(4), _settings(), one_sided=True)
    with pytest.raises(PreconditionError, match="unachievable"):
        no_iid(2, 0.1, 1.0, make_rng(4), _settings(), one_sided=True)


def test_iid_generators_reject_inverted_promise() -> None:
    with pytest.raises(PreconditionError, match="a < b"):
        yes_iid(3, 0.5, 0.25, make_rng(0), _settings())


def test_certificate_matches_recomputation() -> None:
    settings = _settings()
    instance = generate(YES_IID, {"n": 3, "a": 0.5, "b": 0.9}, 42, settings)

    x, y = instance.circuits["x"], instance.circuits["y"]
    recomputed = statistical_difference(enumerate_circuit(x, settings), enumerate_circuit(y, settings))

    assert recomputed == instance.certificate.statistics["sd"]
    assert instance.certificate.as_dict()["seed"] == 42


def test_generate_is_deterministic_per_seed() -> None:
    settings = _settings()
    first = generate(NO_IID, {"n": 3, "a": 0.1, "b": 0.5}, 9, settings)
    second = generate(NO_IID, {"n": 3, "a": 0.1, "b": 0.5}, 9, settings)

    assert serialize(first.circuits["x"]) == serialize(second.circuits["x"])
    assert first.certificate == second.certificate


def test_ea_instance_kinds_have_expected_entropy() -> None:
    settings = _settings()

    point = ea_instance(EA_POINT, 3, 1, make_rng(4), settings)
    injective = ea_instance(EA_INJECTIVE, 3, 1, make_rng(4), settings)

    assert point.certificate.statistics["entropy"] == 0.0
    assert point.pair.regime == Regime.NO
    assert injective.certificate.statistics["entropy"] == pytest.approx(3.0)
    assert injective.pair.regime == Regime.YES


def test_ea_instance_rejects_unachievable_regime() -> None:
    with pytest.raises(PreconditionError, match="requested regime unachievable"):
        ea_instance(EA_POINT, 3, 1, make_rng(4), _settings(), requested=Regime.YES)


def test_injective_circuit_is_a_bijection() -> None:
    distribution = enumerate_circuit(injective_circuit(4, mask=9), _settings())

    assert len(distribution.counts) == 16
    assert shannon_entropy(distribution) == pytest.approx(4.0)


def test_random_circuit_is_valid() -> None:
    circuit = random_circuit(4, 12, 3, make_rng(8))

    assert validate(circuit).ok
    assert circuit.n_inputs == 4
    assert circuit.m == 3
    assert circuit.n_gates == 12


def test_random_probabilistic_circuit_noise_bound() -> None:
    circuit = random_probabilistic_circuit(2, 2, 3, 1, make_rng(6))

    assert circuit.n_coins == 3
    assert epsilon_of(circuit, _settings()) <= Fraction(1, 8)
    with pytest.raises(PreconditionError, match="no natural image"):
        random_probabilistic_circuit(2, 2, 2, 2, make_rng(6))


def test_generate_dispatches_all_kinds() -> None:
    settings = _settings()

    ea = generate(EA_INSTANCE, {"m": 3, "t": 1, "ea_kind": EA_INJECTIVE, "regime": "yes"}, 3, settings)
    circuit = generate(RANDOM_CIRCUIT, {"n": 3, "gates": 6, "m": 2}, 3, settings)

    assert ea.certificate.regime == "yes"
    assert circuit.certificate.statistics["support"] >= 1
    with pytest.raises(PreconditionError, match="Unknown generator kind"):
        generate("mystery", {}, 3, settings)
