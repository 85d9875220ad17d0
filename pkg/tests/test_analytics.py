"""Tests for the property sweeps."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Callable

import pandas as pd
import pytest

from src.analytics import (
    SWEEP_NUMERIC_COLUMNS,
    EA_BAR_MARGIN,
    compiler_sweep,
    direct_product_sweep,
    ea_bar_separation,
    ea_bar_sweep,
    leftover_hash_sweep,
    new_upper_bound_sweep,
    polarization_sweep,
    protocol_sweep,
    quantum_fact_sweep,
    run_sweep,
    run_trials,
    sd_to_disj_sweep,
    xor_sweep,
)
from src.quality import check_sweep_table
from src.utils import DeskParameters, PreconditionError, SettingsConfig


def _settings(max_workers: int = 1) -> SettingsConfig:
    return SettingsConfig(
        enumeration_budget_bits=24,
        gate_budget=20000,
        enumeration_chunk_bits=16,
        invariant_tolerance=1e-10,
        identity_tolerance=1e-9,
        report_dir=Path("reports"),
        default_seed=7,
        max_workers=max_workers,
    )


def _parameters() -> DeskParameters:
    return DeskParameters(
        max_coin_bits=8,
        ea_copies=2,
        ea_security=1,
        hash_structure="toeplitz",
        protocol_repetitions=3,
        direct_cutoff_qubits=16,
    )


def test_run_trials_sorts_and_types_rows() -> None:
    table = run_trials(lambda index, rng: {"value": float(rng.random()), "holds": 1}, 5, 3, _settings(), "toy")

    assert table["trial"].tolist() == [0, 1, 2, 3, 4]
    assert table["trial"].dtype == "int64"
    assert table["holds"].dtype == bool
    check_sweep_table(table, ["value"])


def test_run_trials_rejects_empty_sweep() -> None:
    with pytest.raises(PreconditionError, match="at least one trial"):
        run_trials(lambda index, rng: {"holds": True}, 0, 3, _settings(), "toy")


def test_xor_sweep_holds_and_is_deterministic() -> None:
    first = xor_sweep(15, 11, _settings())
    second = xor_sweep(15, 11, _settings(max_workers=3))

    assert first["holds"].all()
    assert first["sd_exact"].all()
    pd.testing.assert_frame_equal(first, second)
    check_sweep_table(first, SWEEP_NUMERIC_COLUMNS["xor"])


def test_new_upper_bound_sweep_holds() -> None:
    table = new_upper_bound_sweep(20, 5, _settings())

    assert table["holds"].all()
    assert (table["new_bound"] <= table["additive_bound"]).all()
    assert (table["new_bound"] < table["additive_bound"]).any()
    assert table["strictly_tighter"].any()


def test_direct_product_sweep_is_exact() -> None:
    table = direct_product_sweep(10, 2, _settings())

    assert table["holds"].all()
    assert {"disj_k1", "disj_k2", "disj_k3"} <= set(table.columns)


def test_sd_to_disj_sweep_holds_across_noise_levels() -> None:
    table = sd_to_disj_sweep(12, 4, _settings())

    assert table["holds"].all()
    assert sorted(table["noise"].unique().tolist()) == [0.0, 0.125, 0.25]
    assert (table["epsilon"] <= table["noise"]).all()


def test_protocol_sweep_holds() -> None:
    table = protocol_sweep(12, 6, _settings())

    assert table["holds"].all()
    assert (table["soundness"] == 1 - table["disj"]).all()
    assert set(table["family"]) == {"random", "overlap", "one-sided"}
    one_sided = table[table["family"] == "one-sided"]
    assert (one_sided["disj"] != one_sided["disj_reverse"]).all()


def test_quantum_fact_sweep_lower_bound_holds() -> None:
    table = quantum_fact_sweep(48, 8, _settings())

    assert table["holds"].all()
    assert set(table["family"]) == {"random", "pure", "depolarized", "low-rank"}
    pure = table[table["family"] == "pure"]
    assert pure["upper_margin"].abs().max() < 1e-6


def test_leftover_hash_distance_decreases_with_density() -> None:
    table = leftover_hash_sweep(_settings())

    assert table["density"].tolist() == ["1/2", "3/4", "1"]
    assert table["holds"].all()
    assert table["sd"].is_monotonic_decreasing


def test_ea_bar_sweep_separates_regimes() -> None:
    table = ea_bar_sweep(8, 1, _settings(), _parameters())

    yes = table[table["expected"] == "yes"]
    no = table[table["expected"] == "no"]
    assert table["holds"].all()
    assert (table["regime"] == table["expected"]).all()
    assert len(yes) == len(no) == 4
    assert set(table["kind"]) == {"point", "injective", "random"}
    assert yes["sd"].max() <= 0.125
    assert no["disj"].min() >= 0.75
    assert ea_bar_separation(table) >= EA_BAR_MARGIN


def test_ea_bar_separation_needs_both_sides() -> None:
    table = pd.DataFrame({"expected": ["yes"], "sd": [0.1], "disj": [0.1]})

    assert pd.isna(ea_bar_separation(table))


def test_compiler_sweep_meets_polarized_bounds() -> None:
    table = compiler_sweep(40, 9, _settings())

    yes = table[table["regime"] == "yes"]
    no = table[table["regime"] == "no"]
    assert table["holds"].all()
    assert len(yes) == len(no) == 20
    assert yes["sd"].max() <= 0.25
    assert (yes["sd"] <= yes["deviation"] + yes["bottom_mass"]).all()
    assert no["disjointness_prob"].min() >= 0.75
    check_sweep_table(table, SWEEP_NUMERIC_COLUMNS["compiler"])


def test_polarization_sweep_stays_within_bounds() -> None:
    table = polarization_sweep(2, 3, _settings(), _parameters())

    assert table["holds"].all()
    assert table["input_bits"].tolist() == [22, 22]


def test_run_sweep_rejects_unknown_name() -> None:
    with pytest.raises(PreconditionError, match="Unknown sweep"):
        run_sweep("nonsense", 1, 1, _settings(), _parameters())


def test_run_sweep_dispatches_by_name() -> None:
    table = run_sweep("direct-product", 3, 1, replace(_settings(), max_workers=2), _parameters())

    assert len(table) == 3
    check_sweep_table(table, SWEEP_NUMERIC_COLUMNS["direct-product"])


@pytest.mark.slow
@pytest.mark.parametrize(
    ("sweep", "trials"),
    [
        (xor_sweep, 500),
        (new_upper_bound_sweep, 500),
        (direct_product_sweep, 200),
        (sd_to_disj_sweep, 200),
        (protocol_sweep, 100),
        (quantum_fact_sweep, 10000),
    ],
)
def test_sweep_holds_at_acceptance_count(sweep: Callable[..., pd.DataFrame], trials: int) -> None:
    table = sweep(trials, 2024, _settings(max_workers=4))

    assert len(table) == trials
    assert table["holds"].all()


@pytest.mark.slow
def test_new_upper_bound_is_strictly_tighter_somewhere_at_acceptance_count() -> None:
    table = new_upper_bound_sweep(500, 2024, _settings(max_workers=4))

    assert table["strictly_tighter"].any()


@pytest.mark.slow
def test_ea_bar_separation_at_acceptance_count() -> None:
    table = ea_bar_sweep(40, 2024, _settings(max_workers=4), _parameters())

    assert table["holds"].all()
    assert (table["expected"] == "yes").sum() == (table["expected"] == "no").sum() == 20
    assert ea_bar_separation(table) >= EA_BAR_MARGIN


@pytest.mark.slow
def test_compiler_sweep_at_acceptance_count() -> None:
    table = compiler_sweep(80, 2024, _settings(max_workers=4))

    assert table["holds"].all()
    assert (table["regime"] == "no").sum() == 40
    assert table.loc[table["regime"] == "no", "disjointness_prob"].min() >= 0.75


@pytest.mark.slow
def test_polarization_mixture_stage_at_acceptance_count() -> None:
    table = polarization_sweep(100, 2024, _settings(max_workers=4), _parameters(), iterations=0)

    assert table["holds"].all()
    assert set(table["regime"]) == {"yes", "no"}
    assert (table["input_bits"] == 5).all()
