"""Frame validation using Pandera."""

from __future__ import annotations

import logging
from typing import Dict, Iterable

import pandas as pd
import pandera as pa
from pandera import Check


LOGGER = logging.getLogger(__name__)

# Columns every property sweep table carries.
SWEEP_BASE_COLUMNS = ("trial", "holds")


def check_distribution_frame(df: pd.DataFrame, m: int) -> None:
    """Validate an exported ``bitstring,numerator,denominator_power`` frame."""

    LOGGER.debug("Validating distribution frame with %d rows", df.shape[0])
    if df.empty:
        raise ValueError("Quality check failed: distribution frame is empty.")

    schema = _build_distribution_schema(m)
    schema.validate(df, lazy=True)

    powers = df["denominator_power"].unique()
    if len(powers) != 1:
        raise ValueError(f"Distribution frame mixes denominators: {sorted(powers)}")
    if int(df["numerator"].sum()) != 1 << int(powers[0]):
        raise ValueError("Distribution frame numerators do not sum to the denominator.")


def _build_distribution_schema(m: int) -> pa.DataFrameSchema:
    return pa.DataFrameSchema(
        {
            "bitstring": pa.Column(
                pa.String,
                nullable=False,
                unique=True,
                checks=[Check.str_matches(r"^[01]*$"), Check.str_length(m, m)],
            ),
            "numerator": pa.Column(pa.Int64, nullable=False, checks=Check.gt(0)),
            "denominator_power": pa.Column(pa.Int64, nullable=False, checks=Check.ge(0)),
        },
        strict=True,
        name="DistributionFrame",
    )


def check_sweep_table(df: pd.DataFrame, numeric_columns: Iterable[str] = ()) -> None:
    """Validate a property sweep table: unique sorted trials and boolean verdicts."""

    if df.empty:
        raise ValueError("Quality check failed: sweep table is empty.")
    columns: Dict[str, pa.Column] = {
        "trial": pa.Column(pa.Int64, nullable=False, unique=True, checks=Check.ge(0)),
        "holds": pa.Column(pa.Bool, nullable=False),
    }
    for column in numeric_columns:
        columns[column] = pa.Column(pa.Float, nullable=False, coerce=True)
    schema = pa.DataFrameSchema(columns, strict=False, name="SweepTable")
    schema.validate(df, lazy=True)
    if not df["trial"].is_monotonic_increasing:
        raise ValueError("Sweep table is not sorted by trial.")
