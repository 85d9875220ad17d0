"""Circuit-to-circuit distribution operators."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Sequence, Tuple

import numpy as np
import pandas as pd

from .circuit import (
    CircuitBuilder,
    CircuitDistribution,
    WireRef,
    check_circuit_budget,
    identity_circuit,
    input_block,
)
from .utils import PreconditionError, SettingsConfig, check_input_budget


LOGGER = logging.getLogger(__name__)

GAMMA = "gamma"
GAMMA_PRIME = "gamma_prime"
LEFT = "left"
RIGHT = "right"

# Tag bits prepended by gamma_mixture.
TAG_REAL = "00"
TAG_SPLIT = "01"
TAG_GAMMA = "10"
TAG_GAMMA_PRIME = "11"

HASH_STRUCTURES = ("full", "toeplitz")
_MAX_ENUMERATED_DESCRIPTION_BITS = 20


@dataclass(frozen=True)
class OperatorResult:
    """Circuits produced by an operator plus a provenance record."""

    circuits: Tuple[CircuitDistribution, ...]
    operator: str
    parameters: Dict[str, Any] = field(default_factory=dict)

    @property
    def first(self) -> CircuitDistribution:
        return self.circuits[0]

    @property
    def second(self) -> CircuitDistribution:
        if len(self.circuits) < 2:
            raise PreconditionError(f"{self.operator} produced a single circuit")
        return self.circuits[1]

    @property
    def provenance(self) -> str:
        rendered = ", ".join(f"{key}={value}" for key, value in sorted(self.parameters.items()))
        return f"{self.operator}({rendered})"


def _require_same_width(left: CircuitDistribution, right: CircuitDistribution, what: str) -> None:
    if left.m != right.m:
        raise PreconditionError(f"Width mismatch for {what}: {left.m} vs {right.m}")


def tensor(x: CircuitDistribution, y: CircuitDistribution, settings: SettingsConfig) -> CircuitDistribution:
    """The product distribution ``(X, Y)`` on disjoint input bits."""

    return tensor_all([x, y], settings)


def tensor_all(circuits: Sequence[CircuitDistribution], settings: SettingsConfig) -> CircuitDistribution:
    if not circuits:
        raise PreconditionError("Tensor product of an empty list")
    total_inputs = sum(circuit.n_inputs for circuit in circuits)
    check_input_budget(total_inputs, settings, "Tensor product")

    builder = CircuitBuilder(total_inputs)
    outputs: List[WireRef] = []
    offset = 0
    for circuit in circuits:
        outputs.extend(builder.embed(circuit, builder.inputs(offset, circuit.n_inputs)))
        offset += circuit.n_inputs
    result = builder.build(outputs)
    check_circuit_budget(result, settings, "Tensor product")
    return result


def power(x: CircuitDistribution, k: int, settings: SettingsConfig) -> CircuitDistribution:
    if k < 1:
        raise PreconditionError(f"Tensor power needs k >= 1, got {k}")
    return tensor_all([x] * k, settings)


def _selected_pair(
    left: Tuple[CircuitDistribution, CircuitDistribution],
    right: Tuple[CircuitDistribution, CircuitDistribution],
) -> CircuitDistribution:
    """Pick a selector bit ``b`` and return ``left[b] (x) right[b]``.

    Both choices of each side share the same input bits, so a side needs only
    ``max`` of its two input counts.
    """

    n_left = max(left[0].n_inputs, left[1].n_inputs)
    n_right = max(right[0].n_inputs, right[1].n_inputs)
    builder = CircuitBuilder(1 + n_left + n_right)
    select = builder.inputs(0, 1)[0]
    left_inputs = builder.inputs(1, n_left)
    right_inputs = builder.inputs(1 + n_left, n_right)

    left_bits = builder.mux_bits(
        select, builder.embed(left[0], left_inputs), builder.embed(left[1], left_inputs)
    )
    right_bits = builder.mux_bits(
        select, builder.embed(right[0], right_inputs), builder.embed(right[1], right_inputs)
    )
    return builder.build(left_bits + right_bits)


def or_xor_pair(
    pair0: Tuple[CircuitDistribution, CircuitDistribution],
    pair1: Tuple[CircuitDistribution, CircuitDistribution],
    settings: SettingsConfig,
) -> OperatorResult:
    """Generalised XOR: ``A = b ? (Q, S) : (P, R)`` and ``B = b ? (Q, R) : (P, S)``.

    With ``pair0 = (P, Q)`` and ``pair1 = (R, S)`` this gives
    ``SD(A, B) = SD(P, Q) * SD(R, S)``.
    """

    p, q = pair0
    r, s = pair1
    _require_same_width(p, q, "the first pair")
    _require_same_width(r, s, "the second pair")
    required = 1 + max(p.n_inputs, q.n_inputs) + max(r.n_inputs, s.n_inputs)
    check_input_budget(required, settings, "OR-XOR pair")

    first = _selected_pair((p, q), (r, s))
    second = _selected_pair((p, q), (s, r))
    for circuit in (first, second):
        check_circuit_budget(circuit, settings, "OR-XOR pair")
    LOGGER.debug("Built OR-XOR pair with %d input bits", first.n_inputs)
    return OperatorResult((first, second), "or_xor_pair", {"input_bits": first.n_inputs})


def xor_pair(x0: CircuitDistribution, x1: CircuitDistribution, settings: SettingsConfig) -> OperatorResult:
    """``A``: pick ``b``, sample ``X_b (x) X_b``; ``B``: pick ``b``, sample ``X_b (x) X_{1-b}``."""

    _require_same_width(x0, x1, "XOR")
    result = or_xor_pair((x0, x1), (x0, x1), settings)
    return OperatorResult(result.circuits, "xor_pair", dict(result.parameters))


def t_operator(x: CircuitDistribution, y: CircuitDistribution, settings: SettingsConfig) -> OperatorResult:
    """``T(X, Y) = (U (x) U, V (x) V)`` where ``(U, V) = XOR(X, Y)``."""

    _require_same_width(x, y, "the T operator")
    required = 2 * (1 + 2 * max(x.n_inputs, y.n_inputs))
    check_input_budget(required, settings, "T operator")

    paired = xor_pair(x, y, settings)
    first = tensor(paired.first, paired.first, settings)
    second = tensor(paired.second, paired.second, settings)
    LOGGER.debug("T operator: %d -> %d input bits", max(x.n_inputs, y.n_inputs), first.n_inputs)
    return OperatorResult((first, second), "t_operator", {"input_bits": first.n_inputs})


def coin_threshold(u: Fraction, coin_bits: int) -> int:
    """``s`` with ``u = s / 2**coin_bits``; rejects weights that need more coins."""

    weight = Fraction(u)
    if not 0 <= weight <= 1:
        raise PreconditionError(f"Mixture weight {weight} outside [0, 1]")
    scaled = weight * (1 << coin_bits)
    if scaled.denominator != 1:
        raise PreconditionError(f"u = {weight} is not representable with {coin_bits} coin bits")
    return int(scaled)


def gamma_mixture(
    x: CircuitDistribution,
    u: Fraction,
    tag: str,
    side: str,
    coin_bits: int,
    settings: SettingsConfig,
) -> CircuitDistribution:
    """Mix ``X`` with a reserved symbol using two ``coin_bits``-bit coin groups.

    Each group is real with probability ``u``. Both real gives ``00 || X``;
    exactly one real gives ``01`` followed by the side marker (all zeros on the
    left, all ones on the right); neither gives ``10 || 0^m`` for Γ or
    ``11 || 0^m`` for Γ′. Coins are the lowest-index inputs.
    """

    if tag not in (GAMMA, GAMMA_PRIME):
        raise PreconditionError(f"Unknown tag {tag}; expected {GAMMA} or {GAMMA_PRIME}")
    if side not in (LEFT, RIGHT):
        raise PreconditionError(f"Unknown side {side}; expected {LEFT} or {RIGHT}")
    if coin_bits < 0:
        raise PreconditionError(f"Coin width must be >= 0, got {coin_bits}")
    threshold = coin_threshold(u, coin_bits)
    check_input_budget(2 * coin_bits + x.n_inputs, settings, "Gamma mixture")

    builder = CircuitBuilder(2 * coin_bits + x.n_inputs)
    first = builder.less_than(builder.inputs(0, coin_bits), threshold)
    second = builder.less_than(builder.inputs(coin_bits, coin_bits), threshold)
    sample = builder.embed(x, builder.inputs(2 * coin_bits, x.n_inputs))

    both = builder.and_(first, second)
    split = builder.xor(first, second)
    neither = builder.and_(builder.not_(first), builder.not_(second))
    tag_low = split if tag == GAMMA else builder.not_(both)

    payload = [builder.and_(both, bit) for bit in sample]
    if side == RIGHT:
        payload = [builder.or_(bit, split) for bit in payload]

    result = builder.build([neither, tag_low] + payload)
    check_circuit_budget(result, settings, "Gamma mixture")
    return result


def uniform(bits: int) -> CircuitDistribution:
    """The uniform distribution ``I`` on ``bits`` bits."""

    return identity_circuit(bits)


def append_uniform(x: CircuitDistribution, extra_bits: int, settings: SettingsConfig) -> CircuitDistribution:
    if extra_bits < 0:
        raise PreconditionError(f"extra_bits must be >= 0, got {extra_bits}")
    if extra_bits == 0:
        return x
    return tensor(x, uniform(extra_bits), settings)


@dataclass(frozen=True)
class AffineHashFamily:
    """GF(2) affine maps ``h(x) = A x + c`` from ``in_bits`` to ``out_bits``.

    ``full`` draws every entry of ``A``; ``toeplitz`` draws one bit per
    diagonal. Descriptions are laid out as the matrix bits followed by ``c``.
    """

    in_bits: int
    out_bits: int
    structure: str = "full"

    def __post_init__(self) -> None:
        if self.in_bits < 1 or self.out_bits < 1:
            raise PreconditionError(
                f"Hash dimensions must be positive, got {self.in_bits} -> {self.out_bits}"
            )
        if self.structure not in HASH_STRUCTURES:
            raise PreconditionError(f"Unknown hash structure {self.structure}")

    @property
    def matrix_bits(self) -> int:
        if self.structure == "full":
            return self.in_bits * self.out_bits
        return self.in_bits + self.out_bits - 1

    @property
    def description_bits(self) -> int:
        return self.matrix_bits + self.out_bits

    def entry_index(self, row: int, column: int) -> int:
        if self.structure == "full":
            return row * self.in_bits + column
        return row - column + self.in_bits - 1

    def matrix(self, description: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        description = np.asarray(description, dtype=bool)
        if description.shape != (self.description_bits,):
            raise PreconditionError(
                f"Description must have {self.description_bits} bits, got {description.shape}"
            )
        rows = np.arange(self.out_bits)[:, None]
        columns = np.arange(self.in_bits)[None, :]
        entries = description[self.entry_index(rows, columns)]
        return entries, description[self.matrix_bits:]

    def apply(self, description: np.ndarray, x: np.ndarray) -> np.ndarray:
        entries, offset = self.matrix(description)
        x = np.asarray(x, dtype=np.uint8)
        if x.shape != (self.in_bits,):
            raise PreconditionError(f"Hash input must have {self.in_bits} bits, got {x.shape}")
        return ((entries.astype(np.uint8) @ x) % 2).astype(bool) ^ offset

    def members(self) -> Iterator[np.ndarray]:
        """Every description, in counting order."""

        if self.description_bits > _MAX_ENUMERATED_DESCRIPTION_BITS:
            raise PreconditionError(
                f"Refusing to list 2**{self.description_bits} hash descriptions"
            )
        yield from input_block(self.description_bits, 0, 1 << self.description_bits)

    def emit(
        self,
        builder: CircuitBuilder,
        description: Sequence[WireRef],
        x: Sequence[WireRef],
    ) -> List[WireRef]:
        """Append gates computing ``h(x)`` for the described member."""

        if len(description) != self.description_bits or len(x) != self.in_bits:
            raise PreconditionError(
                f"Hash wiring mismatch: {len(description)} description and {len(x)} input wires"
            )
        outputs: List[WireRef] = []
        for row in range(self.out_bits):
            accumulator = description[self.matrix_bits + row]
            for column in range(self.in_bits):
                term = builder.and_(description[self.entry_index(row, column)], x[column])
                accumulator = builder.xor(accumulator, term)
            outputs.append(accumulator)
        return outputs


def joint_image_counts(family: AffineHashFamily, x: np.ndarray, y: np.ndarray) -> pd.Series:
    """How many members send ``(x, y)`` to each target pair."""

    targets = []
    for description in family.members():
        first = family.apply(description, x)
        second = family.apply(description, y)
        targets.append("".join("1" if bit else "0" for bit in np.concatenate([first, second])))
    return pd.Series(targets).value_counts().sort_index()


def hash_apply(x: CircuitDistribution, family: AffineHashFamily, settings: SettingsConfig) -> CircuitDistribution:
    """Circuit sampling ``(h, h(X(r)))`` with ``h`` drawn from fresh leading inputs."""

    if family.in_bits != x.m:
        raise PreconditionError(f"Hash takes {family.in_bits} bits but X outputs {x.m}")
    total = family.description_bits + x.n_inputs
    check_input_budget(total, settings, "Hash application")

    builder = CircuitBuilder(total)
    description = builder.inputs(0, family.description_bits)
    sample = builder.embed(x, builder.inputs(family.description_bits, x.n_inputs))
    result = builder.build(list(description) + family.emit(builder, description, sample))
    check_circuit_budget(result, settings, "Hash application")
    return result


def new_upper_bound(delta_first: Fraction, delta_second: Fraction) -> Fraction:
    """``1 - (1 - d1)(1 - d2)`` for ``SD(X (x) Z, Y (x) T)``."""

    return 1 - (1 - Fraction(delta_first)) * (1 - Fraction(delta_second))


def additive_upper_bound(deltas: Sequence[Fraction]) -> Fraction:
    return sum((Fraction(delta) for delta in deltas), Fraction(0))


def direct_product_disjointness(delta: Fraction, k: int) -> Fraction:
    return 1 - (1 - Fraction(delta)) ** k


def direct_product_sd_lower_bound(delta: float, k: int) -> float:
    return 1.0 - 2.0 * math.exp(-k * float(delta) ** 2 / 2.0)
