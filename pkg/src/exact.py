"""Exact distributions by exhaustive enumeration, and the statistics over them."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Mapping, Union

import numpy as np
import pandas as pd

from .circuit import CircuitDistribution, iter_input_blocks, require_valid, run_batch
from .utils import NaturalImageError, PreconditionError, SettingsConfig, check_input_budget


LOGGER = logging.getLogger(__name__)

# Output widths up to this many bits are packed into uint64 keys.
_PACKED_KEY_BITS = 63


@dataclass(frozen=True, eq=False)
class ExactDistribution:
    """Integer counts over ``m``-bit outputs; mass of ``x`` is ``counts[x] / 2**n``."""

    m: int
    n: int
    counts: pd.Series

    @property
    def denominator(self) -> int:
        return 1 << self.n

    @property
    def support(self) -> List[str]:
        return list(self.counts.index)

    @property
    def mass(self) -> Dict[str, Fraction]:
        return {key: Fraction(int(count), self.denominator) for key, count in self.counts.items()}

    def probability(self, x: str) -> Fraction:
        return Fraction(int(self.counts.get(x, 0)), self.denominator)


@dataclass(frozen=True)
class ProbabilisticCircuit:
    """A circuit whose first ``n_args`` inputs are arguments and the rest are coins."""

    base: CircuitDistribution
    n_args: int

    def __post_init__(self) -> None:
        if not 0 <= self.n_args <= self.base.n_inputs:
            raise PreconditionError(
                f"Argument count {self.n_args} outside 0..{self.base.n_inputs}"
            )

    @property
    def n_coins(self) -> int:
        return self.base.n_inputs - self.n_args

    @property
    def m(self) -> int:
        return self.base.m


AnyCircuit = Union[CircuitDistribution, ProbabilisticCircuit]


def output_keys(outputs: np.ndarray) -> np.ndarray:
    """Hashable per-row keys for a boolean output block."""

    width = outputs.shape[1]
    if width <= _PACKED_KEY_BITS:
        keys = np.zeros(outputs.shape[0], dtype=np.uint64)
        for column in range(width):
            keys = (keys << np.uint64(1)) | outputs[:, column].astype(np.uint64)
        return keys
    chars = np.ascontiguousarray(np.where(outputs, 49, 48).astype(np.uint8))
    return chars.view(f"S{width}").ravel()


def keys_to_bits(keys: pd.Index, width: int) -> List[str]:
    if width <= _PACKED_KEY_BITS:
        return [format(int(key), f"0{width}b") for key in keys]
    return [key.decode("ascii") for key in keys]


def enumerate_circuit(circuit: CircuitDistribution, settings: SettingsConfig) -> ExactDistribution:
    """Exact output distribution of ``circuit`` over all ``2**n_inputs`` inputs."""

    require_valid(circuit)
    check_input_budget(circuit.n_inputs, settings, "Enumeration")
    blocks = [block for _, block in iter_input_blocks(circuit.n_inputs, settings.enumeration_chunk_bits)]
    LOGGER.debug(
        "Enumerating %d inputs of a %d-gate circuit in %d blocks",
        1 << circuit.n_inputs,
        circuit.n_gates,
        len(blocks),
    )

    def count_block(block: np.ndarray) -> pd.Series:
        keys, counts = np.unique(output_keys(run_batch(circuit, block)), return_counts=True)
        return pd.Series(counts.astype(np.int64), index=keys)

    if settings.max_workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            partials = list(pool.map(count_block, blocks))
    else:
        partials = [count_block(block) for block in blocks]

    merged = pd.concat(partials).groupby(level=0).sum()
    counts = pd.Series(
        merged.to_numpy(dtype=np.int64),
        index=pd.Index(keys_to_bits(merged.index, circuit.m), name="bitstring"),
        name="count",
    ).sort_index()
    return ExactDistribution(m=circuit.m, n=circuit.n_inputs, counts=counts)


def from_counts(counts: Mapping[str, int], n: int) -> ExactDistribution:
    """Build a distribution from explicit counts summing to ``2**n``."""

    series = pd.Series({key: int(value) for key, value in counts.items() if value}, dtype=np.int64)
    if series.empty:
        raise PreconditionError("A distribution needs nonzero mass")
    widths = {len(key) for key in series.index}
    if len(widths) != 1:
        raise PreconditionError(f"Mixed output widths: {sorted(widths)}")
    if (series < 0).any() or int(series.sum()) != 1 << n:
        raise PreconditionError(f"Counts must be nonnegative and sum to 2**{n}")
    series.index.name = "bitstring"
    return ExactDistribution(m=widths.pop(), n=n, counts=series.rename("count").sort_index())


def _check_widths(x: ExactDistribution, y: ExactDistribution, what: str) -> None:
    if x.m != y.m:
        raise PreconditionError(f"Width mismatch for {what}: {x.m} vs {y.m}")


def statistical_difference(x: ExactDistribution, y: ExactDistribution) -> Fraction:
    """Half the L1 distance, exactly."""

    _check_widths(x, y, "statistical difference")
    union = x.counts.index.union(y.counts.index)
    left = x.counts.reindex(union, fill_value=0)
    right = y.counts.reindex(union, fill_value=0)
    total_bits = x.n + y.n
    if total_bits <= 60:
        scaled = np.left_shift(left.to_numpy(np.int64), y.n) - np.left_shift(right.to_numpy(np.int64), x.n)
        total = int(np.abs(scaled).sum())
    else:
        total = sum(
            abs((int(a) << y.n) - (int(b) << x.n)) for a, b in zip(left.tolist(), right.tolist())
        )
    return Fraction(total, 1 << (total_bits + 1))


def statistical_closeness(x: ExactDistribution, y: ExactDistribution) -> Fraction:
    return 1 - statistical_difference(x, y)


def disjointness(x: ExactDistribution, y: ExactDistribution) -> Fraction:
    """Fraction of X's inputs whose image lies outside the support of Y."""

    _check_widths(x, y, "disjointness")
    outside = ~x.counts.index.isin(y.counts.index)
    return Fraction(int(x.counts[outside].sum()), x.denominator)


def mut_disjointness(x: ExactDistribution, y: ExactDistribution) -> Fraction:
    return min(disjointness(x, y), disjointness(y, x))


def pair_statistics(x: ExactDistribution, y: ExactDistribution) -> Dict[str, Fraction]:
    return {
        "sd": statistical_difference(x, y),
        "disj_xy": disjointness(x, y),
        "disj_yx": disjointness(y, x),
        "mut_disj": mut_disjointness(x, y),
    }


def fraction_statistical_difference(
    p: Mapping[str, Fraction], q: Mapping[str, Fraction]
) -> Fraction:
    """SD between two explicit exact mass maps (masses need not be dyadic)."""

    keys = set(p) | set(q)
    total = sum((abs(p.get(key, Fraction(0)) - q.get(key, Fraction(0))) for key in keys), Fraction(0))
    return total / 2


def shannon_entropy(x: ExactDistribution) -> float:
    probabilities = x.counts.to_numpy(dtype=float) / float(x.denominator)
    return max(-float(np.sum(probabilities * np.log2(probabilities))), 0.0)


def preimage_weights(x: ExactDistribution) -> pd.Series:
    """``log2`` of the preimage count of every support element."""

    return pd.Series(np.log2(x.counts.to_numpy(dtype=float)), index=x.counts.index, name="weight")


def preimage_log_count(circuit: CircuitDistribution, x: str, settings: SettingsConfig) -> float:
    """``log2 |{r : C(r) = x}|``; ``-inf`` when ``x`` has no preimage."""

    distribution = enumerate_circuit(circuit, settings)
    if len(x) != distribution.m:
        raise PreconditionError(f"Width mismatch: output has {distribution.m} bits, got {len(x)}")
    count = int(distribution.counts.get(x, 0))
    return math.log2(count) if count else -math.inf


def typicality_mass(x: ExactDistribution, threshold: float, tolerance: float = 1e-9) -> Fraction:
    """Mass of the outputs whose log-probability is within ``threshold`` of ``-H(X)``."""

    entropy = shannon_entropy(x)
    log_mass = np.log2(x.counts.to_numpy(dtype=float)) - x.n
    typical = np.abs(log_mass + entropy) <= threshold + tolerance
    return Fraction(int(x.counts[typical].sum()), x.denominator)


def _as_probabilistic(circuit: AnyCircuit) -> ProbabilisticCircuit:
    if isinstance(circuit, ProbabilisticCircuit):
        return circuit
    return ProbabilisticCircuit(circuit, circuit.n_inputs)


def conditional_table(circuit: AnyCircuit, settings: SettingsConfig) -> pd.DataFrame:
    """Counts of each output per argument, over all coin settings."""

    probabilistic = _as_probabilistic(circuit)
    base = probabilistic.base
    require_valid(base)
    check_input_budget(base.n_inputs, settings, "Conditional enumeration")
    shift = np.uint64(probabilistic.n_coins)

    frames: List[pd.DataFrame] = []
    for start, block in iter_input_blocks(base.n_inputs, settings.enumeration_chunk_bits):
        arguments = np.arange(start, start + block.shape[0], dtype=np.uint64) >> shift
        frame = pd.DataFrame({"arg": arguments, "key": output_keys(run_batch(base, block))})
        frames.append(frame.value_counts().rename("count").reset_index())

    table = pd.concat(frames).groupby(["arg", "key"], as_index=False)["count"].sum()
    table["output"] = keys_to_bits(pd.Index(table["key"]), base.m)
    return table.drop(columns="key").sort_values(["arg", "output"]).reset_index(drop=True)


def natural_image_table(circuit: AnyCircuit, settings: SettingsConfig) -> pd.DataFrame:
    """Per argument: the natural image and its coin count.

    Raises ``NaturalImageError`` for the first argument whose most likely
    output does not exceed probability 1/2.
    """

    probabilistic = _as_probabilistic(circuit)
    table = conditional_table(probabilistic, settings)
    best = table.loc[table.groupby("arg")["count"].idxmax()].set_index("arg").sort_index()
    coin_space = 1 << probabilistic.n_coins
    weak = best[best["count"] * 2 <= coin_space]
    if not weak.empty:
        argument = format(int(weak.index[0]), f"0{probabilistic.n_args}b") if probabilistic.n_args else ""
        raise NaturalImageError(
            f"natural image ill-defined for argument '{argument}': "
            f"best output has probability {Fraction(int(weak['count'].iloc[0]), coin_space)}",
            argument=argument,
        )
    return best


def epsilon_of(circuit: AnyCircuit, settings: SettingsConfig) -> Fraction:
    """Smallest epsilon for which the circuit is epsilon-probabilistic."""

    probabilistic = _as_probabilistic(circuit)
    best = natural_image_table(probabilistic, settings)
    return 1 - Fraction(int(best["count"].min()), 1 << probabilistic.n_coins)


def natural_image(circuit: AnyCircuit, x: str, settings: SettingsConfig) -> str:
    probabilistic = _as_probabilistic(circuit)
    if len(x) != probabilistic.n_args:
        raise PreconditionError(f"Argument length mismatch: expected {probabilistic.n_args}, got {len(x)}")
    best = natural_image_table(probabilistic, settings)
    return str(best.loc[int(x, 2) if x else 0, "output"])


def natural_image_distribution(circuit: AnyCircuit, settings: SettingsConfig) -> ExactDistribution:
    """Distribution of ``Nat(x)`` for a uniform argument ``x``."""

    probabilistic = _as_probabilistic(circuit)
    best = natural_image_table(probabilistic, settings)
    counts = best.groupby("output").size()
    return from_counts(counts.to_dict(), probabilistic.n_args)


def hit_probability(x: AnyCircuit, y: AnyCircuit, settings: SettingsConfig) -> Fraction:
    """Average over X's inputs of the best achievable ``Pr[Y(arg) = X(r)]``."""

    target = _as_probabilistic(y)
    natural_image_table(target, settings)
    source = enumerate_circuit(_as_probabilistic(x).base, settings)
    if source.m != target.m:
        raise PreconditionError(f"Width mismatch for hit probability: {source.m} vs {target.m}")

    best_by_output = conditional_table(target, settings).groupby("output")["count"].max()
    shared = source.counts.index.intersection(best_by_output.index)
    weighted = sum(
        int(source.counts[key]) * int(best_by_output[key]) for key in shared
    )
    return Fraction(weighted, source.denominator << target.n_coins)


def disjointness_prob(x: AnyCircuit, y: AnyCircuit, settings: SettingsConfig) -> Fraction:
    """Natural-image disjointness: fraction of X's arguments with ``Nat_X`` outside ``Nat(Y)``."""

    source = natural_image_distribution(x, settings)
    target = natural_image_distribution(y, settings)
    return disjointness(source, target)


def distribution_frame(x: ExactDistribution) -> pd.DataFrame:
    """Export rows ``bitstring,numerator,denominator_power``."""

    return pd.DataFrame(
        {
            "bitstring": x.counts.index.astype(str),
            "numerator": x.counts.to_numpy(dtype=np.int64),
            "denominator_power": np.full(len(x.counts), x.n, dtype=np.int64),
        }
    )
