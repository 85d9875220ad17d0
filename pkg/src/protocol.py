"""Dealer / Prover / Verifier runs of the non-interactive protocol with help."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from .circuit import (
    CircuitBuilder,
    CircuitDistribution,
    bits_to_array,
    evaluate,
    input_block,
    require_valid,
    run_batch,
)
from .exact import disjointness, enumerate_circuit, fraction_statistical_difference, statistical_difference
from .reductions import PromisePair, Regime
from .utils import PreconditionError, SettingsConfig, check_input_budget


LOGGER = logging.getLogger(__name__)

HONEST = "honest"
OPTIMAL = "optimal"
ACCEPT = "accept"
REJECT = "reject"
ABORT = "abort"

ProverStrategy = Union[str, Callable[[str], Optional[str]]]


@dataclass(frozen=True)
class ProtocolSpec:
    """Circuits of one protocol instance.

    ``verifier`` reads ``help || message || coins`` and outputs one accept bit;
    ``simulator`` outputs ``help || message``. A custom prover maps a help
    string to a message, or ``None`` to abort.
    """

    dealer: CircuitDistribution
    simulator: CircuitDistribution
    verifier: CircuitDistribution
    help_width: int
    message_width: int
    verifier_coin_bits: int = 0
    prover_strategy: ProverStrategy = HONEST
    regime: str = "unknown"

    def __post_init__(self) -> None:
        for circuit in (self.dealer, self.simulator, self.verifier):
            require_valid(circuit)
        if self.message_width < 1:
            raise PreconditionError("Protocol messages need at least one bit")
        if self.dealer.m != self.help_width:
            raise PreconditionError(f"Dealer outputs {self.dealer.m} bits, help is {self.help_width}")
        if self.simulator.m != self.help_width + self.message_width:
            raise PreconditionError(
                f"Simulator outputs {self.simulator.m} bits, expected {self.help_width + self.message_width}"
            )
        expected = self.help_width + self.message_width + self.verifier_coin_bits
        if self.verifier.n_inputs != expected or self.verifier.m != 1:
            raise PreconditionError(
                f"Verifier must read {expected} bits and output 1, "
                f"got {self.verifier.n_inputs} -> {self.verifier.m}"
            )
        if isinstance(self.prover_strategy, str) and self.prover_strategy not in (HONEST, OPTIMAL):
            raise PreconditionError(f"Unknown prover strategy {self.prover_strategy}")


@dataclass(frozen=True)
class ProtocolRun:
    help: str
    message: Optional[str]
    verdict: str
    simulated_view: Tuple[str, str]

    def __post_init__(self) -> None:
        if self.verdict == ACCEPT and self.message is None:
            raise PreconditionError("An aborted run cannot be accepted")


@dataclass(frozen=True)
class ProtocolMeasurement:
    completeness: Fraction
    soundness: Fraction
    deviation: Fraction
    abort_mass: Fraction

    def as_dict(self) -> Dict[str, Fraction]:
        return {
            "completeness": self.completeness,
            "soundness": self.soundness,
            "deviation": self.deviation,
            "abort_mass": self.abort_mass,
        }


def polarized_regime(
    x_prime: CircuitDistribution, y_prime: CircuitDistribution, k: int, settings: SettingsConfig
) -> Regime:
    """Yes when ``SD <= 2^-k``, No when ``Disj(X', Y') >= 1 - 2^-k``; anything else is rejected."""

    if k < 1:
        raise PreconditionError(f"Polarization exponent k must be >= 1, got {k}")
    left = enumerate_circuit(x_prime, settings)
    right = enumerate_circuit(y_prime, settings)
    gap = Fraction(1, 1 << k)
    sd = statistical_difference(left, right)
    if sd <= gap:
        return Regime.YES
    disj = disjointness(left, right)
    if disj >= 1 - gap:
        return Regime.NO
    raise PreconditionError(
        f"IID protocol needs a pair polarized to (2^-{k}, 1 - 2^-{k}); got SD={sd}, Disj={disj}"
    )


def build_iid_protocol(pair: PromisePair, settings: SettingsConfig, k: Optional[int] = None) -> ProtocolSpec:
    """Help is ``x' <- X'``; the prover sends ``(0, r)`` with ``Y'(r) = x'``.

    With ``k`` the pair must be polarized to ``(2^-k, 1 - 2^-k)`` and the
    protocol carries the regime that polarization certifies.
    """

    x_prime, y_prime = pair.x, pair.y
    if not isinstance(x_prime, CircuitDistribution) or not isinstance(y_prime, CircuitDistribution):
        raise PreconditionError("The IID protocol needs deterministic circuits")
    if x_prime.m != y_prime.m:
        raise PreconditionError(f"Width mismatch: X' has {x_prime.m} bits, Y' has {y_prime.m}")
    regime = pair.regime if k is None else polarized_regime(x_prime, y_prime, k, settings)
    help_width = y_prime.m
    n = y_prime.n_inputs
    check_input_budget(1 + n, settings, "Prover inversion")

    verifier = CircuitBuilder(help_width + 1 + n)
    help_bits = verifier.inputs(0, help_width)
    flag = verifier.inputs(help_width, 1)[0]
    image = verifier.embed(y_prime, verifier.inputs(help_width + 1, n))
    accepted = verifier.and_(verifier.not_(flag), verifier.equals(image, help_bits))

    simulator = CircuitBuilder(n)
    preimage = simulator.inputs(0, n)
    simulated = simulator.embed(y_prime, preimage) + [simulator.const(0)] + preimage

    return ProtocolSpec(
        dealer=x_prime,
        simulator=simulator.build(simulated),
        verifier=verifier.build([accepted]),
        help_width=help_width,
        message_width=1 + n,
        regime=regime.value,
    )


def acceptance_table(spec: ProtocolSpec, helps: List[str], settings: SettingsConfig) -> Dict[str, np.ndarray]:
    """Per help value, the number of verifier coin settings accepting each message."""

    width = spec.message_width + spec.verifier_coin_bits
    spread = math.ceil(math.log2(max(len(helps), 1)))
    check_input_budget(width + spread, settings, "Prover search")
    rows = input_block(width, 0, 1 << width)
    coin_space = 1 << spec.verifier_coin_bits

    def counts_for(help_value: str) -> np.ndarray:
        prefix = np.tile(bits_to_array(help_value), (rows.shape[0], 1))
        accepted = run_batch(spec.verifier, np.hstack([prefix, rows]))[:, 0]
        return accepted.reshape(1 << spec.message_width, coin_space).sum(axis=1)

    if settings.max_workers > 1 and len(helps) > 1:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            tables = list(pool.map(counts_for, helps))
    else:
        tables = [counts_for(help_value) for help_value in helps]
    return dict(zip(helps, tables))


def prover_messages(spec: ProtocolSpec, help_value: str, accepts: np.ndarray) -> List[int]:
    """Message indices the prover picks uniformly from; empty means abort.

    The honest prover sends any message the verifier can accept, which for the
    IID protocol is a uniform ``(0, r)`` with ``Y'(r) = x'``. The optimal prover
    keeps only the messages with the highest acceptance count. With a
    deterministic verifier the two coincide.
    """

    if callable(spec.prover_strategy):
        message = spec.prover_strategy(help_value)
        if message is None:
            return []
        if len(message) != spec.message_width:
            raise PreconditionError(f"Prover message '{message}' has the wrong width")
        return [int(message, 2)]
    if spec.prover_strategy == HONEST:
        return [int(index) for index in np.flatnonzero(accepts > 0)]
    best = int(accepts.max())
    if best == 0:
        return []
    return [int(index) for index in np.flatnonzero(accepts == best)]


def _view_key(help_value: str, message: Optional[str]) -> str:
    return f"{help_value}:{ABORT if message is None else message}"


def measure(spec: ProtocolSpec, settings: SettingsConfig) -> ProtocolMeasurement:
    """Exact completeness, optimal-prover soundness and simulator deviation."""

    dealer = enumerate_circuit(spec.dealer, settings)
    helps = list(dealer.counts.index)
    table = acceptance_table(spec, helps, settings)
    coin_space = 1 << spec.verifier_coin_bits

    completeness = Fraction(0)
    soundness = Fraction(0)
    abort_mass = Fraction(0)
    real_view: Dict[str, Fraction] = {}
    for help_value in helps:
        weight = Fraction(int(dealer.counts[help_value]), dealer.denominator)
        accepts = table[help_value]
        soundness += weight * Fraction(int(accepts.max()), coin_space)

        chosen = prover_messages(spec, help_value, accepts)
        if not chosen:
            abort_mass += weight
            real_view[_view_key(help_value, None)] = weight
            continue
        share = weight / len(chosen)
        for index in chosen:
            completeness += share * Fraction(int(accepts[index]), coin_space)
            key = _view_key(help_value, format(index, f"0{spec.message_width}b"))
            real_view[key] = real_view.get(key, Fraction(0)) + share

    simulator = enumerate_circuit(spec.simulator, settings)
    simulated = {
        _view_key(view[: spec.help_width], view[spec.help_width:]): Fraction(int(count), simulator.denominator)
        for view, count in simulator.counts.items()
    }
    result = ProtocolMeasurement(
        completeness=completeness,
        soundness=soundness,
        deviation=fraction_statistical_difference(real_view, simulated),
        abort_mass=abort_mass,
    )
    LOGGER.info(
        "Protocol measured: completeness=%s soundness=%s deviation=%s abort=%s",
        result.completeness,
        result.soundness,
        result.deviation,
        result.abort_mass,
    )
    return result


def _random_bits(rng: np.random.Generator, count: int) -> str:
    return "".join(str(int(bit)) for bit in rng.integers(0, 2, size=count))


def run_protocol(spec: ProtocolSpec, rng: np.random.Generator, settings: SettingsConfig) -> ProtocolRun:
    """Sample one execution together with one simulator output."""

    help_value = evaluate(spec.dealer, _random_bits(rng, spec.dealer.n_inputs))
    accepts = acceptance_table(spec, [help_value], settings)[help_value]
    chosen = prover_messages(spec, help_value, accepts)

    message: Optional[str] = None
    verdict = REJECT
    if chosen:
        message = format(int(rng.choice(chosen)), f"0{spec.message_width}b")
        coins = _random_bits(rng, spec.verifier_coin_bits)
        if evaluate(spec.verifier, help_value + message + coins) == "1":
            verdict = ACCEPT

    view = evaluate(spec.simulator, _random_bits(rng, spec.simulator.n_inputs))
    return ProtocolRun(
        help=help_value,
        message=message,
        verdict=verdict,
        simulated_view=(view[: spec.help_width], view[spec.help_width:]),
    )
