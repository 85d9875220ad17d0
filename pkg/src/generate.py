"""Seeded instance generators with enumeration-backed certificates."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .circuit import GATE_ARITY, CircuitBuilder, CircuitDistribution, WireRef, constant_circuit
from .exact import (
    ProbabilisticCircuit,
    disjointness,
    enumerate_circuit,
    mut_disjointness,
    shannon_entropy,
    statistical_difference,
)
from .reductions import Problem, PromisePair, Regime
from .utils import PreconditionError, SettingsConfig, check_input_budget


LOGGER = logging.getLogger(__name__)

YES_IID = "yes-IID"
NO_IID = "no-IID"
EA_INSTANCE = "ea-instance"
RANDOM_CIRCUIT = "random-circuit"
GENERATOR_KINDS = (YES_IID, NO_IID, EA_INSTANCE, RANDOM_CIRCUIT)

EA_POINT = "point"
EA_INJECTIVE = "injective"
EA_RANDOM = "random"

_RANDOM_OPS = ("AND", "OR", "XOR", "NOT")


def make_rng(seed: int) -> np.random.Generator:
    """Generators are always PCG64 so instances are reproducible from (kind, params, seed)."""

    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Certificate:
    kind: str
    seed: Optional[int]
    params: Dict[str, Any]
    statistics: Dict[str, Any]
    regime: str

    def as_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "params": dict(self.params),
            "statistics": dict(self.statistics),
            "regime": self.regime,
        }


@dataclass(frozen=True)
class GeneratedInstance:
    circuits: Dict[str, CircuitDistribution]
    certificate: Certificate
    pair: Optional[PromisePair] = None
    extras: Dict[str, Any] = field(default_factory=dict)


def overlap_pair(n: int, overlap: int, mask: int = 0) -> Tuple[CircuitDistribution, CircuitDistribution]:
    """``X(r) = (e, 0, r^mask)`` and ``Y(r) = (e, e, r^mask)`` with ``e = [r >= overlap]``.

    The two agree on the ``overlap`` inputs below the threshold and are
    disjoint elsewhere, so SD, both Disj directions and mut-Disj all equal
    ``1 - overlap / 2**n``.
    """

    if n < 1:
        raise PreconditionError(f"Overlap pairs need n >= 1, got {n}")
    if not 0 <= overlap <= 1 << n:
        raise PreconditionError(f"Overlap {overlap} outside 0..{1 << n}")
    circuits = []
    for second_flag in (False, True):
        builder = CircuitBuilder(n)
        r = builder.inputs(0, n)
        escaped = builder.not_(builder.less_than(r, overlap))
        payload = [
            builder.not_(bit) if (mask >> (n - 1 - position)) & 1 else bit
            for position, bit in enumerate(r)
        ]
        middle = escaped if second_flag else builder.const(0)
        circuits.append(builder.build([escaped, middle] + payload))
    return circuits[0], circuits[1]


def one_sided_pair(n: int, cleared: int, mask: int = 0) -> Tuple[CircuitDistribution, CircuitDistribution]:
    """``X(r) = r ^ mask`` and ``Y(r)`` the same with the top ``cleared`` bits of ``r`` forced to 0.

    ``Im(Y)`` is a ``2**-cleared`` share of ``Im(X)``: ``Disj(X, Y)`` and SD
    equal ``1 - 2**-cleared`` while ``Disj(Y, X)`` and mut-Disj are 0.
    """

    if not 0 <= cleared <= n:
        raise PreconditionError(f"Cleared bit count {cleared} outside 0..{n}")
    circuits = []
    for clear in (0, cleared):
        builder = CircuitBuilder(n)
        r = builder.inputs(0, n)
        outputs = []
        for position, bit in enumerate(r):
            flip = (mask >> (n - 1 - position)) & 1
            if position < clear:
                outputs.append(builder.const(flip))
            else:
                outputs.append(builder.not_(bit) if flip else bit)
        circuits.append(builder.build(outputs))
    return circuits[0], circuits[1]


def _pair_statistics(x: CircuitDistribution, y: CircuitDistribution, settings: SettingsConfig) -> Dict[str, Fraction]:
    left = enumerate_circuit(x, settings)
    right = enumerate_circuit(y, settings)
    return {
        "sd": statistical_difference(left, right),
        "disj": disjointness(left, right),
        "disj_reverse": disjointness(right, left),
        "mut_disj": mut_disjointness(left, right),
    }


def _check_promise(a: float, b: float) -> None:
    if not 0 <= a < b <= 1:
        raise PreconditionError(f"IID instances need 0 <= a < b <= 1, got a={a}, b={b}")


def yes_iid(
    n: int, a: float, b: float, rng: np.random.Generator, settings: SettingsConfig, seed: Optional[int] = None
) -> GeneratedInstance:
    """Pair with ``SD <= a`` drawn from the overlap family."""

    _check_promise(a, b)
    check_input_budget(n, settings, "yes-IID generator")
    size = 1 << n
    low = math.ceil((1 - Fraction(a)) * size)
    overlap = int(rng.integers(low, size + 1))
    mask = int(rng.integers(0, size))
    x, y = overlap_pair(n, overlap, mask)
    statistics = _pair_statistics(x, y, settings)
    if statistics["sd"] > Fraction(a):
        raise PreconditionError(f"requested regime unachievable: SD {statistics['sd']} > a={a}")
    pair = PromisePair(x, y, Problem.IID, {"a": a, "b": b}, Regime.YES)
    certificate = Certificate(
        YES_IID, seed, {"n": n, "a": a, "b": b, "overlap": overlap, "mask": mask}, statistics, Regime.YES.value
    )
    return GeneratedInstance({"x": x, "y": y}, certificate, pair)


def no_iid(
    n: int,
    a: float,
    b: float,
    rng: np.random.Generator,
    settings: SettingsConfig,
    disjoint: bool = False,
    seed: Optional[int] = None,
    one_sided: bool = False,
) -> GeneratedInstance:
    """Pair with ``Disj >= b``.

    The overlap family has mut-Disj equal to Disj; ``disjoint`` forces overlap
    0. ``one_sided`` draws from :func:`one_sided_pair` instead, where only
    ``Disj(X, Y)`` is large and the reverse direction is 0.
    """

    _check_promise(a, b)
    check_input_budget(n, settings, "no-IID generator")
    size = 1 << n
    mask = int(rng.integers(0, size))
    if one_sided:
        if Fraction(b) >= 1:
            raise PreconditionError("requested regime unachievable: a one-sided pair never reaches Disj 1")
        cleared = 1
        while 1 - Fraction(1, 1 << cleared) < Fraction(b):
            cleared += 1
        if cleared > n:
            raise PreconditionError(f"requested regime unachievable: Disj >= {b} needs {cleared} of {n} bits cleared")
        x, y = one_sided_pair(n, cleared, mask)
        params: Dict[str, Any] = {"n": n, "a": a, "b": b, "cleared": cleared, "mask": mask}
    else:
        high = math.floor((1 - Fraction(b)) * size)
        overlap = 0 if disjoint else int(rng.integers(0, high + 1))
        x, y = overlap_pair(n, overlap, mask)
        params = {"n": n, "a": a, "b": b, "overlap": overlap, "mask": mask}
    statistics = _pair_statistics(x, y, settings)
    if statistics["disj"] < Fraction(b):
        raise PreconditionError(f"requested regime unachievable: Disj {statistics['disj']} < b={b}")
    pair = PromisePair(x, y, Problem.IID, {"a": a, "b": b}, Regime.NO)
    certificate = Certificate(NO_IID, seed, params, statistics, Regime.NO.value)
    return GeneratedInstance({"x": x, "y": y}, certificate, pair)


def random_circuit(n_inputs: int, n_gates: int, m: int, rng: np.random.Generator) -> CircuitDistribution:
    """Random gates over earlier wires; outputs are drawn from all wires."""

    if n_inputs < 1 or m < 1 or n_gates < 0:
        raise PreconditionError(
            f"Random circuits need n_inputs >= 1, m >= 1, n_gates >= 0 (got {n_inputs}, {m}, {n_gates})"
        )
    builder = CircuitBuilder(n_inputs)
    wires: List[WireRef] = builder.inputs(0, n_inputs)
    for _ in range(n_gates):
        op = _RANDOM_OPS[int(rng.integers(0, len(_RANDOM_OPS)))]
        args = [wires[int(rng.integers(0, len(wires)))] for _ in range(GATE_ARITY[op])]
        wires.append(builder.gate(op, *args))
    outputs = [wires[int(rng.integers(0, len(wires)))] for _ in range(m)]
    return builder.build(outputs)


def injective_circuit(m: int, mask: int = 0) -> CircuitDistribution:
    """``y_0 = r_0`` and ``y_i = r_i ^ r_{i-1}``, then XOR with ``mask``: a bijection on ``m`` bits."""

    builder = CircuitBuilder(m)
    r = builder.inputs(0, m)
    outputs = [r[0]] + [builder.xor(r[i], r[i - 1]) for i in range(1, m)]
    outputs = [
        builder.not_(bit) if (mask >> (m - 1 - position)) & 1 else bit
        for position, bit in enumerate(outputs)
    ]
    return builder.build(outputs)


def ea_regime(entropy: float, t: int, tolerance: float = 1e-9) -> Regime:
    """EA labelling: ``H >= t + 1`` is Yes, ``H <= t - 1`` is No."""

    if entropy >= t + 1 - tolerance:
        return Regime.YES
    if entropy <= t - 1 + tolerance:
        return Regime.NO
    return Regime.UNKNOWN


def ea_instance(
    kind: str,
    m: int,
    t: int,
    rng: np.random.Generator,
    settings: SettingsConfig,
    requested: Optional[Regime] = None,
    seed: Optional[int] = None,
) -> GeneratedInstance:
    """Entropy instance on ``m`` input bits, labelled for EA at threshold ``t``."""

    check_input_budget(m, settings, "ea-instance generator")
    if kind == EA_POINT:
        point = format(int(rng.integers(0, 1 << m)), f"0{m}b")
        x = constant_circuit(point, n_inputs=m)
    elif kind == EA_INJECTIVE:
        x = injective_circuit(m, int(rng.integers(0, 1 << m)))
    elif kind == EA_RANDOM:
        x = random_circuit(m, 3 * m, m, rng)
    else:
        raise PreconditionError(f"Unknown ea-instance kind {kind}")

    entropy = shannon_entropy(enumerate_circuit(x, settings))
    regime = ea_regime(entropy, t, settings.identity_tolerance)
    if requested is not None and regime != requested:
        raise PreconditionError(
            f"requested regime unachievable: {kind} on {m} bits has H={entropy:.4f}, "
            f"which is {regime.value} at t={t}"
        )
    pair = PromisePair(x, None, Problem.EA, {"t": t}, regime)
    certificate = Certificate(EA_INSTANCE, seed, {"kind": kind, "m": m, "t": t}, {"entropy": entropy}, regime.value)
    return GeneratedInstance({"x": x}, certificate, pair)


def random_probabilistic_circuit(
    n_args: int, m: int, coin_bits: int, noisy_coins: int, rng: np.random.Generator
) -> ProbabilisticCircuit:
    """Output ``f(x)`` except on the first ``noisy_coins`` coin values, where ``g(x)`` is used.

    The result is ``noisy_coins / 2**coin_bits``-probabilistic at most.
    """

    if 2 * noisy_coins >= 1 << coin_bits:
        raise PreconditionError(
            f"{noisy_coins} noisy coin values out of {1 << coin_bits} leave no natural image"
        )
    f = random_circuit(n_args, 2 * n_args + 2, m, rng)
    g = random_circuit(n_args, 2 * n_args + 2, m, rng)
    builder = CircuitBuilder(n_args + coin_bits)
    args = builder.inputs(0, n_args)
    noisy = builder.less_than(builder.inputs(n_args, coin_bits), noisy_coins)
    outputs = builder.mux_bits(noisy, builder.embed(f, args), builder.embed(g, args))
    return ProbabilisticCircuit(builder.build(outputs), n_args)


def generate(kind: str, params: Dict[str, Any], seed: int, settings: SettingsConfig) -> GeneratedInstance:
    """Dispatch a generator request by kind."""

    rng = make_rng(seed)
    if kind == YES_IID:
        result = yes_iid(int(params["n"]), float(params["a"]), float(params["b"]), rng, settings, seed=seed)
    elif kind == NO_IID:
        result = no_iid(
            int(params["n"]),
            float(params["a"]),
            float(params["b"]),
            rng,
            settings,
            disjoint=bool(params.get("disjoint", False)),
            seed=seed,
            one_sided=bool(params.get("one_sided", False)),
        )
    elif kind == EA_INSTANCE:
        requested = params.get("regime")
        result = ea_instance(
            str(params.get("ea_kind", EA_RANDOM)),
            int(params["m"]),
            int(params["t"]),
            rng,
            settings,
            requested=Regime(requested) if requested else None,
            seed=seed,
        )
    elif kind == RANDOM_CIRCUIT:
        n_inputs = int(params["n"])
        x = random_circuit(n_inputs, int(params.get("gates", 10)), int(params.get("m", n_inputs)), rng)
        distribution = enumerate_circuit(x, settings)
        certificate = Certificate(
            RANDOM_CIRCUIT,
            seed,
            dict(params),
            {"entropy": shannon_entropy(distribution), "support": len(distribution.counts)},
            Regime.UNKNOWN.value,
        )
        result = GeneratedInstance({"x": x}, certificate)
    else:
        raise PreconditionError(f"Unknown generator kind {kind}; expected one of {', '.join(GENERATOR_KINDS)}")
    LOGGER.info("Generated %s instance (seed %d): regime %s", kind, seed, result.certificate.regime)
    return result
