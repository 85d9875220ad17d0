"""Promise-problem reductions between SD, IID, mut-IID, EA and ED instances."""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from .circuit import CircuitBuilder, CircuitDistribution, constant_circuit, serialize
from .exact import (
    ProbabilisticCircuit,
    disjointness,
    disjointness_prob,
    enumerate_circuit,
    epsilon_of,
    mut_disjointness,
    preimage_weights,
    shannon_entropy,
    statistical_difference,
)
from .operators import AffineHashFamily, or_xor_pair, power, tensor, tensor_all, uniform
from .polarize import polarize_mut_iid
from .utils import (
    DeskParameters,
    PluggableDependencyError,
    PreconditionError,
    SettingsConfig,
    check_input_budget,
)

if TYPE_CHECKING:
    from .protocol import ProtocolSpec


LOGGER = logging.getLogger(__name__)

AnyCircuit = Union[CircuitDistribution, ProbabilisticCircuit]


class Problem(str, Enum):
    SD = "SD"
    IID = "IID"
    MUT_IID = "mut-IID"
    EA = "EA"
    EA_BAR = "EA-bar"
    ED_BAR = "ED-bar"


class Regime(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


_PAIR_PROBLEMS = (Problem.SD, Problem.IID, Problem.MUT_IID, Problem.ED_BAR)


def _base(circuit: AnyCircuit) -> CircuitDistribution:
    return circuit.base if isinstance(circuit, ProbabilisticCircuit) else circuit


def instance_id(*circuits: Optional[AnyCircuit]) -> str:
    """Content hash of the CKT text of the given circuits."""

    digest = hashlib.sha256()
    for circuit in circuits:
        if circuit is None:
            continue
        digest.update(serialize(_base(circuit)).encode("ascii"))
        if isinstance(circuit, ProbabilisticCircuit):
            digest.update(f"args={circuit.n_args}".encode("ascii"))
    return digest.hexdigest()[:16]


@dataclass(frozen=True)
class PromisePair:
    """An instance of a promise problem; ``y`` is ``None`` for EA-type problems."""

    x: AnyCircuit
    y: Optional[AnyCircuit]
    problem: Problem
    params: Dict[str, Any] = field(default_factory=dict)
    regime: Regime = Regime.UNKNOWN

    def __post_init__(self) -> None:
        if self.problem in _PAIR_PROBLEMS and self.y is None:
            raise PreconditionError(f"{self.problem.value} instances need two circuits")
        if self.problem in (Problem.EA, Problem.EA_BAR) and "t" not in self.params:
            raise PreconditionError(f"{self.problem.value} instances need a threshold t")
        if "a" in self.params and "b" in self.params and not self.params["a"] < self.params["b"]:
            raise PreconditionError(
                f"{self.problem.value} requires a < b, got a={self.params['a']}, b={self.params['b']}"
            )

    @property
    def instance_id(self) -> str:
        return instance_id(self.x, self.y)


@dataclass(frozen=True)
class ReductionTrace:
    reduction: str
    input_id: str
    output_id: str
    parameters: Dict[str, Any] = field(default_factory=dict)
    before: Dict[str, Any] = field(default_factory=dict)
    after: Dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "reduction": self.reduction,
            "input_id": self.input_id,
            "output_id": self.output_id,
            "parameters": dict(self.parameters),
            "before": dict(self.before),
            "after": dict(self.after),
        }


def _pair_measurements(x: CircuitDistribution, y: CircuitDistribution, settings: SettingsConfig) -> Dict[str, Any]:
    left = enumerate_circuit(x, settings)
    right = enumerate_circuit(y, settings)
    return {
        "sd": statistical_difference(left, right),
        "disj_xy": disjointness(left, right),
        "disj_yx": disjointness(right, left),
        "mut_disj": mut_disjointness(left, right),
    }


def entropy_regime(entropy: float, t: int, tolerance: float = 1e-9) -> Regime:
    """EA-bar labelling: low entropy is Yes, high entropy is No."""

    if entropy <= t - 1 + tolerance:
        return Regime.YES
    if entropy >= t + 1 - tolerance:
        return Regime.NO
    return Regime.UNKNOWN


def ea_bar_to_iid(
    x: CircuitDistribution,
    t: int,
    settings: SettingsConfig,
    parameters: DeskParameters,
    copies: Optional[int] = None,
    security: Optional[int] = None,
    hash_structure: Optional[str] = None,
    measure: bool = True,
) -> Tuple[PromisePair, ReductionTrace]:
    """Flatten ``X`` by ``s`` copies, then compare ``Z = X' (x) I`` with hashed preimages.

    ``Z'`` draws a hash ``h``, ``r`` of ``m' = s m`` bits and ``u`` of ``s t``
    bits and returns ``(X'(r), h, h(r, u))``.
    """

    m = x.n_inputs
    if not 0 < t < m:
        raise PreconditionError(f"Threshold t={t} outside (0, {m})")
    s = copies if copies is not None else parameters.ea_copies
    k = security if security is not None else parameters.ea_security
    structure = hash_structure or parameters.hash_structure
    if s < 1:
        raise PreconditionError(f"Copy count must be >= 1, got {s}")

    m_prime = s * m
    family = AffineHashFamily(m_prime + s * t, m_prime, structure)
    d = family.description_bits
    check_input_budget(m_prime + d + m_prime, settings, "EA-bar reduction (Z)")
    check_input_budget(d + m_prime + s * t, settings, "EA-bar reduction (Z')")

    x_prime = power(x, s, settings)
    z = tensor(x_prime, uniform(d + m_prime), settings)

    builder = CircuitBuilder(d + m_prime + s * t)
    description = builder.inputs(0, d)
    r = builder.inputs(d, m_prime)
    u = builder.inputs(d + m_prime, s * t)
    sample = builder.embed(x_prime, r)
    hashed = family.emit(builder, description, r + u)
    z_prime = builder.build(sample + list(description) + hashed)

    source = enumerate_circuit(x, settings)
    entropy = shannon_entropy(source)
    regime = entropy_regime(entropy, t, settings.identity_tolerance)
    weights = preimage_weights(enumerate_circuit(x_prime, settings))

    pair = PromisePair(
        z,
        z_prime,
        Problem.IID,
        {"t": t, "s": s, "k": k, "m_prime": m_prime, "hash_structure": structure},
        regime,
    )
    trace = ReductionTrace(
        reduction="ea_bar_to_iid",
        input_id=instance_id(x),
        output_id=pair.instance_id,
        parameters={
            "t": t,
            "s": s,
            "k": k,
            "m_prime": m_prime,
            "hash_in_bits": family.in_bits,
            "hash_description_bits": d,
            "hash_structure": structure,
        },
        before={
            "entropy": entropy,
            "regime": regime.value,
            "weight_min": float(weights.min()),
            "weight_max": float(weights.max()),
            "weight_flat": float(m_prime - s * entropy),
        },
        after=_pair_measurements(z, z_prime, settings) if measure else {},
    )
    LOGGER.info(
        "EA-bar -> IID: H(X)=%.4f t=%d s=%d, Z has %d inputs, Z' has %d inputs (%s)",
        entropy,
        t,
        s,
        z.n_inputs,
        z_prime.n_inputs,
        regime.value,
    )
    return pair, trace


def _labelled_choice(x0: CircuitDistribution, x1: CircuitDistribution, flip: bool) -> CircuitDistribution:
    n = max(x0.n_inputs, x1.n_inputs)
    builder = CircuitBuilder(1 + n)
    select = builder.inputs(0, 1)[0]
    r = builder.inputs(1, n)
    sample = builder.mux_bits(select, builder.embed(x0, r), builder.embed(x1, r))
    label = builder.not_(select) if flip else select
    return builder.build(sample + [label])


def iid_to_mut_iid(
    x0: CircuitDistribution,
    x1: CircuitDistribution,
    settings: SettingsConfig,
    params: Optional[Dict[str, Any]] = None,
    regime: Regime = Regime.UNKNOWN,
    measure: bool = True,
) -> Tuple[PromisePair, ReductionTrace]:
    """``A = (X_b(r), b)`` and ``B = (X_b(r), not b)``; IID^{a,2b} maps to mut-IID^{a,b}."""

    if x0.m != x1.m:
        raise PreconditionError(f"Width mismatch for IID -> mut-IID: {x0.m} vs {x1.m}")
    check_input_budget(1 + max(x0.n_inputs, x1.n_inputs), settings, "IID -> mut-IID")
    first = _labelled_choice(x0, x1, flip=False)
    second = _labelled_choice(x0, x1, flip=True)

    out_params: Dict[str, Any] = {}
    if params and "a" in params and "b" in params:
        out_params = {"a": params["a"], "b": params["b"] / 2}
    pair = PromisePair(first, second, Problem.MUT_IID, out_params, regime)
    trace = ReductionTrace(
        reduction="iid_to_mut_iid",
        input_id=instance_id(x0, x1),
        output_id=pair.instance_id,
        parameters=dict(params or {}),
        before=_pair_measurements(x0, x1, settings) if measure else {},
        after=_pair_measurements(first, second, settings) if measure else {},
    )
    return pair, trace


def _combine_regimes(regimes: Sequence[Regime], rule: str) -> Regime:
    if rule == "and":
        if all(regime == Regime.YES for regime in regimes):
            return Regime.YES
        if any(regime == Regime.NO for regime in regimes):
            return Regime.NO
        return Regime.UNKNOWN
    if any(regime == Regime.YES for regime in regimes):
        return Regime.YES
    if all(regime == Regime.NO for regime in regimes):
        return Regime.NO
    return Regime.UNKNOWN


def and_closure(
    pairs: Sequence[PromisePair],
    settings: SettingsConfig,
    parameters: Optional[DeskParameters] = None,
    polarize_k: Optional[int] = None,
    measure: bool = True,
) -> Tuple[PromisePair, ReductionTrace]:
    """Tensor the (optionally polarized) pairs; SD adds up, mut-Disj is at least the max."""

    if not pairs:
        raise PreconditionError("AND closure needs at least one pair")
    xs: List[CircuitDistribution] = []
    ys: List[CircuitDistribution] = []
    for pair in pairs:
        x, y = _base(pair.x), _base(pair.y)
        if polarize_k is not None:
            if parameters is None or "a" not in pair.params or "b" not in pair.params:
                raise PreconditionError("Polarizing inside the AND closure needs (a, b) and desk parameters")
            polarized = polarize_mut_iid(
                x, y, pair.params["a"], pair.params["b"], polarize_k, settings, parameters, measure=False
            )
            x, y = polarized.x, polarized.y
        xs.append(x)
        ys.append(y)

    combined_x = tensor_all(xs, settings)
    combined_y = tensor_all(ys, settings)
    out_params: Dict[str, Any] = {}
    if polarize_k is None and all("a" in pair.params and "b" in pair.params for pair in pairs):
        a_total = sum(pair.params["a"] for pair in pairs)
        b_max = max(pair.params["b"] for pair in pairs)
        if a_total < b_max:
            out_params = {"a": a_total, "b": b_max}
    result = PromisePair(
        combined_x,
        combined_y,
        Problem.MUT_IID,
        out_params,
        _combine_regimes([pair.regime for pair in pairs], "and"),
    )
    trace = ReductionTrace(
        reduction="and_closure",
        input_id=instance_id(*[circuit for pair in pairs for circuit in (pair.x, pair.y)]),
        output_id=result.instance_id,
        parameters={"pairs": len(pairs), "polarize_k": polarize_k},
        after=_pair_measurements(combined_x, combined_y, settings) if measure else {},
    )
    return result, trace


def or_closure(
    pair0: PromisePair,
    pair1: PromisePair,
    settings: SettingsConfig,
    measure: bool = True,
) -> Tuple[PromisePair, ReductionTrace]:
    """Generalised XOR of two polarized pairs; SD multiplies."""

    step = or_xor_pair((_base(pair0.x), _base(pair0.y)), (_base(pair1.x), _base(pair1.y)), settings)
    out_params: Dict[str, Any] = {}
    if all("a" in pair.params and "b" in pair.params for pair in (pair0, pair1)):
        a_bound = max(pair0.params["a"], pair1.params["a"])
        b_bound = pair0.params["b"] * pair1.params["b"]
        if a_bound < b_bound:
            out_params = {"a": a_bound, "b": b_bound}
    result = PromisePair(
        step.first,
        step.second,
        Problem.MUT_IID,
        out_params,
        _combine_regimes([pair0.regime, pair1.regime], "or"),
    )
    trace = ReductionTrace(
        reduction="or_closure",
        input_id=instance_id(pair0.x, pair0.y, pair1.x, pair1.y),
        output_id=result.instance_id,
        parameters={"input_bits": step.first.n_inputs},
        after=_pair_measurements(step.first, step.second, settings) if measure else {},
    )
    return result, trace


@dataclass(frozen=True)
class EdBarSkeleton:
    """``OR(EA-bar^t on X', EA^t on Y')`` for one threshold ``t``."""

    t: int
    x_prime: CircuitDistribution
    y_prime: CircuitDistribution

    @property
    def ea_bar_instance(self) -> PromisePair:
        return PromisePair(self.x_prime, None, Problem.EA_BAR, {"t": self.t})

    @property
    def ea_instance(self) -> PromisePair:
        return PromisePair(self.y_prime, None, Problem.EA, {"t": self.t})


EaSideReduction = Callable[[CircuitDistribution, int], PromisePair]


def ed_bar_decompose(
    x: CircuitDistribution,
    y: CircuitDistribution,
    settings: SettingsConfig,
    copies: int = 3,
) -> List[EdBarSkeleton]:
    """One skeleton per ``t`` in ``1..n`` with ``n`` the output width of ``X^{(x)copies}``."""

    if x.m != y.m:
        raise PreconditionError(f"Width mismatch for ED-bar: {x.m} vs {y.m}")
    x_prime = power(x, copies, settings)
    y_prime = power(y, copies, settings)
    skeletons = [EdBarSkeleton(t, x_prime, y_prime) for t in range(1, x_prime.m + 1)]
    LOGGER.info("ED-bar decomposition: %d skeleton instances", len(skeletons))
    return skeletons


def canonical_yes_pair(regime: Regime = Regime.YES) -> PromisePair:
    point = constant_circuit("0")
    return PromisePair(point, point, Problem.MUT_IID, {"a": 0.0, "b": 1.0}, regime)


def canonical_no_pair() -> PromisePair:
    return PromisePair(constant_circuit("0"), constant_circuit("1"), Problem.MUT_IID, {"a": 0.0, "b": 1.0}, Regime.NO)


def oracle_ea_reduction(settings: SettingsConfig) -> EaSideReduction:
    """EA-side sub-reduction that decides by enumerating the entropy.

    High entropy (EA Yes) maps to identical points, low entropy to disjoint
    points; anything in the gap maps to identical points labelled unknown.
    """

    def reduce(y: CircuitDistribution, t: int) -> PromisePair:
        entropy = shannon_entropy(enumerate_circuit(y, settings))
        if entropy >= t + 1 - settings.identity_tolerance:
            return canonical_yes_pair()
        if entropy <= t - 1 + settings.identity_tolerance:
            return canonical_no_pair()
        return canonical_yes_pair(Regime.UNKNOWN)

    return reduce


def _saturated_ea_bar_side(x_prime: CircuitDistribution, t: int, settings: SettingsConfig) -> PromisePair:
    """EA-bar side for ``t >= n_inputs(X')``, where the hashing reduction has no room.

    ``H(X') <= n_inputs`` rules out No. Past the input count the instance is
    Yes outright; at ``t = n_inputs`` entropy above ``t - 1`` falls in the gap.
    """

    if t > x_prime.n_inputs:
        return canonical_yes_pair()
    entropy = shannon_entropy(enumerate_circuit(x_prime, settings))
    regime = entropy_regime(entropy, t, settings.identity_tolerance)
    return canonical_yes_pair(Regime.YES if regime == Regime.YES else Regime.UNKNOWN)


def ed_bar_assemble(
    skeletons: Sequence[EdBarSkeleton],
    ea_side: Optional[EaSideReduction],
    settings: SettingsConfig,
    parameters: DeskParameters,
    measure: bool = False,
) -> Tuple[PromisePair, List[ReductionTrace]]:
    """Reduce every skeleton to mut-IID, OR the two sides, AND across thresholds."""

    if ea_side is None:
        raise PluggableDependencyError(
            "pluggable dependency absent: ED-bar assembly needs an EA-side sub-reduction"
        )
    if not skeletons:
        raise PreconditionError("ED-bar assembly needs at least one skeleton")

    traces: List[ReductionTrace] = []
    per_threshold: List[PromisePair] = []
    for skeleton in skeletons:
        if 0 < skeleton.t < skeleton.x_prime.n_inputs:
            iid_pair, trace = ea_bar_to_iid(skeleton.x_prime, skeleton.t, settings, parameters, measure=measure)
            traces.append(trace)
            left, trace = iid_to_mut_iid(
                _base(iid_pair.x), _base(iid_pair.y), settings, regime=iid_pair.regime, measure=measure
            )
            traces.append(trace)
        else:
            left = _saturated_ea_bar_side(skeleton.x_prime, skeleton.t, settings)
        right = ea_side(skeleton.y_prime, skeleton.t)
        combined, trace = or_closure(left, right, settings, measure=measure)
        traces.append(trace)
        per_threshold.append(combined)

    result, trace = and_closure(per_threshold, settings, measure=measure)
    traces.append(trace)
    result = PromisePair(result.x, result.y, Problem.MUT_IID, result.params, result.regime)
    LOGGER.info("ED-bar assembly: %d thresholds -> regime %s", len(skeletons), result.regime.value)
    return result, traces


def protocol_to_iid(
    protocol: "ProtocolSpec",
    k: int,
    settings: SettingsConfig,
    measure: bool = True,
) -> Tuple[PromisePair, ReductionTrace]:
    """Compile a protocol into ``(D0, D1)``.

    ``D0`` is the dealer's help. ``D1`` runs the simulator once, replays the
    verifier ``k`` times on the simulated view with fresh coins and outputs the
    help on a majority of accepts, otherwise ⊥. Outputs carry two tag bits:
    ``00`` for help and ``10`` for ⊥.
    """

    if k < 1 or k % 2 == 0:
        raise PreconditionError(f"Repetition count k must be odd, got {k}")
    width = protocol.help_width
    n_sim = protocol.simulator.n_inputs
    coin_bits = protocol.verifier_coin_bits
    check_input_budget(n_sim + k * coin_bits, settings, "Protocol compiler (D1)")

    dealer = CircuitBuilder(protocol.dealer.n_inputs)
    help_bits = dealer.embed(protocol.dealer, dealer.inputs(0, protocol.dealer.n_inputs))
    d0 = ProbabilisticCircuit(
        dealer.build([dealer.const(0), dealer.const(0)] + help_bits), protocol.dealer.n_inputs
    )

    builder = CircuitBuilder(n_sim + k * coin_bits)
    view = builder.embed(protocol.simulator, builder.inputs(0, n_sim))
    simulated_help = view[:width]
    accepts = [
        builder.embed(protocol.verifier, view + builder.inputs(n_sim + trial * coin_bits, coin_bits))[0]
        for trial in range(k)
    ]
    accepted = builder.majority(accepts)
    outputs = [builder.not_(accepted), builder.const(0)]
    outputs += [builder.and_(accepted, bit) for bit in simulated_help]
    d1 = ProbabilisticCircuit(builder.build(outputs), n_sim)

    try:
        regime = Regime(protocol.regime)
    except ValueError:
        regime = Regime.UNKNOWN
    pair = PromisePair(d0, d1, Problem.IID, {"k": k}, regime)

    after: Dict[str, Any] = {}
    if measure:
        left = enumerate_circuit(d0.base, settings)
        right = enumerate_circuit(d1.base, settings)
        after = {
            "sd": statistical_difference(left, right),
            "disjointness_prob": disjointness_prob(d0, d1, settings),
            "epsilon_d1": epsilon_of(d1, settings),
        }
    trace = ReductionTrace(
        reduction="protocol_to_iid",
        input_id=instance_id(protocol.dealer, protocol.simulator, protocol.verifier),
        output_id=pair.instance_id,
        parameters={"k": k, "verifier_coin_bits": coin_bits},
        after=after,
    )
    return pair, trace
