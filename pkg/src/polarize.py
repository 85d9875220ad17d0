"""Polarization of mut-IID instances: mixture recentering, then T-operator iteration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import pandas as pd
from scipy.optimize import brentq

from .circuit import CircuitDistribution
from .exact import enumerate_circuit, mut_disjointness, statistical_difference
from .operators import GAMMA, GAMMA_PRIME, LEFT, RIGHT, gamma_mixture, t_operator
from .utils import BudgetExceededError, DeskParameters, PreconditionError, SettingsConfig


LOGGER = logging.getLogger(__name__)

PHI = (math.sqrt(5.0) - 1.0) / 2.0
SAME_TAG = "same-tag"
CROSS_TAG = "cross-tag"

# Plans never schedule more T iterations than this.
MAX_ITERATIONS = 64

Number = Union[float, Fraction]


def contraction(x: Number) -> Number:
    """Recurrence map ``1 - (1 - x^2)^2``; fixed points 0, φ and 1."""

    return 1 - (1 - x * x) ** 2


def mixture_same(u: Number, delta: Number) -> Number:
    return u * u * delta + 2 * u * (1 - u)


def mixture_cross(u: Number, delta: Number) -> Number:
    return mixture_same(u, delta) + (1 - u) ** 2


def mixture_bound(u: Number, delta: Number, tag_choice: str) -> Number:
    if tag_choice == SAME_TAG:
        return mixture_same(u, delta)
    return mixture_cross(u, delta)


@dataclass(frozen=True)
class MixtureWeight:
    """Root of the recentering equation and its dyadic snap."""

    delta: float
    tag_choice: str
    u_root: float
    residual: float
    u0: Fraction
    coin_bits: int
    snapped_residual: float


def _check_promise(a: float, b: float) -> None:
    if not b > a:
        raise PreconditionError(f"Polarization requires b > a (got a={a}, b={b})")
    if not (0 < a and b < 1):
        raise PreconditionError(f"Polarization requires 0 < a < b < 1 (got a={a}, b={b})")


def solve_u0(a: float, b: float, coin_bits: int = 30) -> MixtureWeight:
    """Mixture weight that sends the promise midpoint to φ."""

    _check_promise(a, b)
    delta = (a + b) / 2.0
    if math.isclose(delta, PHI, rel_tol=0.0, abs_tol=1e-15):
        return MixtureWeight(delta, SAME_TAG, 1.0, 0.0, Fraction(1), coin_bits, abs(delta - PHI))

    tag_choice = SAME_TAG if delta > PHI else CROSS_TAG
    root = brentq(lambda u: float(mixture_bound(u, delta, tag_choice)) - PHI, 0.0, 1.0, xtol=1e-16)
    residual = abs(float(mixture_bound(root, delta, tag_choice)) - PHI)
    scale = 1 << coin_bits
    snapped = Fraction(min(max(round(root * scale), 0), scale), scale)
    snapped_residual = abs(float(mixture_bound(snapped, Fraction(delta), tag_choice)) - PHI)
    LOGGER.debug("solve_u0: delta=%.6f tag=%s root=%.12f residual=%.3e", delta, tag_choice, root, residual)
    return MixtureWeight(delta, tag_choice, root, residual, snapped, coin_bits, snapped_residual)


@dataclass(frozen=True)
class PolarizationPlan:
    a: float
    b: float
    u0: Fraction
    coin_bits: int
    tag_choice: str
    t_iterations: int
    final_gap: int
    budget: int
    stage_bits: Tuple[int, ...]
    predicted_yes: Tuple[float, ...]
    predicted_no: Tuple[float, ...]
    residual: float

    def __post_init__(self) -> None:
        if not 0 < self.a < self.b < 1:
            raise PreconditionError(f"Plan needs 0 < a < b < 1, got a={self.a}, b={self.b}")
        if not 0 <= self.u0 <= 1:
            raise PreconditionError(f"Mixture weight {self.u0} outside [0, 1]")
        if self.predicted_input_bits > self.budget:
            raise BudgetExceededError(
                f"Plan needs {self.predicted_input_bits} input bits; budget is {self.budget}",
                required=self.predicted_input_bits,
                budget=self.budget,
            )

    @property
    def alpha(self) -> Fraction:
        """Half-gap around φ after recentering: ``u0^2 (b - a) / 2``."""

        return self.u0 * self.u0 * (Fraction(self.b) - Fraction(self.a)) / 2

    @property
    def predicted_input_bits(self) -> int:
        return self.stage_bits[-1]


def plan_polarization(
    a: float,
    b: float,
    k: int,
    n_inputs: int,
    settings: SettingsConfig,
    parameters: DeskParameters,
    iterations: Optional[int] = None,
) -> PolarizationPlan:
    """Pick the coin width and the T-iteration count for target ``(2^-k, 1 - 2^-k)``.

    ``iterations`` forces an exact number of T steps instead of stopping at the
    target. Raises ``BudgetExceededError`` carrying the gap reachable within
    the budget when the schedule does not fit.
    """

    _check_promise(a, b)
    if k < 1:
        raise PreconditionError(f"Target gap exponent must be >= 1, got {k}")
    budget = settings.enumeration_budget_bits

    weight: Optional[MixtureWeight] = None
    for coin_bits in range(1, parameters.max_coin_bits + 1):
        candidate = solve_u0(a, b, coin_bits)
        yes_bound = float(mixture_bound(candidate.u0, a, candidate.tag_choice))
        no_bound = float(mixture_bound(candidate.u0, b, candidate.tag_choice))
        if yes_bound < PHI < no_bound:
            weight = candidate
            break
    if weight is None:
        raise BudgetExceededError(
            f"No coin width up to {parameters.max_coin_bits} separates a={a} and b={b} around phi",
            required=None,
            budget=parameters.max_coin_bits,
        )

    stage_bits = [2 * weight.coin_bits + n_inputs]
    yes = [float(mixture_bound(weight.u0, a, weight.tag_choice))]
    no = [float(mixture_bound(weight.u0, b, weight.tag_choice))]
    low, high = 2.0 ** -k, 1.0 - 2.0 ** -k

    def done() -> bool:
        if iterations is not None:
            return len(stage_bits) - 1 >= iterations
        return yes[-1] <= low and no[-1] >= high

    while not done():
        next_bits = 2 * (1 + 2 * stage_bits[-1])
        if next_bits > budget or len(stage_bits) > MAX_ITERATIONS:
            raise BudgetExceededError(
                f"Target gap (2^-{k}, 1 - 2^-{k}) not reachable within {budget} input bits; "
                f"achievable after {len(stage_bits) - 1} T iterations: "
                f"SD <= {yes[-1]:.6f}, mut-Disj >= {no[-1]:.6f}",
                required=next_bits,
                budget=budget,
                achievable={
                    "iterations": len(stage_bits) - 1,
                    "input_bits": stage_bits[-1],
                    "yes_sd_bound": yes[-1],
                    "no_mut_disj_bound": no[-1],
                },
            )
        stage_bits.append(next_bits)
        yes.append(float(contraction(yes[-1])))
        no.append(float(contraction(no[-1])))

    plan = PolarizationPlan(
        a=a,
        b=b,
        u0=weight.u0,
        coin_bits=weight.coin_bits,
        tag_choice=weight.tag_choice,
        t_iterations=len(stage_bits) - 1,
        final_gap=k,
        budget=budget,
        stage_bits=tuple(stage_bits),
        predicted_yes=tuple(yes),
        predicted_no=tuple(no),
        residual=weight.residual,
    )
    LOGGER.info(
        "Polarization plan: u0=%s (%d coin bits, %s), %d T iterations, %d input bits",
        plan.u0,
        plan.coin_bits,
        plan.tag_choice,
        plan.t_iterations,
        plan.predicted_input_bits,
    )
    return plan


@dataclass(frozen=True)
class StageRecord:
    """Measured statistics of one pipeline stage against the predicted bounds."""

    stage: int
    operation: str
    input_bits: int
    sd: Fraction
    mut_disj: Fraction
    sd_bound: Optional[Fraction] = None
    mut_disj_bound: Optional[Fraction] = None

    @property
    def within_bound(self) -> bool:
        sd_ok = self.sd_bound is None or self.sd <= self.sd_bound
        disj_ok = self.mut_disj_bound is None or self.mut_disj >= self.mut_disj_bound
        return sd_ok and disj_ok


@dataclass(frozen=True)
class PolarizationResult:
    x: CircuitDistribution
    y: CircuitDistribution
    plan: PolarizationPlan
    stages: List[StageRecord] = field(default_factory=list)

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [
                {
                    "stage": record.stage,
                    "operation": record.operation,
                    "input_bits": record.input_bits,
                    "sd": float(record.sd),
                    "mut_disj": float(record.mut_disj),
                    "sd_bound": None if record.sd_bound is None else float(record.sd_bound),
                    "mut_disj_bound": None if record.mut_disj_bound is None else float(record.mut_disj_bound),
                    "within_bound": record.within_bound,
                }
                for record in self.stages
            ]
        )


def _measure(
    x: CircuitDistribution, y: CircuitDistribution, settings: SettingsConfig
) -> Tuple[Fraction, Fraction]:
    left = enumerate_circuit(x, settings)
    right = enumerate_circuit(y, settings)
    return statistical_difference(left, right), mut_disjointness(left, right)


def polarize_mut_iid(
    x: CircuitDistribution,
    y: CircuitDistribution,
    a: float,
    b: float,
    k: int,
    settings: SettingsConfig,
    parameters: DeskParameters,
    iterations: Optional[int] = None,
    measure: bool = True,
) -> PolarizationResult:
    """Recentre ``(X, Y)`` around φ with a mixture, then apply the T operator.

    With ``measure`` every stage is enumerated and checked against the bound
    obtained by applying the recurrence to the previous measured value.
    """

    if x.m != y.m:
        raise PreconditionError(f"Width mismatch for polarization: {x.m} vs {y.m}")
    plan = plan_polarization(a, b, k, max(x.n_inputs, y.n_inputs), settings, parameters, iterations)

    second_tag = GAMMA if plan.tag_choice == SAME_TAG else GAMMA_PRIME
    current_x = gamma_mixture(x, plan.u0, GAMMA, LEFT, plan.coin_bits, settings)
    current_y = gamma_mixture(y, plan.u0, second_tag, RIGHT, plan.coin_bits, settings)

    stages: List[StageRecord] = []
    if measure:
        sd, mut_disj = _measure(x, y, settings)
        stages.append(StageRecord(0, "input", max(x.n_inputs, y.n_inputs), sd, mut_disj))
        mixed_sd, mixed_disj = _measure(current_x, current_y, settings)
        stages.append(
            StageRecord(
                1,
                "mixture",
                max(current_x.n_inputs, current_y.n_inputs),
                mixed_sd,
                mixed_disj,
                sd_bound=mixture_bound(plan.u0, sd, plan.tag_choice),
                mut_disj_bound=mixture_bound(plan.u0, mut_disj, plan.tag_choice),
            )
        )

    for iteration in range(1, plan.t_iterations + 1):
        step = t_operator(current_x, current_y, settings)
        current_x, current_y = step.first, step.second
        LOGGER.info("T iteration %d: %d input bits", iteration, current_x.n_inputs)
        if measure:
            previous = stages[-1]
            sd, mut_disj = _measure(current_x, current_y, settings)
            stages.append(
                StageRecord(
                    iteration + 1,
                    f"t_operator_{iteration}",
                    current_x.n_inputs,
                    sd,
                    mut_disj,
                    sd_bound=contraction(previous.sd),
                    mut_disj_bound=contraction(previous.mut_disj),
                )
            )

    if stages and not all(record.within_bound for record in stages):
        LOGGER.warning("A polarization stage violated its predicted bound")
    return PolarizationResult(current_x, current_y, plan, stages)
