"""Property sweeps over randomized desk instances."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from .circuit import CircuitBuilder, CircuitDistribution, identity_circuit
from .exact import (
    disjointness,
    disjointness_prob,
    enumerate_circuit,
    epsilon_of,
    mut_disjointness,
    statistical_difference,
)
from .generate import (
    GeneratedInstance,
    EA_INJECTIVE,
    EA_POINT,
    EA_RANDOM,
    ea_instance,
    no_iid,
    one_sided_pair,
    random_circuit,
    random_probabilistic_circuit,
    yes_iid,
)
from .operators import (
    AffineHashFamily,
    additive_upper_bound,
    direct_product_disjointness,
    hash_apply,
    new_upper_bound,
    power,
    tensor,
    uniform,
    xor_pair,
)
from .polarize import polarize_mut_iid
from .protocol import build_iid_protocol, measure
from .quantum import (
    conjugate,
    depolarized,
    fact_check_entropy_bounds,
    pure_zero,
    random_density_matrix,
    random_unitary,
)
from .reductions import Problem, PromisePair, Regime, ea_bar_to_iid, protocol_to_iid
from .utils import DeskParameters, PreconditionError, SettingsConfig


LOGGER = logging.getLogger(__name__)

Row = Dict[str, Any]
TrialFunction = Callable[[int, np.random.Generator], Row]


def run_trials(
    trial: TrialFunction, trials: int, seed: int, settings: SettingsConfig, name: str
) -> pd.DataFrame:
    """Run ``trials`` independent seeded trials and collect one row each, sorted by trial."""

    if trials < 1:
        raise PreconditionError(f"A sweep needs at least one trial, got {trials}")
    children = np.random.SeedSequence(seed).spawn(trials)

    def run_one(index: int) -> Row:
        row = trial(index, np.random.Generator(np.random.PCG64(children[index])))
        return {"trial": index, **row}

    if settings.max_workers > 1:
        with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
            rows = list(pool.map(run_one, range(trials)))
    else:
        rows = [run_one(index) for index in range(trials)]

    table = pd.DataFrame(rows).sort_values("trial").reset_index(drop=True)
    table["trial"] = table["trial"].astype("int64")
    table["holds"] = table["holds"].astype(bool)
    failures = int((~table["holds"]).sum())
    LOGGER.info("Sweep %s: %d trials, %d failures", name, trials, failures)
    return table


def _random_pair(
    rng: np.random.Generator, max_inputs: int, m: int
) -> Tuple[CircuitDistribution, CircuitDistribution]:
    circuits = []
    for _ in range(2):
        n = int(rng.integers(1, max_inputs + 1))
        circuits.append(random_circuit(n, int(rng.integers(n, 3 * n + 2)), m, rng))
    return circuits[0], circuits[1]


def xor_sweep(trials: int, seed: int, settings: SettingsConfig, max_inputs: int = 4) -> pd.DataFrame:
    """SD of the XOR pair is the square of SD; mut-Disj is at least the square."""

    def trial(index: int, rng: np.random.Generator) -> Row:
        m = int(rng.integers(1, 4))
        x0, x1 = _random_pair(rng, max_inputs, m)
        base_x0, base_x1 = enumerate_circuit(x0, settings), enumerate_circuit(x1, settings)
        step = xor_pair(x0, x1, settings)
        a, b = enumerate_circuit(step.first, settings), enumerate_circuit(step.second, settings)
        sd, sd_xor = statistical_difference(base_x0, base_x1), statistical_difference(a, b)
        forward, backward = disjointness(base_x0, base_x1), disjointness(base_x1, base_x0)
        mut, mut_xor = min(forward, backward), mut_disjointness(a, b)
        return {
            "sd": float(sd),
            "sd_xor": float(sd_xor),
            "mut_disj": float(mut),
            "mut_disj_xor": float(mut_xor),
            "sd_exact": sd_xor == sd * sd,
            "mut_disj_product": mut_xor == forward * backward,
            "mut_disj_square": mut_xor == mut * mut,
            "holds": sd_xor == sd * sd and mut_xor == forward * backward and mut_xor >= mut * mut,
        }

    return run_trials(trial, trials, seed, settings, "xor")


def new_upper_bound_sweep(trials: int, seed: int, settings: SettingsConfig, max_inputs: int = 3) -> pd.DataFrame:
    """``SD(X (x) Z, Y (x) T) <= 1 - (1 - d1)(1 - d2)`` against the additive bound."""

    def trial(index: int, rng: np.random.Generator) -> Row:
        x, y = _random_pair(rng, max_inputs, int(rng.integers(1, 3)))
        z, t = _random_pair(rng, max_inputs, int(rng.integers(1, 3)))
        d1 = statistical_difference(enumerate_circuit(x, settings), enumerate_circuit(y, settings))
        d2 = statistical_difference(enumerate_circuit(z, settings), enumerate_circuit(t, settings))
        combined = statistical_difference(
            enumerate_circuit(tensor(x, z, settings), settings),
            enumerate_circuit(tensor(y, t, settings), settings),
        )
        bound = new_upper_bound(d1, d2)
        additive = additive_upper_bound([d1, d2])
        return {
            "sd": float(combined),
            "new_bound": float(bound),
            "additive_bound": float(additive),
            "strictly_tighter": bound < additive,
            "holds": combined <= bound,
        }

    return run_trials(trial, trials, seed, settings, "new-ub")


def direct_product_sweep(
    trials: int, seed: int, settings: SettingsConfig, max_inputs: int = 3, powers: Tuple[int, ...] = (1, 2, 3)
) -> pd.DataFrame:
    """``Disj(X^k, Y^k) = 1 - (1 - Disj(X, Y))^k`` exactly."""

    def trial(index: int, rng: np.random.Generator) -> Row:
        x, y = _random_pair(rng, max_inputs, int(rng.integers(1, 3)))
        delta = disjointness(enumerate_circuit(x, settings), enumerate_circuit(y, settings))
        row: Row = {"disj": float(delta)}
        holds = True
        for k in powers:
            measured = disjointness(
                enumerate_circuit(power(x, k, settings), settings),
                enumerate_circuit(power(y, k, settings), settings),
            )
            row[f"disj_k{k}"] = float(measured)
            holds = holds and measured == direct_product_disjointness(delta, k)
        row["holds"] = holds
        return row

    return run_trials(trial, trials, seed, settings, "direct-product")


def sd_to_disj_sweep(
    trials: int,
    seed: int,
    settings: SettingsConfig,
    noise_levels: Tuple[Fraction, ...] = (Fraction(0), Fraction(1, 8), Fraction(1, 4)),
    coin_bits: int = 3,
    max_args: int = 3,
) -> pd.DataFrame:
    """Natural-image disjointness is at most ``SD + 2ε`` for ε-probabilistic pairs."""

    def trial(index: int, rng: np.random.Generator) -> Row:
        level = noise_levels[index % len(noise_levels)]
        noisy = int(level * (1 << coin_bits))
        n_args = int(rng.integers(1, max_args + 1))
        m = int(rng.integers(1, 3))
        x = random_probabilistic_circuit(n_args, m, coin_bits, noisy, rng)
        y = random_probabilistic_circuit(n_args, m, coin_bits, noisy, rng)
        epsilon = max(epsilon_of(x, settings), epsilon_of(y, settings))
        sd = statistical_difference(enumerate_circuit(x.base, settings), enumerate_circuit(y.base, settings))
        disj = disjointness_prob(x, y, settings)
        return {
            "noise": float(level),
            "epsilon": float(epsilon),
            "sd": float(sd),
            "disjointness_prob": float(disj),
            "holds": disj <= sd + 2 * epsilon,
        }

    return run_trials(trial, trials, seed, settings, "sd-to-disj")


def _overlap_instance(
    rng: np.random.Generator, settings: SettingsConfig, n: int, a: float, b: float
) -> GeneratedInstance:
    if rng.integers(0, 2):
        return yes_iid(n, a, b, rng, settings)
    return no_iid(n, a, b, rng, settings)


def protocol_sweep(trials: int, seed: int, settings: SettingsConfig, max_inputs: int = 3) -> pd.DataFrame:
    """Completeness, soundness and simulator deviation of the IID protocol.

    Trials cycle through random circuit pairs, certified overlap instances and
    one-sided pairs in either orientation, so the two Disj directions differ.
    """

    def trial(index: int, rng: np.random.Generator) -> Row:
        family = ("random", "overlap", "one-sided")[index % 3]
        if family == "overlap":
            instance = _overlap_instance(rng, settings, int(rng.integers(1, max_inputs + 1)), 0.25, 0.5)
            x, y = instance.circuits["x"], instance.circuits["y"]
        elif family == "one-sided":
            n = int(rng.integers(1, max_inputs + 1))
            x, y = one_sided_pair(n, int(rng.integers(1, n + 1)), int(rng.integers(0, 1 << n)))
            if rng.integers(0, 2):
                x, y = y, x
        else:
            x, y = _random_pair(rng, max_inputs, int(rng.integers(1, 3)))
        left, right = enumerate_circuit(x, settings), enumerate_circuit(y, settings)
        spec = build_iid_protocol(PromisePair(x, y, Problem.IID), settings)
        result = measure(spec, settings)
        disj = disjointness(left, right)
        sd = statistical_difference(left, right)
        return {
            "family": family,
            "completeness": float(result.completeness),
            "soundness": float(result.soundness),
            "deviation": float(result.deviation),
            "abort_mass": float(result.abort_mass),
            "sd": float(sd),
            "disj": float(disj),
            "disj_reverse": float(disjointness(right, left)),
            "holds": result.soundness == 1 - disj
            and result.completeness == 1 - disj
            and result.deviation <= sd + result.abort_mass,
        }

    return run_trials(trial, trials, seed, settings, "protocol")


def quantum_fact_sweep(trials: int, seed: int, settings: SettingsConfig, max_qubits: int = 4) -> pd.DataFrame:
    """Lower entropy bound over random Wishart states and pure, depolarized and low-rank families."""

    def trial(index: int, rng: np.random.Generator) -> Row:
        qubits = 1 + index % max_qubits
        family = ("random", "pure", "depolarized", "low-rank")[(index // max_qubits) % 4]
        if family == "random":
            state = random_density_matrix(qubits, rng)
        elif family == "pure":
            state = conjugate(pure_zero(qubits), random_unitary(qubits, rng))
        elif family == "depolarized":
            state = depolarized(conjugate(pure_zero(qubits), random_unitary(qubits, rng)), float(rng.random()))
        else:
            state = random_density_matrix(qubits, rng, rank=int(rng.integers(1, (1 << qubits) + 1)))
        check = fact_check_entropy_bounds(state)
        return {
            "qubits": qubits,
            "family": family,
            "distance": check.distance,
            "entropy": check.entropy,
            "lower_margin": check.lower_margin,
            "upper_margin": check.upper_margin,
            "upper_holds": check.upper_holds(),
            "holds": check.lower_holds(),
        }

    return run_trials(trial, trials, seed, settings, "quantum-fact")


def leftover_hash_sources() -> Dict[str, CircuitDistribution]:
    """Sources on 4 bits whose supports cover 1/2, 3/4 and all of the space."""

    half = CircuitBuilder(3)
    half_bits = half.inputs(0, 3)
    builder = CircuitBuilder(4)
    r = builder.inputs(0, 4)
    three_quarters = builder.build([builder.and_(r[0], builder.not_(r[1])), r[1], r[2], r[3]])
    return {
        "1/2": half.build([half.const(0)] + half_bits),
        "3/4": three_quarters,
        "1": identity_circuit(4),
    }


def leftover_hash_sweep(settings: SettingsConfig, structure: str = "full") -> pd.DataFrame:
    """``SD((h, h(X)), uniform)`` for 4 to 2 bit affine hashing as the source density rises."""

    family = AffineHashFamily(4, 2, structure)
    target = enumerate_circuit(uniform(family.description_bits + 2), settings)
    rows: List[Row] = []
    previous: Optional[Fraction] = None
    for trial, (density, source) in enumerate(leftover_hash_sources().items()):
        sd = statistical_difference(enumerate_circuit(hash_apply(source, family, settings), settings), target)
        rows.append(
            {
                "trial": trial,
                "density": density,
                "sd": float(sd),
                "holds": previous is None or sd < previous,
            }
        )
        previous = sd
    table = pd.DataFrame(rows)
    LOGGER.info("Leftover-hash trend: %s", ", ".join(f"{row['sd']:.4f}" for row in rows))
    return table


EA_BAR_YES_CEILING = Fraction(1, 4)
EA_BAR_MARGIN = Fraction(1, 5)
EA_BAR_NO_FLOOR = EA_BAR_YES_CEILING + EA_BAR_MARGIN

_EA_BAR_KINDS = (
    (EA_POINT, Regime.YES),
    (EA_INJECTIVE, Regime.NO),
    (EA_RANDOM, Regime.YES),
    (EA_RANDOM, Regime.NO),
)


def _certified_random_source(
    m: int, t: int, expected: Regime, rng: np.random.Generator, settings: SettingsConfig, attempts: int = 2048
) -> CircuitDistribution:
    """Rejection-sample a random circuit whose entropy lands on the EA-bar ``expected`` side."""

    # EA-bar Yes is low entropy, which EA labels No.
    requested = Regime.NO if expected == Regime.YES else Regime.YES
    for _ in range(attempts):
        try:
            return ea_instance(EA_RANDOM, m, t, rng, settings, requested=requested).circuits["x"]
        except PreconditionError:
            continue
    raise PreconditionError(f"No random {m}-bit source certified {expected.value} at t={t} in {attempts} attempts")


def ea_bar_sweep(
    trials: int, seed: int, settings: SettingsConfig, parameters: DeskParameters, m: int = 2, t: int = 1
) -> pd.DataFrame:
    """EA-bar reduction on point, injective and certified random sources.

    Yes rows must reach ``SD <= 1/4`` and No rows ``Disj >= 1/4 + 1/5``.
    """

    def trial(index: int, rng: np.random.Generator) -> Row:
        kind, expected = _EA_BAR_KINDS[index % len(_EA_BAR_KINDS)]
        if kind == EA_RANDOM:
            source = _certified_random_source(m, t, expected, rng, settings)
        else:
            source = ea_instance(kind, m, t, rng, settings).circuits["x"]
        pair, trace = ea_bar_to_iid(source, t, settings, parameters, measure=False)
        left, right = enumerate_circuit(pair.x, settings), enumerate_circuit(pair.y, settings)
        sd = statistical_difference(left, right)
        disj = disjointness(left, right)
        within = sd <= EA_BAR_YES_CEILING if expected == Regime.YES else disj >= EA_BAR_NO_FLOOR
        return {
            "kind": kind,
            "expected": expected.value,
            "regime": pair.regime.value,
            "entropy": trace.before["entropy"],
            "sd": float(sd),
            "disj": float(disj),
            "holds": pair.regime == expected and within,
        }

    return run_trials(trial, trials, seed, settings, "ea-bar")


def ea_bar_separation(table: pd.DataFrame) -> float:
    """Smallest No-side Disj minus largest Yes-side SD; NaN unless both sides are present."""

    yes = table.loc[table["expected"] == Regime.YES.value, "sd"]
    no = table.loc[table["expected"] == Regime.NO.value, "disj"]
    if yes.empty or no.empty:
        return float("nan")
    return float(no.min() - yes.max())


def compiler_sweep(trials: int, seed: int, settings: SettingsConfig, k: int = 3, max_inputs: int = 3) -> pd.DataFrame:
    """Compile the IID protocol of instances polarized to ``(2^-k, 1 - 2^-k)`` and measure ``(D0, D1)``.

    Yes rows need ``SD(D0, D1) <= 2 * 2^-k`` and at most the simulator
    deviation plus the ⊥ mass of ``D1``; No rows need natural-image
    disjointness of at least ``1 - 2 * 2^-k``.
    """

    gap = Fraction(1, 1 << k)
    a, b = float(gap), float(1 - gap)
    yes_ceiling = 2 * gap
    no_floor = 1 - yes_ceiling

    def trial(index: int, rng: np.random.Generator) -> Row:
        n = int(rng.integers(1, max_inputs + 1))
        instance = yes_iid(n, a, b, rng, settings) if index % 2 == 0 else no_iid(n, a, b, rng, settings)
        spec = build_iid_protocol(instance.pair, settings, k=k)
        pair, trace = protocol_to_iid(spec, k, settings)
        sd = trace.after["sd"]
        disj = trace.after["disjointness_prob"]
        d1 = enumerate_circuit(pair.y.base, settings)
        bottom = Fraction(int(d1.counts[d1.counts.index.str.startswith("1")].sum()), d1.denominator)
        deviation = measure(spec, settings).deviation
        if pair.regime == Regime.YES:
            holds = sd <= yes_ceiling and sd <= deviation + bottom
        elif pair.regime == Regime.NO:
            holds = disj >= no_floor
        else:
            holds = False
        return {
            "regime": pair.regime.value,
            "sd": float(sd),
            "disjointness_prob": float(disj),
            "deviation": float(deviation),
            "bottom_mass": float(bottom),
            "holds": holds,
        }

    return run_trials(trial, trials, seed, settings, "compiler")


def polarization_sweep(
    trials: int,
    seed: int,
    settings: SettingsConfig,
    parameters: DeskParameters,
    a: float = 0.25,
    b: float = 0.5,
    iterations: int = 1,
) -> pd.DataFrame:
    """Measured stages of the polarizer against the recurrence bounds on certified instances."""

    def trial(index: int, rng: np.random.Generator) -> Row:
        instance = yes_iid(1, a, b, rng, settings) if index % 2 == 0 else no_iid(1, a, b, rng, settings)
        x, y = instance.circuits["x"], instance.circuits["y"]
        result = polarize_mut_iid(x, y, a, b, 1, settings, parameters, iterations=iterations)
        final = result.stages[-1]
        return {
            "regime": instance.certificate.regime,
            "input_bits": final.input_bits,
            "sd": float(final.sd),
            "mut_disj": float(final.mut_disj),
            "holds": all(record.within_bound for record in result.stages),
        }

    return run_trials(trial, trials, seed, settings, "polarization")


SWEEPS = (
    "xor",
    "new-ub",
    "direct-product",
    "sd-to-disj",
    "protocol",
    "quantum-fact",
    "leftover-hash",
    "ea-bar",
    "compiler",
    "polarization",
)

SWEEP_NUMERIC_COLUMNS: Dict[str, Tuple[str, ...]] = {
    "xor": ("sd", "sd_xor", "mut_disj", "mut_disj_xor"),
    "new-ub": ("sd", "new_bound", "additive_bound"),
    "direct-product": ("disj",),
    "sd-to-disj": ("epsilon", "sd", "disjointness_prob"),
    "protocol": ("completeness", "soundness", "deviation", "abort_mass", "sd", "disj", "disj_reverse"),
    "quantum-fact": ("distance", "entropy", "lower_margin"),
    "leftover-hash": ("sd",),
    "ea-bar": ("entropy", "sd", "disj"),
    "compiler": ("sd", "disjointness_prob", "deviation", "bottom_mass"),
    "polarization": ("sd", "mut_disj"),
}


def run_sweep(
    name: str, trials: int, seed: int, settings: SettingsConfig, parameters: DeskParameters
) -> pd.DataFrame:
    if name == "xor":
        return xor_sweep(trials, seed, settings)
    if name == "new-ub":
        return new_upper_bound_sweep(trials, seed, settings)
    if name == "direct-product":
        return direct_product_sweep(trials, seed, settings)
    if name == "sd-to-disj":
        return sd_to_disj_sweep(trials, seed, settings)
    if name == "protocol":
        return protocol_sweep(trials, seed, settings)
    if name == "quantum-fact":
        return quantum_fact_sweep(trials, seed, settings)
    if name == "leftover-hash":
        return leftover_hash_sweep(settings)
    if name == "ea-bar":
        return ea_bar_sweep(trials, seed, settings, parameters)
    if name == "compiler":
        return compiler_sweep(trials, seed, settings, k=parameters.protocol_repetitions)
    if name == "polarization":
        return polarization_sweep(trials, seed, settings, parameters)
    raise PreconditionError(f"Unknown sweep {name}; expected one of {', '.join(SWEEPS)}")
