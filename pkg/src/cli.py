"""Command-line entry point for the desk toolkit."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

from . import analytics, io, report
from .circuit import CircuitDistribution
from .exact import (
    ProbabilisticCircuit,
    disjointness_prob,
    distribution_frame,
    enumerate_circuit,
    epsilon_of,
    hit_probability,
    pair_statistics,
    shannon_entropy,
    statistical_closeness,
    typicality_mass,
)
from .generate import GENERATOR_KINDS, generate, make_rng
from .operators import (
    GAMMA,
    GAMMA_PRIME,
    LEFT,
    RIGHT,
    OperatorResult,
    gamma_mixture,
    power,
    t_operator,
    tensor,
    xor_pair,
)
from .polarize import polarize_mut_iid
from .protocol import build_iid_protocol, measure, run_protocol
from .quality import check_distribution_frame
from .quantum import fact_check_entropy_bounds
from .reductions import (
    Problem,
    PromisePair,
    ea_bar_to_iid,
    ed_bar_assemble,
    ed_bar_decompose,
    iid_to_mut_iid,
    oracle_ea_reduction,
    protocol_to_iid,
)
from .utils import (
    BudgetExceededError,
    DeskParameters,
    PreconditionError,
    SettingsConfig,
    configure_logging,
    load_parameters,
    load_settings,
    project_root,
    with_budget,
)


LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_BUDGET = 2

# Namespace entries that are plumbing rather than experiment parameters.
_PLUMBING = {"handler", "command", "action", "verbose", "settings", "parameters", "report", "budget", "seed"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a report needs to be reproduced."""

    command: str
    inputs: Dict[str, str] = field(default_factory=dict)
    parameters: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    budget: int = 24
    outputs: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.budget < 1:
            raise ValueError(f"Budget must be >= 1, got {self.budget}")

    def as_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "inputs": dict(self.inputs),
            "parameters": dict(self.parameters),
            "seed": self.seed,
            "budget": self.budget,
            "outputs": dict(self.outputs),
        }


def _read(path: Optional[str]) -> CircuitDistribution:
    if path is None:
        raise ValueError("Missing circuit path")
    return io.read_circuit(Path(path))


def _write_pair(result: OperatorResult, prefix: Optional[str]) -> Dict[str, str]:
    if prefix is None:
        return {}
    written = {}
    for label, circuit in zip(("a", "b"), result.circuits):
        written[label] = str(io.write_circuit(circuit, Path(f"{prefix}_{label}.ckt")))
    return written


def _pair_stats(x: CircuitDistribution, y: CircuitDistribution, settings: SettingsConfig) -> Dict[str, Any]:
    return pair_statistics(enumerate_circuit(x, settings), enumerate_circuit(y, settings))


def cmd_sd(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    left = enumerate_circuit(_read(args.x), settings)
    right = enumerate_circuit(_read(args.y), settings)
    results = pair_statistics(left, right)
    results["closeness"] = statistical_closeness(left, right)
    return results


def cmd_disj(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    x, y = _read(args.x), _read(args.y)
    results = _pair_stats(x, y, settings)
    if args.x_args is not None or args.y_args is not None:
        px = ProbabilisticCircuit(x, x.n_inputs if args.x_args is None else args.x_args)
        py = ProbabilisticCircuit(y, y.n_inputs if args.y_args is None else args.y_args)
        results["epsilon_x"] = epsilon_of(px, settings)
        results["epsilon_y"] = epsilon_of(py, settings)
        results["disjointness_prob"] = disjointness_prob(px, py, settings)
        results["hit_probability"] = hit_probability(px, py, settings)
    return results


def cmd_entropy(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    distribution = enumerate_circuit(_read(args.x), settings)
    results: Dict[str, Any] = {
        "entropy": shannon_entropy(distribution),
        "support": len(distribution.counts),
        "input_bits": distribution.n,
    }
    if args.threshold is not None:
        results["typical_mass"] = typicality_mass(distribution, args.threshold, settings.identity_tolerance)
    if args.distribution_out:
        check_distribution_frame(distribution_frame(distribution), distribution.m)
        results["distribution_file"] = str(io.write_distribution(distribution, Path(args.distribution_out)))
    return results


def cmd_tensor(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    x = _read(args.x)
    combined = power(x, args.power, settings) if args.y is None else tensor(x, _read(args.y), settings)
    results: Dict[str, Any] = {"input_bits": combined.n_inputs, "gates": combined.n_gates, "outputs": combined.m}
    if args.out:
        results["circuit"] = str(io.write_circuit(combined, Path(args.out)))
    return results


def _pair_operator(
    args: argparse.Namespace, settings: SettingsConfig, operator: Callable[..., OperatorResult]
) -> Dict[str, Any]:
    x, y = _read(args.x), _read(args.y)
    result = operator(x, y, settings)
    return {
        "provenance": result.provenance,
        "before": _pair_stats(x, y, settings),
        "after": _pair_stats(result.first, result.second, settings),
        "files": _write_pair(result, args.out_prefix),
    }


def cmd_xor(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    return _pair_operator(args, settings, xor_pair)


def cmd_t_op(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    return _pair_operator(args, settings, t_operator)


def cmd_mixture(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    x = _read(args.x)
    mixed = gamma_mixture(x, Fraction(args.u), args.tag, args.side, args.coin_bits, settings)
    results: Dict[str, Any] = {"input_bits": mixed.n_inputs, "outputs": mixed.m}
    if args.out:
        results["circuit"] = str(io.write_circuit(mixed, Path(args.out)))
    return results


def cmd_polarize(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    x, y = _read(args.x), _read(args.y)
    result = polarize_mut_iid(x, y, args.a, args.b, args.k, settings, parameters, iterations=args.iterations)
    plan = result.plan
    files: Dict[str, str] = {}
    if args.out_prefix:
        files["x"] = str(io.write_circuit(result.x, Path(f"{args.out_prefix}_x.ckt")))
        files["y"] = str(io.write_circuit(result.y, Path(f"{args.out_prefix}_y.ckt")))
    return {
        "plan": {
            "u0": plan.u0,
            "coin_bits": plan.coin_bits,
            "tag_choice": plan.tag_choice,
            "t_iterations": plan.t_iterations,
            "stage_bits": list(plan.stage_bits),
            "predicted_yes": list(plan.predicted_yes),
            "predicted_no": list(plan.predicted_no),
            "residual": plan.residual,
        },
        "stages": result.frame(),
        "files": files,
    }


def _trace_results(pair: PromisePair, traces: Sequence[Any], prefix: Optional[str]) -> Dict[str, Any]:
    files: Dict[str, str] = {}
    if prefix:
        for label, circuit in (("x", pair.x), ("y", pair.y)):
            base = circuit.base if isinstance(circuit, ProbabilisticCircuit) else circuit
            files[label] = str(io.write_circuit(base, Path(f"{prefix}_{label}.ckt")))
    return {
        "problem": pair.problem.value,
        "regime": pair.regime.value,
        "params": pair.params,
        "instance_id": pair.instance_id,
        "traces": [trace.as_dict() for trace in traces],
        "files": files,
    }


def cmd_reduce(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    if args.action == "ea-bar-to-iid":
        if args.t is None:
            raise PreconditionError("reduce ea-bar-to-iid requires --t")
        pair, trace = ea_bar_to_iid(
            _read(args.x),
            args.t,
            settings,
            parameters,
            copies=args.copies,
            security=args.security,
            hash_structure=args.hash_structure,
            measure=not args.no_measure,
        )
        return _trace_results(pair, [trace], args.out_prefix)
    if args.action == "iid-to-mut":
        params = {"a": args.a, "b": args.b} if args.a is not None and args.b is not None else None
        pair, trace = iid_to_mut_iid(_read(args.x), _read(args.y), settings, params, measure=not args.no_measure)
        return _trace_results(pair, [trace], args.out_prefix)
    if args.action == "ed-bar":
        skeletons = ed_bar_decompose(_read(args.x), _read(args.y), settings, copies=args.copies or 3)
        results: Dict[str, Any] = {"skeletons": [skeleton.t for skeleton in skeletons]}
        if args.assemble:
            pair, traces = ed_bar_assemble(
                skeletons, oracle_ea_reduction(settings), settings, parameters, measure=not args.no_measure
            )
            results.update(_trace_results(pair, traces, args.out_prefix))
        return results
    if args.action == "protocol-to-iid":
        spec = build_iid_protocol(PromisePair(_read(args.x), _read(args.y), Problem.IID), settings)
        pair, trace = protocol_to_iid(spec, args.k or parameters.protocol_repetitions, settings)
        return _trace_results(pair, [trace], args.out_prefix)
    raise ValueError(f"Unknown reduction {args.action}")


def cmd_protocol(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    spec = build_iid_protocol(PromisePair(_read(args.x), _read(args.y), Problem.IID), settings, k=args.k)
    results: Dict[str, Any] = measure(spec, settings).as_dict()
    results["regime"] = spec.regime
    rng = make_rng(args.seed)
    runs = [run_protocol(spec, rng, settings) for _ in range(args.runs)]
    results["runs"] = [
        {"help": run.help, "message": run.message, "verdict": run.verdict, "simulated": list(run.simulated_view)}
        for run in runs
    ]
    return results


def cmd_quantum(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    if args.state:
        return fact_check_entropy_bounds(io.read_density(Path(args.state))).as_dict()
    table = analytics.quantum_fact_sweep(args.trials, args.seed, settings, max_qubits=args.n)
    if args.csv:
        report.export_sweep_table(table, Path(args.csv), analytics.SWEEP_NUMERIC_COLUMNS["quantum-fact"])
    return {
        "trials": int(table.shape[0]),
        "lower_counterexamples": int((~table["holds"]).sum()),
        "upper_failures": int((~table["upper_holds"]).sum()),
        "min_lower_margin": float(table["lower_margin"].min()),
        "min_upper_margin": float(table["upper_margin"].min()),
    }


def cmd_generate(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    params = {
        key: value
        for key, value in {
            "n": args.n,
            "m": args.m,
            "t": args.t,
            "a": args.a,
            "b": args.b,
            "gates": args.gates,
            "ea_kind": args.ea_kind,
            "regime": args.regime,
            "disjoint": args.disjoint,
            "one_sided": args.one_sided,
        }.items()
        if value is not None
    }
    instance = generate(args.kind, params, args.seed, settings)
    out_dir = Path(args.out_dir)
    files = {
        label: str(io.write_circuit(circuit, out_dir / f"{label}.ckt"))
        for label, circuit in instance.circuits.items()
    }
    certificate = report.encode(instance.certificate.as_dict())
    files["certificate"] = str(io.write_json(certificate, out_dir / "certificate.json"))
    return {"certificate": certificate, "files": files}


def cmd_sweep(args: argparse.Namespace, settings: SettingsConfig, parameters: DeskParameters) -> Dict[str, Any]:
    table = analytics.run_sweep(args.name, args.trials, args.seed, settings, parameters)
    if args.csv:
        report.export_sweep_table(table, Path(args.csv), analytics.SWEEP_NUMERIC_COLUMNS[args.name])
    return {"trials": int(table.shape[0]), "failures": int((~table["holds"]).sum()), "table": table}


def _add_pair_inputs(parser: argparse.ArgumentParser, with_y: bool = True) -> None:
    parser.add_argument("--x", required=True, help="CKT file for X.")
    if with_y:
        parser.add_argument("--y", required=True, help="CKT file for Y.")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zkdesk", description="Desk-scale zero-knowledge help toolkit.")
    parser.add_argument("--settings", default=None, help="Path to settings.yaml.")
    parser.add_argument("--parameters", default=None, help="Path to parameters.yaml.")
    parser.add_argument("--budget", type=int, default=None, help="Override the enumeration budget in input bits.")
    parser.add_argument("--seed", type=int, default=None, help="Seed for randomized commands.")
    parser.add_argument("--report", default=None, help="JSON report path.")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sd = sub.add_parser("sd", help="Exact SD, Disj and mut-Disj.")
    _add_pair_inputs(sd)
    sd.set_defaults(handler=cmd_sd)

    disj = sub.add_parser("disj", help="Disjointness, optionally under the natural-image reading.")
    _add_pair_inputs(disj)
    disj.add_argument("--x-args", type=int, default=None, help="Argument bits of X; the rest are coins.")
    disj.add_argument("--y-args", type=int, default=None, help="Argument bits of Y; the rest are coins.")
    disj.set_defaults(handler=cmd_disj)

    entropy = sub.add_parser("entropy", help="Shannon entropy of a circuit distribution.")
    _add_pair_inputs(entropy, with_y=False)
    entropy.add_argument("--threshold", type=float, default=None)
    entropy.add_argument("--distribution-out", default=None, help="CSV or Parquet export of the distribution.")
    entropy.set_defaults(handler=cmd_entropy)

    tensor_parser = sub.add_parser("tensor", help="Tensor product or tensor power.")
    tensor_parser.add_argument("--x", required=True)
    tensor_parser.add_argument("--y", default=None)
    tensor_parser.add_argument("--power", type=int, default=2)
    tensor_parser.add_argument("--out", default=None)
    tensor_parser.set_defaults(handler=cmd_tensor)

    for name, handler in (("xor", cmd_xor), ("t-op", cmd_t_op)):
        operator = sub.add_parser(name)
        _add_pair_inputs(operator)
        operator.add_argument("--out-prefix", default=None)
        operator.set_defaults(handler=handler)

    mixture = sub.add_parser("mixture", help="Two-coin gamma mixture.")
    mixture.add_argument("--x", required=True)
    mixture.add_argument("--u", required=True, help="Dyadic weight such as 3/4.")
    mixture.add_argument("--tag", choices=[GAMMA, GAMMA_PRIME], default=GAMMA)
    mixture.add_argument("--side", choices=[LEFT, RIGHT], default=LEFT)
    mixture.add_argument("--coin-bits", type=int, default=2)
    mixture.add_argument("--out", default=None)
    mixture.set_defaults(handler=cmd_mixture)

    polarize = sub.add_parser("polarize", help="Polarize a mut-IID pair.")
    _add_pair_inputs(polarize)
    polarize.add_argument("--a", type=float, required=True)
    polarize.add_argument("--b", type=float, required=True)
    polarize.add_argument("--k", type=int, default=1)
    polarize.add_argument("--iterations", type=int, default=None)
    polarize.add_argument("--out-prefix", default=None)
    polarize.set_defaults(handler=cmd_polarize)

    reduce_parser = sub.add_parser("reduce", help="Promise-problem reductions.")
    reduce_parser.add_argument(
        "action", choices=["ea-bar-to-iid", "iid-to-mut", "ed-bar", "protocol-to-iid"]
    )
    reduce_parser.add_argument("--x", required=True)
    reduce_parser.add_argument("--y", default=None)
    reduce_parser.add_argument("--t", type=int, default=None)
    reduce_parser.add_argument("--a", type=float, default=None)
    reduce_parser.add_argument("--b", type=float, default=None)
    reduce_parser.add_argument("--k", type=int, default=None)
    reduce_parser.add_argument("--copies", type=int, default=None)
    reduce_parser.add_argument("--security", type=int, default=None)
    reduce_parser.add_argument("--hash-structure", choices=["toeplitz", "full"], default=None)
    reduce_parser.add_argument("--assemble", action="store_true", help="ED-bar: assemble with the oracle EA side.")
    reduce_parser.add_argument("--no-measure", action="store_true")
    reduce_parser.add_argument("--out-prefix", default=None)
    reduce_parser.set_defaults(handler=cmd_reduce)

    protocol = sub.add_parser("protocol", help="Protocol simulation.")
    protocol.add_argument("action", choices=["run"])
    _add_pair_inputs(protocol)
    protocol.add_argument("--runs", type=int, default=1)
    protocol.add_argument("--k", type=int, default=None, help="Require polarization to (2^-k, 1 - 2^-k).")
    protocol.set_defaults(handler=cmd_protocol)

    quantum = sub.add_parser("quantum", help="Density-matrix checks.")
    quantum.add_argument("action", choices=["fact-check"])
    quantum.add_argument("--n", type=int, default=4, help="Largest qubit count.")
    quantum.add_argument("--trials", type=int, default=10000)
    quantum.add_argument("--state", default=None, help="JSON density matrix to check instead of sampling.")
    quantum.add_argument("--csv", default=None)
    quantum.set_defaults(handler=cmd_quantum)

    gen = sub.add_parser("generate", help="Generate a certified instance.")
    gen.add_argument("--kind", choices=list(GENERATOR_KINDS), required=True)
    gen.add_argument("--n", type=int, default=None)
    gen.add_argument("--m", type=int, default=None)
    gen.add_argument("--t", type=int, default=None)
    gen.add_argument("--a", type=float, default=None)
    gen.add_argument("--b", type=float, default=None)
    gen.add_argument("--gates", type=int, default=None)
    gen.add_argument("--ea-kind", choices=["point", "injective", "random"], default=None)
    gen.add_argument("--regime", choices=["yes", "no"], default=None)
    gen.add_argument("--disjoint", action="store_true", default=None)
    gen.add_argument("--one-sided", action="store_true", default=None, help="No-IID: Im(Y) inside Im(X).")
    gen.add_argument("--out-dir", required=True)
    gen.set_defaults(handler=cmd_generate)

    sweep = sub.add_parser("sweep", help="Property sweeps.")
    sweep.add_argument("--name", choices=list(analytics.SWEEPS), required=True)
    sweep.add_argument("--trials", type=int, default=200)
    sweep.add_argument("--csv", default=None)
    sweep.set_defaults(handler=cmd_sweep)
    return parser


def _experiment_config(args: argparse.Namespace, settings: SettingsConfig) -> ExperimentConfig:
    values = {key: value for key, value in vars(args).items() if key not in _PLUMBING}
    inputs = {key: value for key, value in values.items() if key in ("x", "y", "state") and value is not None}
    outputs = {
        key: value
        for key, value in values.items()
        if key in ("out", "out_prefix", "out_dir", "csv", "distribution_out") and value is not None
    }
    parameters = {
        key: value for key, value in values.items() if key not in inputs and key not in outputs and value is not None
    }
    command = args.command if getattr(args, "action", None) is None else f"{args.command} {args.action}"
    return ExperimentConfig(
        command=command,
        inputs=inputs,
        parameters=parameters,
        seed=args.seed,
        budget=settings.enumeration_budget_bits,
        outputs=outputs,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(logging.DEBUG if args.verbose else logging.INFO)

    root = project_root()
    try:
        settings = load_settings(Path(args.settings) if args.settings else root / "config" / "settings.yaml")
        parameters = load_parameters(Path(args.parameters) if args.parameters else root / "config" / "parameters.yaml")
        if args.budget is not None:
            settings = with_budget(settings, args.budget)
        if args.seed is None:
            args.seed = settings.default_seed
        config = _experiment_config(args, settings)
        results = args.handler(args, settings, parameters)
        slug = config.command.replace(" ", "_")
        target = Path(args.report) if args.report else settings.report_dir / f"{slug}.json"
        report.write_report(report.build_report(config.command, config.as_dict(), results), target)
    except BudgetExceededError as error:
        LOGGER.error("Budget exceeded: %s", error)
        return EXIT_BUDGET
    except (ValueError, OSError) as error:
        LOGGER.error("%s", error)
        return EXIT_PRECONDITION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
