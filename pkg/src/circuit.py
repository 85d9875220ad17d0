"""Boolean circuits that encode distributions over their output bits."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from .utils import (
    BudgetExceededError,
    CircuitSyntaxError,
    PreconditionError,
    SettingsConfig,
    check_input_budget,
)


LOGGER = logging.getLogger(__name__)

INPUT = "input"
GATE = "gate"

GATE_ARITY: Dict[str, int] = {
    "AND": 2,
    "OR": 2,
    "XOR": 2,
    "NOT": 1,
    "CONST0": 0,
    "CONST1": 0,
}

_BINARY_UFUNCS = {
    "AND": np.logical_and,
    "OR": np.logical_or,
    "XOR": np.logical_xor,
}

_REF_PATTERN = re.compile(r"([ig])(\d+)")
_GATE_ID_PATTERN = re.compile(r"g(\d+)")


@dataclass(frozen=True)
class WireRef:
    """Reference to a circuit input (``i<j>``) or an earlier gate (``g<j>``)."""

    kind: str
    index: int

    def __str__(self) -> str:
        prefix = "i" if self.kind == INPUT else "g"
        return f"{prefix}{self.index}"

    @classmethod
    def parse(cls, token: str) -> "WireRef":
        match = _REF_PATTERN.fullmatch(token)
        if match is None:
            raise ValueError(f"Malformed wire reference '{token}'")
        kind = INPUT if match.group(1) == "i" else GATE
        return cls(kind, int(match.group(2)))


@dataclass(frozen=True)
class Gate:
    op: str
    args: Tuple[WireRef, ...]


@dataclass(frozen=True)
class CircuitDistribution:
    """A circuit over ``n_inputs`` uniform bits; its outputs define a distribution."""

    n_inputs: int
    gates: Tuple[Gate, ...]
    outputs: Tuple[WireRef, ...]

    @property
    def m(self) -> int:
        return len(self.outputs)

    @property
    def n_gates(self) -> int:
        return len(self.gates)


@dataclass(frozen=True)
class Violation:
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> List[str]:
        return [f"{item.location}: {item.message}" for item in self.violations]


def validate(circuit: CircuitDistribution) -> ValidationReport:
    """Check the structural invariants; violations are returned, never raised."""

    violations: List[Violation] = []
    if circuit.n_inputs < 0:
        violations.append(Violation("header", "negative input count"))

    for position, gate in enumerate(circuit.gates):
        location = f"g{position}"
        arity = GATE_ARITY.get(gate.op)
        if arity is None:
            violations.append(Violation(location, f"unknown operation {gate.op}"))
        elif len(gate.args) != arity:
            violations.append(
                Violation(location, f"arity violation: {gate.op} takes {arity}, got {len(gate.args)}")
            )
        for arg in gate.args:
            problem = _reference_problem(arg, circuit.n_inputs, position)
            if problem is not None:
                violations.append(Violation(location, f"{problem} ({arg})"))

    if not circuit.outputs:
        violations.append(Violation("OUT", "no outputs (m must be >= 1)"))
    for position, ref in enumerate(circuit.outputs):
        if _reference_problem(ref, circuit.n_inputs, circuit.n_gates) is not None:
            violations.append(Violation(f"OUT[{position}]", f"unresolved output ({ref})"))

    return ValidationReport(tuple(violations))


def _reference_problem(ref: WireRef, n_inputs: int, gate_limit: int) -> Optional[str]:
    if ref.kind == INPUT:
        if not 0 <= ref.index < n_inputs:
            return "input out of range"
        return None
    if ref.kind == GATE:
        if ref.index < 0:
            return "negative gate index"
        if ref.index >= gate_limit:
            return "forward reference"
        return None
    return f"unknown wire kind {ref.kind}"


def require_valid(circuit: CircuitDistribution) -> None:
    """Raise ``PreconditionError`` listing every violation of an invalid circuit."""

    report = validate(circuit)
    if not report.ok:
        raise PreconditionError("Invalid circuit: " + "; ".join(report.messages()))


def check_circuit_budget(circuit: CircuitDistribution, settings: SettingsConfig, what: str) -> None:
    """Enforce the input-bit and gate budgets on a constructed circuit."""

    check_input_budget(circuit.n_inputs, settings, what)
    if circuit.n_gates > settings.gate_budget:
        raise BudgetExceededError(
            f"{what} has {circuit.n_gates} gates; gate budget is {settings.gate_budget}",
            required=circuit.n_gates,
            budget=settings.gate_budget,
        )


def input_block(n_inputs: int, start: int, stop: int) -> np.ndarray:
    """Input rows ``start..stop-1`` as booleans; input ``i0`` is the most significant bit."""

    indices = np.arange(start, stop, dtype=np.uint64)
    shifts = np.arange(n_inputs - 1, -1, -1, dtype=np.uint64)
    return ((indices[:, None] >> shifts[None, :]) & np.uint64(1)).astype(bool)


def iter_input_blocks(n_inputs: int, chunk_bits: int) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield ``(start, block)`` pairs covering all ``2**n_inputs`` inputs in order."""

    total = 1 << n_inputs
    step = 1 << max(chunk_bits, 0)
    for start in range(0, total, step):
        stop = min(start + step, total)
        yield start, input_block(n_inputs, start, stop)


def evaluate_batch(circuit: CircuitDistribution, inputs: np.ndarray) -> np.ndarray:
    """Evaluate ``circuit`` on every row of a boolean ``(batch, n_inputs)`` array."""

    require_valid(circuit)
    if inputs.ndim != 2 or inputs.shape[1] != circuit.n_inputs:
        raise PreconditionError(
            f"Input width mismatch: circuit takes {circuit.n_inputs} bits, got shape {inputs.shape}"
        )
    return run_batch(circuit, inputs.astype(bool, copy=False))


def run_batch(circuit: CircuitDistribution, inputs: np.ndarray) -> np.ndarray:
    """Evaluation without validation; callers guarantee a valid circuit."""

    batch = inputs.shape[0]
    values: List[np.ndarray] = []

    def wire(ref: WireRef) -> np.ndarray:
        if ref.kind == INPUT:
            return inputs[:, ref.index]
        return values[ref.index]

    for gate in circuit.gates:
        if gate.op in _BINARY_UFUNCS:
            values.append(_BINARY_UFUNCS[gate.op](wire(gate.args[0]), wire(gate.args[1])))
        elif gate.op == "NOT":
            values.append(np.logical_not(wire(gate.args[0])))
        elif gate.op == "CONST0":
            values.append(np.zeros(batch, dtype=bool))
        else:
            values.append(np.ones(batch, dtype=bool))

    result = np.empty((batch, circuit.m), dtype=bool)
    for column, ref in enumerate(circuit.outputs):
        result[:, column] = wire(ref)
    return result


def evaluate(circuit: CircuitDistribution, r: str) -> str:
    """Evaluate on a single input bitstring."""

    if len(r) != circuit.n_inputs:
        raise PreconditionError(f"Input length mismatch: expected {circuit.n_inputs} bits, got {len(r)}")
    row = bits_to_array(r).reshape(1, -1)
    return array_to_bits(evaluate_batch(circuit, row)[0])


def bits_to_array(bits: str) -> np.ndarray:
    if any(char not in "01" for char in bits):
        raise PreconditionError(f"Not a bitstring: '{bits}'")
    return np.fromiter((char == "1" for char in bits), dtype=bool, count=len(bits))


def array_to_bits(row: np.ndarray) -> str:
    return "".join("1" if value else "0" for value in row)


def serialize(circuit: CircuitDistribution) -> str:
    """Render the canonical CKT v1 text."""

    lines = [f"CKT v1 {circuit.n_inputs} {circuit.n_gates} {circuit.m}"]
    for position, gate in enumerate(circuit.gates):
        lines.append(" ".join([f"g{position}", gate.op, *(str(arg) for arg in gate.args)]))
    lines.append(" ".join(["OUT", *(str(ref) for ref in circuit.outputs)]))
    return "\n".join(lines) + "\n"


def parse(text: str) -> CircuitDistribution:
    """Parse CKT v1 text; comments and blank lines are dropped."""

    header: Optional[Tuple[int, int, int]] = None
    gates: List[Gate] = []
    outputs: Optional[List[WireRef]] = None
    last_line = 0

    for number, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        last_line = number
        tokens = line.split()

        if header is None:
            if len(tokens) != 5 or tokens[0] != "CKT" or tokens[1] != "v1":
                raise CircuitSyntaxError("expected header 'CKT v1 <n_inputs> <n_gates> <m_outputs>'", number)
            header = (
                _parse_count(tokens[2], number),
                _parse_count(tokens[3], number),
                _parse_count(tokens[4], number),
            )
            continue

        if outputs is not None:
            raise CircuitSyntaxError("content after OUT line", number)

        if tokens[0] == "OUT":
            outputs = [_parse_ref(token, number) for token in tokens[1:]]
            continue

        gates.append(_parse_gate(tokens, len(gates), header[0], number))

    if header is None:
        raise CircuitSyntaxError("missing header", 1)
    if outputs is None:
        raise CircuitSyntaxError("missing OUT line", last_line)

    n_inputs, n_gates, m_outputs = header
    if len(gates) != n_gates:
        raise CircuitSyntaxError(f"header declares {n_gates} gates, found {len(gates)}", last_line)
    if len(outputs) != m_outputs:
        raise CircuitSyntaxError(f"header declares {m_outputs} outputs, OUT lists {len(outputs)}", last_line)
    if m_outputs < 1:
        raise CircuitSyntaxError("a circuit needs at least one output", last_line)
    for ref in outputs:
        if _reference_problem(ref, n_inputs, n_gates) is not None:
            raise CircuitSyntaxError(f"unresolved output {ref}", last_line)

    return CircuitDistribution(n_inputs, tuple(gates), tuple(outputs))


def _parse_gate(tokens: List[str], expected: int, n_inputs: int, number: int) -> Gate:
    match = _GATE_ID_PATTERN.fullmatch(tokens[0])
    if match is None:
        raise CircuitSyntaxError(f"malformed gate id '{tokens[0]}'", number)
    position = int(match.group(1))
    if position < expected:
        raise CircuitSyntaxError(f"duplicate gate id g{position}", number)
    if position != expected:
        raise CircuitSyntaxError(f"gate id g{position} out of sequence, expected g{expected}", number)
    if len(tokens) < 2:
        raise CircuitSyntaxError(f"gate g{position} has no operation", number)

    op = tokens[1]
    if op not in GATE_ARITY:
        raise CircuitSyntaxError(f"unknown operation {op}", number)
    args = [_parse_ref(token, number) for token in tokens[2:]]
    if len(args) != GATE_ARITY[op]:
        raise CircuitSyntaxError(
            f"arity violation: {op} takes {GATE_ARITY[op]} arguments, got {len(args)}", number
        )
    for arg in args:
        problem = _reference_problem(arg, n_inputs, position)
        if problem is not None:
            raise CircuitSyntaxError(f"{problem} ({arg}) in g{position}", number)
    return Gate(op, tuple(args))


def _parse_ref(token: str, number: int) -> WireRef:
    try:
        return WireRef.parse(token)
    except ValueError as exc:
        raise CircuitSyntaxError(str(exc), number) from exc


def _parse_count(token: str, number: int) -> int:
    if not token.isdigit():
        raise CircuitSyntaxError(f"expected a non-negative count, got '{token}'", number)
    return int(token)


class CircuitBuilder:
    """Append-only gate list with helpers for the constructions in this package."""

    def __init__(self, n_inputs: int = 0) -> None:
        self._n_inputs = n_inputs
        self._gates: List[Gate] = []
        self._constants: Dict[int, WireRef] = {}

    @property
    def n_inputs(self) -> int:
        return self._n_inputs

    def inputs(self, start: int, count: int) -> List[WireRef]:
        if start < 0 or start + count > self._n_inputs:
            raise PreconditionError(f"Inputs {start}..{start + count - 1} outside 0..{self._n_inputs - 1}")
        return [WireRef(INPUT, index) for index in range(start, start + count)]

    def add_inputs(self, count: int) -> List[WireRef]:
        start = self._n_inputs
        self._n_inputs += count
        return self.inputs(start, count)

    def gate(self, op: str, *args: WireRef) -> WireRef:
        if GATE_ARITY.get(op) != len(args):
            raise PreconditionError(f"arity violation: {op} with {len(args)} arguments")
        self._gates.append(Gate(op, tuple(args)))
        return WireRef(GATE, len(self._gates) - 1)

    def and_(self, left: WireRef, right: WireRef) -> WireRef:
        return self.gate("AND", left, right)

    def or_(self, left: WireRef, right: WireRef) -> WireRef:
        return self.gate("OR", left, right)

    def xor(self, left: WireRef, right: WireRef) -> WireRef:
        return self.gate("XOR", left, right)

    def not_(self, wire: WireRef) -> WireRef:
        return self.gate("NOT", wire)

    def const(self, bit: int) -> WireRef:
        if bit not in self._constants:
            self._constants[bit] = self.gate("CONST1" if bit else "CONST0")
        return self._constants[bit]

    def mux(self, select: WireRef, when_zero: WireRef, when_one: WireRef) -> WireRef:
        """``when_zero`` if ``select`` is 0 else ``when_one``."""

        return self.xor(when_zero, self.and_(select, self.xor(when_zero, when_one)))

    def mux_bits(
        self, select: WireRef, when_zero: Sequence[WireRef], when_one: Sequence[WireRef]
    ) -> List[WireRef]:
        if len(when_zero) != len(when_one):
            raise PreconditionError(f"Width mismatch in mux: {len(when_zero)} vs {len(when_one)}")
        return [self.mux(select, zero, one) for zero, one in zip(when_zero, when_one)]

    def embed(self, circuit: CircuitDistribution, input_refs: Sequence[WireRef]) -> List[WireRef]:
        """Copy ``circuit`` in, feeding its inputs from the first ``n_inputs`` refs."""

        if len(input_refs) < circuit.n_inputs:
            raise PreconditionError(
                f"Embedding needs {circuit.n_inputs} input wires, got {len(input_refs)}"
            )
        offset = len(self._gates)

        def remap(ref: WireRef) -> WireRef:
            if ref.kind == INPUT:
                return input_refs[ref.index]
            return WireRef(GATE, ref.index + offset)

        for gate in circuit.gates:
            self._gates.append(Gate(gate.op, tuple(remap(arg) for arg in gate.args)))
        return [remap(ref) for ref in circuit.outputs]

    def and_all(self, wires: Sequence[WireRef]) -> WireRef:
        if not wires:
            return self.const(1)
        result = wires[0]
        for wire in wires[1:]:
            result = self.and_(result, wire)
        return result

    def or_all(self, wires: Sequence[WireRef]) -> WireRef:
        if not wires:
            return self.const(0)
        result = wires[0]
        for wire in wires[1:]:
            result = self.or_(result, wire)
        return result

    def less_than(self, bits: Sequence[WireRef], bound: int) -> WireRef:
        """``[value(bits) < bound]`` with ``bits`` read most significant first."""

        width = len(bits)
        if bound <= 0:
            return self.const(0)
        if bound >= 1 << width:
            return self.const(1)
        below = self.const(0)
        equal = self.const(1)
        for position, bit in enumerate(bits):
            if (bound >> (width - 1 - position)) & 1:
                below = self.or_(below, self.and_(equal, self.not_(bit)))
                equal = self.and_(equal, bit)
            else:
                equal = self.and_(equal, self.not_(bit))
        return below

    def equals(self, left: Sequence[WireRef], right: Sequence[WireRef]) -> WireRef:
        if len(left) != len(right):
            raise PreconditionError(f"Width mismatch in equality: {len(left)} vs {len(right)}")
        return self.and_all([self.not_(self.xor(a, b)) for a, b in zip(left, right)])

    def majority(self, bits: Sequence[WireRef]) -> WireRef:
        """Strict majority of an odd number of bits, as an OR of ANDs."""

        if len(bits) % 2 == 0:
            raise PreconditionError(f"Majority needs an odd number of bits, got {len(bits)}")
        quorum = (len(bits) + 1) // 2
        return self.or_all([self.and_all(list(group)) for group in combinations(bits, quorum)])

    def build(self, outputs: Sequence[WireRef]) -> CircuitDistribution:
        circuit = CircuitDistribution(self._n_inputs, tuple(self._gates), tuple(outputs))
        require_valid(circuit)
        return circuit


def identity_circuit(n_bits: int) -> CircuitDistribution:
    """Uniform distribution on ``n_bits`` bits."""

    if n_bits < 1:
        raise PreconditionError("Identity circuit needs at least one bit")
    builder = CircuitBuilder(n_bits)
    return builder.build(builder.inputs(0, n_bits))


def constant_circuit(bits: str, n_inputs: int = 0) -> CircuitDistribution:
    """Point distribution on ``bits``; extra inputs are ignored."""

    if not bits:
        raise PreconditionError("Constant circuit needs at least one output bit")
    bits_to_array(bits)
    builder = CircuitBuilder(n_inputs)
    return builder.build([builder.const(1 if char == "1" else 0) for char in bits])
