#!/usr/bin/env python
"""Provide the evolvable circuit representation.

A CircuitGenome is a register size, input and output qubit lists (which may overlap)
and a list of GateSpecs kept sorted by (depth, innovation). Innovation numbers
identify the same gate across genomes for crossover and are only ever issued by an
InnovationCounter owned by the evolution master.

Genomes are treated as immutable: every operation returns a new genome.

The JSON form written by serialize is the checkpoint and result format:

    {"genome_id": 7, "num_qubits": 3, "input_qubits": [0, 1], "output_qubits": [2],
     "gates": [{"innovation": 4, "kind": "cx", "depth": 0.31,
                "qubits": {"control_qubit": 0, "target_qubit": 2},
                "params": {}, "enabled": true}],
     "fitness": 0.12, "lineage": {"operator": "add_gate", "parents": [3]}}
"""

# cSpell:ignore simplejson, lineno, colno

from dataclasses import field, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

import simplejson
from pydantic import ValidationError, field_validator, model_validator
from pydantic.dataclasses import dataclass

from qevolve.circuits.config import GateKind
from qevolve.circuits.exceptions import GenomeError, GenomeParseError

BASE_GENOME_ID = -1
BASE_OPERATOR = "base"


@dataclass(frozen=True)
class GateSpec:
    """One gate in a genome.

    Public attributes:
        innovation {int} -- Unique id shared by copies of the same gate across genomes.
        kind {GateKind} -- Gate kind.
        depth {float} -- Position in the circuit, 0.0 <= depth <= 1.0.
        qubits {Dict[str, int]} -- Qubit index for each role name of kind.
        params {Dict[str, float]} -- Value (radians) for each parameter name of kind.
        enabled {bool} -- Disabled gates are kept in the genome but not executed.
    """

    innovation: int
    kind: GateKind
    depth: float
    qubits: Dict[str, int]
    params: Dict[str, float] = field(default_factory=dict)
    enabled: bool = True

    @model_validator(mode="after")
    def _check_gate(self) -> "GateSpec":
        if not 0.0 <= self.depth <= 1.0:
            raise ValueError(f"Gate depth must lie in [0, 1], got {self.depth}.")
        if set(self.qubits) != set(self.kind.roles):
            raise ValueError(
                f"Gate '{self.kind.value}' needs qubit roles {self.kind.roles}, "
                f"got {sorted(self.qubits)}."
            )
        if len(set(self.qubits.values())) != len(self.qubits):
            raise ValueError(
                f"Gate '{self.kind.value}' assigns the same qubit to two roles: "
                f"{self.qubits}."
            )
        if set(self.params) != set(self.kind.param_names):
            raise ValueError(
                f"Gate '{self.kind.value}' needs parameters {self.kind.param_names}, "
                f"got {sorted(self.params)}."
            )
        return self

    @property
    def qubit_list(self) -> List[int]:
        """Return qubit indices in role order."""
        return [self.qubits[role] for role in self.kind.roles]

    @property
    def param_values(self) -> List[float]:
        """Return parameter values in parameter name order."""
        return [self.params[name] for name in self.kind.param_names]

    @property
    def sort_key(self) -> Tuple[float, int]:
        """Return the (depth, innovation) execution order key."""
        return (self.depth, self.innovation)

    def to_dict(self) -> Dict[str, Any]:
        """Return the JSON form of the gate."""
        return {
            "innovation": self.innovation,
            "kind": self.kind.value,
            "depth": self.depth,
            "qubits": {role: self.qubits[role] for role in self.kind.roles},
            "params": {name: self.params[name] for name in self.kind.param_names},
            "enabled": self.enabled,
        }


@dataclass(frozen=True)
class Lineage:
    """How a genome was produced.

    Public attributes:
        operator {str} -- Name of the generating operator chain, e.g.
            'add_gate+swap_qubits' or 'binary_crossover'.
        parents {List[int]} -- Genome ids of the parents.
    """

    operator: str = BASE_OPERATOR
    parents: List[int] = field(default_factory=list)


@dataclass(frozen=True)
class CircuitGenome:
    """A circuit genome.

    Public attributes:
        num_qubits {int} -- Register size.
        input_qubits {List[int]} -- Qubits that carry the input.
        output_qubits {List[int]} -- Qubits that are read out (may overlap inputs).
        gates {List[GateSpec]} -- Gates, always sorted by (depth, innovation).
        genome_id {int} -- Id assigned by the evolution master (-1 for base genomes).
        fitness {Optional[float]} -- Loss after training, lower is better.
        lineage {Lineage} -- Generating operator and parents.
    """

    num_qubits: int
    input_qubits: List[int]
    output_qubits: List[int]
    gates: List[GateSpec] = field(default_factory=list)
    genome_id: int = BASE_GENOME_ID
    fitness: Optional[float] = None
    lineage: Lineage = field(default_factory=Lineage)

    @field_validator("gates")
    @classmethod
    def _sort_gates(cls, gates: List[GateSpec]) -> List[GateSpec]:
        innovations = [gate.innovation for gate in gates]
        if len(set(innovations)) != len(innovations):
            raise ValueError(f"Duplicate innovation numbers in {sorted(innovations)}.")
        return sorted(gates, key=lambda gate: gate.sort_key)

    @model_validator(mode="after")
    def _check_registers(self) -> "CircuitGenome":
        if self.num_qubits < 1:
            raise ValueError(f"Genome needs at least one qubit, got {self.num_qubits}.")
        for name, qubits in (
            ("input_qubits", self.input_qubits),
            ("output_qubits", self.output_qubits),
        ):
            if not qubits:
                raise ValueError(f"{name} must not be empty.")
            if len(set(qubits)) != len(qubits):
                raise ValueError(f"{name} contains duplicates: {qubits}.")
            if any(not 0 <= qubit < self.num_qubits for qubit in qubits):
                raise ValueError(
                    f"{name} {qubits} out of range for {self.num_qubits} qubits."
                )
        for gate in self.gates:
            if any(not 0 <= qubit < self.num_qubits for qubit in gate.qubit_list):
                raise ValueError(
                    f"Gate {gate.innovation} uses qubits {gate.qubit_list} outside a "
                    f"{self.num_qubits} qubit register."
                )
        return self

    @classmethod
    def empty(
        cls, num_qubits: int, input_qubits: List[int], output_qubits: List[int]
    ) -> "CircuitGenome":
        """Return a base genome with no gates."""
        return cls(
            num_qubits=num_qubits,
            input_qubits=list(input_qubits),
            output_qubits=list(output_qubits),
        )

    @property
    def innovations(self) -> Set[int]:
        """Return the set of innovation numbers in the genome."""
        return {gate.innovation for gate in self.gates}

    @property
    def num_enabled_gates(self) -> int:
        """Return the number of enabled gates."""
        return sum(1 for gate in self.gates if gate.enabled)

    @property
    def max_innovation(self) -> int:
        """Return the largest innovation number, or -1 for an empty genome."""
        return max(self.innovations, default=-1)

    def gate_by_innovation(self, innovation: int) -> GateSpec:
        """Return the gate with the given innovation number."""
        for gate in self.gates:
            if gate.innovation == innovation:
                return gate
        raise KeyError(f"No gate with innovation {innovation}.")

    def with_gates(self, gates: Iterable[GateSpec]) -> "CircuitGenome":
        """Return an unevaluated copy with a new gate list."""
        return replace(self, gates=list(gates), fitness=None)

    def with_params(self, params: Dict[int, Dict[str, float]]) -> "CircuitGenome":
        """Return a copy with parameters replaced for the given innovation numbers.

        Arguments:
            params {Dict[int, Dict[str, float]]} -- Parameter dictionaries keyed by
                gate innovation. Gates not named keep their parameters.

        Fitness is kept, as this is how trained weights are written back.
        """
        gates = [
            replace(gate, params=dict(params[gate.innovation]))
            if gate.innovation in params
            else gate
            for gate in self.gates
        ]
        return replace(self, gates=gates)

    def with_fitness(self, fitness: Optional[float]) -> "CircuitGenome":
        """Return a copy with fitness set."""
        return replace(self, fitness=fitness)

    def with_identity(self, genome_id: int, lineage: Lineage) -> "CircuitGenome":
        """Return a copy carrying a new genome id and lineage."""
        return replace(self, genome_id=genome_id, lineage=lineage)

    def to_dict(self) -> Dict[str, Any]:
        """Return the JSON form of the genome."""
        return {
            "genome_id": self.genome_id,
            "num_qubits": self.num_qubits,
            "input_qubits": list(self.input_qubits),
            "output_qubits": list(self.output_qubits),
            "gates": [gate.to_dict() for gate in self.gates],
            "fitness": self.fitness,
            "lineage": {
                "operator": self.lineage.operator,
                "parents": list(self.lineage.parents),
            },
        }


class InnovationCounter:
    """Issue innovation numbers. Never reissues a value.

    Confined to the evolution master.
    """

    _next: int

    def __init__(self, start: int = 0) -> None:
        """Create a counter whose first issued value is start."""
        self._next = start

    def snapshot(self) -> int:
        """Return counter state for a checkpoint (restore with InnovationCounter(n))."""
        return self._next

    def issue(self) -> int:
        """Return a fresh innovation number."""
        value = self._next
        self._next += 1
        return value

    def advance_past(self, genome: CircuitGenome) -> None:
        """Ensure future numbers exceed every innovation in genome."""
        self._next = max(self._next, genome.max_innovation + 1)


def _touch_forward(
    gates: Iterable[GateSpec], start: Iterable[int], before: Optional[float] = None
) -> Set[int]:
    touched = set(start)
    for gate in gates:
        if before is not None and gate.depth >= before:
            break
        if gate.enabled and touched.intersection(gate.qubit_list):
            touched.update(gate.qubit_list)
    return touched


def reachable_from_inputs(genome: CircuitGenome, depth: float) -> Set[int]:
    """Return the qubits influenced by the inputs before depth.

    The input qubits are marked, then every enabled gate with gate.depth < depth is
    visited in sorted order; a gate touching a marked qubit marks all its qubits.
    """
    return _touch_forward(genome.gates, genome.input_qubits, before=depth)


def connects_to_outputs(genome: CircuitGenome, depth: float) -> Set[int]:
    """Return the qubits that influence the outputs from depth onwards.

    Mirror of reachable_from_inputs: the output qubits are marked and enabled gates
    with gate.depth >= depth are visited in reverse sorted order.
    """
    touched = set(genome.output_qubits)
    for gate in reversed(genome.gates):
        if gate.depth < depth:
            break
        if gate.enabled and touched.intersection(gate.qubit_list):
            touched.update(gate.qubit_list)
    return touched


def is_valid(genome: CircuitGenome) -> bool:
    """Return True if at least one input flows to at least one output.

    Overlapping input and output qubits count as connected even with no gates.
    """
    touched = _touch_forward(genome.gates, genome.input_qubits)
    return bool(touched.intersection(genome.output_qubits))


def insert_gate(genome: CircuitGenome, gate: GateSpec) -> CircuitGenome:
    """Return a new genome with gate inserted at its sorted position.

    Raises:
        GenomeError -- If the innovation number is already present, or the gate does
            not fit the register.
    """
    if gate.innovation in genome.innovations:
        raise GenomeError(
            f"Innovation {gate.innovation} is already present in genome "
            f"{genome.genome_id}."
        )
    try:
        return genome.with_gates([*genome.gates, gate])
    except ValidationError as exc:
        message = f"Gate {gate.innovation} does not fit genome.\n{exc}"
        raise GenomeError(message) from exc


def serialize(genome: CircuitGenome, indent: Optional[int] = None) -> str:
    """Return the JSON text for a genome (floats at full precision)."""
    return simplejson.dumps(genome.to_dict(), indent=indent)


def genome_from_dict(data: Any) -> CircuitGenome:
    """Build a genome from its decoded JSON form.

    Raises:
        GenomeParseError -- Naming the field path of the first problem found.
    """
    if not isinstance(data, dict):
        raise GenomeParseError("expected a JSON object", "$")

    known = {kind.value for kind in GateKind}
    gates = data.get("gates", [])
    if not isinstance(gates, list):
        raise GenomeParseError("'gates' must be a list", "gates")
    for index, gate in enumerate(gates):
        if not isinstance(gate, dict):
            raise GenomeParseError("gate must be an object", f"gates[{index}]")
        if gate.get("kind") not in known:
            raise GenomeParseError(
                f"unknown gate '{gate.get('kind')}'", f"gates[{index}].kind"
            )

    try:
        return CircuitGenome(
            num_qubits=data["num_qubits"],
            input_qubits=data["input_qubits"],
            output_qubits=data["output_qubits"],
            gates=[GateSpec(**gate) for gate in gates],
            genome_id=data.get("genome_id", BASE_GENOME_ID),
            fitness=data.get("fitness"),
            lineage=Lineage(**data.get("lineage", {})),
        )
    except KeyError as exc:
        raise GenomeParseError(f"missing field {exc}", "$") from exc
    except TypeError as exc:
        raise GenomeParseError(str(exc), "$") from exc
    except ValidationError as exc:
        error = exc.errors()[0]
        location = ".".join(str(part) for part in error["loc"]) or exc.title
        raise GenomeParseError(error["msg"], location) from exc


def deserialize(text: str) -> CircuitGenome:
    """Return the genome encoded in JSON text.

    Raises:
        GenomeParseError -- With line/column for malformed JSON, or a field path for
            schema problems (including unknown gate names).
    """
    try:
        data = simplejson.loads(text)
    except simplejson.JSONDecodeError as exc:
        position = f"line {exc.lineno} column {exc.colno}"
        raise GenomeParseError(exc.msg, position) from exc
    return genome_from_dict(data)


def save_genome(genome: CircuitGenome, path: Path) -> None:
    """Write a genome to a JSON file."""
    with path.open("wt", encoding="utf-8") as file_handle:
        file_handle.write(serialize(genome, indent=2))


def load_genome(path: Path) -> CircuitGenome:
    """Read a genome from a JSON file."""
    with path.open("rt", encoding="utf-8") as file_handle:
        return deserialize(file_handle.read())
