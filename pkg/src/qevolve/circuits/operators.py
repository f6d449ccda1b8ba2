#!/usr/bin/env python
"""Provide the mutation and crossover operators for circuit genomes.

Operators are pure functions of their parents, an OperatorConfig and a numpy random
Generator. Mutations that cannot be applied return None (a rejection) and the caller
draws another operator. Children are never evaluated: fitness is None and the genome id
is the parent's until the evolution master assigns a new one.

Parameters are inherited (Lamarckian): copied gates keep their trained values and
crossover recombines shared parameters along a randomized line or simplex.
"""

# cSpell:ignore nary, lamarckian

import itertools
import logging
import math
from dataclasses import field, replace
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from pydantic import Field, model_validator
from pydantic.dataclasses import dataclass

from qevolve.circuits.config import (
    GateKind,
    MutationKind,
    OperatorKind,
    RoleType,
)
from qevolve.circuits.genome import (
    CircuitGenome,
    GateSpec,
    InnovationCounter,
    Lineage,
    connects_to_outputs,
    insert_gate,
    reachable_from_inputs,
)
from qevolve.utils import weighted_choice

RATE_TOLERANCE = 1e-9

DEFAULT_MUTATION_RATES: Dict[MutationKind, float] = {
    MutationKind.ADD_GATE: 0.70,
    MutationKind.REORDER_GATE: 0.10,
    MutationKind.SWAP_QUBITS: 0.10,
    MutationKind.ENABLE_GATE: 0.05,
    MutationKind.DISABLE_GATE: 0.05,
}

DEFAULT_CROSSOVER_RATES: Dict[OperatorKind, float] = {
    OperatorKind.BINARY: 0.10,
    OperatorKind.NARY: 0.10,
    OperatorKind.EXPONENTIAL: 0.10,
    OperatorKind.MUTATION: 0.70,
}


@dataclass(frozen=True)
class OperatorConfig:
    """Operator rates and recombination constants.

    Public attributes:
        best_keep_rate {float} -- Probability of keeping a gate found only in the
            fittest parent.
        other_keep_rate {float} -- Probability of keeping a gate found only in the
            other parent(s).
        line_l1 {float} -- Scale of the random line search coefficient.
        line_l2 {float} -- Offset of the random line search coefficient. Each
            recombined gate draws r = U(0, 1) * line_l1 - line_l2.
        nary_parents {int} -- Parents used by n-ary crossover, including the best.
        mutation_rates {Dict[MutationKind, float]} -- Mutation selection weights.
        crossover_rates {Dict[OperatorKind, float]} -- Top level operator weights.
        mutations_per_call {int} -- Mutations chained into one mutation child.
        gate_vocabulary {List[GateKind]} -- Kinds add_gate may insert.
    """

    best_keep_rate: float = Field(default=0.75, ge=0.0, le=1.0)
    other_keep_rate: float = Field(default=0.25, ge=0.0, le=1.0)
    line_l1: float = -1.0
    line_l2: float = 0.5
    nary_parents: int = Field(default=4, ge=2)
    mutation_rates: Dict[MutationKind, float] = field(
        default_factory=lambda: dict(DEFAULT_MUTATION_RATES)
    )
    crossover_rates: Dict[OperatorKind, float] = field(
        default_factory=lambda: dict(DEFAULT_CROSSOVER_RATES)
    )
    mutations_per_call: int = Field(default=2, ge=1)
    gate_vocabulary: List[GateKind] = field(default_factory=lambda: list(GateKind))

    @model_validator(mode="after")
    def _check_rates(self) -> "OperatorConfig":
        for name, rates in (
            ("mutation_rates", self.mutation_rates),
            ("crossover_rates", self.crossover_rates),
        ):
            if any(not 0.0 <= rate <= 1.0 for rate in rates.values()):
                raise ValueError(f"{name} must all lie in [0, 1]: {rates}.")
            total = math.fsum(rates.values())
            if abs(total - 1.0) > RATE_TOLERANCE:
                raise ValueError(f"{name} must sum to 1.0, got {total!r}.")
        if not self.gate_vocabulary:
            raise ValueError("gate_vocabulary must not be empty.")
        return self

    def ordered_mutation_rates(self) -> Dict[MutationKind, float]:
        """Return mutation_rates in MutationKind declaration order."""
        return {
            kind: self.mutation_rates[kind]
            for kind in MutationKind
            if kind in self.mutation_rates
        }

    def ordered_crossover_rates(self) -> Dict[OperatorKind, float]:
        """Return crossover_rates in OperatorKind declaration order."""
        return {
            kind: self.crossover_rates[kind]
            for kind in OperatorKind
            if kind in self.crossover_rates
        }


def random_params(kind: GateKind, rng: np.random.Generator) -> Dict[str, float]:
    """Return fresh parameters for kind drawn from U(-pi, pi)."""
    return {name: float(rng.uniform(-math.pi, math.pi)) for name in kind.param_names}


def qubit_assignments(
    kind: GateKind, reachable: Set[int], connected: Set[int]
) -> List[Tuple[int, ...]]:
    """Return every legal qubit assignment for kind, in role order.

    Arguments:
        kind {GateKind} -- The gate kind.
        reachable {Set[int]} -- Qubits influenced by the inputs at the gate depth.
        connected {Set[int]} -- Qubits that influence the outputs from the gate depth.

    Control roles draw from reachable, target roles from connected and symmetric roles
    from the union. Kinds with only symmetric roles need the two sets to intersect,
    and each assignment must touch both sets, otherwise the gate cannot carry input
    information to an output.
    """
    union = sorted(reachable | connected)
    pools: List[List[int]] = []
    for slot_type in kind.role_types:
        if slot_type is RoleType.CONTROL:
            pools.append(sorted(reachable))
        elif slot_type is RoleType.TARGET:
            pools.append(sorted(connected))
        else:
            pools.append(union)

    all_dual = all(slot is RoleType.DUAL for slot in kind.role_types)
    if all_dual and not reachable & connected:
        return []

    assignments = []
    for qubits in itertools.product(*pools):
        if len(set(qubits)) != len(qubits):
            continue
        if all_dual and not (
            reachable.intersection(qubits) and connected.intersection(qubits)
        ):
            continue
        assignments.append(qubits)
    return assignments


def _with_lineage(
    child: CircuitGenome, operator: str, parents: Sequence[CircuitGenome]
) -> CircuitGenome:
    return replace(
        child,
        fitness=None,
        lineage=Lineage(operator=operator, parents=[p.genome_id for p in parents]),
    )


def add_gate(
    parent: CircuitGenome,
    rng: np.random.Generator,
    counter: InnovationCounter,
    vocabulary: Optional[Sequence[GateKind]] = None,
) -> Optional[CircuitGenome]:
    """Return parent plus one new gate at a uniform random depth, or None.

    Arguments:
        parent {CircuitGenome} -- Parent genome.
        rng {np.random.Generator} -- Random stream.
        counter {InnovationCounter} -- Issues the innovation of the new gate.

    Keyword Arguments:
        vocabulary {Sequence[GateKind]} -- Kinds that may be inserted (default: all).

    The kind is drawn uniformly from kinds with at least one legal assignment (see
    qubit_assignments) and the assignment uniformly from those. Parameters are drawn
    from U(-pi, pi). Returns None if no kind fits at the drawn depth.
    """
    depth = float(rng.uniform(0.0, 1.0))
    reachable = reachable_from_inputs(parent, depth)
    connected = connects_to_outputs(parent, depth)

    allowed = set(GateKind) if vocabulary is None else set(vocabulary)
    eligible: List[Tuple[GateKind, List[Tuple[int, ...]]]] = []
    for kind in GateKind:
        if kind not in allowed or kind.arity > parent.num_qubits:
            continue
        assignments = qubit_assignments(kind, reachable, connected)
        if assignments:
            eligible.append((kind, assignments))

    if not eligible:
        logging.debug(  # pylint: disable=logging-fstring-interpolation
            f"add_gate: no gate fits genome {parent.genome_id} at depth {depth:.4f}."
        )
        return None

    kind, assignments = eligible[int(rng.integers(len(eligible)))]
    qubits = assignments[int(rng.integers(len(assignments)))]
    gate = GateSpec(
        innovation=counter.issue(),
        kind=kind,
        depth=depth,
        qubits=dict(zip(kind.roles, qubits)),
        params=random_params(kind, rng),
    )
    return _with_lineage(
        insert_gate(parent, gate), MutationKind.ADD_GATE.value, [parent]
    )


def enable_disable_gate(
    parent: CircuitGenome,
    enable: bool,
    rng: np.random.Generator,
    counter: InnovationCounter,
) -> Optional[CircuitGenome]:
    """Return parent with one randomly chosen gate enabled (or disabled), or None.

    Arguments:
        parent {CircuitGenome} -- Parent genome.
        enable {bool} -- If True, enable a disabled gate, otherwise disable an enabled
            gate.
        rng {np.random.Generator} -- Random stream.
        counter {InnovationCounter} -- Not used, no innovation is issued.

    Returns None if no gate is in the required state.
    """
    candidates = [gate for gate in parent.gates if gate.enabled != enable]
    if not candidates:
        return None

    chosen = candidates[int(rng.integers(len(candidates)))]
    gates = [
        replace(gate, enabled=enable) if gate.innovation == chosen.innovation else gate
        for gate in parent.gates
    ]
    kind = MutationKind.ENABLE_GATE if enable else MutationKind.DISABLE_GATE
    return _with_lineage(parent.with_gates(gates), kind.value, [parent])


def _disable(gates: Sequence[GateSpec], innovation: int) -> List[GateSpec]:
    return [
        replace(gate, enabled=False) if gate.innovation == innovation else gate
        for gate in gates
    ]


def reorder_gate(
    parent: CircuitGenome, rng: np.random.Generator, counter: InnovationCounter
) -> Optional[CircuitGenome]:
    """Return parent with one enabled gate moved to a new depth, or None.

    The selected gate is disabled and an enabled copy (same kind, qubits and
    parameters) is inserted with a new innovation number at depth U(0, 1).
    """
    enabled = [gate for gate in parent.gates if gate.enabled]
    if not enabled:
        return None

    chosen = enabled[int(rng.integers(len(enabled)))]
    copy = replace(
        chosen,
        innovation=counter.issue(),
        depth=float(rng.uniform(0.0, 1.0)),
        enabled=True,
    )
    child = parent.with_gates(_disable(parent.gates, chosen.innovation))
    return _with_lineage(
        insert_gate(child, copy), MutationKind.REORDER_GATE.value, [parent]
    )


def swap_qubits(
    parent: CircuitGenome, rng: np.random.Generator, counter: InnovationCounter
) -> Optional[CircuitGenome]:
    """Return parent with one qubit of an enabled gate reassigned, or None.

    The selected gate is disabled and replaced by a copy with a new innovation number
    and a depth drawn from U(d_prev, d_next), the depths of its neighbours in the
    parent (0 and 1 at the ends). One role is chosen at random and redrawn from the
    qubits a gate at the new depth could use in that role, excluding the gate's
    current qubits. Returns None if no alternative qubit exists.
    """
    enabled = [gate for gate in parent.gates if gate.enabled]
    if not enabled:
        return None

    chosen = enabled[int(rng.integers(len(enabled)))]
    position = parent.gates.index(chosen)
    d_prev = parent.gates[position - 1].depth if position > 0 else 0.0
    d_next = (
        parent.gates[position + 1].depth if position + 1 < len(parent.gates) else 1.0
    )
    depth = float(rng.uniform(d_prev, d_next))

    child = parent.with_gates(_disable(parent.gates, chosen.innovation))
    slot = int(rng.integers(chosen.kind.arity))
    role = chosen.kind.roles[slot]
    slot_type = chosen.kind.role_types[slot]

    reachable = reachable_from_inputs(child, depth)
    connected = connects_to_outputs(child, depth)
    if slot_type is RoleType.CONTROL:
        pool = reachable
    elif slot_type is RoleType.TARGET:
        pool = connected
    else:
        pool = reachable | connected
    candidates = sorted(pool - set(chosen.qubit_list))
    if not candidates:
        return None

    qubits = dict(chosen.qubits)
    qubits[role] = candidates[int(rng.integers(len(candidates)))]
    copy = replace(
        chosen,
        innovation=counter.issue(),
        depth=depth,
        qubits=qubits,
        enabled=True,
    )
    return _with_lineage(
        insert_gate(child, copy), MutationKind.SWAP_QUBITS.value, [parent]
    )


MutationFunction = Callable[
    [CircuitGenome, np.random.Generator, InnovationCounter], Optional[CircuitGenome]
]


def mutation_function(
    kind: MutationKind, vocabulary: Optional[Sequence[GateKind]] = None
) -> MutationFunction:
    """Return the operator for a mutation kind with a common call signature."""
    if kind is MutationKind.ADD_GATE:
        return lambda parent, rng, counter: add_gate(parent, rng, counter, vocabulary)
    if kind is MutationKind.ENABLE_GATE:
        return lambda parent, rng, counter: enable_disable_gate(
            parent, True, rng, counter
        )
    if kind is MutationKind.DISABLE_GATE:
        return lambda parent, rng, counter: enable_disable_gate(
            parent, False, rng, counter
        )
    if kind is MutationKind.REORDER_GATE:
        return reorder_gate
    return swap_qubits


def mutate(
    parent: CircuitGenome,
    config: OperatorConfig,
    rng: np.random.Generator,
    counter: InnovationCounter,
) -> Optional[CircuitGenome]:
    """Return a child made by chaining config.mutations_per_call mutations, or None.

    Each step draws a mutation from config.mutation_rates and applies it to the result
    of the previous step. Rejected steps are skipped; the call fails only if every step
    was rejected. The child lineage names the applied mutations joined by '+'.
    """
    rates = config.ordered_mutation_rates()
    child = parent
    applied: List[str] = []
    for _ in range(config.mutations_per_call):
        kind = weighted_choice(rng, rates)
        result = mutation_function(kind, config.gate_vocabulary)(child, rng, counter)
        if result is None:
            logging.debug(  # pylint: disable=logging-fstring-interpolation
                f"Mutation {kind.value} rejected for genome {parent.genome_id}."
            )
            continue
        child = result
        applied.append(kind.value)

    if not applied:
        return None
    return _with_lineage(child, "+".join(applied), [parent])


def line_search(best_value: float, reference: float, r: float) -> float:
    """Return reference + r * (best_value - reference)."""
    return reference + r * (best_value - reference)


def line_coefficient(config: OperatorConfig, rng: np.random.Generator) -> float:
    """Return a random line search coefficient U(0, 1) * line_l1 - line_l2."""
    return float(rng.uniform(0.0, 1.0)) * config.line_l1 - config.line_l2


def _recombine(
    gate: GateSpec,
    references: Dict[str, float],
    config: OperatorConfig,
    rng: np.random.Generator,
) -> GateSpec:
    if not gate.kind.is_parameterized:
        return gate
    r = line_coefficient(config, rng)
    return replace(
        gate,
        params={
            name: line_search(gate.params[name], references[name], r)
            for name in gate.kind.param_names
        },
    )


def _child(
    anchor: CircuitGenome,
    gates: List[GateSpec],
    operator: OperatorKind,
    parents: Sequence[CircuitGenome],
) -> CircuitGenome:
    return CircuitGenome(
        num_qubits=anchor.num_qubits,
        input_qubits=list(anchor.input_qubits),
        output_qubits=list(anchor.output_qubits),
        gates=gates,
        genome_id=anchor.genome_id,
        lineage=Lineage(
            operator=operator.operator_name, parents=[p.genome_id for p in parents]
        ),
    )


def binary_crossover(
    best: CircuitGenome,
    other: CircuitGenome,
    config: OperatorConfig,
    rng: np.random.Generator,
) -> CircuitGenome:
    """Return a child of two parents, best being the fitter (lower loss).

    Gates present in both parents are always copied with best's structure and each
    parameter moved along the line through both parents' values; gates found in only
    one parent are copied verbatim with probability best_keep_rate or
    other_keep_rate. Register layout comes from best.
    """
    best_gates = {gate.innovation: gate for gate in best.gates}
    other_gates = {gate.innovation: gate for gate in other.gates}

    gates = []
    for innovation in sorted(best_gates.keys() | other_gates.keys()):
        if innovation in best_gates and innovation in other_gates:
            gates.append(
                _recombine(
                    best_gates[innovation],
                    other_gates[innovation].params,
                    config,
                    rng,
                )
            )
        elif innovation in best_gates:
            if rng.uniform(0.0, 1.0) < config.best_keep_rate:
                gates.append(best_gates[innovation])
        elif rng.uniform(0.0, 1.0) < config.other_keep_rate:
            gates.append(other_gates[innovation])

    return _child(best, gates, OperatorKind.BINARY, [best, other])


def nary_crossover(
    best: CircuitGenome,
    others: Sequence[CircuitGenome],
    config: OperatorConfig,
    rng: np.random.Generator,
) -> CircuitGenome:
    """Return a child of best and several other parents.

    Arguments:
        best {CircuitGenome} -- The fittest parent.
        others {Sequence[CircuitGenome]} -- Remaining parents, fittest first.
        config {OperatorConfig} -- Keep rates and line search constants.
        rng {np.random.Generator} -- Random stream.

    Raises:
        ValueError -- If others is empty.

    A gate in best and at least one other parent is always kept, its parameters moved
    from the mean of the other carriers towards (or past) best's value. Gates only in
    best are kept verbatim with probability best_keep_rate. Gates only in the other
    parents are kept with probability other_keep_rate, taking the structure of the
    first carrier and the mean parameter values over all carriers.
    """
    if not others:
        raise ValueError("nary_crossover needs at least one other parent.")

    best_gates = {gate.innovation: gate for gate in best.gates}
    carriers: Dict[int, List[GateSpec]] = {}
    for parent in others:
        for gate in parent.gates:
            carriers.setdefault(gate.innovation, []).append(gate)

    gates = []
    for innovation in sorted(best_gates.keys() | carriers.keys()):
        shared = carriers.get(innovation, [])
        if innovation in best_gates and shared:
            gate = best_gates[innovation]
            gates.append(_recombine(gate, _mean_params(gate.kind, shared), config, rng))
        elif innovation in best_gates:
            if rng.uniform(0.0, 1.0) < config.best_keep_rate:
                gates.append(best_gates[innovation])
        elif rng.uniform(0.0, 1.0) < config.other_keep_rate:
            params = _mean_params(shared[0].kind, shared)
            gates.append(replace(shared[0], params=params))

    return _child(best, gates, OperatorKind.NARY, [best, *others])


def _mean_params(kind: GateKind, gates: Sequence[GateSpec]) -> Dict[str, float]:
    return {
        name: float(np.mean([gate.params[name] for gate in gates]))
        for name in kind.param_names
    }


def exponential_crossover(
    p1: CircuitGenome,
    p2: CircuitGenome,
    rng: np.random.Generator,
    cut: Optional[float] = None,
) -> CircuitGenome:
    """Return p1's gates below a crossover depth joined with p2's gates at or above it.

    Arguments:
        p1 {CircuitGenome} -- First parent (the fitter), also supplies the register.
        p2 {CircuitGenome} -- Second parent.
        rng {np.random.Generator} -- Random stream.

    Keyword Arguments:
        cut {float} -- Crossover depth. Drawn from U(0, 1) if None. (default: {None})

    Parameters are copied verbatim. If an innovation appears on both sides of the
    cut, p1's copy is kept.
    """
    if cut is None:
        cut = float(rng.uniform(0.0, 1.0))

    gates = [gate for gate in p1.gates if gate.depth < cut]
    taken = {gate.innovation for gate in gates}
    gates.extend(
        gate for gate in p2.gates if gate.depth >= cut and gate.innovation not in taken
    )
    return _child(p1, gates, OperatorKind.EXPONENTIAL, [p1, p2])
