#!/usr/bin/env python
"""Provide a plain text wire diagram of a circuit genome.

Example (Bell circuit, qubit 0 input, qubit 1 output):

    q0 i- --H--*--
    q1 -o -----X--

Controls are drawn as '*', disabled gates carry a leading '~', and parameters are
shown to 3 decimals.
"""

# cSpell:ignore iswap

from typing import Dict, List

from qevolve.circuits.config import GateKind, RoleType
from qevolve.circuits.genome import CircuitGenome, GateSpec

WIRE = "-"
CONTROL = "*"
CROSSING = "|"
DISABLED = "~"

_TARGET_NAMES: Dict[GateKind, str] = {
    GateKind.TOFFOLI: "X",
    GateKind.CCZ: "Z",
    GateKind.CH: "H",
    GateKind.CPHASE: "P",
    GateKind.CRX: "RX",
    GateKind.CRY: "RY",
    GateKind.CRZ: "RZ",
    GateKind.CSWAP: "x",
    GateKind.CX: "X",
    GateKind.CY: "Y",
    GateKind.CZ: "Z",
    GateKind.SWAP: "x",
    GateKind.ISWAP: "iSWAP",
    GateKind.IDENTITY: "I",
}


def gate_labels(gate: GateSpec) -> Dict[int, str]:
    """Return the label drawn on each qubit the gate acts on."""
    name = _TARGET_NAMES.get(gate.kind, gate.kind.value.upper())
    if gate.kind.is_parameterized:
        name += "(" + ",".join(f"{value:.3f}" for value in gate.param_values) + ")"
    prefix = "" if gate.enabled else DISABLED

    labels = {}
    for role_type, qubit in zip(gate.kind.role_types, gate.qubit_list):
        labels[qubit] = prefix + (CONTROL if role_type is RoleType.CONTROL else name)
    return labels


def render_genome(genome: CircuitGenome) -> str:
    """Return a wire diagram with one line per qubit, gates in sorted order."""
    rows: List[List[str]] = []
    for qubit in range(genome.num_qubits):
        flags = ("i" if qubit in genome.input_qubits else WIRE) + (
            "o" if qubit in genome.output_qubits else WIRE
        )
        rows.append([f"q{qubit}", flags, WIRE])

    name_width = max(len(row[0]) for row in rows)
    for row in rows:
        row[0] = row[0].ljust(name_width)

    for gate in genome.gates:
        labels = gate_labels(gate)
        width = max(len(label) for label in labels.values()) + 2
        low, high = min(labels), max(labels)
        for qubit, row in enumerate(rows):
            if qubit in labels:
                cell = labels[qubit]
            elif low < qubit < high:
                cell = CROSSING
            else:
                cell = ""
            row.append(cell.center(width, WIRE))

    for row in rows:
        row.append(WIRE)
    return "\n".join(f"{row[0]} {row[1]} {''.join(row[2:])}" for row in rows)
