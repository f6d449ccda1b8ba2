#!/usr/bin/env python
"""Provide the gate vocabulary shared by the simulator, genomes and operators.

Qubit convention (little-endian): qubit 0 is the least significant bit of a basis
state index. Ket strings used in docs and tests are written qubit 0 first, so '10'
is the state with qubit 0 set, which is index 1.

Within a gate matrix the role slots follow textbook order: the first role slot is the
most significant bit of the local matrix index (CX is [[1,0,0,0],[0,1,0,0],[0,0,0,1],
[0,0,1,0]] with the control as the first slot).
"""

# cSpell:ignore iswap, cswap

from enum import Enum
from typing import Dict, NamedTuple, Tuple


class RoleType(Enum):
    """How a qubit slot takes part in information flow through a gate."""

    # Controls read the register, so they must be reachable from the inputs.
    CONTROL = "control"
    # Targets are written, so they must connect to the outputs.
    TARGET = "target"
    # Symmetric slots (single qubit gates, SWAP, RZZ...) act as both.
    DUAL = "dual"


class GateKind(Enum):
    """Available gates. Values are the method names of the gate table."""

    TOFFOLI = "ccx"
    CCZ = "ccz"
    CH = "ch"
    CPHASE = "cp"
    CRX = "crx"
    CRY = "cry"
    CRZ = "crz"
    CSWAP = "cswap"
    CX = "cx"
    CY = "cy"
    CZ = "cz"
    H = "h"
    IDENTITY = "id"
    ISWAP = "iswap"
    PHASE = "p"
    RX = "rx"
    RY = "ry"
    RZ = "rz"
    RZZ = "rzz"
    S = "s"
    SWAP = "swap"
    T = "t"
    U = "u"
    X = "x"
    Y = "y"
    Z = "z"

    @property
    def roles(self) -> Tuple[str, ...]:
        """Return the ordered qubit role names for the gate."""
        return GATE_TABLE[self].roles

    @property
    def param_names(self) -> Tuple[str, ...]:
        """Return the ordered parameter names for the gate."""
        return GATE_TABLE[self].param_names

    @property
    def arity(self) -> int:
        """Return the number of qubits the gate acts on."""
        return len(GATE_TABLE[self].roles)

    @property
    def is_parameterized(self) -> bool:
        """Return True if the gate has trainable parameters."""
        return bool(GATE_TABLE[self].param_names)

    @property
    def role_types(self) -> Tuple[RoleType, ...]:
        """Return the flow type of each role slot, in role order."""
        return tuple(role_type(role) for role in GATE_TABLE[self].roles)


class GateDef(NamedTuple):
    """Qubit roles and parameter names for a gate kind."""

    roles: Tuple[str, ...]
    param_names: Tuple[str, ...]


SINGLE = ("qubit",)
PAIR = ("qubit1", "qubit2")
CONTROLLED = ("control_qubit", "target_qubit")
DOUBLE_CONTROLLED = ("control_qubit1", "control_qubit2", "target_qubit")

GATE_TABLE: Dict[GateKind, GateDef] = {
    GateKind.TOFFOLI: GateDef(DOUBLE_CONTROLLED, ()),
    GateKind.CCZ: GateDef(DOUBLE_CONTROLLED, ()),
    GateKind.CH: GateDef(CONTROLLED, ()),
    GateKind.CPHASE: GateDef(CONTROLLED, ("phi",)),
    GateKind.CRX: GateDef(CONTROLLED, ("phi",)),
    GateKind.CRY: GateDef(CONTROLLED, ("phi",)),
    GateKind.CRZ: GateDef(CONTROLLED, ("phi",)),
    GateKind.CSWAP: GateDef(("control_qubit", "target_qubit1", "target_qubit2"), ()),
    GateKind.CX: GateDef(CONTROLLED, ()),
    GateKind.CY: GateDef(CONTROLLED, ()),
    GateKind.CZ: GateDef(CONTROLLED, ()),
    GateKind.H: GateDef(SINGLE, ()),
    GateKind.IDENTITY: GateDef(SINGLE, ()),
    GateKind.ISWAP: GateDef(PAIR, ()),
    GateKind.PHASE: GateDef(SINGLE, ("phi",)),
    GateKind.RX: GateDef(SINGLE, ("phi",)),
    GateKind.RY: GateDef(SINGLE, ("phi",)),
    GateKind.RZ: GateDef(SINGLE, ("phi",)),
    GateKind.RZZ: GateDef(PAIR, ("theta",)),
    GateKind.S: GateDef(SINGLE, ()),
    GateKind.SWAP: GateDef(PAIR, ()),
    GateKind.T: GateDef(SINGLE, ()),
    GateKind.U: GateDef(SINGLE, ("theta", "phi", "delta")),
    GateKind.X: GateDef(SINGLE, ()),
    GateKind.Y: GateDef(SINGLE, ()),
    GateKind.Z: GateDef(SINGLE, ()),
}

# Gates whose parameters each enter through a single Pauli-type generator with
# eigenvalue gap 1, so the two term shift rule at +/- pi/2 is exact. The controlled
# rotations have two frequencies and fall back to finite differences.
SHIFT_RULE_KINDS = frozenset(
    {
        GateKind.RX,
        GateKind.RY,
        GateKind.RZ,
        GateKind.RZZ,
        GateKind.PHASE,
        GateKind.CPHASE,
        GateKind.U,
    }
)


def role_type(role: str) -> RoleType:
    """Return the flow type for a role name from the gate table."""
    if role.startswith("control"):
        return RoleType.CONTROL
    if role.startswith("target"):
        return RoleType.TARGET
    return RoleType.DUAL


class Pauli(Enum):
    """Pauli operators available as observables."""

    X = "X"
    Y = "Y"
    Z = "Z"


class MutationKind(Enum):
    """Mutation operators. Values are the keys of OperatorConfig.mutation_rates."""

    ADD_GATE = "add_gate"
    REORDER_GATE = "reorder_gate"
    SWAP_QUBITS = "swap_qubits"
    ENABLE_GATE = "enable_gate"
    DISABLE_GATE = "disable_gate"


class OperatorKind(Enum):
    """Top level reproduction operators, keys of OperatorConfig.crossover_rates."""

    BINARY = "binary"
    NARY = "nary"
    EXPONENTIAL = "exponential"
    MUTATION = "mutation"

    @property
    def operator_name(self) -> str:
        """Return the name recorded in genome lineage."""
        if self is OperatorKind.MUTATION:
            return "mutation"
        return f"{self.value}_crossover"
