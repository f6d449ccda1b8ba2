#!/usr/bin/env python
"""Provide a dense statevector simulator for the gate vocabulary in circuits.config.

Qubit 0 is the least significant bit of a basis state index (see circuits.config).

Gates are applied by reshaping the amplitude array into a rank-n tensor and
contracting the gate over the addressed axes, so the full 2^n x 2^n operator is never
built. The dense embedding (embed_unitary, circuit_unitary) exists as an independent
oracle for tests.

All batch functions accept amplitude arrays of shape (..., 2^n), where the leading
axes index independent samples (dataset rows or teacher input states).
"""

# cSpell:ignore tensordot, moveaxis, vdot, iswap, cswap, qsim, kron

import math
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic.dataclasses import dataclass

from qevolve.circuits.config import GateKind, Pauli
from qevolve.circuits.exceptions import (
    DimensionError,
    ParameterArityError,
    QubitIndexError,
)

if TYPE_CHECKING:
    from qevolve.circuits.genome import CircuitGenome

NORM_TOLERANCE = 1e-8
RESIDUE_TOLERANCE = 1e-10

_SQRT_HALF = 1.0 / math.sqrt(2.0)

PAULI_MATRICES: Dict[Pauli, np.ndarray] = {
    Pauli.X: np.array([[0, 1], [1, 0]], dtype=complex),
    Pauli.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Pauli.Z: np.array([[1, 0], [0, -1]], dtype=complex),
}

_FIXED: Dict[GateKind, np.ndarray] = {
    GateKind.IDENTITY: np.eye(2, dtype=complex),
    GateKind.X: PAULI_MATRICES[Pauli.X],
    GateKind.Y: PAULI_MATRICES[Pauli.Y],
    GateKind.Z: PAULI_MATRICES[Pauli.Z],
    GateKind.H: _SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=complex),
    GateKind.S: np.diag([1, 1j]).astype(complex),
    GateKind.T: np.diag([1, np.exp(1j * math.pi / 4)]).astype(complex),
    GateKind.SWAP: np.array(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
    GateKind.ISWAP: np.array(
        [[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], dtype=complex
    ),
}


def _controlled(block: np.ndarray, controls: int = 1) -> np.ndarray:
    """Return block controlled on the leading 'controls' slots all being 1."""
    size = block.shape[0] * 2**controls
    matrix = np.eye(size, dtype=complex)
    matrix[-block.shape[0] :, -block.shape[0] :] = block
    return matrix


def _rx(phi: float) -> np.ndarray:
    cos, sin = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[cos, -1j * sin], [-1j * sin, cos]], dtype=complex)


def _ry(phi: float) -> np.ndarray:
    cos, sin = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[cos, -sin], [sin, cos]], dtype=complex)


def _rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


def _phase(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)]).astype(complex)


def _u(theta: float, phi: float, delta: float) -> np.ndarray:
    cos, sin = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [cos, -np.exp(1j * delta) * sin],
            [np.exp(1j * phi) * sin, np.exp(1j * (phi + delta)) * cos],
        ],
        dtype=complex,
    )


def _rzz(theta: float) -> np.ndarray:
    minus, plus = np.exp(-0.5j * theta), np.exp(0.5j * theta)
    return np.diag([minus, plus, plus, minus])


for _kind, _block in (
    (GateKind.CX, _FIXED[GateKind.X]),
    (GateKind.CY, _FIXED[GateKind.Y]),
    (GateKind.CZ, _FIXED[GateKind.Z]),
    (GateKind.CH, _FIXED[GateKind.H]),
):
    _FIXED[_kind] = _controlled(_block)
_FIXED[GateKind.TOFFOLI] = _controlled(_FIXED[GateKind.X], controls=2)
_FIXED[GateKind.CCZ] = _controlled(_FIXED[GateKind.Z], controls=2)
_FIXED[GateKind.CSWAP] = _controlled(_FIXED[GateKind.SWAP])

# Parameterized kinds, called with the values in kind.param_names order. Every
# GateKind is in exactly one of _FIXED and _PARAMETRIC.
_PARAMETRIC: Dict[GateKind, Callable[..., np.ndarray]] = {
    GateKind.RX: _rx,
    GateKind.RY: _ry,
    GateKind.RZ: _rz,
    GateKind.PHASE: _phase,
    GateKind.U: _u,
    GateKind.RZZ: _rzz,
    GateKind.CPHASE: lambda phi: _controlled(_phase(phi)),
    GateKind.CRX: lambda phi: _controlled(_rx(phi)),
    GateKind.CRY: lambda phi: _controlled(_ry(phi)),
    GateKind.CRZ: lambda phi: _controlled(_rz(phi)),
}


@dataclass(frozen=True)
class ObservableSpec:
    """A single qubit Pauli observable.

    Public attributes:
        pauli {Pauli} -- The Pauli operator.
        qubit {int} -- The qubit the operator acts on.
    """

    pauli: Pauli
    qubit: int


class StateVector:
    """Immutable pure state of num_qubits qubits.

    Public attributes:
        num_qubits {int} -- Register size.
        amplitudes {np.ndarray} -- Read only complex vector of length 2^num_qubits.
    """

    __slots__ = ("num_qubits", "amplitudes")

    num_qubits: int
    amplitudes: np.ndarray

    def __init__(self, amplitudes: Sequence[complex], check_norm: bool = True) -> None:
        """Create a state from an amplitude vector.

        Arguments:
            amplitudes {Sequence[complex]} -- Amplitudes indexed little-endian.

        Keyword Arguments:
            check_norm {bool} -- Reject vectors that are not unit norm.
                (default: {True})

        Raises:
            DimensionError -- If the length is not a power of two.
            ValueError -- If check_norm and the vector is not normalized.
        """
        array = np.array(amplitudes, dtype=complex).reshape(-1)
        num_qubits = int(round(math.log2(array.size))) if array.size else 0
        if num_qubits < 1 or 2**num_qubits != array.size:
            raise DimensionError(
                f"Statevector length must be 2^n with n >= 1, got {array.size}."
            )
        if check_norm:
            norm = float(np.vdot(array, array).real)
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise ValueError(f"Statevector is not normalized (norm^2 = {norm}).")
        array.flags.writeable = False
        self.num_qubits = num_qubits
        self.amplitudes = array

    def __repr__(self) -> str:
        """Return a short description of the state."""
        return f"StateVector(num_qubits={self.num_qubits})"

    def probabilities(self) -> np.ndarray:
        """Return |amplitude|^2 for every basis state."""
        return np.abs(self.amplitudes) ** 2


def zero_state(num_qubits: int) -> StateVector:
    """Return |0...0> on num_qubits qubits."""
    amplitudes = np.zeros(2**num_qubits, dtype=complex)
    amplitudes[0] = 1.0
    return StateVector(amplitudes)


def basis_index(bits: str) -> int:
    """Return the little-endian index for a ket string written qubit 0 first."""
    return sum(1 << qubit for qubit, bit in enumerate(bits) if bit == "1")


def basis_state(bits: str) -> StateVector:
    """Return the computational basis state for a ket string written qubit 0 first.

    For example basis_state('10') has qubit 0 set and qubit 1 clear.
    """
    if not bits or any(bit not in "01" for bit in bits):
        raise ValueError(f"Basis state label must be a non-empty 0/1 string: '{bits}'.")
    amplitudes = np.zeros(2 ** len(bits), dtype=complex)
    amplitudes[basis_index(bits)] = 1.0
    return StateVector(amplitudes)


def product_state(angles: Sequence[Sequence[float]]) -> StateVector:
    """Return the product state RZ(b_q) RY(a_q)|0> over qubits q.

    Arguments:
        angles {Sequence[Sequence[float]]} -- One (a, b) pair per qubit, qubit 0 first.
    """
    amplitudes = zero_state(len(angles)).amplitudes
    for qubit, (y_angle, z_angle) in enumerate(angles):
        amplitudes = apply_matrix_batch(amplitudes, _ry(y_angle), [qubit])
        amplitudes = apply_matrix_batch(amplitudes, _rz(z_angle), [qubit])
    return StateVector(amplitudes)


def gate_unitary(kind: GateKind, params: Sequence[float] = ()) -> np.ndarray:
    """Return the unitary matrix of a gate.

    Arguments:
        kind {GateKind} -- Gate kind.
        params {Sequence[float]} -- Parameter values in kind.param_names order.

    Raises:
        ParameterArityError -- If the number of parameters does not match the kind.

    Returns:
        np.ndarray -- Complex matrix of dimension 2^arity, first role slot most
            significant.
    """
    if len(params) != len(kind.param_names):
        raise ParameterArityError(
            f"Gate '{kind.value}' takes {len(kind.param_names)} parameters "
            f"{kind.param_names}, got {len(params)}."
        )

    if kind in _FIXED:
        return _FIXED[kind].copy()

    return _PARAMETRIC[kind](*(float(x) for x in params))


def check_qubits(qubits: Sequence[int], num_qubits: int) -> None:
    """Raise QubitIndexError for duplicate or out of range qubit indices."""
    if len(set(qubits)) != len(qubits):
        raise QubitIndexError(f"Duplicate qubit indices in {list(qubits)}.")
    for qubit in qubits:
        if not 0 <= qubit < num_qubits:
            raise QubitIndexError(
                f"Qubit index {qubit} out of range for a {num_qubits} qubit register."
            )


def apply_matrix_batch(
    amplitudes: np.ndarray, matrix: np.ndarray, qubits: Sequence[int]
) -> np.ndarray:
    """Return amplitudes after applying matrix to qubits, for every sample.

    Arguments:
        amplitudes {np.ndarray} -- Shape (..., 2^n).
        matrix {np.ndarray} -- Shape (2^k, 2^k) with k == len(qubits), first slot
            most significant.
        qubits {Sequence[int]} -- Target qubits in slot order.

    The input array is not modified.
    """
    lead = amplitudes.shape[:-1]
    num_qubits = int(amplitudes.shape[-1]).bit_length() - 1
    arity = len(qubits)
    tensor = amplitudes.reshape(lead + (2,) * num_qubits)
    # C order reshape puts the most significant bit (highest qubit) on the first axis.
    axes = [len(lead) + num_qubits - 1 - qubit for qubit in qubits]
    gate = matrix.reshape((2,) * (2 * arity))
    result = np.tensordot(gate, tensor, axes=(list(range(arity, 2 * arity)), axes))
    result = np.moveaxis(result, list(range(arity)), axes)
    return result.reshape(amplitudes.shape)


def apply_gate(
    state: StateVector,
    kind: GateKind,
    qubits: Sequence[int],
    params: Sequence[float] = (),
) -> StateVector:
    """Return a new state with a gate applied.

    Arguments:
        state {StateVector} -- Input state (unchanged).
        kind {GateKind} -- Gate kind.
        qubits {Sequence[int]} -- One qubit per role slot, in kind.roles order.
        params {Sequence[float]} -- Parameters in kind.param_names order.

    Raises:
        QubitIndexError -- Duplicate, out of range or wrongly counted qubits.
        ParameterArityError -- Wrong parameter count.
    """
    if len(qubits) != kind.arity:
        raise QubitIndexError(
            f"Gate '{kind.value}' acts on {kind.arity} qubits, got {len(qubits)}."
        )
    check_qubits(qubits, state.num_qubits)
    matrix = gate_unitary(kind, params)
    return StateVector(
        apply_matrix_batch(state.amplitudes, matrix, qubits), check_norm=False
    )


def run_circuit_batch(genome: "CircuitGenome", amplitudes: np.ndarray) -> np.ndarray:
    """Return amplitudes (..., 2^n) after running the enabled gates of genome."""
    num_qubits = int(amplitudes.shape[-1]).bit_length() - 1
    if genome.num_qubits > num_qubits:
        raise QubitIndexError(
            f"Genome needs {genome.num_qubits} qubits, register has {num_qubits}."
        )
    result = amplitudes
    for gate in genome.gates:
        if gate.enabled:
            result = apply_matrix_batch(
                result, gate_unitary(gate.kind, gate.param_values), gate.qubit_list
            )
    return result


def run_circuit(genome: "CircuitGenome", initial: StateVector) -> StateVector:
    """Return the state produced by the genome's enabled gates acting on initial.

    Gates run in the genome's (depth, innovation) order; disabled gates are skipped.
    """
    return StateVector(
        run_circuit_batch(genome, initial.amplitudes), check_norm=False
    )


def marginal_batch(amplitudes: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """Return marginal probabilities over qubits for every sample.

    Entry b of the result has bit j equal to the value of qubits[j] (qubits[0] is the
    least significant bit of b).
    """
    if not qubits:
        raise ValueError("Marginal probabilities need at least one qubit.")
    lead = amplitudes.shape[:-1]
    num_qubits = int(amplitudes.shape[-1]).bit_length() - 1
    check_qubits(qubits, num_qubits)
    base = len(lead)
    tensor = (np.abs(amplitudes) ** 2).reshape(lead + (2,) * num_qubits)
    keep = [base + num_qubits - 1 - qubit for qubit in reversed(qubits)]
    drop = tuple(axis for axis in range(base, base + num_qubits) if axis not in keep)
    summed = tensor.sum(axis=drop) if drop else tensor
    ordered = sorted(keep)
    perm = list(range(base)) + [base + ordered.index(axis) for axis in keep]
    return np.transpose(summed, perm).reshape(lead + (2 ** len(qubits),))


def marginal_probabilities(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Return the marginal distribution of state over qubits (qubits[0] is the LSB)."""
    return marginal_batch(state.amplitudes, qubits)


def expectation_batch(amplitudes: np.ndarray, obs: ObservableSpec) -> np.ndarray:
    """Return <psi|O|psi> for every sample in amplitudes."""
    num_qubits = int(amplitudes.shape[-1]).bit_length() - 1
    check_qubits([obs.qubit], num_qubits)
    applied = apply_matrix_batch(amplitudes, PAULI_MATRICES[obs.pauli], [obs.qubit])
    return np.sum(np.conj(amplitudes) * applied, axis=-1).real


def expectation(state: StateVector, obs: ObservableSpec) -> float:
    """Return the expectation value of a Pauli observable, in [-1, 1]."""
    return float(expectation_batch(state.amplitudes, obs))


def overlap(a: StateVector, b: StateVector) -> complex:
    """Return the inner product <a|b>.

    Raises:
        DimensionError -- If the states have different qubit counts.
    """
    if a.num_qubits != b.num_qubits:
        raise DimensionError(
            f"Overlap of {a.num_qubits} and {b.num_qubits} qubit states."
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def embed_unitary(
    matrix: np.ndarray, qubits: Sequence[int], num_qubits: int
) -> np.ndarray:
    """Return the full 2^n x 2^n operator for matrix acting on qubits.

    Built by explicit bit manipulation, independently of apply_matrix_batch.
    """
    arity = len(qubits)
    dim = 2**num_qubits
    full = np.zeros((dim, dim), dtype=complex)
    for column in range(dim):
        local_in = 0
        for slot, qubit in enumerate(qubits):
            local_in |= ((column >> qubit) & 1) << (arity - 1 - slot)
        for local_out in range(2**arity):
            row = column
            for slot, qubit in enumerate(qubits):
                bit = (local_out >> (arity - 1 - slot)) & 1
                row = (row & ~(1 << qubit)) | (bit << qubit)
            full[row, column] += matrix[local_out, local_in]
    return full


def circuit_unitary(
    genome: "CircuitGenome", num_qubits: Optional[int] = None
) -> np.ndarray:
    """Return the dense product of embedded gate unitaries for a genome."""
    size = genome.num_qubits if num_qubits is None else num_qubits
    total = np.eye(2**size, dtype=complex)
    for gate in genome.gates:
        if gate.enabled:
            total = (
                embed_unitary(
                    gate_unitary(gate.kind, gate.param_values), gate.qubit_list, size
                )
                @ total
            )
    return total


def random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Return a Haar-like random state (normalized complex Gaussian vector)."""
    vector = rng.normal(size=2**num_qubits) + 1j * rng.normal(size=2**num_qubits)
    return StateVector(vector / np.linalg.norm(vector))


def states_array(states: List[StateVector]) -> np.ndarray:
    """Stack states into an (m, 2^n) amplitude array."""
    return np.stack([state.amplitudes for state in states])
