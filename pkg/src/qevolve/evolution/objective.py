#!/usr/bin/env python
"""Provide loss functions, feature encoding and class readout.

The single state functions (fidelity, angular_distance, kl_divergence, observable_mse,
readout_distribution, cross_entropy) are the reference definitions. Training uses the
batch objectives below, which split each loss into

    quantities -- values linear in the output density matrix (overlap probabilities,
        basis probabilities or Pauli expectations), one row per sample;
    loss -- the scalar task loss as a function of the quantities;
    dloss -- the derivative of the loss with respect to each quantity.

Because the quantities are linear in the output state, their derivative with respect
to a rotation angle is given exactly by the two term parameter shift rule, and the
trainer chains it through dloss.
"""

# cSpell:ignore arccos, einsum

import math
from abc import ABC, abstractmethod
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import model_validator
from pydantic.dataclasses import dataclass

from qevolve.circuits.config import Pauli
from qevolve.circuits.exceptions import DimensionError
from qevolve.circuits.qsim import (
    ObservableSpec,
    StateVector,
    expectation,
    expectation_batch,
    marginal_batch,
    overlap,
)
from qevolve.evolution.config import LossKind

# Probability floor for the log based losses.
EPSILON = 1e-12
DISTRIBUTION_TOLERANCE = 1e-6


def fidelity(pred: StateVector, target: StateVector) -> float:
    """Return |<pred|target>|^2."""
    return abs(overlap(pred, target)) ** 2


def fidelity_loss(pred: StateVector, target: StateVector) -> float:
    """Return 1 - fidelity(pred, target)."""
    return 1.0 - fidelity(pred, target)


def angular_distance(pred: StateVector, target: StateVector) -> float:
    """Return arccos(|<pred|target>|), in [0, pi/2]."""
    return math.acos(min(1.0, max(0.0, abs(overlap(pred, target)))))


def _check_distribution(name: str, probs: np.ndarray) -> None:
    if abs(float(probs.sum()) - 1.0) > DISTRIBUTION_TOLERANCE:
        raise ValueError(f"{name} must sum to 1, got {float(probs.sum())}.")


def kl_divergence(pred_probs: Sequence[float], target_probs: Sequence[float]) -> float:
    """Return sum_i q_i log(q_i / p_i) for target q and prediction p.

    Terms with q_i = 0 contribute 0 and p_i is floored at EPSILON.

    Raises:
        DimensionError -- If the vectors differ in length.
        ValueError -- If either vector does not sum to 1.
    """
    p = np.asarray(pred_probs, dtype=float)
    q = np.asarray(target_probs, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"KL divergence of lengths {p.size} and {q.size}.")
    _check_distribution("pred_probs", p)
    _check_distribution("target_probs", q)
    mask = q > 0.0
    return float(np.sum(q[mask] * np.log(q[mask] / np.maximum(p[mask], EPSILON))))


def observable_mse(
    pred: StateVector, target: StateVector, observables: Sequence[ObservableSpec]
) -> float:
    """Return the mean squared difference of observable expectations.

    Raises:
        ValueError -- If observables is empty.
    """
    if not observables:
        raise ValueError("observable_mse needs at least one observable.")
    differences = [
        expectation(pred, obs) - expectation(target, obs) for obs in observables
    ]
    return float(np.mean(np.square(differences)))


def batch_fidelities(outputs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Return |<target_i|output_i>|^2 for matching rows of two amplitude arrays."""
    return np.abs(np.sum(np.conj(targets) * outputs, axis=-1)) ** 2


def default_observables(qubits: Sequence[int]) -> List[ObservableSpec]:
    """Return X, Y and Z observables on every qubit in qubits."""
    return [
        ObservableSpec(pauli=pauli, qubit=qubit) for qubit in qubits for pauli in Pauli
    ]


@dataclass(frozen=True)
class ReadoutMap:
    """Maps the marginal distribution of the readout qubits to class probabilities.

    Public attributes:
        readout_qubits {List[int]} -- Readout register, readout_qubits[0] is the least
            significant bit of a class label.
        num_classes {int} -- Number of classes K. Classes are the first K basis labels
            of the readout register.
    """

    readout_qubits: List[int]
    num_classes: int

    @model_validator(mode="after")
    def _check_size(self) -> "ReadoutMap":
        if self.num_classes < 2:
            raise ValueError(f"Need at least 2 classes, got {self.num_classes}.")
        if 2 ** len(self.readout_qubits) < self.num_classes:
            raise ValueError(
                f"{len(self.readout_qubits)} readout qubits cannot hold "
                f"{self.num_classes} classes."
            )
        return self

    @property
    def class_basis_states(self) -> List[int]:
        """Return the readout register basis labels used as classes."""
        return list(range(self.num_classes))


def _renormalize(marginals: np.ndarray, num_classes: int) -> np.ndarray:
    kept = marginals[..., :num_classes]
    mass = kept.sum(axis=-1, keepdims=True)
    uniform = np.full_like(kept, 1.0 / num_classes)
    safe = np.where(mass > 0.0, mass, 1.0)
    return np.where(mass > 0.0, kept / safe, uniform)


def readout_batch(amplitudes: np.ndarray, readout: ReadoutMap) -> np.ndarray:
    """Return class probabilities (..., K) for a batch of output states."""
    marginals = marginal_batch(amplitudes, readout.readout_qubits)
    return _renormalize(marginals, readout.num_classes)


def readout_distribution(state: StateVector, readout: ReadoutMap) -> np.ndarray:
    """Return class probabilities for one state.

    The marginal over the readout qubits is restricted to the first K basis labels
    and renormalized. If that restricted mass is zero the result is uniform.
    """
    return readout_batch(state.amplitudes, readout)


def cross_entropy(probs: Sequence[float], label: int) -> float:
    """Return -log(probs[label]) with probs floored at EPSILON.

    Raises:
        ValueError -- If label is not a class index or probs does not sum to 1.
    """
    values = np.asarray(probs, dtype=float)
    if not 0 <= label < values.size:
        raise ValueError(f"Label {label} out of range for {values.size} classes.")
    _check_distribution("probs", values)
    return -math.log(max(float(values[label]), EPSILON))


def scale_features(features: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    """Return features min-max scaled to angles in [0, pi].

    Arguments:
        features {np.ndarray} -- Shape (..., F).
        ranges {np.ndarray} -- Shape (F, 2) of (min, max) per feature, taken
            from the training split. Constant features map to angle 0.

    Values outside the training range are clamped.
    """
    low = ranges[:, 0]
    span = ranges[:, 1] - low
    safe = np.where(span > 0.0, span, 1.0)
    scaled = np.where(span > 0.0, (features - low) / safe, 0.0)
    return np.clip(scaled, 0.0, 1.0) * math.pi


def feature_ranges(features: np.ndarray) -> np.ndarray:
    """Return (min, max) per column of a (rows, F) feature matrix."""
    return np.stack([features.min(axis=0), features.max(axis=0)], axis=1)


def _rotations(angles: np.ndarray, layer: int) -> np.ndarray:
    half = angles / 2.0
    matrices = np.zeros(angles.shape + (2, 2), dtype=complex)
    if layer % 2 == 0:
        matrices[..., 0, 0] = np.cos(half)
        matrices[..., 0, 1] = -np.sin(half)
        matrices[..., 1, 0] = np.sin(half)
        matrices[..., 1, 1] = np.cos(half)
    else:
        matrices[..., 0, 0] = np.exp(-1j * half)
        matrices[..., 1, 1] = np.exp(1j * half)
    return matrices


def encode_angles(angles: np.ndarray, num_input_qubits: int) -> np.ndarray:
    """Return encoded product states (rows, 2^Q) for a (rows, F) angle matrix.

    Feature j rotates qubit j mod Q, starting from |0...0>. The rotation axis is Y for
    the first Q features, Z for the next Q, then Y again, alternating per layer.
    """
    rows, num_features = angles.shape
    if num_features == 0:
        raise ValueError("encode_features needs at least one feature.")
    if num_input_qubits < 1:
        raise ValueError(f"Need at least one input qubit, got {num_input_qubits}.")

    qubit_states = np.zeros((num_input_qubits, rows, 2), dtype=complex)
    qubit_states[:, :, 0] = 1.0
    for j in range(num_features):
        qubit, layer = j % num_input_qubits, j // num_input_qubits
        matrices = _rotations(angles[:, j], layer)
        qubit_states[qubit] = np.einsum("rij,rj->ri", matrices, qubit_states[qubit])

    state = qubit_states[0]
    for qubit in range(1, num_input_qubits):
        # Higher qubits are more significant.
        state = (qubit_states[qubit][:, :, None] * state[:, None, :]).reshape(rows, -1)
    return state


def encode_features(
    features: Sequence[float], num_input_qubits: int, ranges: np.ndarray
) -> StateVector:
    """Return the angle encoded input state for one feature vector.

    Arguments:
        features {Sequence[float]} -- Raw feature values.
        num_input_qubits {int} -- Register size Q.
        ranges {np.ndarray} -- (F, 2) training split (min, max) per feature.
    """
    values = np.asarray(features, dtype=float).reshape(1, -1)
    if values.size == 0:
        raise ValueError("encode_features needs at least one feature.")
    angles = scale_features(values, ranges)
    return StateVector(encode_angles(angles, num_input_qubits)[0])


class BatchObjective(ABC):
    """A task loss over a fixed batch of circuit input states.

    Public attributes:
        inputs {np.ndarray} -- Input amplitudes, shape (samples, 2^n).
    """

    inputs: np.ndarray

    def __init__(self, inputs: np.ndarray) -> None:
        """Create an objective for the given batch of input states."""
        self.inputs = np.asarray(inputs, dtype=complex)

    @property
    def num_samples(self) -> int:
        """Return the number of input states."""
        return int(self.inputs.shape[0])

    @abstractmethod
    def quantities(self, outputs: np.ndarray) -> np.ndarray:
        """Return state linear quantities (samples, k) for output amplitudes."""

    @abstractmethod
    def loss(self, quantities: np.ndarray) -> float:
        """Return the mean loss for the quantities."""

    @abstractmethod
    def dloss(self, quantities: np.ndarray) -> np.ndarray:
        """Return d loss / d quantities, same shape as quantities."""

    def evaluate(self, outputs: np.ndarray) -> float:
        """Return the loss of a batch of output amplitudes."""
        return self.loss(self.quantities(outputs))


class TargetStateObjective(BatchObjective):
    """Shared target state handling for teacher imitation losses."""

    targets: np.ndarray

    def __init__(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        super().__init__(inputs)
        self.targets = np.asarray(targets, dtype=complex)
        if self.targets.shape != self.inputs.shape:
            raise DimensionError(
                f"Targets {self.targets.shape} do not match inputs {self.inputs.shape}."
            )

    def fidelities(self, outputs: np.ndarray) -> np.ndarray:
        """Return |<target_i|output_i>|^2 per sample."""
        return batch_fidelities(outputs, self.targets)


class FidelityObjective(TargetStateObjective):
    """Mean of 1 - fidelity over the input states."""

    def quantities(self, outputs: np.ndarray) -> np.ndarray:
        return self.fidelities(outputs)[:, None]

    def loss(self, quantities: np.ndarray) -> float:
        return float(np.mean(1.0 - quantities[:, 0]))

    def dloss(self, quantities: np.ndarray) -> np.ndarray:
        return np.full_like(quantities, -1.0 / quantities.shape[0])


class AngularObjective(TargetStateObjective):
    """Mean angular distance arccos(sqrt(F)) over the input states."""

    def _clamped(self, quantities: np.ndarray) -> np.ndarray:
        return np.clip(quantities[:, 0], EPSILON, 1.0 - EPSILON)

    def quantities(self, outputs: np.ndarray) -> np.ndarray:
        return self.fidelities(outputs)[:, None]

    def loss(self, quantities: np.ndarray) -> float:
        values = np.clip(quantities[:, 0], 0.0, 1.0)
        return float(np.mean(np.arccos(np.sqrt(values))))

    def dloss(self, quantities: np.ndarray) -> np.ndarray:
        clamped = self._clamped(quantities)
        derivative = -1.0 / (2.0 * np.sqrt(clamped) * np.sqrt(1.0 - clamped))
        return (derivative / quantities.shape[0])[:, None]


class KLObjective(TargetStateObjective):
    """Mean KL divergence of output basis probabilities from the target's."""

    def __init__(self, inputs: np.ndarray, targets: np.ndarray) -> None:
        super().__init__(inputs, targets)
        self.target_probs = np.abs(self.targets) ** 2

    def quantities(self, outputs: np.ndarray) -> np.ndarray:
        return np.abs(outputs) ** 2

    def loss(self, quantities: np.ndarray) -> float:
        q = self.target_probs
        log_q = np.log(np.where(q > 0.0, q, 1.0))
        log_p = np.log(np.maximum(quantities, EPSILON))
        terms = np.where(q > 0.0, q * (log_q - log_p), 0.0)
        return float(np.mean(np.sum(terms, axis=-1)))

    def dloss(self, quantities: np.ndarray) -> np.ndarray:
        q = self.target_probs
        live = quantities > EPSILON
        derivative = np.where(live, -q / np.where(live, quantities, 1.0), 0.0)
        return derivative / quantities.shape[0]


class ObservableMSEObjective(TargetStateObjective):
    """Mean over the input states of the observable_mse between outputs and targets."""

    def __init__(
        self,
        inputs: np.ndarray,
        targets: np.ndarray,
        observables: Sequence[ObservableSpec],
    ) -> None:
        super().__init__(inputs, targets)
        if not observables:
            raise ValueError("observable_mse needs at least one observable.")
        self.observables = list(observables)
        self.target_values = self._expectations(self.targets)

    def _expectations(self, amplitudes: np.ndarray) -> np.ndarray:
        return np.stack(
            [expectation_batch(amplitudes, obs) for obs in self.observables], axis=-1
        )

    def quantities(self, outputs: np.ndarray) -> np.ndarray:
        return self._expectations(outputs)

    def loss(self, quantities: np.ndarray) -> float:
        return float(np.mean((quantities - self.target_values) ** 2))

    def dloss(self, quantities: np.ndarray) -> np.ndarray:
        return 2.0 * (quantities - self.target_values) / quantities.size


class CrossEntropyObjective(BatchObjective):
    """Mean cross entropy of readout class probabilities against labels."""

    def __init__(
        self, inputs: np.ndarray, labels: Sequence[int], readout: ReadoutMap
    ) -> None:
        super().__init__(inputs)
        self.labels = np.asarray(labels, dtype=int)
        self.readout = readout
        if self.labels.shape != (self.num_samples,):
            raise DimensionError(
                f"{self.labels.size} labels for {self.num_samples} input states."
            )
        if np.any(self.labels < 0) or np.any(self.labels >= readout.num_classes):
            raise ValueError(f"Labels must lie in [0, {readout.num_classes}).")

    def quantities(self, outputs: np.ndarray) -> np.ndarray:
        return marginal_batch(outputs, self.readout.readout_qubits)

    def _label_terms(self, quantities: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        rows = np.arange(quantities.shape[0])
        mass = quantities[:, : self.readout.num_classes].sum(axis=-1)
        return quantities[rows, self.labels], mass

    def probabilities(self, quantities: np.ndarray) -> np.ndarray:
        """Return class probabilities (samples, K) for readout marginals."""
        return _renormalize(quantities, self.readout.num_classes)

    def loss(self, quantities: np.ndarray) -> float:
        rows = np.arange(quantities.shape[0])
        probs = self.probabilities(quantities)[rows, self.labels]
        return float(np.mean(-np.log(np.maximum(probs, EPSILON))))

    def dloss(self, quantities: np.ndarray) -> np.ndarray:
        label_mass, mass = self._label_terms(quantities)
        live = (mass > 0.0) & (label_mass > EPSILON * mass)
        safe_mass = np.where(live, mass, 1.0)
        safe_label = np.where(live, label_mass, 1.0)

        derivative = np.zeros_like(quantities)
        derivative[:, : self.readout.num_classes] = (1.0 / safe_mass)[:, None]
        rows = np.arange(quantities.shape[0])
        derivative[rows, self.labels] -= 1.0 / safe_label
        derivative[~live] = 0.0
        return derivative / quantities.shape[0]

    def predictions(self, outputs: np.ndarray) -> np.ndarray:
        """Return the argmax class per sample (ties go to the lowest class)."""
        return np.argmax(self.probabilities(self.quantities(outputs)), axis=-1)

    def accuracy(self, outputs: np.ndarray) -> float:
        """Return the fraction of samples whose predicted class equals the label."""
        return float(np.mean(self.predictions(outputs) == self.labels))


def teacher_objective(
    loss: LossKind,
    inputs: np.ndarray,
    targets: np.ndarray,
    observables: Optional[Sequence[ObservableSpec]] = None,
) -> BatchObjective:
    """Return the batch objective for a teacher imitation loss.

    Raises:
        ValueError -- For cross_entropy, which needs class labels, or observable_mse
            without observables.
    """
    if loss is LossKind.FIDELITY:
        return FidelityObjective(inputs, targets)
    if loss is LossKind.ANGULAR:
        return AngularObjective(inputs, targets)
    if loss is LossKind.KL_DIVERGENCE:
        return KLObjective(inputs, targets)
    if loss is LossKind.OBSERVABLE_MSE:
        return ObservableMSEObjective(inputs, targets, observables or [])
    raise ValueError(f"Loss '{loss.value}' cannot be used for teacher imitation.")
