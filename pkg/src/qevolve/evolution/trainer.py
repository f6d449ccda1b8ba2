#!/usr/bin/env python
"""Provide gradient training and evaluation of circuit genomes against a task.

Training is full batch Adam with decoupled weight decay, run for a fixed number of
epochs, and returns the best iterate seen (so training never makes a genome worse).
Only parameters of enabled gates are trained.
"""

# cSpell:ignore arccos

import logging
import math
from dataclasses import replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic.dataclasses import dataclass

from qevolve.circuits.config import SHIFT_RULE_KINDS, GateKind
from qevolve.circuits.exceptions import TrainingError
from qevolve.circuits.genome import CircuitGenome
from qevolve.circuits.qsim import apply_matrix_batch, gate_unitary
from qevolve.evolution.bench import DatasetTask, TaskSpec, check_register
from qevolve.evolution.config import GradientMode
from qevolve.evolution.configclasses import TrainConfig
from qevolve.evolution.objective import BatchObjective, batch_fidelities

SHIFT = math.pi / 2


class ParamVector:
    """Flat view of the trainable parameters of a genome.

    Public attributes:
        values {np.ndarray} -- Parameter values (or partial derivatives).
        index {List[Tuple[int, str]]} -- (innovation, parameter name) for each entry,
            in gate execution order.
    """

    values: np.ndarray
    index: List[Tuple[int, str]]

    def __init__(self, values: Sequence[float], index: List[Tuple[int, str]]) -> None:
        """Create a parameter vector, values[i] belonging to index[i]."""
        self.values = np.asarray(values, dtype=float)
        self.index = list(index)
        if self.values.shape != (len(self.index),):
            raise ValueError(
                f"{self.values.size} values for {len(self.index)} parameter slots."
            )

    def __len__(self) -> int:
        """Return the number of parameters."""
        return len(self.index)

    @classmethod
    def flatten(cls, genome: CircuitGenome) -> "ParamVector":
        """Return the parameters of the enabled gates of genome."""
        values = []
        index = []
        for gate in genome.gates:
            if gate.enabled:
                for name in gate.kind.param_names:
                    values.append(gate.params[name])
                    index.append((gate.innovation, name))
        return cls(values, index)

    def as_dict(self) -> Dict[int, Dict[str, float]]:
        """Return {innovation: {name: value}}."""
        params: Dict[int, Dict[str, float]] = {}
        for (innovation, name), value in zip(self.index, self.values):
            params.setdefault(innovation, {})[name] = float(value)
        return params

    def unflatten(self, genome: CircuitGenome) -> CircuitGenome:
        """Return genome with these parameter values written back."""
        return genome.with_params(self.as_dict())


class _Step(NamedTuple):
    kind: GateKind
    qubits: List[int]
    # Fixed matrix for gates without trainable parameters.
    matrix: Optional[np.ndarray]
    slots: List[int]


class CompiledCircuit:
    """A genome lowered to a list of gate steps run with a parameter vector.

    Public attributes:
        params {ParamVector} -- The genome's trainable parameters.
        slot_kinds {List[GateKind]} -- Gate kind owning each parameter slot.
    """

    def __init__(self, genome: CircuitGenome) -> None:
        """Compile the enabled gates of genome."""
        self.params = ParamVector.flatten(genome)
        self.slot_kinds: List[GateKind] = []
        self._steps: List[_Step] = []
        for gate in genome.gates:
            if not gate.enabled:
                continue
            if gate.kind.is_parameterized:
                first = len(self.slot_kinds)
                count = len(gate.kind.param_names)
                slots = list(range(first, first + count))
                self.slot_kinds.extend([gate.kind] * count)
                self._steps.append(_Step(gate.kind, gate.qubit_list, None, slots))
            else:
                self._steps.append(
                    _Step(gate.kind, gate.qubit_list, gate_unitary(gate.kind), [])
                )

    def run(self, theta: np.ndarray, inputs: np.ndarray) -> np.ndarray:
        """Return output amplitudes for a batch of inputs at parameters theta."""
        amplitudes = inputs
        for step in self._steps:
            matrix = (
                step.matrix
                if step.matrix is not None
                else gate_unitary(step.kind, [theta[slot] for slot in step.slots])
            )
            amplitudes = apply_matrix_batch(amplitudes, matrix, step.qubits)
        return amplitudes


def _shifted(theta: np.ndarray, slot: int, delta: float) -> np.ndarray:
    moved = theta.copy()
    moved[slot] += delta
    return moved


def _gradient(
    circuit: CompiledCircuit,
    objective: BatchObjective,
    theta: np.ndarray,
    config: TrainConfig,
) -> np.ndarray:
    def loss_at(values: np.ndarray) -> float:
        return objective.evaluate(circuit.run(values, objective.inputs))

    grad = np.zeros_like(theta)
    weights: Optional[np.ndarray] = None
    for slot, kind in enumerate(circuit.slot_kinds):
        if (
            config.gradient_mode is GradientMode.PARAMETER_SHIFT
            and kind in SHIFT_RULE_KINDS
        ):
            if weights is None:
                weights = objective.dloss(
                    objective.quantities(circuit.run(theta, objective.inputs))
                )
            plus = objective.quantities(
                circuit.run(_shifted(theta, slot, SHIFT), objective.inputs)
            )
            minus = objective.quantities(
                circuit.run(_shifted(theta, slot, -SHIFT), objective.inputs)
            )
            grad[slot] = float(np.sum(weights * (plus - minus) / 2.0))
        else:
            step = config.fd_step
            grad[slot] = (
                loss_at(_shifted(theta, slot, step))
                - loss_at(_shifted(theta, slot, -step))
            ) / (2.0 * step)
    return grad


def task_loss(genome: CircuitGenome, task: TaskSpec) -> float:
    """Return the training loss of genome on task.

    Mean cross entropy over the training rows for datasets, mean task loss over the
    input states for teachers.

    Raises:
        GenomeError -- If genome does not match the task register.
    """
    check_register(genome, task)
    circuit = CompiledCircuit(genome)
    objective = task.training_objective
    return objective.evaluate(circuit.run(circuit.params.values, objective.inputs))


def gradient(
    genome: CircuitGenome, task: TaskSpec, config: TrainConfig
) -> ParamVector:
    """Return d task_loss / d parameter for every trainable parameter of genome.

    With gradient_mode parameter_shift, parameters of gates in SHIFT_RULE_KINDS use
    the exact two term shift rule on the objective's quantities (chained through
    dloss); other parameters, and every parameter in finite_difference mode, use
    central differences of the loss with step fd_step.
    """
    check_register(genome, task)
    circuit = CompiledCircuit(genome)
    values = _gradient(circuit, task.training_objective, circuit.params.values, config)
    return ParamVector(values, circuit.params.index)


class Adam:
    """Adam with decoupled weight decay.

    Each step first shrinks theta by (1 - lr * weight_decay), then applies the bias
    corrected Adam update.
    """

    def __init__(self, size: int, config: TrainConfig) -> None:
        """Create optimizer state for size parameters."""
        self._config = config
        self._m = np.zeros(size)
        self._v = np.zeros(size)
        self._t = 0

    def step(self, theta: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Return the updated parameters."""
        cfg = self._config
        self._t += 1
        self._m = cfg.adam_beta1 * self._m + (1.0 - cfg.adam_beta1) * grad
        self._v = cfg.adam_beta2 * self._v + (1.0 - cfg.adam_beta2) * grad**2
        m_hat = self._m / (1.0 - cfg.adam_beta1**self._t)
        v_hat = self._v / (1.0 - cfg.adam_beta2**self._t)
        decayed = theta * (1.0 - cfg.learning_rate * cfg.weight_decay)
        return decayed - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


class TrainResult(NamedTuple):
    """Result of train: best iterate genome, its loss and the per epoch losses."""

    genome: CircuitGenome
    final_loss: float
    loss_history: List[float]


def train(genome: CircuitGenome, task: TaskSpec, config: TrainConfig) -> TrainResult:
    """Train the enabled gate parameters of genome.

    Arguments:
        genome {CircuitGenome} -- Genome to train.
        task {TaskSpec} -- Dataset or teacher task.
        config {TrainConfig} -- Optimizer settings.

    Raises:
        TrainingError -- If the loss becomes non-finite.
        GenomeError -- If genome does not match the task register.

    Returns:
        TrainResult -- The genome at the lowest loss seen (fitness set to that loss),
            the loss, and loss_history of length epochs + 1 (initial loss first).
    """
    check_register(genome, task)
    circuit = CompiledCircuit(genome)
    objective = task.training_objective
    theta = circuit.params.values.copy()

    def loss_at(values: np.ndarray) -> float:
        loss = objective.evaluate(circuit.run(values, objective.inputs))
        if not math.isfinite(loss):
            raise TrainingError(
                f"Non-finite loss {loss} training genome {genome.genome_id}."
            )
        return loss

    loss = loss_at(theta)
    history = [loss]
    best_loss, best_theta = loss, theta

    if len(theta) == 0:
        history.extend([loss] * config.epochs)
    else:
        optimizer = Adam(len(theta), config)
        for _ in range(config.epochs):
            theta = optimizer.step(theta, _gradient(circuit, objective, theta, config))
            loss = loss_at(theta)
            history.append(loss)
            if loss < best_loss:
                best_loss, best_theta = loss, theta

    trained = ParamVector(best_theta, circuit.params.index).unflatten(genome)
    logging.debug(  # pylint: disable=logging-fstring-interpolation
        f"Genome {genome.genome_id}: loss {history[0]:.6f} -> {best_loss:.6f} over "
        f"{config.epochs} epochs."
    )
    return TrainResult(trained.with_fitness(best_loss), best_loss, history)


@dataclass(frozen=True)
class FitnessReport:
    """Evaluation of a trained genome.

    Public attributes:
        loss {float} -- Training loss (the genome's fitness, lower is better).
        accuracy {Optional[float]} -- Test split accuracy (datasets).
        train_accuracy {Optional[float]} -- Training split accuracy (datasets).
        fidelity {Optional[float]} -- Mean fidelity over the inputs (teachers).
        angular {Optional[float]} -- Mean angular distance over the inputs (teachers).
        num_gates {int} -- Enabled gate count.
    """

    loss: float
    accuracy: Optional[float] = None
    train_accuracy: Optional[float] = None
    fidelity: Optional[float] = None
    angular: Optional[float] = None
    num_gates: int = 0


def evaluate(genome: CircuitGenome, task: TaskSpec) -> FitnessReport:
    """Return the fitness report of genome on task.

    Accuracy is the fraction of held out test rows whose most likely class (lowest
    index on ties) equals the label. Teacher tasks report mean fidelity and mean
    angular distance over the input states.
    """
    check_register(genome, task)
    circuit = CompiledCircuit(genome)
    theta = circuit.params.values
    objective = task.training_objective
    loss = objective.evaluate(circuit.run(theta, objective.inputs))
    report = FitnessReport(loss=loss, num_gates=genome.num_enabled_gates)

    if isinstance(task, DatasetTask):
        test = task.test_objective
        train_set = task.train_objective
        return replace(
            report,
            accuracy=test.accuracy(circuit.run(theta, test.inputs)),
            train_accuracy=train_set.accuracy(circuit.run(theta, train_set.inputs)),
        )

    fidelities = np.clip(
        batch_fidelities(circuit.run(theta, task.inputs), task.targets), 0.0, 1.0
    )
    return replace(
        report,
        fidelity=float(np.mean(fidelities)),
        angular=float(np.mean(np.arccos(np.sqrt(fidelities)))),
    )
