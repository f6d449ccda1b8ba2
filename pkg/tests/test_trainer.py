"""Tests for parameter gradients, Adam training and fitness evaluation."""

import math
from typing import List

import numpy as np
import pytest

from qevolve.circuits.config import GateKind
from qevolve.circuits.exceptions import GenomeError, TrainingError
from qevolve.circuits.genome import CircuitGenome
from qevolve.circuits.qsim import basis_state, random_state, states_array
from qevolve.evolution.bench import DatasetTask, TeacherTask, make_teacher
from qevolve.evolution.config import (
    DatasetName,
    GradientMode,
    LossKind,
    TeacherFamily,
)
from qevolve.evolution.configclasses import TrainConfig
from qevolve.evolution.trainer import (
    Adam,
    ParamVector,
    evaluate,
    gradient,
    task_loss,
    train,
)
from qevolve.utils import make_rng

SHIFT = TrainConfig(gradient_mode=GradientMode.PARAMETER_SHIFT, fd_step=1e-5)
FINITE = TrainConfig(gradient_mode=GradientMode.FINITE_DIFFERENCE, fd_step=1e-5)


def _identity_task(inputs: List[str]) -> TeacherTask:
    amplitudes = states_array([basis_state(bits) for bits in inputs])
    teacher = CircuitGenome.empty(len(inputs[0]), [0], [0])
    return TeacherTask(TeacherFamily.BASELINE, teacher, amplitudes, amplitudes)


def _ry_genome(make_gate, angle: float) -> CircuitGenome:
    return CircuitGenome(
        num_qubits=1,
        input_qubits=[0],
        output_qubits=[0],
        gates=[make_gate(0, GateKind.RY, 0.5, [0], [angle])],
    )


def _dataset_task(features: np.ndarray, labels: List[int]) -> DatasetTask:
    rows = len(labels)
    test = list(range(0, rows, 5))
    train_rows = [row for row in range(rows) if row not in test]
    return DatasetTask(
        DatasetName.IRIS,
        features,
        np.array(labels),
        ["a", "b", "c"],
        train_rows,
        test,
        num_qubits=2,
    )


class TestParamVector:
    def test_round_trip(self, make_gate) -> None:
        genome = CircuitGenome(
            num_qubits=2,
            input_qubits=[0],
            output_qubits=[1],
            gates=[
                make_gate(3, GateKind.U, 0.2, [0], [0.1, 0.2, 0.3]),
                make_gate(1, GateKind.CX, 0.4, [0, 1]),
                make_gate(2, GateKind.RZZ, 0.6, [0, 1], [0.4], enabled=False),
                make_gate(0, GateKind.CRY, 0.8, [0, 1], [0.5]),
            ],
        )
        params = ParamVector.flatten(genome)
        assert params.index == [(3, "theta"), (3, "phi"), (3, "delta"), (0, "phi")]
        assert params.values.tolist() == [0.1, 0.2, 0.3, 0.5]
        assert params.unflatten(genome) == genome

        moved = ParamVector(params.values + 1.0, params.index).unflatten(genome)
        assert moved.gate_by_innovation(0).params == {"phi": 1.5}
        assert moved.gate_by_innovation(2).params == {"theta": 0.4}

    def test_length_mismatch(self) -> None:
        with pytest.raises(ValueError):
            ParamVector([0.1, 0.2], [(0, "phi")])


class TestTaskLoss:
    def test_identity_teacher(self) -> None:
        task = _identity_task(["00", "10", "01", "11"])
        genome = CircuitGenome.empty(2, [0], [0])
        assert task_loss(genome, task) == pytest.approx(0.0, abs=1e-12)

    def test_bell_teacher(self, rng) -> None:
        task = make_teacher(TeacherFamily.BELL, 2, rng)
        assert task_loss(task.teacher, task) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_readout(self, make_gate) -> None:
        task = _dataset_task(np.ones((30, 4)), [0, 1, 2] * 10)
        genome = CircuitGenome(
            num_qubits=2,
            input_qubits=[0, 1],
            output_qubits=[0, 1],
            gates=[
                make_gate(0, GateKind.H, 0.3, [0]),
                make_gate(1, GateKind.H, 0.6, [1]),
            ],
        )
        assert task_loss(genome, task) == pytest.approx(math.log(3))

    def test_register_mismatch(self, rng) -> None:
        task = make_teacher(TeacherFamily.BELL, 2, rng)
        genome = CircuitGenome.empty(3, [0], [1])
        with pytest.raises(GenomeError):
            task_loss(genome, task)
        with pytest.raises(GenomeError):
            train(genome, task, FINITE)
        with pytest.raises(GenomeError):
            evaluate(genome, task)


class TestGradient:
    @pytest.mark.parametrize("config", [SHIFT, FINITE])
    def test_ry_slopes(self, make_gate, config) -> None:
        task = _identity_task(["0"])
        # Loss is sin^2(phi / 2), so the slope is sin(phi) / 2.
        flat = gradient(_ry_genome(make_gate, 0.0), task, config)
        assert flat.values == pytest.approx([0.0], abs=1e-9)
        steep = gradient(_ry_genome(make_gate, math.pi / 2), task, config)
        assert steep.values == pytest.approx([0.5], abs=1e-8)
        assert steep.index == [(0, "phi")]

    def test_no_parameters(self, bell_genome, rng) -> None:
        task = make_teacher(TeacherFamily.BELL, 2, rng)
        assert len(gradient(bell_genome, task, SHIFT)) == 0

    @pytest.mark.parametrize(
        "loss",
        [
            LossKind.FIDELITY,
            LossKind.ANGULAR,
            LossKind.KL_DIVERGENCE,
            LossKind.OBSERVABLE_MSE,
        ],
    )
    def test_shift_rule_matches_finite_differences(
        self, rng, random_genome, loss
    ) -> None:
        for _ in range(125):
            num_qubits = int(rng.integers(1, 4))
            genome = random_genome(rng, num_qubits, int(rng.integers(1, 6)))
            inputs = states_array([random_state(num_qubits, rng) for _ in range(3)])
            targets = states_array([random_state(num_qubits, rng) for _ in range(3)])
            task = TeacherTask(TeacherFamily.MULTI_LAYER, genome, inputs, targets, loss)
            shifted = gradient(genome, task, SHIFT).values
            finite = gradient(genome, task, FINITE).values
            assert shifted == pytest.approx(finite, abs=1e-4)

    def test_dataset_shift_rule(self, rng, random_genome) -> None:
        features = rng.uniform(0.0, 5.0, size=(15, 4))
        task = _dataset_task(features, [0, 1, 2] * 5)
        for _ in range(125):
            genome = random_genome(rng, 2, int(rng.integers(1, 6)))
            shifted = gradient(genome, task, SHIFT).values
            finite = gradient(genome, task, FINITE).values
            assert shifted == pytest.approx(finite, abs=1e-4)


class TestAdam:
    def test_matches_scalar_reference(self) -> None:
        config = TrainConfig(learning_rate=0.1, weight_decay=0.01)
        optimizer = Adam(1, config)
        theta = np.array([1.0])
        m = v = 0.0
        expected = 1.0
        for t, grad in enumerate([0.5, -0.2, 0.3, 0.9], start=1):
            theta = optimizer.step(theta, np.array([grad]))
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad * grad
            m_hat = m / (1 - 0.9**t)
            v_hat = v / (1 - 0.999**t)
            expected = expected * (1 - 0.1 * 0.01) - 0.1 * m_hat / (
                math.sqrt(v_hat) + 1e-8
            )
            assert theta[0] == pytest.approx(expected, rel=1e-12)

    def test_weight_decay_only(self) -> None:
        optimizer = Adam(2, TrainConfig(learning_rate=0.1, weight_decay=0.5))
        theta = optimizer.step(np.array([2.0, -1.0]), np.zeros(2))
        assert theta.tolist() == pytest.approx([1.9, -0.95])


class TestTrain:
    def test_converges_from_far_angle(self, rng, make_gate) -> None:
        task = make_teacher(TeacherFamily.BASELINE, 1, rng, gate=GateKind.IDENTITY)
        config = TrainConfig(epochs=300, learning_rate=0.05)
        result = train(_ry_genome(make_gate, 3.0), task, config)
        assert result.final_loss < 1e-2
        assert result.loss_history[0] > 0.5

    def test_returns_best_iterate(self, rng, make_gate) -> None:
        task = make_teacher(TeacherFamily.BASELINE, 1, rng, gate=GateKind.IDENTITY)
        config = TrainConfig(epochs=20, learning_rate=1.5)
        result = train(_ry_genome(make_gate, 1.0), task, config)
        assert len(result.loss_history) == 21
        assert result.final_loss == min(result.loss_history)
        assert result.genome.fitness == result.final_loss
        assert task_loss(result.genome, task) == pytest.approx(result.final_loss)

    def test_no_parameters(self, bell_genome, rng) -> None:
        task = make_teacher(TeacherFamily.BELL, 2, rng)
        result = train(bell_genome, task, TrainConfig(epochs=5))
        assert result.loss_history == [result.final_loss] * 6
        assert result.genome.gates == bell_genome.gates

    def test_non_finite_loss(self, make_gate) -> None:
        inputs = states_array([basis_state("0")])
        targets = np.full_like(inputs, np.nan)
        task = TeacherTask(
            TeacherFamily.BASELINE, CircuitGenome.empty(1, [0], [0]), inputs, targets
        )
        with pytest.raises(TrainingError):
            train(_ry_genome(make_gate, 0.3), task, TrainConfig(epochs=3))

    def test_deterministic(self, make_gate) -> None:
        task = make_teacher(
            TeacherFamily.MULTI_LAYER, 2, make_rng(3), loss=LossKind.KL_DIVERGENCE
        )
        genome = CircuitGenome(
            num_qubits=2,
            input_qubits=[0, 1],
            output_qubits=[0, 1],
            gates=[
                make_gate(0, GateKind.RY, 0.2, [0], [0.3]),
                make_gate(1, GateKind.CRZ, 0.5, [0, 1], [-0.7]),
            ],
        )
        config = TrainConfig(epochs=10, learning_rate=0.05)
        first = train(genome, task, config)
        second = train(genome, task, config)
        assert first.loss_history == second.loss_history
        assert first.genome == second.genome


class TestEvaluate:
    def test_bell_teacher(self, rng) -> None:
        task = make_teacher(TeacherFamily.BELL, 2, rng)
        report = evaluate(task.teacher, task)
        assert report.fidelity == pytest.approx(1.0)
        assert report.angular == pytest.approx(0.0, abs=1e-6)
        assert report.loss == pytest.approx(0.0, abs=1e-12)
        assert report.num_gates == 2
        assert report.accuracy is None

    def test_uniform_readout_accuracy(self, make_gate) -> None:
        task = _dataset_task(np.ones((30, 4)), [0, 1, 2] * 10)
        genome = CircuitGenome(
            num_qubits=2,
            input_qubits=[0, 1],
            output_qubits=[0, 1],
            gates=[
                make_gate(0, GateKind.H, 0.3, [0]),
                make_gate(1, GateKind.H, 0.6, [1]),
            ],
        )
        report = evaluate(genome, task)
        assert len(task.test_indices) == 6
        assert report.accuracy == pytest.approx(1 / 3)
        assert report.train_accuracy == pytest.approx(1 / 3)
        assert report.loss == pytest.approx(math.log(3))
        assert report.fidelity is None
