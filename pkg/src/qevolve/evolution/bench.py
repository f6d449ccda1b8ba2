#!/usr/bin/env python
"""Provide the benchmark tasks: UCI classification datasets and teacher circuits.

Dataset files are comma separated, optionally with a header row, with the class label
in the last column (qevolve-fetch writes the UCI files in this layout). Dataset tasks
use the whole register as input qubits and the lowest ceil(log2 K) qubits as the
readout register.

Teacher tasks pair a fixed circuit with input states (all basis states for up
to 4 qubits, plus 16 random product states) and the teacher's output for each one.
"""

# cSpell:ignore simplejson, wdbc

import csv
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import simplejson
from sklearn.model_selection import train_test_split

from qevolve.circuits.config import GateKind
from qevolve.circuits.exceptions import (
    ConfigError,
    DatasetError,
    DimensionError,
    GenomeError,
)
from qevolve.circuits.genome import CircuitGenome, GateSpec, genome_from_dict
from qevolve.circuits.qsim import basis_state, product_state, run_circuit_batch
from qevolve.evolution.config import DATASETS, DatasetName, LossKind, TeacherFamily
from qevolve.evolution.configclasses import SplitConfig
from qevolve.evolution.objective import (
    BatchObjective,
    CrossEntropyObjective,
    ReadoutMap,
    default_observables,
    encode_angles,
    feature_ranges,
    scale_features,
    teacher_objective,
)
from qevolve.utils import ceil_log2

BASIS_INPUT_LIMIT = 4
RANDOM_INPUT_STATES = 16
TARGET_TOLERANCE = 1e-12

# Single qubit gates the baseline teacher draws from.
BASELINE_GATES = (
    GateKind.IDENTITY,
    GateKind.X,
    GateKind.Y,
    GateKind.Z,
    GateKind.H,
    GateKind.S,
    GateKind.T,
)


class DatasetTask:
    """A classification benchmark with a fixed train/test split.

    Public attributes:
        name {DatasetName} -- Dataset.
        features {np.ndarray} -- Raw features, shape (rows, F).
        labels {np.ndarray} -- Class indices, shape (rows,).
        class_names {List[str]} -- Label text for each class index.
        train_indices, test_indices {List[int]} -- Disjoint, exhaustive row indices.
        num_qubits {int} -- Register size; every qubit carries input.
        readout {ReadoutMap} -- Readout register and class count.
        feature_ranges {np.ndarray} -- (F, 2) min/max over the training rows only.
        train_objective, test_objective {CrossEntropyObjective} -- Encoded splits.
    """

    def __init__(
        self,
        name: DatasetName,
        features: np.ndarray,
        labels: np.ndarray,
        class_names: List[str],
        train_indices: List[int],
        test_indices: List[int],
        num_qubits: int,
    ) -> None:
        """Build the readout map, training split scaling and encoded input states."""
        num_classes = len(class_names)
        num_readout = ceil_log2(num_classes)
        if num_qubits < num_readout:
            raise ConfigError(
                f"{name.value} needs at least {num_readout} qubits for {num_classes} "
                f"classes, got {num_qubits}."
            )

        self.name = name
        self.features = features
        self.labels = labels
        self.class_names = class_names
        self.train_indices = train_indices
        self.test_indices = test_indices
        self.num_qubits = num_qubits
        self.readout = ReadoutMap(
            readout_qubits=list(range(num_readout)), num_classes=num_classes
        )
        self.feature_ranges = feature_ranges(features[train_indices])
        self.train_objective = self._objective(train_indices)
        self.test_objective = self._objective(test_indices)

    def _objective(self, indices: List[int]) -> CrossEntropyObjective:
        angles = scale_features(self.features[indices], self.feature_ranges)
        return CrossEntropyObjective(
            encode_angles(angles, self.num_qubits), self.labels[indices], self.readout
        )

    @property
    def task_id(self) -> str:
        """Return the task name."""
        return self.name.value

    @property
    def input_qubits(self) -> List[int]:
        """Return all qubits, which carry the encoded features."""
        return list(range(self.num_qubits))

    @property
    def output_qubits(self) -> List[int]:
        """Return the readout qubits."""
        return list(self.readout.readout_qubits)

    @property
    def training_objective(self) -> BatchObjective:
        """Return the objective used for training and fitness."""
        return self.train_objective

    def base_genome(self) -> CircuitGenome:
        """Return the empty genome evolution starts from."""
        return CircuitGenome.empty(
            self.num_qubits, self.input_qubits, self.output_qubits
        )


def _label_order(labels: Sequence[str]) -> List[str]:
    unique = set(labels)
    try:
        return sorted(unique, key=float)
    except ValueError:
        return sorted(unique)


def read_dataset_csv(
    csv_path: Path, num_features: int
) -> Tuple[np.ndarray, List[str]]:
    """Return the feature matrix and raw label column of a dataset file.

    Arguments:
        csv_path {Path} -- File with num_features feature columns and the label last.
        num_features {int} -- Expected feature count.

    Raises:
        DatasetError -- Missing file, wrong column count or non-numeric features, with
            the offending line number. A non-numeric first line is taken as a header.
    """
    rows: List[List[float]] = []
    labels: List[str] = []
    try:
        with csv_path.open("rt", newline="", encoding="utf-8") as file_handle:
            for line_number, row in enumerate(csv.reader(file_handle), start=1):
                if not row or all(not cell.strip() for cell in row):
                    continue
                if len(row) != num_features + 1:
                    raise DatasetError(
                        f"expected {num_features + 1} columns, found {len(row)} "
                        f"in {csv_path}",
                        line_number,
                    )
                try:
                    values = [float(cell) for cell in row[:-1]]
                except ValueError as exc:
                    if line_number == 1:
                        continue
                    raise DatasetError(
                        f"non-numeric feature in {csv_path}: {exc}", line_number
                    ) from exc
                rows.append(values)
                labels.append(row[-1].strip())
    except FileNotFoundError as exc:
        raise DatasetError(f"Dataset file not found: {csv_path}") from exc

    if not rows:
        raise DatasetError(f"No data rows in {csv_path}")
    return np.array(rows, dtype=float), labels


def stratified_split(
    labels: np.ndarray, split: SplitConfig
) -> Tuple[List[int], List[int]]:
    """Return sorted (train, test) row indices.

    The test split holds ceil(test_fraction * rows) rows. With split.stratified the
    class proportions are kept (each class within one row of its share), otherwise
    the rows are sampled at once. split.split_seed fixes the draw.

    Raises:
        DatasetError -- If a class is too small to appear in both splits.
    """
    rows = np.arange(labels.size)
    try:
        train, test = train_test_split(
            rows,
            test_size=split.test_fraction,
            random_state=split.split_seed,
            stratify=labels if split.stratified else None,
        )
    except ValueError as exc:
        raise DatasetError(f"Cannot split {labels.size} rows: {exc}") from exc
    return sorted(int(index) for index in train), sorted(int(index) for index in test)


def load_dataset(
    name: DatasetName,
    csv_path: Path,
    split: SplitConfig,
    num_qubits: Optional[int] = None,
) -> DatasetTask:
    """Load a classification benchmark.

    Arguments:
        name {DatasetName} -- Dataset, which fixes the column and class counts.
        csv_path {Path} -- Dataset file (see read_dataset_csv).
        split {SplitConfig} -- Split settings.

    Keyword Arguments:
        num_qubits {int} -- Register size (default: the dataset's entry in DATASETS).

    Raises:
        DatasetError -- For missing or malformed files or a wrong class count.
    """
    info = DATASETS[name]
    features, raw_labels = read_dataset_csv(csv_path, info.num_features)
    class_names = _label_order(raw_labels)
    if len(class_names) != info.num_classes:
        raise DatasetError(
            f"{name.value} expects {info.num_classes} classes, {csv_path} has "
            f"{len(class_names)}: {class_names}"
        )
    if len(raw_labels) != info.num_rows:
        logging.warning(  # pylint: disable=logging-fstring-interpolation
            f"{csv_path} has {len(raw_labels)} rows, {name.value} normally has "
            f"{info.num_rows}."
        )

    index = {label: position for position, label in enumerate(class_names)}
    labels = np.array([index[label] for label in raw_labels], dtype=int)
    train, test = stratified_split(labels, split)
    return DatasetTask(
        name,
        features,
        labels,
        class_names,
        train,
        test,
        info.num_qubits if num_qubits is None else num_qubits,
    )


class TeacherTask:
    """A teacher imitation benchmark.

    Public attributes:
        family {TeacherFamily} -- Construction rule used for the teacher.
        teacher {CircuitGenome} -- The fixed teacher circuit.
        inputs {np.ndarray} -- Input amplitudes, shape (m, 2^n).
        targets {np.ndarray} -- Teacher outputs for each input, shape (m, 2^n).
        loss {LossKind} -- Training loss.
        observables {List[ObservableSpec]} -- Observables for observable_mse (X, Y
            and Z on every output qubit).
    """

    def __init__(
        self,
        family: TeacherFamily,
        teacher: CircuitGenome,
        inputs: np.ndarray,
        targets: np.ndarray,
        loss: LossKind = LossKind.FIDELITY,
    ) -> None:
        """Create a teacher task from precomputed inputs and targets."""
        if not loss.for_teacher:
            raise ConfigError(f"Loss '{loss.value}' needs a classification dataset.")
        if inputs.shape != targets.shape:
            raise DimensionError(
                f"{inputs.shape} inputs do not match {targets.shape} targets."
            )
        self.family = family
        self.teacher = teacher
        self.inputs = inputs
        self.targets = targets
        self.loss = loss
        self.observables = default_observables(teacher.output_qubits)
        self.training_objective = teacher_objective(
            loss, inputs, targets, self.observables
        )

    @property
    def task_id(self) -> str:
        """Return the task name."""
        return f"{self.family.value}_teacher"

    @property
    def num_qubits(self) -> int:
        """Return the register size."""
        return self.teacher.num_qubits

    @property
    def input_qubits(self) -> List[int]:
        """Return the teacher's input qubits."""
        return list(self.teacher.input_qubits)

    @property
    def output_qubits(self) -> List[int]:
        """Return the teacher's output qubits."""
        return list(self.teacher.output_qubits)

    def with_loss(self, loss: LossKind) -> "TeacherTask":
        """Return the same task trained against a different loss."""
        return TeacherTask(self.family, self.teacher, self.inputs, self.targets, loss)

    def base_genome(self) -> CircuitGenome:
        """Return the empty genome evolution starts from."""
        return CircuitGenome.empty(
            self.num_qubits, self.input_qubits, self.output_qubits
        )


TaskSpec = Union[DatasetTask, TeacherTask]


def check_register(genome: CircuitGenome, task: TaskSpec) -> None:
    """Raise GenomeError if genome was not built for the task's register."""
    if genome.num_qubits != task.num_qubits:
        raise GenomeError(
            f"Genome has {genome.num_qubits} qubits but task '{task.task_id}' uses "
            f"{task.num_qubits}."
        )


def _spaced(count: int) -> List[float]:
    return [(index + 1) / (count + 1) for index in range(count)]


def _build(
    num_qubits: int,
    inputs: List[int],
    outputs: List[int],
    layout: Sequence[Tuple[GateKind, Sequence[int], Sequence[float]]],
) -> CircuitGenome:
    gates = [
        GateSpec(
            innovation=innovation,
            kind=kind,
            depth=depth,
            qubits=dict(zip(kind.roles, qubits)),
            params=dict(zip(kind.param_names, params)),
        )
        for innovation, ((kind, qubits, params), depth) in enumerate(
            zip(layout, _spaced(len(layout)))
        )
    ]
    return CircuitGenome(
        num_qubits=num_qubits,
        input_qubits=inputs,
        output_qubits=outputs,
        gates=gates,
    )


def teacher_circuit(
    family: TeacherFamily,
    num_qubits: int,
    rng: np.random.Generator,
    gate: Optional[GateKind] = None,
) -> CircuitGenome:
    """Return the teacher circuit for a family.

    Arguments:
        family {TeacherFamily} -- Construction rule:
            * baseline_single_gate: one single qubit gate (gate, or drawn from
              BASELINE_GATES) on a random qubit, inputs = outputs = all qubits.
            * bell_generator: H on qubit 0 then CX(0 -> 1); input 0, output 1.
            * input_controlled: inputs are the first ceil(n/2) qubits, outputs the
              rest. A Toffoli on the first two inputs drives the first output and CX
              gates copy inputs onto any further outputs.
            * multi_layer: RY layer with random angles, CX chain, RZ layer with random
              angles, then CZ between the first and last qubit. All qubits are inputs
              and outputs.
        num_qubits {int} -- Register size.
        rng {np.random.Generator} -- Random stream for gate choices and angles.

    Keyword Arguments:
        gate {GateKind} -- Fixed gate for the baseline family. (default: {None})

    Raises:
        ConfigError -- Too few qubits, or a gate that is not single qubit.
    """
    if num_qubits < family.min_qubits:
        raise ConfigError(
            f"Teacher family '{family.value}' needs at least {family.min_qubits} "
            f"qubits, got {num_qubits}."
        )
    everything = list(range(num_qubits))

    if family is TeacherFamily.BASELINE:
        if gate is None:
            gate = BASELINE_GATES[int(rng.integers(len(BASELINE_GATES)))]
        if gate.arity != 1:
            raise ConfigError(
                f"Baseline teacher gate must be single qubit: {gate.value}"
            )
        qubit = int(rng.integers(num_qubits))
        params = [float(rng.uniform(-math.pi, math.pi)) for _ in gate.param_names]
        return _build(num_qubits, everything, everything, [(gate, [qubit], params)])

    if family is TeacherFamily.BELL:
        return _build(
            num_qubits, [0], [1], [(GateKind.H, [0], []), (GateKind.CX, [0, 1], [])]
        )

    if family is TeacherFamily.INPUT_CONTROLLED:
        split = num_qubits - num_qubits // 2
        inputs, outputs = everything[:split], everything[split:]
        controlled = [(GateKind.TOFFOLI, [inputs[0], inputs[1], outputs[0]], [])]
        for position, target in enumerate(outputs[1:], start=1):
            controlled.append(
                (GateKind.CX, [inputs[position % len(inputs)], target], [])
            )
        return _build(num_qubits, inputs, outputs, controlled)

    layout: List[Tuple[GateKind, Sequence[int], Sequence[float]]] = []
    layout.extend(
        (GateKind.RY, [qubit], [float(rng.uniform(-math.pi, math.pi))])
        for qubit in everything
    )
    layout.extend((GateKind.CX, [qubit, qubit + 1], []) for qubit in everything[:-1])
    layout.extend(
        (GateKind.RZ, [qubit], [float(rng.uniform(-math.pi, math.pi))])
        for qubit in everything
    )
    layout.append((GateKind.CZ, [0, num_qubits - 1], []))
    return _build(num_qubits, everything, everything, layout)


def teacher_inputs(
    num_qubits: int, rng: np.random.Generator, num_random: int = RANDOM_INPUT_STATES
) -> np.ndarray:
    """Return teacher input amplitudes (m, 2^n).

    All computational basis states when num_qubits <= 4, followed by num_random
    product states RZ(b)RY(a)|0> per qubit with a ~ U(0, pi), b ~ U(0, 2 pi).
    """
    states = []
    if num_qubits <= BASIS_INPUT_LIMIT:
        for index in range(2**num_qubits):
            bits = "".join(str((index >> qubit) & 1) for qubit in range(num_qubits))
            states.append(basis_state(bits).amplitudes)
    for _ in range(num_random):
        angles = [
            (float(rng.uniform(0.0, math.pi)), float(rng.uniform(0.0, 2.0 * math.pi)))
            for _ in range(num_qubits)
        ]
        states.append(product_state(angles).amplitudes)
    return np.stack(states)


def make_teacher(
    family: TeacherFamily,
    num_qubits: int,
    rng: np.random.Generator,
    loss: LossKind = LossKind.FIDELITY,
    gate: Optional[GateKind] = None,
) -> TeacherTask:
    """Return a teacher task: circuit, input states and the teacher's outputs.

    See teacher_circuit for the construction rules and errors.
    """
    teacher = teacher_circuit(family, num_qubits, rng, gate)
    inputs = teacher_inputs(num_qubits, rng)
    targets = run_circuit_batch(teacher, inputs)
    logging.info(  # pylint: disable=logging-fstring-interpolation
        f"Teacher {family.value}: {len(teacher.gates)} gates, {inputs.shape[0]} inputs."
    )
    return TeacherTask(family, teacher, inputs, targets, loss)


def teacher_fitness(candidate: CircuitGenome, task: TeacherTask) -> float:
    """Return the mean task loss of candidate over the inputs (0 for the teacher)."""
    check_register(candidate, task)
    outputs = run_circuit_batch(candidate, task.inputs)
    return task.training_objective.evaluate(outputs)


def _amplitudes_to_json(amplitudes: np.ndarray) -> List[List[List[float]]]:
    return [
        [[float(value.real), float(value.imag)] for value in row] for row in amplitudes
    ]


def _amplitudes_from_json(data: List[List[List[float]]]) -> np.ndarray:
    array = np.array(data, dtype=float)
    return array[..., 0] + 1j * array[..., 1]


def save_teacher(task: TeacherTask, path: Path) -> None:
    """Write a teacher task as JSON (genome schema plus input/target amplitudes)."""
    document: Dict[str, object] = {
        "family": task.family.value,
        "loss": task.loss.value,
        "teacher": task.teacher.to_dict(),
        "observables": [
            {"pauli": obs.pauli.value, "qubit": obs.qubit} for obs in task.observables
        ],
        "inputs": _amplitudes_to_json(task.inputs),
        "targets": _amplitudes_to_json(task.targets),
    }
    with path.open("wt", encoding="utf-8") as file_handle:
        simplejson.dump(document, file_handle)


def load_teacher(path: Path) -> TeacherTask:
    """Read a teacher task written by save_teacher.

    Raises:
        DatasetError -- If the stored targets are not reproduced by the teacher.
    """
    with path.open("rt", encoding="utf-8") as file_handle:
        document = simplejson.load(file_handle)

    teacher = genome_from_dict(document["teacher"])
    inputs = _amplitudes_from_json(document["inputs"])
    targets = _amplitudes_from_json(document["targets"])
    recomputed = run_circuit_batch(teacher, inputs)
    if not np.allclose(recomputed, targets, rtol=0.0, atol=TARGET_TOLERANCE):
        raise DatasetError(
            f"Stored teacher targets in {path} do not match the teacher."
        )

    return TeacherTask(
        TeacherFamily(document["family"]),
        teacher,
        inputs,
        targets,
        LossKind(document["loss"]),
    )
