#!/usr/bin/env python

"""Provide enumerations, dataset metadata and file names used by the evolution tools."""

from enum import Enum
from typing import Dict, NamedTuple, Optional

# Artifact file names written under the output directory.
CONFIG_FILE = "config.resolved"
REPORT_FILE = "report.json"
SCHEMA_FILE = "report.schema.json"
LOG_FILE = "genomes.log"
BEST_GENOME_FILE = "best_genome.json"
CHECKPOINT_FILE = "checkpoint.json"
TEACHER_FILE = "teacher.json"


class LossKind(Enum):
    """Loss functions. Fitness is always the loss, lower is better."""

    FIDELITY = "fidelity"
    ANGULAR = "angular"
    KL_DIVERGENCE = "kl_divergence"
    OBSERVABLE_MSE = "observable_mse"
    CROSS_ENTROPY = "cross_entropy"

    @property
    def for_teacher(self) -> bool:
        """Return True if the loss compares output states of teacher tasks."""
        return self is not LossKind.CROSS_ENTROPY


class GradientMode(Enum):
    """Gradient estimators available to the trainer."""

    PARAMETER_SHIFT = "parameter_shift"
    FINITE_DIFFERENCE = "finite_difference"


class TeacherFamily(Enum):
    """Teacher circuit construction rules."""

    BASELINE = "baseline_single_gate"
    BELL = "bell_generator"
    INPUT_CONTROLLED = "input_controlled"
    MULTI_LAYER = "multi_layer"

    @property
    def min_qubits(self) -> int:
        """Return the smallest register the family can be built on."""
        return {
            TeacherFamily.BASELINE: 1,
            TeacherFamily.BELL: 2,
            TeacherFamily.INPUT_CONTROLLED: 3,
            TeacherFamily.MULTI_LAYER: 2,
        }[self]


class DatasetName(Enum):
    """Classification benchmarks."""

    IRIS = "iris"
    SEEDS = "seeds"
    WINE = "wine"
    BREAST_CANCER = "breast_cancer"


class DatasetInfo(NamedTuple):
    """Shape, register size and source of a classification benchmark.

    url is the raw UCI file, which qevolve-fetch rewrites as file_name (features
    first, label last).
    """

    num_rows: int
    num_features: int
    num_classes: int
    num_qubits: int
    file_name: str
    url: str


_UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

DATASETS: Dict[DatasetName, DatasetInfo] = {
    DatasetName.IRIS: DatasetInfo(
        150, 4, 3, 6, "iris.csv", f"{_UCI}/iris/iris.data"
    ),
    DatasetName.SEEDS: DatasetInfo(
        210, 7, 3, 7, "seeds.csv", f"{_UCI}/00236/seeds_dataset.txt"
    ),
    DatasetName.WINE: DatasetInfo(
        178, 13, 3, 7, "wine.csv", f"{_UCI}/wine/wine.data"
    ),
    DatasetName.BREAST_CANCER: DatasetInfo(
        569,
        30,
        2,
        8,
        "breast_cancer.csv",
        f"{_UCI}/breast-cancer-wisconsin/wdbc.data",
    ),
}


class TaskName(Enum):
    """Tasks selectable with --task."""

    IRIS = "iris"
    SEEDS = "seeds"
    WINE = "wine"
    BREAST_CANCER = "breast_cancer"
    BASELINE_TEACHER = "baseline_teacher"
    BELL_TEACHER = "bell_teacher"
    INPUT_CONTROLLED_TEACHER = "input_controlled_teacher"
    MULTI_LAYER_TEACHER = "multi_layer_teacher"

    @property
    def dataset(self) -> Optional[DatasetName]:
        """Return the dataset for classification tasks, None for teacher tasks."""
        try:
            return DatasetName(self.value)
        except ValueError:
            return None

    @property
    def family(self) -> Optional[TeacherFamily]:
        """Return the teacher family for teacher tasks, None for datasets."""
        return _TEACHER_TASKS.get(self)

    @property
    def default_qubits(self) -> int:
        """Return the register size used when --qubits is not given."""
        dataset = self.dataset
        if dataset is not None:
            return DATASETS[dataset].num_qubits
        return _TEACHER_QUBITS[self]


_TEACHER_TASKS: Dict[TaskName, TeacherFamily] = {
    TaskName.BASELINE_TEACHER: TeacherFamily.BASELINE,
    TaskName.BELL_TEACHER: TeacherFamily.BELL,
    TaskName.INPUT_CONTROLLED_TEACHER: TeacherFamily.INPUT_CONTROLLED,
    TaskName.MULTI_LAYER_TEACHER: TeacherFamily.MULTI_LAYER,
}

_TEACHER_QUBITS: Dict[TaskName, int] = {
    TaskName.BASELINE_TEACHER: 3,
    TaskName.BELL_TEACHER: 2,
    TaskName.INPUT_CONTROLLED_TEACHER: 4,
    TaskName.MULTI_LAYER_TEACHER: 3,
}
