#!/usr/bin/env python

"""Provide run configuration dataclasses, the default TOML and TOML load/save."""

# cSpell: ignore pydantic, tomli, nary

from dataclasses import asdict, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional
import tomllib

from pydantic import ConfigDict, Field, ValidationError, model_validator
from pydantic.dataclasses import dataclass

import tomli_w

from qevolve.circuits.config import GateKind, MutationKind, OperatorKind
from qevolve.circuits.exceptions import ConfigError
from qevolve.circuits.operators import (
    DEFAULT_CROSSOVER_RATES,
    DEFAULT_MUTATION_RATES,
    OperatorConfig,
)
from qevolve.evolution.config import GradientMode, LossKind, TaskName

# These string constants are used to parameterise the default TOML.
# They should be the same as the attribute names in RunConfig.
CONFIG_MUTATION_RATES = "mutation_rates"
CONFIG_CROSSOVER_RATES = "crossover_rates"


def _rate_table(rates: Dict[Any, float]) -> str:
    return "\n".join(f"{kind.value} = {rate}" for kind, rate in rates.items())


# Experimental defaults: population 50, 500 genomes, 11 workers, Adam for 200 epochs
# at lr 0.001 with weight decay 0.0001.
DEFAULT_TOML = f"""\
task = "{TaskName.IRIS.value}"
dataset_path = "data"
out = "qevolve_out"
qubits = 0
seed = 0
loss = "{LossKind.FIDELITY.value}"

population = 50
max_genomes = 500
workers = 11
retry_budget = 1000

epochs = 200
lr = 0.001
weight_decay = 0.0001
gradient_mode = "{GradientMode.FINITE_DIFFERENCE.value}"
fd_step = 0.0001
adam_beta1 = 0.9
adam_beta2 = 0.999
adam_eps = 1e-8

test_fraction = 0.2
stratified = true
split_seed = 0

best_keep_rate = 0.75
other_keep_rate = 0.25
line_l1 = -1.0
line_l2 = 0.5
nary_parents = 4
mutations_per_call = 2
gate_vocabulary = [{", ".join(f'"{kind.value}"' for kind in GateKind)}]

[{CONFIG_MUTATION_RATES}]
{_rate_table(DEFAULT_MUTATION_RATES)}

[{CONFIG_CROSSOVER_RATES}]
{_rate_table(DEFAULT_CROSSOVER_RATES)}
"""


@dataclass(frozen=True)
class TrainConfig:
    """Gradient training settings.

    Public attributes:
        epochs {int} -- Full batch Adam steps per genome.
        learning_rate {float} -- Adam step size.
        weight_decay {float} -- Decoupled decay, theta *= 1 - lr * wd before each step.
        gradient_mode {GradientMode} -- Parameter shift (exact where the gate allows
            it, finite differences otherwise) or central finite differences throughout.
        fd_step {float} -- Central finite difference step.
        adam_beta1, adam_beta2, adam_eps {float} -- Adam moment constants.
    """

    epochs: int = Field(default=200, ge=1)
    learning_rate: float = Field(default=0.001, gt=0.0)
    weight_decay: float = Field(default=0.0001, ge=0.0)
    gradient_mode: GradientMode = GradientMode.FINITE_DIFFERENCE
    fd_step: float = Field(default=1e-4, gt=0.0)
    adam_beta1: float = Field(default=0.9, gt=0.0, lt=1.0)
    adam_beta2: float = Field(default=0.999, gt=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)


@dataclass(frozen=True)
class SplitConfig:
    """Train/test split settings for classification datasets."""

    test_fraction: float = Field(default=0.2, gt=0.0, lt=1.0)
    stratified: bool = True
    split_seed: int = 0


@dataclass(frozen=True)
class EvolutionConfig:
    """Settings for one evolution run.

    Public attributes:
        population_size {int} -- Steady state population capacity.
        max_genomes {int} -- Genome ids assigned (evaluated or discarded) before the
            master stops dispatching.
        workers {int} -- Worker processes. 1 evaluates in the master process and makes
            runs reproducible.
        seed {int} -- Seed for the master random stream.
        retry_budget {int} -- Consecutive invalid candidates tolerated before the run
            is abandoned.
        operators {OperatorConfig} -- Operator rates and constants.
        train {TrainConfig} -- Training settings.
    """

    population_size: int = Field(default=50, ge=1)
    max_genomes: int = Field(default=500, ge=1)
    workers: int = Field(default=11, ge=1)
    seed: int = 0
    retry_budget: int = Field(default=1000, ge=1)
    operators: OperatorConfig = field(default_factory=OperatorConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    @model_validator(mode="after")
    def _check_budget(self) -> "EvolutionConfig":
        if self.max_genomes < self.population_size:
            raise ValueError(
                f"max_genomes ({self.max_genomes}) must be at least the population "
                f"size ({self.population_size})."
            )
        return self


@dataclass(frozen=True, config=ConfigDict(extra="forbid"))
class RunConfig:
    """Flat view of everything a command line run needs.

    Every field maps to a top level key (or table, for the rate maps) of the TOML
    configuration file, and command line flags override the file. qubits = 0 selects
    the task's default register size.

    Note: changes in attribute names should be reflected in default TOML.
    """

    task: TaskName = TaskName.IRIS
    dataset_path: str = "data"
    out: str = "qevolve_out"
    qubits: int = Field(default=0, ge=0)
    seed: int = 0
    loss: LossKind = LossKind.FIDELITY

    population: int = 50
    max_genomes: int = 500
    workers: int = 11
    retry_budget: int = 1000

    epochs: int = 200
    lr: float = 0.001
    weight_decay: float = 0.0001
    gradient_mode: GradientMode = GradientMode.FINITE_DIFFERENCE
    fd_step: float = 1e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    test_fraction: float = 0.2
    stratified: bool = True
    split_seed: int = 0

    best_keep_rate: float = 0.75
    other_keep_rate: float = 0.25
    line_l1: float = -1.0
    line_l2: float = 0.5
    nary_parents: int = 4
    mutations_per_call: int = 2
    gate_vocabulary: List[GateKind] = field(default_factory=lambda: list(GateKind))
    mutation_rates: Dict[MutationKind, float] = field(
        default_factory=lambda: dict(DEFAULT_MUTATION_RATES)
    )
    crossover_rates: Dict[OperatorKind, float] = field(
        default_factory=lambda: dict(DEFAULT_CROSSOVER_RATES)
    )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """Return a validated configuration, raising ConfigError for bad values."""
        try:
            configuration = cls(**data)
            # Build the engine view as well, so cross field rules fail early.
            configuration.to_evolution_config()
            configuration.to_split_config()
        except (ValidationError, TypeError) as exc:
            raise ConfigError(f"Invalid configuration.\n{exc}") from exc
        return configuration

    @classmethod
    def load_toml(cls, toml_path: Optional[Path]) -> "RunConfig":
        """Create a configuration instance from a TOML file.

        Arguments:
            toml_path {Optional[Path]} -- Path to the toml file. If None or the file
                does not exist, the defaults in DEFAULT_TOML are used.

        Raises:
            ConfigError -- For unparseable TOML or invalid values.
        """
        data_dict: Dict[str, Any] = tomllib.loads(DEFAULT_TOML)
        if toml_path is not None:
            try:
                # tomllib, tomli-w require binary file open/close for utf-8
                with toml_path.open("rb") as file_handle:
                    data_dict.update(tomllib.load(file_handle))
            except FileNotFoundError:
                pass
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"Cannot parse {toml_path}: {exc}") from exc

        return cls.from_dict(data_dict)

    def save_toml(self, toml_path: Path) -> None:
        """Write the resolved configuration to a toml file.

        Arguments:
            toml_path {Path} -- Path to the toml file.
        """
        with toml_path.open("wb") as file_handle:
            tomli_w.dump(self.to_plain(), file_handle)

    def to_plain(self) -> Dict[str, Any]:
        """Return the configuration with enumerations replaced by their values."""
        return {key: _plain(value) for key, value in asdict(self).items()}

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Return a copy with the non-None overrides applied.

        Raises:
            ConfigError -- For unknown fields or invalid values.
        """
        known = {config_field.name for config_field in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"Unknown configuration fields: {sorted(unknown)}.")
        changes = {key: value for key, value in overrides.items() if value is not None}
        try:
            configuration = replace(self, **changes)
            configuration.to_evolution_config()
            configuration.to_split_config()
        except ValidationError as exc:
            raise ConfigError(f"Invalid configuration override.\n{exc}") from exc
        return configuration

    @property
    def num_qubits(self) -> int:
        """Return the register size, resolving 0 to the task default."""
        return self.qubits if self.qubits > 0 else self.task.default_qubits

    def to_operator_config(self) -> OperatorConfig:
        """Return the operator view of the configuration."""
        return OperatorConfig(
            best_keep_rate=self.best_keep_rate,
            other_keep_rate=self.other_keep_rate,
            line_l1=self.line_l1,
            line_l2=self.line_l2,
            nary_parents=self.nary_parents,
            mutation_rates=dict(self.mutation_rates),
            crossover_rates=dict(self.crossover_rates),
            mutations_per_call=self.mutations_per_call,
            gate_vocabulary=list(self.gate_vocabulary),
        )

    def to_train_config(self) -> TrainConfig:
        """Return the training view of the configuration."""
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.lr,
            weight_decay=self.weight_decay,
            gradient_mode=self.gradient_mode,
            fd_step=self.fd_step,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
        )

    def to_split_config(self) -> SplitConfig:
        """Return the dataset split view of the configuration."""
        return SplitConfig(
            test_fraction=self.test_fraction,
            stratified=self.stratified,
            split_seed=self.split_seed,
        )

    def to_evolution_config(self) -> EvolutionConfig:
        """Return the engine view of the configuration."""
        return EvolutionConfig(
            population_size=self.population,
            max_genomes=self.max_genomes,
            workers=self.workers,
            seed=self.seed,
            retry_budget=self.retry_budget,
            operators=self.to_operator_config(),
            train=self.to_train_config(),
        )


def _plain(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {_plain(key): _plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(item) for item in value]
    return value
