"""Tests for the run configuration and its TOML form."""

from pathlib import Path

import pytest

from qevolve.circuits.config import GateKind, MutationKind, OperatorKind
from qevolve.circuits.exceptions import ConfigError
from qevolve.evolution.config import GradientMode, LossKind, TaskName
from qevolve.evolution.configclasses import RunConfig


def _write(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadToml:
    def test_defaults(self, tmp_path) -> None:
        assert RunConfig.load_toml(None) == RunConfig()
        assert RunConfig.load_toml(tmp_path / "missing.toml") == RunConfig()

        config = RunConfig()
        assert config.population == 50
        assert config.max_genomes == 500
        assert config.workers == 11
        assert config.epochs == 200
        assert config.lr == 0.001
        assert config.weight_decay == 0.0001
        assert config.gradient_mode is GradientMode.FINITE_DIFFERENCE
        assert config.crossover_rates[OperatorKind.MUTATION] == 0.7
        assert config.gate_vocabulary == list(GateKind)

    def test_file_values_override_defaults(self, tmp_path) -> None:
        toml_path = _write(
            tmp_path / "run.toml",
            'task = "bell_teacher"\n'
            "population = 10\n"
            "max_genomes = 40\n"
            'loss = "kl_divergence"\n'
            'gate_vocabulary = ["h", "cx"]\n'
            "[crossover_rates]\n"
            "binary = 0.5\n"
            "mutation = 0.5\n",
        )
        config = RunConfig.load_toml(toml_path)
        assert config.task is TaskName.BELL_TEACHER
        assert config.population == 10
        assert config.loss is LossKind.KL_DIVERGENCE
        assert config.gate_vocabulary == [GateKind.H, GateKind.CX]
        assert config.crossover_rates == {
            OperatorKind.BINARY: 0.5,
            OperatorKind.MUTATION: 0.5,
        }
        assert config.mutation_rates[MutationKind.ADD_GATE] == 0.7
        assert config.epochs == 200

    @pytest.mark.parametrize(
        "text",
        [
            "populaton = 10\n",
            "population = 0\n",
            "population = 60\nmax_genomes = 50\n",
            'task = "mnist"\n',
            "[mutation_rates]\nadd_gate = 0.9\n",
            'gate_vocabulary = ["h", "warp"]\n',
            "gate_vocabulary = []\n",
            "test_fraction = 1.5\n",
            "population = [\n",
        ],
    )
    def test_invalid_files(self, tmp_path, text) -> None:
        with pytest.raises(ConfigError):
            RunConfig.load_toml(_write(tmp_path / "bad.toml", text))

    def test_save_round_trip(self, tmp_path) -> None:
        config = RunConfig().with_overrides(
            task=TaskName.WINE, seed=9, lr=0.01, gradient_mode=None
        )
        config.save_toml(tmp_path / "config.resolved")
        assert RunConfig.load_toml(tmp_path / "config.resolved") == config


class TestOverrides:
    def test_none_values_are_ignored(self) -> None:
        config = RunConfig().with_overrides(seed=None, epochs=7)
        assert config.seed == 0
        assert config.epochs == 7

    def test_unknown_field(self) -> None:
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(generations=3)

    def test_invalid_value(self) -> None:
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(population=1000)
        with pytest.raises(ConfigError):
            RunConfig().with_overrides(lr=-1.0)


class TestViews:
    @pytest.mark.parametrize(
        "task, qubits, expected",
        [
            (TaskName.IRIS, 0, 6),
            (TaskName.SEEDS, 0, 7),
            (TaskName.WINE, 0, 7),
            (TaskName.BREAST_CANCER, 0, 8),
            (TaskName.BELL_TEACHER, 0, 2),
            (TaskName.INPUT_CONTROLLED_TEACHER, 0, 4),
            (TaskName.IRIS, 9, 9),
        ],
    )
    def test_num_qubits(self, task, qubits, expected) -> None:
        config = RunConfig().with_overrides(task=task, qubits=qubits)
        assert config.num_qubits == expected

    def test_evolution_config(self) -> None:
        config = RunConfig().with_overrides(
            population=8, max_genomes=30, workers=1, seed=4, epochs=12, lr=0.02
        )
        evolution = config.to_evolution_config()
        assert evolution.population_size == 8
        assert evolution.max_genomes == 30
        assert evolution.workers == 1
        assert evolution.seed == 4
        assert evolution.retry_budget == 1000
        assert evolution.train.epochs == 12
        assert evolution.train.learning_rate == 0.02
        assert evolution.operators.nary_parents == 4
        assert evolution.operators.best_keep_rate == 0.75

    def test_split_config(self) -> None:
        split = RunConfig().with_overrides(stratified=False).to_split_config()
        assert split.test_fraction == 0.2
        assert not split.stratified
