"""Tests for the qevolve command line."""

from pathlib import Path
from typing import List

import numpy as np
import pytest

from qevolve.circuits.genome import CircuitGenome, load_genome, save_genome
from qevolve.evolution.config import (
    BEST_GENOME_FILE,
    CHECKPOINT_FILE,
    CONFIG_FILE,
    LOG_FILE,
    REPORT_FILE,
    SCHEMA_FILE,
    TEACHER_FILE,
)
from qevolve.evolution.configclasses import RunConfig
from qevolve.evolution.engine import load_run_report
from qevolve.evolution.evolve import EXIT_FAILURE, EXIT_INPUT_ERROR, EXIT_OK, main

QUICK = [
    "--max-genomes",
    "6",
    "--population",
    "3",
    "--workers",
    "1",
    "--epochs",
    "3",
    "--lr",
    "0.05",
    "--silent",
]


def _evolve_bell(out_dir: Path, *extra: str) -> int:
    return main(
        ["evolve", "--task", "bell_teacher", "--out", str(out_dir), *QUICK, *extra]
    )


def _write_iris(path: Path) -> Path:
    rng = np.random.default_rng(8)
    lines: List[str] = ["a,b,c,d,species"]
    for row in range(30):
        features = ",".join(f"{value:.2f}" for value in rng.uniform(0, 5, size=4))
        lines.append(f"{features},class_{row % 3}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def bell_file(tmp_path, bell_genome) -> Path:
    path = tmp_path / "bell.json"
    save_genome(bell_genome, path)
    return path


class TestEvolve:
    def test_teacher_run_artifacts(self, tmp_path, capsys) -> None:
        out_dir = tmp_path / "run"
        assert _evolve_bell(out_dir) == EXIT_OK
        for name in (
            CONFIG_FILE,
            LOG_FILE,
            CHECKPOINT_FILE,
            REPORT_FILE,
            SCHEMA_FILE,
            BEST_GENOME_FILE,
            TEACHER_FILE,
        ):
            assert (out_dir / name).is_file(), name

        table = capsys.readouterr().out
        assert "Fidelity" in table
        assert "Angular Distance" in table

        report = load_run_report(out_dir / REPORT_FILE)
        assert report.seed == 0
        assert load_genome(out_dir / BEST_GENOME_FILE) == report.best_genome

        resolved = RunConfig.load_toml(out_dir / CONFIG_FILE)
        assert resolved.max_genomes == 6
        assert resolved.num_qubits == 2

    def test_saved_best_genome_evaluates(self, tmp_path, capsys) -> None:
        out_dir = tmp_path / "run"
        assert _evolve_bell(out_dir) == EXIT_OK
        capsys.readouterr()
        assert (
            main(
                [
                    "eval",
                    str(out_dir / BEST_GENOME_FILE),
                    "--task",
                    "bell_teacher",
                    "--teacher",
                    str(out_dir / TEACHER_FILE),
                    "--silent",
                ]
            )
            == EXIT_OK
        )
        assert "Fidelity" in capsys.readouterr().out

    def test_several_seeds(self, tmp_path, capsys) -> None:
        assert _evolve_bell(tmp_path, "--seeds", "2", "--seed", "5") == EXIT_OK
        assert (tmp_path / "seed_5" / REPORT_FILE).is_file()
        assert (tmp_path / "seed_6" / REPORT_FILE).is_file()
        rows = capsys.readouterr().out.splitlines()
        assert rows[-1].startswith("Mean")
        assert rows[2].startswith("5")

    def test_dataset_run(self, tmp_path, capsys) -> None:
        csv_path = _write_iris(tmp_path / "iris.csv")
        code = main(
            [
                "evolve",
                "--task",
                "iris",
                "--dataset-path",
                str(csv_path),
                "--qubits",
                "2",
                "--out",
                str(tmp_path / "run"),
                *QUICK,
            ]
        )
        assert code == EXIT_OK
        assert "Test Acc." in capsys.readouterr().out
        assert not (tmp_path / "run" / TEACHER_FILE).exists()

    def test_resume_finished_run(self, tmp_path) -> None:
        assert _evolve_bell(tmp_path) == EXIT_OK
        assert _evolve_bell(tmp_path, "--resume") == EXIT_OK

    def test_resume_without_checkpoint(self, tmp_path, capsys) -> None:
        assert _evolve_bell(tmp_path, "--resume") == EXIT_FAILURE
        assert "run failed" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "extra",
        [
            ["--population", "0"],
            ["--max-genomes", "2"],
            ["--seeds", "0"],
            ["--config", "missing.toml"],
        ],
    )
    def test_input_errors(self, tmp_path, capsys, extra) -> None:
        assert _evolve_bell(tmp_path, *extra) == EXIT_INPUT_ERROR
        assert "qevolve: error" in capsys.readouterr().err

    def test_missing_dataset(self, tmp_path) -> None:
        code = main(
            [
                "evolve",
                "--task",
                "wine",
                "--dataset-path",
                str(tmp_path / "nowhere"),
                "--out",
                str(tmp_path / "run"),
                *QUICK,
            ]
        )
        assert code == EXIT_INPUT_ERROR


class TestEval:
    def test_bell_genome(self, bell_file, capsys) -> None:
        assert main(["eval", str(bell_file), "--task", "bell_teacher"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "Fidelity" in out
        assert "1.0000" in out

    def test_register_mismatch(self, tmp_path, capsys) -> None:
        path = tmp_path / "wide.json"
        save_genome(CircuitGenome.empty(3, [0], [2]), path)
        assert main(["eval", str(path), "--task", "bell_teacher"]) == EXIT_INPUT_ERROR

    def test_malformed_genome(self, tmp_path) -> None:
        path = tmp_path / "broken.json"
        path.write_text('{"num_qubits": 2', encoding="utf-8")
        assert main(["eval", str(path), "--task", "bell_teacher"]) == EXIT_INPUT_ERROR


class TestRender:
    def test_render(self, bell_file, capsys) -> None:
        assert main(["render", str(bell_file)]) == EXIT_OK
        assert capsys.readouterr().out.splitlines() == [
            "q0 i- --H--*--",
            "q1 -o -----X--",
        ]

    def test_missing_file(self, tmp_path) -> None:
        assert main(["render", str(tmp_path / "none.json")]) == EXIT_INPUT_ERROR


def test_subcommand_required() -> None:
    with pytest.raises(SystemExit):
        main([])
