#!/usr/bin/env python

"""Provide the qevolve command line application.

Subcommands:
    evolve -- Run an evolutionary search on a dataset or teacher task.
    eval -- Train-free evaluation of a saved genome against a task.
    render -- Print a text wire diagram of a saved genome.

For options, run:
    'qevolve -h' or 'python -m qevolve.evolution.evolve <subcommand> -h'

Exit codes are 0 for success, 1 for runtime failures and 2 for configuration or input
errors.
"""

# cSpell:ignore nargs

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from qevolve import __version__
from qevolve.circuits.exceptions import (
    ConfigError,
    DatasetError,
    EngineError,
    GenomeError,
    GenomeParseError,
    TrainingError,
)
from qevolve.circuits.genome import CircuitGenome, deserialize, load_genome, serialize
from qevolve.circuits.render import render_genome
from qevolve.evolution.bench import (
    DatasetTask,
    TaskSpec,
    load_dataset,
    load_teacher,
    make_teacher,
    save_teacher,
)
from qevolve.evolution.config import (
    CONFIG_FILE,
    DATASETS,
    TEACHER_FILE,
    LossKind,
    TaskName,
)
from qevolve.evolution.configclasses import RunConfig
from qevolve.evolution.engine import RunReport, run_evolution, save_run_report
from qevolve.evolution.trainer import FitnessReport, evaluate
from qevolve.utils import format_table, make_rng

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT_ERROR = 2

DATASET_HEADER = ("Seed", "Test Acc.", "# Gates", "Genome #", "Loss")
TEACHER_HEADER = ("Seed", "Fidelity", "Angular Distance", "# Gates", "Genome #")


class EvolutionCli:
    """Run evolution, evaluation and rendering for one resolved configuration.

    The public members of this class are:

        Constructor -- Takes the resolved run configuration.

        build_task -- Loads the dataset or builds the teacher named by the config.

        evolve -- Runs one or more seeded evolutions and prints a summary table.

        evaluate_genome -- Evaluates a saved genome and prints its fitness report.
    """

    def __init__(self, config: RunConfig) -> None:
        """Create the application for a resolved configuration."""
        self.config = config

    def build_task(self, seed: Optional[int] = None) -> TaskSpec:
        """Return the task named by the configuration.

        Keyword Arguments:
            seed {Optional[int]} -- Seed for teacher construction (default: the
                configured seed).

        Raises:
            DatasetError -- For missing or malformed dataset files.
            ConfigError -- For registers too small for the task.
        """
        config = self.config
        dataset = config.task.dataset
        if dataset is not None:
            if config.loss not in (LossKind.FIDELITY, LossKind.CROSS_ENTROPY):
                logging.warning(  # pylint: disable=logging-fstring-interpolation
                    f"Loss '{config.loss.value}' ignored: dataset tasks train on "
                    f"cross entropy."
                )
            csv_path = Path(config.dataset_path)
            if not csv_path.is_file():
                csv_path = csv_path / DATASETS[dataset].file_name
            return load_dataset(
                dataset, csv_path, config.to_split_config(), config.num_qubits
            )

        family = config.task.family
        if family is None:
            raise ConfigError(f"Task '{config.task.value}' has no construction rule.")
        rng = make_rng(config.seed if seed is None else seed)
        return make_teacher(family, config.num_qubits, rng, config.loss)

    def _run_dir(self, seed: int, seeds: int) -> Path:
        out_dir = Path(self.config.out)
        return out_dir if seeds == 1 else out_dir / f"seed_{seed}"

    def evolve(self, seeds: int = 1, resume: bool = False) -> List[RunReport]:
        """Run evolution for seeds consecutive seeds starting at the configured one.

        Each run writes config.resolved, genomes.log, checkpoint.json, report.json,
        report.schema.json and best_genome.json (and teacher.json for teacher tasks)
        to the output directory, or to seed_<n> sub-directories when seeds > 1.
        """
        reports = []
        for seed in range(self.config.seed, self.config.seed + seeds):
            run_config = self.config.with_overrides(seed=seed)
            run_dir = self._run_dir(seed, seeds)
            run_dir.mkdir(parents=True, exist_ok=True)
            run_config.save_toml(run_dir / CONFIG_FILE)

            task = EvolutionCli(run_config).build_task()
            if not isinstance(task, DatasetTask):
                save_teacher(task, run_dir / TEACHER_FILE)

            logging.info(  # pylint: disable=logging-fstring-interpolation
                f"Evolving {task.task_id} with seed {seed} on {task.num_qubits} qubits "
                f"into {run_dir}."
            )
            report = run_evolution(
                task, run_config.to_evolution_config(), run_dir, resume
            )
            save_run_report(report, run_dir)
            reports.append(report)

        print(summary_table(reports))
        return reports

    def evaluate_genome(
        self, genome_file: Path, teacher_file: Optional[Path] = None
    ) -> FitnessReport:
        """Evaluate a saved genome against the configured task and print the report.

        Keyword Arguments:
            teacher_file {Optional[Path]} -- Saved teacher task, used instead of
                rebuilding the teacher from the configuration. (default: {None})

        Raises:
            GenomeParseError -- If the genome file does not parse or round trip.
            GenomeError -- If the genome does not fit the task register.
        """
        genome = load_genome(genome_file)
        if deserialize(serialize(genome)) != genome:
            raise GenomeParseError("genome does not round trip", str(genome_file))

        task = load_teacher(teacher_file) if teacher_file else self.build_task()
        report = evaluate(genome, task)
        print(report_table(genome, report))
        return report


def summary_table(reports: Sequence[RunReport]) -> str:
    """Return the per seed result table, with a mean row for several seeds.

    Dataset runs show test accuracy, enabled gate count, best genome number and loss;
    teacher runs show fidelity and angular distance instead.
    """
    dataset = reports[0].best_report.accuracy is not None
    rows: List[List[object]] = []
    for report in reports:
        best = report.best_report
        if dataset:
            rows.append(
                [
                    report.seed,
                    best.accuracy,
                    best.num_gates,
                    report.best_genome_number,
                    best.loss,
                ]
            )
        else:
            rows.append(
                [
                    report.seed,
                    best.fidelity,
                    best.angular,
                    best.num_gates,
                    report.best_genome_number,
                ]
            )

    if len(rows) > 1:
        columns = np.array([row[1:] for row in rows], dtype=float)
        rows.append(["Mean", *[float(value) for value in columns.mean(axis=0)]])
    return format_table(DATASET_HEADER if dataset else TEACHER_HEADER, rows)


def report_table(genome: CircuitGenome, report: FitnessReport) -> str:
    """Return a two column table of a fitness report."""
    rows: List[List[object]] = [["Genome #", genome.genome_id], ["Loss", report.loss]]
    for label, value in (
        ("Test Acc.", report.accuracy),
        ("Train Acc.", report.train_accuracy),
        ("Fidelity", report.fidelity),
        ("Angular Distance", report.angular),
    ):
        if value is not None:
            rows.append([label, value])
    rows.append(["# Gates", report.num_gates])
    return format_table(("Measure", "Value"), rows)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Return the TOML configuration (or defaults) with command line overrides.

    Raises:
        ConfigError -- For a missing configuration file or invalid values.
    """
    config_path = None
    if args.config is not None:
        config_path = Path(args.config)
        if not config_path.is_file():
            raise ConfigError(f"Configuration file not found: {config_path}")

    config = RunConfig.load_toml(config_path)
    return config.with_overrides(
        task=None if args.task is None else TaskName(args.task),
        dataset_path=args.dataset_path,
        qubits=args.qubits,
        seed=args.seed,
        loss=None if args.loss is None else LossKind(args.loss),
        max_genomes=getattr(args, "max_genomes", None),
        population=getattr(args, "population", None),
        workers=getattr(args, "workers", None),
        epochs=getattr(args, "epochs", None),
        lr=getattr(args, "lr", None),
        out=getattr(args, "out", None),
    )


def cmd_evolve(args: argparse.Namespace) -> int:
    """Run the evolve subcommand."""
    if args.seeds < 1:
        raise ConfigError(f"--seeds must be at least 1, got {args.seeds}.")
    EvolutionCli(resolve_config(args)).evolve(args.seeds, args.resume)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    """Run the eval subcommand."""
    teacher = None if args.teacher is None else Path(args.teacher)
    EvolutionCli(resolve_config(args)).evaluate_genome(Path(args.genome_file), teacher)
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    """Run the render subcommand."""
    print(render_genome(load_genome(Path(args.genome_file))))
    return EXIT_OK


def _task_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        help="TOML configuration file. Command line options override its values.",
        metavar="<toml_file>",
    )
    parser.add_argument(
        "--task",
        choices=[task.value for task in TaskName],
        help="Dataset or teacher task (default: iris).",
    )
    parser.add_argument(
        "--dataset-path",
        help="Dataset CSV file, or the directory holding the files written by "
        "qevolve-fetch (default: data).",
        metavar="<path>",
    )
    parser.add_argument(
        "--qubits",
        type=int,
        help="Register size. Defaults to 6/7/7/8 qubits for iris/seeds/wine/"
        "breast_cancer and a per family size for teacher tasks.",
    )
    parser.add_argument("--seed", type=int, help="Master random seed (default: 0).")
    parser.add_argument(
        "--loss",
        choices=[loss.value for loss in LossKind],
        help="Training loss for teacher tasks (default: fidelity). Dataset tasks "
        "always use cross entropy.",
    )


def _logging_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "-v", "--verbose", action="store_true", help="Log progress for every genome."
    )
    group.add_argument(
        "--silent", action="store_true", help="Suppress all logging output."
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the argument parser for the qevolve command."""
    parser = argparse.ArgumentParser(
        prog="qevolve",
        description="Evolve quantum circuit architectures and train their parameters "
        "on classification datasets or teacher circuits.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    evolve_parser = subparsers.add_parser(
        "evolve", help="Run an evolutionary search and write the run artifacts."
    )
    _task_options(evolve_parser)
    evolve_parser.add_argument(
        "--max-genomes", type=int, help="Genome ids to assign (default: 500)."
    )
    evolve_parser.add_argument(
        "--population", type=int, help="Population capacity (default: 50)."
    )
    evolve_parser.add_argument(
        "--workers",
        type=int,
        help="Worker processes (default: 11). 1 evaluates in process and makes runs "
        "reproducible.",
    )
    evolve_parser.add_argument(
        "--epochs", type=int, help="Adam epochs per genome (default: 200)."
    )
    evolve_parser.add_argument(
        "--lr", type=float, help="Adam learning rate (default: 0.001)."
    )
    evolve_parser.add_argument(
        "--out", help="Output directory (default: qevolve_out).", metavar="<dir>"
    )
    evolve_parser.add_argument(
        "--seeds",
        type=int,
        default=1,
        help="Run this many consecutive seeds, starting at --seed, into seed_<n> "
        "sub-directories and report the mean.",
    )
    evolve_parser.add_argument(
        "--resume",
        action="store_true",
        help="Continue the run from checkpoint.json in the output directory.",
    )
    _logging_options(evolve_parser)
    evolve_parser.set_defaults(handler=cmd_evolve)

    eval_parser = subparsers.add_parser(
        "eval", help="Evaluate a saved genome against a task."
    )
    eval_parser.add_argument("genome_file", help="Genome JSON file.")
    _task_options(eval_parser)
    eval_parser.add_argument(
        "--teacher",
        help="teacher.json from an evolve run, used instead of rebuilding the "
        "teacher from the seed.",
        metavar="<teacher_file>",
    )
    _logging_options(eval_parser)
    eval_parser.set_defaults(handler=cmd_eval)

    render_parser = subparsers.add_parser(
        "render", help="Print a text wire diagram of a saved genome."
    )
    render_parser.add_argument("genome_file", help="Genome JSON file.")
    _logging_options(render_parser)
    render_parser.set_defaults(handler=cmd_render)

    return parser


def configure_logging(verbose: bool, silent: bool) -> None:
    """Set up root logging for the command line."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    if silent:
        logging.disable(logging.CRITICAL)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Provide the command line entry point. Returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.silent)

    try:
        return args.handler(args)
    except (
        ConfigError,
        DatasetError,
        GenomeError,
        GenomeParseError,
        FileNotFoundError,
    ) as exc:
        print(f"qevolve: error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (EngineError, TrainingError) as exc:
        print(f"qevolve: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except KeyboardInterrupt:
        print("qevolve: interrupted, checkpoint saved.", file=sys.stderr)
        return EXIT_FAILURE
    finally:
        if args.silent:
            logging.disable(logging.NOTSET)


if __name__ == "__main__":
    sys.exit(main())
