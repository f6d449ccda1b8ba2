"""Tests for the steady state population and the evolution master."""

from dataclasses import replace
from pathlib import Path

import pytest

from qevolve.circuits.config import GateKind, MutationKind, OperatorKind
from qevolve.circuits.exceptions import EngineError
from qevolve.circuits.genome import (
    CircuitGenome,
    InnovationCounter,
    is_valid,
    serialize,
)
from qevolve.circuits.operators import OperatorConfig
from qevolve.evolution.bench import TeacherTask, make_teacher
from qevolve.evolution.config import (
    BEST_GENOME_FILE,
    CHECKPOINT_FILE,
    LOG_FILE,
    REPORT_FILE,
    SCHEMA_FILE,
    TeacherFamily,
)
from qevolve.evolution.configclasses import EvolutionConfig, TrainConfig
from qevolve.evolution.engine import (
    EvolutionEngine,
    GenomeStatus,
    Population,
    ResultItem,
    RunReport,
    WorkItem,
    choose_operator,
    evaluate_work_item,
    generate_candidate,
    load_run_report,
    read_genome_log,
    run_evolution,
    save_run_report,
    try_insert,
)
from qevolve.evolution.trainer import task_loss
from qevolve.utils import make_rng

QUICK_TRAIN = TrainConfig(epochs=5, learning_rate=0.05)


@pytest.fixture(scope="module")
def bell_task() -> TeacherTask:
    return make_teacher(TeacherFamily.BELL, 2, make_rng(0))


def _config(**overrides) -> EvolutionConfig:
    settings = dict(
        population_size=4, max_genomes=12, workers=1, seed=3, train=QUICK_TRAIN
    )
    settings.update(overrides)
    return EvolutionConfig(**settings)


def _member(genome: CircuitGenome, genome_id: int, loss: float) -> CircuitGenome:
    return replace(genome, genome_id=genome_id).with_fitness(loss)


class TestPopulation:
    def test_capacity_must_be_positive(self) -> None:
        with pytest.raises(ValueError):
            Population(0)

    def test_fills_then_replaces_worst(self, bell_genome) -> None:
        population = Population(3)
        for genome_id, loss in enumerate([0.5, 0.2, 0.9]):
            assert population.try_insert(_member(bell_genome, genome_id, loss))
        assert population.is_full
        assert [g.genome_id for g in population.members] == [1, 0, 2]

        assert not population.try_insert(_member(bell_genome, 3, 0.9))
        assert not population.try_insert(_member(bell_genome, 4, 1.5))
        assert population.try_insert(_member(bell_genome, 5, 0.1))
        assert [g.fitness for g in population.members] == [0.1, 0.2, 0.5]
        assert population.best_ever.genome_id == 5
        assert population.inserted_count == 4
        assert population.rejected_count == 2

    def test_untrained_genome_rejected(self, bell_genome) -> None:
        population = Population(2)
        assert not population.try_insert(bell_genome)
        assert len(population) == 0
        assert population.rejected_count == 1

    def test_best_ever_survives_replacement(self, bell_genome) -> None:
        population = Population(1)
        population.try_insert(_member(bell_genome, 0, 0.4))
        population.try_insert(_member(bell_genome, 1, 0.3))
        assert population.best_ever.genome_id == 1
        assert [g.genome_id for g in population.members] == [1]

    def test_sample(self, rng, bell_genome) -> None:
        population = Population(5)
        for genome_id in range(5):
            population.try_insert(_member(bell_genome, genome_id, 0.1 * genome_id))
        for _ in range(50):
            chosen = population.sample(rng, 3)
            ids = [genome.genome_id for genome in chosen]
            assert len(set(ids)) == 3
            assert ids == sorted(ids)
        assert len(population.sample(rng, 9)) == 5


class TestOperatorChoice:
    def test_mutation_while_filling(self, rng) -> None:
        population = Population(3)
        for _ in range(100):
            assert (
                choose_operator(population, OperatorConfig(), rng)
                is OperatorKind.MUTATION
            )

    def test_frequencies_once_full(self, rng, bell_genome) -> None:
        population = Population(2)
        population.try_insert(_member(bell_genome, 0, 0.1))
        population.try_insert(_member(bell_genome, 1, 0.2))
        counts = {kind: 0 for kind in OperatorKind}
        trials = 10_000
        for _ in range(trials):
            counts[choose_operator(population, OperatorConfig(), rng)] += 1
        assert counts[OperatorKind.MUTATION] / trials == pytest.approx(0.7, abs=0.02)
        for kind in (OperatorKind.BINARY, OperatorKind.NARY, OperatorKind.EXPONENTIAL):
            assert counts[kind] / trials == pytest.approx(0.1, abs=0.02)

    def test_crossover_needs_two_members(self, rng, bell_genome) -> None:
        population = Population(1)
        population.try_insert(_member(bell_genome, 0, 0.1))
        config = OperatorConfig(crossover_rates={OperatorKind.BINARY: 1.0})
        assert choose_operator(population, config, rng) is OperatorKind.MUTATION


class TestCandidates:
    def test_initial_candidates_mutate_the_base(self, rng, bell_task) -> None:
        population = Population(4)
        counter, genome_ids = InnovationCounter(), InnovationCounter()
        previous = -1
        for _ in range(5):
            candidate = generate_candidate(
                population,
                bell_task.base_genome(),
                _config(),
                rng,
                counter,
                genome_ids,
            )
            assert candidate.genome.genome_id > previous
            assert candidate.genome.genome_id == genome_ids.snapshot() - 1
            assert candidate.genome.lineage.parents == [-1]
            assert is_valid(candidate.genome)
            previous = candidate.genome.genome_id

    def test_discarded_candidates_take_ids(self, bell_genome) -> None:
        config = _config(
            population_size=1,
            max_genomes=1,
            operators=OperatorConfig(
                mutation_rates={
                    MutationKind.DISABLE_GATE: 0.5,
                    MutationKind.ADD_GATE: 0.5,
                },
                crossover_rates={OperatorKind.MUTATION: 1.0},
                mutations_per_call=1,
            ),
        )
        cx_only = bell_genome.with_gates(bell_genome.gates[1:])
        saw_discard = False
        for seed in range(30):
            population = Population(1)
            population.try_insert(_member(cx_only, 0, 0.5))
            genome_ids = InnovationCounter(1)
            candidate = generate_candidate(
                population,
                cx_only,
                config,
                make_rng(seed),
                InnovationCounter(2),
                genome_ids,
            )
            ids = [genome.genome_id for genome in candidate.discarded]
            assert ids + [candidate.genome.genome_id] == list(
                range(1, genome_ids.snapshot())
            )
            assert not any(is_valid(genome) for genome in candidate.discarded)
            assert is_valid(candidate.genome)
            saw_discard = saw_discard or bool(candidate.discarded)
        assert saw_discard

    def test_retry_budget(self, rng, bell_task) -> None:
        config = _config(
            retry_budget=10,
            operators=OperatorConfig(gate_vocabulary=[GateKind.TOFFOLI]),
        )
        genome_ids = InnovationCounter()
        with pytest.raises(EngineError):
            generate_candidate(
                Population(4),
                bell_task.base_genome(),
                config,
                rng,
                InnovationCounter(),
                genome_ids,
            )
        assert genome_ids.snapshot() == 0


class TestWorkItems:
    def test_evaluates_genome(self, bell_task, bell_genome) -> None:
        item = WorkItem(
            genome_id=7, genome=serialize(bell_genome), task_id=bell_task.task_id
        )
        result = evaluate_work_item(item, bell_task, QUICK_TRAIN)
        assert not result.failed
        assert result.genome_id == 7
        assert result.report.fidelity == pytest.approx(1.0)
        assert len(result.loss_history) == 6

    def test_task_mismatch(self, bell_task, bell_genome) -> None:
        item = WorkItem(genome_id=1, genome=serialize(bell_genome), task_id="wine")
        result = evaluate_work_item(item, bell_task, QUICK_TRAIN)
        assert result.failed
        assert "wine" in result.error

    def test_failed_result_is_rejected(self) -> None:
        population = Population(2)
        assert not try_insert(population, ResultItem(genome_id=3, error="lost"))
        assert population.rejected_count == 1


class TestEvolutionRun:
    def test_seeded_runs_are_identical(self, bell_task, tmp_path) -> None:
        for name in ("first", "second"):
            run_evolution(bell_task, _config(), tmp_path / name)
        first = (tmp_path / "first" / LOG_FILE).read_bytes()
        assert first == (tmp_path / "second" / LOG_FILE).read_bytes()
        assert first

    def test_report(self, bell_task, tmp_path) -> None:
        report = run_evolution(bell_task, _config(), tmp_path)
        records = read_genome_log(tmp_path / LOG_FILE)

        assert sorted(r.genome_id for r in records) == list(range(len(records)))
        assert len(records) >= 12
        assert report.evaluated + report.discarded + report.failed == len(records)
        assert report.inserted + report.rejected == report.evaluated
        assert [g.genome_id for g in report.genomes] == [r.genome_id for r in records]

        best = report.best_genome
        assert best.genome_id == report.best_genome_number
        assert best.fitness == pytest.approx(report.best_report.loss)
        assert task_loss(best, bell_task) == pytest.approx(best.fitness)
        assert report.population_losses == sorted(report.population_losses)
        assert report.population_losses[0] == pytest.approx(best.fitness)
        assert len(report.population_losses) <= 4

        losses = [point.best_loss for point in report.trajectory]
        assert all(later <= earlier for earlier, later in zip(losses, losses[1:]))
        assert report.rng_algorithm == "PCG64"
        assert report.task == bell_task.task_id

    def test_population_starts_from_mutations(self, bell_task, tmp_path) -> None:
        run_evolution(bell_task, _config(), tmp_path)
        evaluated = 0
        for record in read_genome_log(tmp_path / LOG_FILE):
            if evaluated >= 4:
                break
            assert record.parents == [-1]
            assert "crossover" not in record.operator
            evaluated += record.status is GenomeStatus.EVALUATED

    def test_resume_matches_uninterrupted_run(self, bell_task, tmp_path) -> None:
        run_evolution(bell_task, _config(max_genomes=14), tmp_path / "whole")
        split = tmp_path / "split"
        run_evolution(bell_task, _config(max_genomes=8), split)
        report = run_evolution(bell_task, _config(max_genomes=14), split, resume=True)
        whole_log = (tmp_path / "whole" / LOG_FILE).read_bytes()
        assert (split / LOG_FILE).read_bytes() == whole_log
        assert report.evaluated + report.discarded + report.failed == len(
            read_genome_log(split / LOG_FILE)
        )

    def test_resume_errors(self, bell_task, tmp_path) -> None:
        with pytest.raises(EngineError):
            run_evolution(bell_task, _config(), tmp_path, resume=True)
        with pytest.raises(EngineError):
            EvolutionEngine(bell_task, _config()).run(resume=True)

        run_evolution(bell_task, _config(max_genomes=6), tmp_path)
        assert (tmp_path / CHECKPOINT_FILE).exists()
        with pytest.raises(EngineError):
            run_evolution(bell_task, _config(population_size=5), tmp_path, resume=True)
        other = make_teacher(TeacherFamily.MULTI_LAYER, 2, make_rng(1))
        with pytest.raises(EngineError):
            run_evolution(other, _config(), tmp_path, resume=True)

    def test_worker_pool(self, bell_task, tmp_path) -> None:
        report = run_evolution(bell_task, _config(workers=2, max_genomes=8), tmp_path)
        records = read_genome_log(tmp_path / LOG_FILE)
        assert sorted(r.genome_id for r in records) == list(range(len(records)))
        assert report.failed == 0
        assert report.evaluated >= 1

    def test_bad_log_line(self, tmp_path) -> None:
        log_path = tmp_path / LOG_FILE
        log_path.write_text('{"genome_id": 1}\n', encoding="utf-8")
        with pytest.raises(EngineError) as info:
            read_genome_log(log_path)
        assert "line 1" in str(info.value)
        log_path.write_text("\n{oops\n", encoding="utf-8")
        with pytest.raises(EngineError):
            read_genome_log(log_path)


class TestReportFiles:
    def test_round_trip(self, bell_task, tmp_path: Path) -> None:
        report = run_evolution(bell_task, _config(max_genomes=6))
        save_run_report(report, tmp_path)
        for name in (REPORT_FILE, SCHEMA_FILE, BEST_GENOME_FILE):
            assert (tmp_path / name).is_file()
        assert load_run_report(tmp_path / REPORT_FILE) == report

    def test_schema(self) -> None:
        required = set(RunReport.json_schema()["required"])
        assert {"best_genome", "trajectory", "genomes", "seed"} <= required
