#!/usr/bin/env python
"""Provide the steady state population and the master/worker evolution loop.

The master owns the population, the innovation and genome id counters and the random
stream. Workers train and evaluate genomes they receive as WorkItem JSON and answer
with ResultItem JSON; nothing else crosses the process boundary. With workers = 1
genomes are evaluated in the master process and a run is fully determined by its
seed. With more workers, results are integrated in arrival order.

Output directory layout (when an output directory is given):
    genomes.log -- one JSON line per genome id: evaluated, discarded or failed.
    checkpoint.json -- master state after every dispatch and integration.
"""

# cSpell:ignore simplejson, nary

import logging
import math
import time
from concurrent.futures import FIRST_COMPLETED, Future, ProcessPoolExecutor, wait
from concurrent.futures.process import BrokenProcessPool
from dataclasses import field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Set, Tuple

import numpy as np
import simplejson
from pydantic import TypeAdapter, ValidationError
from pydantic.dataclasses import dataclass

from qevolve.circuits.config import OperatorKind
from qevolve.circuits.exceptions import EngineError, QEvolveError
from qevolve.circuits.genome import (
    CircuitGenome,
    InnovationCounter,
    deserialize,
    is_valid,
    save_genome,
    serialize,
)
from qevolve.circuits.operators import (
    OperatorConfig,
    binary_crossover,
    exponential_crossover,
    mutate,
    nary_crossover,
)
from qevolve.evolution.bench import TaskSpec
from qevolve.evolution.config import (
    BEST_GENOME_FILE,
    CHECKPOINT_FILE,
    LOG_FILE,
    REPORT_FILE,
    SCHEMA_FILE,
)
from qevolve.evolution.configclasses import EvolutionConfig, TrainConfig
from qevolve.evolution.trainer import FitnessReport, evaluate, train
from qevolve.utils import (
    RNG_ALGORITHM,
    make_rng,
    restore_rng,
    rng_state,
    weighted_choice,
)


def _loss(genome: CircuitGenome) -> float:
    return math.inf if genome.fitness is None else genome.fitness


def _rank(genome: CircuitGenome) -> Tuple[float, int]:
    return (_loss(genome), genome.genome_id)


class Population:
    """Steady state population, kept sorted by loss (lowest first).

    Insertion is replace-worst: below capacity every trained genome is inserted, at
    capacity a genome must have strictly lower loss than the worst member.

    Public attributes:
        capacity {int} -- Maximum number of members.
        members {List[CircuitGenome]} -- Trained genomes sorted by (loss, genome id).
        best_ever {Optional[CircuitGenome]} -- Lowest loss genome inserted so far.
        inserted_count {int} -- Genomes accepted.
        rejected_count {int} -- Genomes turned away.
    """

    def __init__(self, capacity: int) -> None:
        """Create an empty population."""
        if capacity < 1:
            raise ValueError(f"Population capacity must be positive, got {capacity}.")
        self.capacity = capacity
        self.members: List[CircuitGenome] = []
        self.best_ever: Optional[CircuitGenome] = None
        self.inserted_count = 0
        self.rejected_count = 0

    def __len__(self) -> int:
        """Return the number of members."""
        return len(self.members)

    @property
    def is_full(self) -> bool:
        """Return True once the population has reached capacity."""
        return len(self.members) >= self.capacity

    def try_insert(self, genome: CircuitGenome) -> bool:
        """Insert a trained genome under the replace-worst rule.

        Genomes without a finite fitness are rejected.

        Returns:
            bool -- True if the genome was inserted.
        """
        loss = _loss(genome)
        if not math.isfinite(loss):
            self.rejected_count += 1
            return False

        if self.is_full:
            if loss >= _loss(self.members[-1]):
                self.rejected_count += 1
                return False
            self.members.pop()

        self.members.append(genome)
        self.members.sort(key=_rank)
        self.inserted_count += 1
        if self.best_ever is None or loss < _loss(self.best_ever):
            self.best_ever = genome
        self._audit()
        return True

    def _audit(self) -> None:
        if len(self.members) > self.capacity:
            raise EngineError(
                f"Population holds {len(self.members)} genomes, capacity "
                f"{self.capacity}."
            )
        losses = [_loss(genome) for genome in self.members]
        if any(left > right for left, right in zip(losses, losses[1:])):
            raise EngineError(f"Population out of order: {losses}")

    def sample(self, rng: np.random.Generator, count: int) -> List[CircuitGenome]:
        """Return up to count distinct members chosen uniformly, fittest first."""
        count = min(count, len(self.members))
        chosen = rng.choice(len(self.members), size=count, replace=False)
        return sorted((self.members[int(index)] for index in chosen), key=_rank)


class Candidate(NamedTuple):
    """A valid genome ready for evaluation and the invalid genomes built before it."""

    genome: CircuitGenome
    discarded: List[CircuitGenome]


def choose_operator(
    population: Population, operators: OperatorConfig, rng: np.random.Generator
) -> OperatorKind:
    """Return the operator for the next candidate.

    Until the population is full only mutation is used. Afterwards the operator is
    drawn from the crossover rates; crossovers fall back to mutation while fewer
    than two members exist.
    """
    if not population.is_full:
        return OperatorKind.MUTATION
    kind = weighted_choice(rng, operators.ordered_crossover_rates())
    if kind is not OperatorKind.MUTATION and len(population) < 2:
        return OperatorKind.MUTATION
    return kind


def _offspring(
    population: Population,
    base: CircuitGenome,
    operators: OperatorConfig,
    rng: np.random.Generator,
    counter: InnovationCounter,
) -> Optional[CircuitGenome]:
    kind = choose_operator(population, operators, rng)
    if kind is OperatorKind.MUTATION:
        parent = population.sample(rng, 1)[0] if population.is_full else base
        return mutate(parent, operators, rng, counter)
    if kind is OperatorKind.BINARY:
        best, other = population.sample(rng, 2)
        return binary_crossover(best, other, operators, rng)
    if kind is OperatorKind.NARY:
        parents = population.sample(rng, operators.nary_parents)
        return nary_crossover(parents[0], parents[1:], operators, rng)
    first, second = population.sample(rng, 2)
    return exponential_crossover(first, second, rng)


def generate_candidate(
    population: Population,
    base: CircuitGenome,
    config: EvolutionConfig,
    rng: np.random.Generator,
    counter: InnovationCounter,
    genome_ids: InnovationCounter,
) -> Candidate:
    """Build the next valid candidate genome.

    Arguments:
        population {Population} -- Current population (parents are drawn from it).
        base {CircuitGenome} -- Empty genome mutated while the population fills.
        config {EvolutionConfig} -- Operator settings and retry budget.
        rng {np.random.Generator} -- Master random stream.
        counter {InnovationCounter} -- Innovation numbers for new gates.
        genome_ids {InnovationCounter} -- Genome ids. Every constructed genome takes
            one, valid or not.

    Raises:
        EngineError -- If retry_budget consecutive attempts produce no valid genome.
    """
    discarded: List[CircuitGenome] = []
    for _ in range(config.retry_budget):
        child = _offspring(population, base, config.operators, rng, counter)
        if child is None:
            continue
        child = child.with_identity(genome_ids.issue(), child.lineage)
        if is_valid(child):
            return Candidate(child, discarded)
        logging.warning(  # pylint: disable=logging-fstring-interpolation
            f"Discarded genome {child.genome_id} ({child.lineage.operator}): no path "
            f"from inputs to outputs."
        )
        discarded.append(child)

    raise EngineError(
        f"No valid candidate in {config.retry_budget} attempts. Check the operator "
        f"rates and gate vocabulary."
    )


@dataclass(frozen=True)
class WorkItem:
    """A genome sent to a worker for training."""

    genome_id: int
    genome: str
    task_id: str


@dataclass(frozen=True)
class ResultItem:
    """A worker's answer to a WorkItem. error is set (and report None) on failure."""

    genome_id: int
    genome: str = ""
    report: Optional[FitnessReport] = None
    loss_history: List[float] = field(default_factory=list)
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        """Return True if the genome could not be trained."""
        return self.error is not None or self.report is None


def evaluate_work_item(
    item: WorkItem, task: TaskSpec, train_config: TrainConfig
) -> ResultItem:
    """Train and evaluate the genome in a work item."""
    start = time.perf_counter()
    try:
        if item.task_id != task.task_id:
            raise EngineError(
                f"Work item for task '{item.task_id}' sent to a '{task.task_id}' "
                f"worker."
            )
        result = train(deserialize(item.genome), task, train_config)
        report = evaluate(result.genome, task)
    except QEvolveError as exc:
        return ResultItem(
            genome_id=item.genome_id,
            wall_time=time.perf_counter() - start,
            error=str(exc),
        )
    return ResultItem(
        genome_id=item.genome_id,
        genome=serialize(result.genome),
        report=report,
        loss_history=result.loss_history,
        wall_time=time.perf_counter() - start,
    )


def try_insert(population: Population, result: ResultItem) -> bool:
    """Insert the trained genome of a result, rejecting failed results."""
    if result.failed:
        population.rejected_count += 1
        return False
    return population.try_insert(deserialize(result.genome))


_WORK_ADAPTER = TypeAdapter(WorkItem)
_RESULT_ADAPTER = TypeAdapter(ResultItem)

# Set in each worker process by _init_worker.
_WORKER_TASK: Optional[TaskSpec] = None
_WORKER_TRAIN: Optional[TrainConfig] = None


def _init_worker(task: TaskSpec, train_config: TrainConfig) -> None:
    global _WORKER_TASK, _WORKER_TRAIN  # pylint: disable=global-statement
    _WORKER_TASK = task
    _WORKER_TRAIN = train_config


def _run_work_item(message: str) -> str:
    if _WORKER_TASK is None or _WORKER_TRAIN is None:
        raise EngineError("Worker process was not initialised.")
    item = _WORK_ADAPTER.validate_json(message)
    result = evaluate_work_item(item, _WORKER_TASK, _WORKER_TRAIN)
    return _RESULT_ADAPTER.dump_json(result).decode("utf-8")


class Outcome(NamedTuple):
    """A completed dispatch: the result, or the exception that lost it."""

    item: WorkItem
    result: Optional[ResultItem]
    error: Optional[BaseException]


class _InlineDispatcher:
    """Evaluate work items in the master process, in submission order."""

    def __init__(self, task: TaskSpec, train_config: TrainConfig) -> None:
        self._task = task
        self._train = train_config
        self._done: List[Outcome] = []

    @property
    def in_flight(self) -> int:
        return len(self._done)

    def submit(self, item: WorkItem) -> None:
        self._done.append(
            Outcome(item, evaluate_work_item(item, self._task, self._train), None)
        )

    def collect(self) -> List[Outcome]:
        done, self._done = self._done, []
        return done

    def close(self) -> None:
        self._done = []


class _PoolDispatcher:
    """Evaluate work items in a process pool, returning them as they complete."""

    def __init__(self, task: TaskSpec, train_config: TrainConfig, workers: int) -> None:
        self._task = task
        self._train = train_config
        self._workers = workers
        self._executor = self._start()
        self._pending: Dict[Future, WorkItem] = {}

    def _start(self) -> ProcessPoolExecutor:
        return ProcessPoolExecutor(
            max_workers=self._workers,
            initializer=_init_worker,
            initargs=(self._task, self._train),
        )

    @property
    def in_flight(self) -> int:
        return len(self._pending)

    def submit(self, item: WorkItem) -> None:
        message = _WORK_ADAPTER.dump_json(item).decode("utf-8")
        try:
            future = self._executor.submit(_run_work_item, message)
        except BrokenProcessPool:
            logging.warning("Worker pool broke down, starting a new one.")
            self._executor.shutdown(wait=False, cancel_futures=True)
            self._executor = self._start()
            future = self._executor.submit(_run_work_item, message)
        self._pending[future] = item

    def collect(self) -> List[Outcome]:
        done, _ = wait(list(self._pending), return_when=FIRST_COMPLETED)
        outcomes = []
        for future in sorted(done, key=lambda f: self._pending[f].genome_id):
            item = self._pending.pop(future)
            try:
                result = _RESULT_ADAPTER.validate_json(future.result())
            except Exception as exc:  # pylint: disable=broad-except
                outcomes.append(Outcome(item, None, exc))
            else:
                outcomes.append(Outcome(item, result, None))
        return outcomes

    def close(self) -> None:
        self._executor.shutdown(wait=True, cancel_futures=True)
        self._pending = {}


class GenomeStatus(Enum):
    """Fate of a genome id."""

    EVALUATED = "evaluated"
    DISCARDED = "discarded"
    FAILED = "failed"


@dataclass(frozen=True)
class GenomeRecord:
    """One line of genomes.log.

    Wall clock times are left out so that seeded single worker runs write identical
    logs.
    """

    genome_id: int
    status: GenomeStatus
    operator: str
    parents: List[int]
    genome: CircuitGenome
    loss: Optional[float] = None
    inserted: bool = False
    report: Optional[FitnessReport] = None
    loss_history: List[float] = field(default_factory=list)
    error: Optional[str] = None


@dataclass(frozen=True)
class GenomeSummary:
    """Per genome entry of the run report."""

    genome_id: int
    status: GenomeStatus
    operator: str
    parents: List[int]
    loss: Optional[float] = None


@dataclass(frozen=True)
class TrajectoryPoint:
    """Best loss seen after integrating a genome."""

    genome_id: int
    best_loss: float


@dataclass(frozen=True)
class RunReport:
    """Summary of an evolution run, written as report.json.

    Public attributes:
        task {str} -- Task id.
        seed {int} -- Master seed.
        rng_algorithm {str} -- Bit generator of the master stream.
        best_genome {CircuitGenome} -- Lowest loss genome, with trained parameters.
        best_report {FitnessReport} -- Its evaluation.
        best_genome_number {int} -- Its genome id.
        trajectory {List[TrajectoryPoint]} -- Best loss after each integration.
        genomes {List[GenomeSummary]} -- Every genome id, in log order.
        population_losses {List[float]} -- Final population, best first.
        evaluated, discarded, failed {int} -- Genome id counts per status.
        inserted, rejected {int} -- Population insertion outcomes.
        wall_time {float} -- Seconds spent in the run (summed over resumes).
    """

    task: str
    seed: int
    rng_algorithm: str
    best_genome: CircuitGenome
    best_report: FitnessReport
    best_genome_number: int
    trajectory: List[TrajectoryPoint]
    genomes: List[GenomeSummary]
    population_losses: List[float]
    evaluated: int
    discarded: int
    failed: int
    inserted: int
    rejected: int
    wall_time: float

    def to_dict(self) -> Dict[str, Any]:
        """Return the JSON form of the report."""
        return _REPORT_ADAPTER.dump_python(self, mode="json")

    @staticmethod
    def json_schema() -> Dict[str, Any]:
        """Return the JSON schema report.json conforms to."""
        return _REPORT_ADAPTER.json_schema()


@dataclass(frozen=True)
class Checkpoint:
    """Master state written to checkpoint.json."""

    task_id: str
    seed: int
    next_genome_id: int
    next_innovation: int
    rng_state: Dict[str, Any]
    capacity: int
    members: List[CircuitGenome]
    best_ever: Optional[CircuitGenome]
    best_report: Optional[FitnessReport]
    inserted: int
    rejected: int
    evaluated: int
    discarded: int
    failed: int
    trajectory: List[TrajectoryPoint]
    genomes: List[GenomeSummary]
    in_flight: List[WorkItem]
    elapsed: float


_RECORD_ADAPTER = TypeAdapter(GenomeRecord)
_REPORT_ADAPTER = TypeAdapter(RunReport)
_CHECKPOINT_ADAPTER = TypeAdapter(Checkpoint)


def read_genome_log(log_path: Path) -> List[GenomeRecord]:
    """Return the records of a genomes.log file.

    Raises:
        EngineError -- Naming the line that does not parse.
    """
    records = []
    with log_path.open("rt", encoding="utf-8") as file_handle:
        for line_number, line in enumerate(file_handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(_RECORD_ADAPTER.validate_python(simplejson.loads(line)))
            except (simplejson.JSONDecodeError, ValidationError) as exc:
                raise EngineError(
                    f"{log_path} line {line_number} does not parse.\n{exc}"
                ) from exc
    return records


class EvolutionEngine:
    """The evolution master.

    Generates candidates, dispatches them to workers, and integrates results as they
    arrive until max_genomes genome ids have been assigned and all work has drained.
    """

    def __init__(
        self, task: TaskSpec, config: EvolutionConfig, out_dir: Optional[Path] = None
    ) -> None:
        """Create an engine.

        Arguments:
            task {TaskSpec} -- Task every genome is trained on.
            config {EvolutionConfig} -- Run settings.

        Keyword Arguments:
            out_dir {Optional[Path]} -- Directory for genomes.log and checkpoint.json.
                Nothing is written if None. (default: {None})
        """
        self._task = task
        self._config = config
        self._out_dir = out_dir
        self._base = task.base_genome()
        self._rng = make_rng(config.seed)
        self._innovations = InnovationCounter()
        self._genome_ids = InnovationCounter()
        self.population = Population(config.population_size)
        self._best_report: Optional[FitnessReport] = None
        self._evaluated = 0
        self._discarded = 0
        self._failed = 0
        self._trajectory: List[TrajectoryPoint] = []
        self._genomes: List[GenomeSummary] = []
        self._in_flight: Dict[int, WorkItem] = {}
        self._retried: Set[int] = set()
        self._elapsed = 0.0
        self._started = time.perf_counter()

    def _path(self, file_name: str) -> Optional[Path]:
        return None if self._out_dir is None else self._out_dir / file_name

    def _elapsed_now(self) -> float:
        return self._elapsed + time.perf_counter() - self._started

    def run(self, resume: bool = False) -> RunReport:
        """Run evolution to completion and return the report.

        Keyword Arguments:
            resume {bool} -- Continue from checkpoint.json in the output directory,
                re-dispatching the genomes that were in flight. (default: {False})

        Raises:
            EngineError -- Retry budget exhausted, unusable checkpoint, or no genome
                evaluated successfully.
        """
        if resume:
            self._restore()
        else:
            log_path = self._path(LOG_FILE)
            if log_path is not None:
                log_path.parent.mkdir(parents=True, exist_ok=True)
                log_path.write_text("", encoding="utf-8")

        self._started = time.perf_counter()
        dispatcher = (
            _InlineDispatcher(self._task, self._config.train)
            if self._config.workers == 1
            else _PoolDispatcher(self._task, self._config.train, self._config.workers)
        )
        try:
            for item in sorted(self._in_flight.values(), key=lambda w: w.genome_id):
                dispatcher.submit(item)
            self._loop(dispatcher)
        except KeyboardInterrupt:
            self._save_checkpoint()
            logging.warning(  # pylint: disable=logging-fstring-interpolation
                f"Run interrupted after {self._genome_ids.snapshot()} genome ids. "
                f"Checkpoint saved."
            )
            raise
        finally:
            dispatcher.close()

        self._elapsed = self._elapsed_now()
        self._started = time.perf_counter()
        self._save_checkpoint()
        return self.report()

    def _loop(self, dispatcher: Any) -> None:
        workers = self._config.workers
        while True:
            while (
                dispatcher.in_flight < workers
                and self._genome_ids.snapshot() < self._config.max_genomes
            ):
                self._dispatch(dispatcher)
            if dispatcher.in_flight == 0:
                break
            for outcome in dispatcher.collect():
                result = outcome.result
                if result is None:
                    result = self._retry_or_fail(dispatcher, outcome)
                    if result is None:
                        continue
                self._integrate(outcome.item, result)

    def _dispatch(self, dispatcher: Any) -> None:
        candidate = generate_candidate(
            self.population,
            self._base,
            self._config,
            self._rng,
            self._innovations,
            self._genome_ids,
        )
        for genome in candidate.discarded:
            self._discarded += 1
            self._record(
                GenomeRecord(
                    genome_id=genome.genome_id,
                    status=GenomeStatus.DISCARDED,
                    operator=genome.lineage.operator,
                    parents=list(genome.lineage.parents),
                    genome=genome,
                )
            )

        item = WorkItem(
            genome_id=candidate.genome.genome_id,
            genome=serialize(candidate.genome),
            task_id=self._task.task_id,
        )
        self._in_flight[item.genome_id] = item
        self._save_checkpoint()
        dispatcher.submit(item)

    def _retry_or_fail(
        self, dispatcher: Any, outcome: Outcome
    ) -> Optional[ResultItem]:
        genome_id = outcome.item.genome_id
        if genome_id not in self._retried:
            self._retried.add(genome_id)
            logging.warning(  # pylint: disable=logging-fstring-interpolation
                f"Worker lost genome {genome_id} ({outcome.error!r}), dispatching it "
                f"again."
            )
            dispatcher.submit(outcome.item)
            return None
        return ResultItem(
            genome_id=genome_id, error=f"worker failure: {outcome.error!r}"
        )

    def _integrate(self, item: WorkItem, result: ResultItem) -> None:
        self._in_flight.pop(item.genome_id, None)
        if result.failed:
            self._failed += 1
            genome = deserialize(item.genome)
            logging.warning(  # pylint: disable=logging-fstring-interpolation
                f"Genome {item.genome_id} failed: {result.error}"
            )
            record = GenomeRecord(
                genome_id=item.genome_id,
                status=GenomeStatus.FAILED,
                operator=genome.lineage.operator,
                parents=list(genome.lineage.parents),
                genome=genome,
                error=result.error,
            )
        else:
            self._evaluated += 1
            genome = deserialize(result.genome)
            previous_best = self.population.best_ever
            inserted = self.population.try_insert(genome)
            if self.population.best_ever is not previous_best:
                self._best_report = result.report
                logging.info(  # pylint: disable=logging-fstring-interpolation
                    f"New best genome {genome.genome_id}: loss {_loss(genome):.6f}, "
                    f"{genome.num_enabled_gates} gates ({genome.lineage.operator})."
                )
            elif inserted:
                logging.info(  # pylint: disable=logging-fstring-interpolation
                    f"Inserted genome {genome.genome_id}: loss {_loss(genome):.6f}."
                )
            record = GenomeRecord(
                genome_id=item.genome_id,
                status=GenomeStatus.EVALUATED,
                operator=genome.lineage.operator,
                parents=list(genome.lineage.parents),
                genome=genome,
                loss=genome.fitness,
                inserted=inserted,
                report=result.report,
                loss_history=list(result.loss_history),
            )

        best = self.population.best_ever
        if best is not None:
            self._trajectory.append(TrajectoryPoint(item.genome_id, _loss(best)))
        self._record(record)
        self._save_checkpoint()

    def _record(self, record: GenomeRecord) -> None:
        self._genomes.append(
            GenomeSummary(
                genome_id=record.genome_id,
                status=record.status,
                operator=record.operator,
                parents=list(record.parents),
                loss=record.loss,
            )
        )
        log_path = self._path(LOG_FILE)
        if log_path is not None:
            line = simplejson.dumps(_RECORD_ADAPTER.dump_python(record, mode="json"))
            with log_path.open("at", encoding="utf-8") as file_handle:
                file_handle.write(line + "\n")

    def checkpoint(self) -> Checkpoint:
        """Return the current master state."""
        return Checkpoint(
            task_id=self._task.task_id,
            seed=self._config.seed,
            next_genome_id=self._genome_ids.snapshot(),
            next_innovation=self._innovations.snapshot(),
            rng_state=rng_state(self._rng),
            capacity=self.population.capacity,
            members=list(self.population.members),
            best_ever=self.population.best_ever,
            best_report=self._best_report,
            inserted=self.population.inserted_count,
            rejected=self.population.rejected_count,
            evaluated=self._evaluated,
            discarded=self._discarded,
            failed=self._failed,
            trajectory=list(self._trajectory),
            genomes=list(self._genomes),
            in_flight=sorted(self._in_flight.values(), key=lambda w: w.genome_id),
            elapsed=self._elapsed_now(),
        )

    def _save_checkpoint(self) -> None:
        path = self._path(CHECKPOINT_FILE)
        if path is None:
            return
        text = simplejson.dumps(
            _CHECKPOINT_ADAPTER.dump_python(self.checkpoint(), mode="json")
        )
        scratch = path.with_suffix(".tmp")
        scratch.write_text(text, encoding="utf-8")
        scratch.replace(path)

    def _restore(self) -> None:
        path = self._path(CHECKPOINT_FILE)
        if path is None or not path.exists():
            raise EngineError(f"No checkpoint to resume from: {path}")
        try:
            state = _CHECKPOINT_ADAPTER.validate_python(
                simplejson.loads(path.read_text(encoding="utf-8"))
            )
        except (simplejson.JSONDecodeError, ValidationError) as exc:
            raise EngineError(f"Cannot read checkpoint {path}.\n{exc}") from exc
        if state.task_id != self._task.task_id:
            raise EngineError(
                f"Checkpoint {path} belongs to task '{state.task_id}', not "
                f"'{self._task.task_id}'."
            )
        if state.capacity != self.population.capacity:
            raise EngineError(
                f"Checkpoint population size {state.capacity} does not match the "
                f"configured {self.population.capacity}."
            )

        self._genome_ids = InnovationCounter(state.next_genome_id)
        self._innovations = InnovationCounter(state.next_innovation)
        self._rng = restore_rng(state.rng_state)
        self.population.members = sorted(state.members, key=_rank)
        self.population.best_ever = state.best_ever
        self.population.inserted_count = state.inserted
        self.population.rejected_count = state.rejected
        self._best_report = state.best_report
        self._evaluated = state.evaluated
        self._discarded = state.discarded
        self._failed = state.failed
        self._trajectory = list(state.trajectory)
        self._genomes = list(state.genomes)
        self._in_flight = {item.genome_id: item for item in state.in_flight}
        self._elapsed = state.elapsed
        logging.info(  # pylint: disable=logging-fstring-interpolation
            f"Resuming {state.task_id} at genome id {state.next_genome_id} with "
            f"{len(self._in_flight)} genomes in flight."
        )

    def report(self) -> RunReport:
        """Return the run report.

        Raises:
            EngineError -- If no genome has been evaluated successfully.
        """
        best = self.population.best_ever
        if best is None or self._best_report is None:
            raise EngineError("No genome was evaluated successfully.")
        return RunReport(
            task=self._task.task_id,
            seed=self._config.seed,
            rng_algorithm=RNG_ALGORITHM,
            best_genome=best,
            best_report=self._best_report,
            best_genome_number=best.genome_id,
            trajectory=list(self._trajectory),
            genomes=list(self._genomes),
            population_losses=[_loss(genome) for genome in self.population.members],
            evaluated=self._evaluated,
            discarded=self._discarded,
            failed=self._failed,
            inserted=self.population.inserted_count,
            rejected=self.population.rejected_count,
            wall_time=self._elapsed_now(),
        )


def run_evolution(
    task: TaskSpec,
    config: EvolutionConfig,
    out_dir: Optional[Path] = None,
    resume: bool = False,
) -> RunReport:
    """Run an evolution and return its report (see EvolutionEngine.run)."""
    return EvolutionEngine(task, config, out_dir).run(resume)


def save_run_report(report: RunReport, out_dir: Path) -> None:
    """Write report.json, report.schema.json and best_genome.json under out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / REPORT_FILE).open("wt", encoding="utf-8") as file_handle:
        simplejson.dump(report.to_dict(), file_handle, indent=2)
    with (out_dir / SCHEMA_FILE).open("wt", encoding="utf-8") as file_handle:
        simplejson.dump(RunReport.json_schema(), file_handle, indent=2)
    save_genome(report.best_genome, out_dir / BEST_GENOME_FILE)


def load_run_report(report_path: Path) -> RunReport:
    """Read a report.json file."""
    with report_path.open("rt", encoding="utf-8") as file_handle:
        return _REPORT_ADAPTER.validate_python(simplejson.load(file_handle))

