"""Shared fixtures for the qevolve tests."""

import math
from typing import Callable, List, Optional, Sequence

import numpy as np
import pytest

from qevolve.circuits.config import GateKind
from qevolve.circuits.genome import CircuitGenome, GateSpec
from qevolve.utils import make_rng

GateFactory = Callable[..., GateSpec]
GenomeFactory = Callable[..., CircuitGenome]


def _gate(
    innovation: int,
    kind: GateKind,
    depth: float,
    qubits: Sequence[int],
    params: Sequence[float] = (),
    enabled: bool = True,
) -> GateSpec:
    return GateSpec(
        innovation=innovation,
        kind=kind,
        depth=depth,
        qubits=dict(zip(kind.roles, qubits)),
        params=dict(zip(kind.param_names, params)),
        enabled=enabled,
    )


def _random_genome(
    rng: np.random.Generator,
    num_qubits: int,
    num_gates: int,
    kinds: Optional[Sequence[GateKind]] = None,
    disabled_rate: float = 0.0,
) -> CircuitGenome:
    pool = [kind for kind in (kinds or list(GateKind)) if kind.arity <= num_qubits]
    gates = []
    for innovation in range(num_gates):
        kind = pool[int(rng.integers(len(pool)))]
        qubits = [int(qubit) for qubit in rng.permutation(num_qubits)[: kind.arity]]
        params = [float(rng.uniform(-math.pi, math.pi)) for _ in kind.param_names]
        enabled = bool(rng.uniform() >= disabled_rate)
        gates.append(
            _gate(innovation, kind, float(rng.uniform()), qubits, params, enabled)
        )

    def register() -> List[int]:
        size = int(rng.integers(1, num_qubits + 1))
        return sorted(int(q) for q in rng.choice(num_qubits, size=size, replace=False))

    return CircuitGenome(
        num_qubits=num_qubits,
        input_qubits=register(),
        output_qubits=register(),
        gates=gates,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    """Return a seeded random stream."""
    return make_rng(1234)


@pytest.fixture
def make_gate() -> GateFactory:
    """Return a GateSpec factory taking qubits and params in role/name order."""
    return _gate


@pytest.fixture
def random_genome() -> GenomeFactory:
    """Return a factory for random well formed genomes."""
    return _random_genome


@pytest.fixture
def bell_genome() -> CircuitGenome:
    """Return H on qubit 0 at depth 0.2 then CX(0 -> 1) at depth 0.6."""
    return CircuitGenome(
        num_qubits=2,
        input_qubits=[0],
        output_qubits=[1],
        gates=[
            _gate(0, GateKind.H, 0.2, [0]),
            _gate(1, GateKind.CX, 0.6, [0, 1]),
        ],
    )
