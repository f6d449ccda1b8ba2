#!/usr/bin/env python
"""Provide utilities for qevolve."""

from typing import Any, Dict, List, Mapping, Optional, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

RNG_ALGORITHM = "PCG64"


def make_rng(seed: Optional[int]) -> np.random.Generator:
    """Return a seeded random stream using the RNG_ALGORITHM bit generator."""
    return np.random.Generator(np.random.PCG64(seed))


def rng_state(rng: np.random.Generator) -> Dict[str, Any]:
    """Return the bit generator state of rng (JSON compatible)."""
    return rng.bit_generator.state


def restore_rng(state: Dict[str, Any]) -> np.random.Generator:
    """Return a generator positioned at a state returned by rng_state."""
    bit_generator = np.random.PCG64()
    bit_generator.state = state
    return np.random.Generator(bit_generator)


def ceil_log2(value: int) -> int:
    """Return the smallest r with 2**r >= value, and at least 1.

    Raises:
        ValueError -- If value < 1.
    """
    if value < 1:
        raise ValueError(f"ceil_log2 needs a positive integer, got {value}.")
    return max(1, (value - 1).bit_length())


def weighted_choice(rng: np.random.Generator, rates: Mapping[T, float]) -> T:
    """Return a key of rates drawn with probability proportional to its value.

    Keys are drawn in their iteration order, so the mapping order must be
    deterministic for results to be reproducible.
    """
    keys = list(rates.keys())
    weights = np.array([rates[key] for key in keys], dtype=float)
    if not keys or weights.sum() <= 0.0:
        raise ValueError("weighted_choice needs at least one positive rate.")
    index = rng.choice(len(keys), p=weights / weights.sum())
    return keys[int(index)]


def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Return rows as a plain text table with left aligned columns.

    Floats are shown with 4 decimals.
    """

    def cell(value: Any) -> str:
        if isinstance(value, float):
            return f"{value:.4f}"
        return str(value)

    text_rows: List[List[str]] = [list(header)] + [
        [cell(value) for value in row] for row in rows
    ]
    widths = [
        max(len(row[col]) for row in text_rows) for col in range(len(header))
    ]
    lines = [
        "  ".join(value.ljust(width) for value, width in zip(row, widths)).rstrip()
        for row in text_rows
    ]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)
