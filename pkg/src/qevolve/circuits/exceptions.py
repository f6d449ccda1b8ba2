#! /usr/bin/env python
"""Exceptions for qevolve."""

from typing import Optional


class QEvolveError(Exception):
    """Super class for qevolve errors."""

    def __init__(self, message: Optional[str] = None) -> None:
        """Minimal constructor for QEvolveErrors.

        Keyword Arguments:
            message {str} -- Custom error text. If no message is supplied (default),
                the exception will supply a not very informative message.
                (default: {None})

        """
        if message is None:
            message = "An unspecified error has occurred in qevolve."
        super().__init__(message)


class ParameterArityError(QEvolveError):
    """Exception for a gate called with the wrong number of parameters."""


class QubitIndexError(QEvolveError):
    """Exception for duplicate or out of range qubit indices."""


class DimensionError(QEvolveError):
    """Exception for states or distributions of mismatched dimension."""


class GenomeError(QEvolveError):
    """Exception for violations of gate or genome invariants."""


class GenomeParseError(QEvolveError):
    """Exception for malformed genome text."""

    def __init__(self, message: str, position: str) -> None:
        """Constructor for genome parse errors.

        Arguments:
            message {str} -- Description of the problem.
            position {str} -- Where the problem was found, either a character
                location (line/column) or a field path such as 'gates[2].kind'.
        """
        self.position = position
        super().__init__(f"Genome parse error at {position}: {message}")


class ConfigError(QEvolveError):
    """Exception for invalid run configuration or task selection."""


class DatasetError(QEvolveError):
    """Exception for missing or malformed dataset files."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        """Constructor for dataset errors.

        Arguments:
            message {str} -- Description of the problem.

        Keyword Arguments:
            line {int} -- 1 based line number of the offending row, if known.
                (default: {None})
        """
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingError(QEvolveError):
    """Exception for training that produced a non-finite loss."""


class EngineError(QEvolveError):
    """Exception for evolution runs that cannot make progress."""
