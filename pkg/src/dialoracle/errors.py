"""Exception types shared across the package."""

from __future__ import annotations


class DialOracleError(Exception):
    """Base class for all package errors."""


class OntologyError(DialOracleError):
    """Invalid ontology document or lookup; carries a path to the offending field."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class CatalogError(DialOracleError):
    """Catalog construction or sampling failure."""


class GenerationError(DialOracleError):
    """Context/query generation failure."""


class SpokenNumberError(DialOracleError):
    """Word sequence outside the spoken-number grammar."""


class OracleError(DialOracleError):
    """A query is not answerable over the given context."""


class OutputParseError(DialOracleError):
    """String outside the canonical output grammar; carries the failing position."""

    def __init__(self, message: str, position: int = 0):
        self.position = position
        super().__init__(f"at char {position}: {message}")


class DatasetError(DialOracleError):
    """Dataset file unreadable, malformed or from an unknown schema version."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PredictionError(DialOracleError):
    """Prediction file does not pair one-to-one with the dataset ids."""
