"""Exception types shared across the toolkit.

Validation failures (bad values, unmet preconditions) and input-format
failures (unparseable files) map to distinct CLI exit codes, so they are
kept as separate classes.
"""


class ChromaError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(ChromaError):
    """A value or precondition check failed (CLI exit code 1)."""


class InputFormatError(ChromaError):
    """An input file could not be parsed or violates its schema (CLI exit code 2)."""
