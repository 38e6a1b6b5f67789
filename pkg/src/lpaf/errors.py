"""Exception and warning types shared across the pipeline."""

from __future__ import annotations


class LpafError(Exception):
    """Base class for all pipeline errors."""


class SchemaError(LpafError):
    """A JSONL record or config value violates its schema.

    `line` is the 1-based line number in the offending file when known.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif path is not None:
            where += " "
        super().__init__(where + message)


class ConfigError(LpafError):
    """Bad or incomplete configuration (unknown keys, missing assignments)."""


class AlignmentError(LpafError):
    """Entity spans or token lists do not line up as required."""


class MalformedBioError(LpafError):
    """A BIO tag sequence is ill-formed (strict decoding only)."""

    def __init__(self, message: str, token_index: int):
        self.token_index = token_index
        super().__init__(f"token {token_index}: {message}")


class IRSyntaxError(LpafError):
    """Declaration text does not match the IR grammar."""

    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"at offset {position}: {message}")


class VariableResolutionError(LpafError):
    """A variable surface form is absent from the order mapping."""


class NumberValueError(LpafError):
    """A PARAM/LIMIT element carries no parseable numeric value."""


class CardinalityError(LpafError):
    """Wrong number of objectives for canonicalization."""


class DegenerateRowError(LpafError):
    """A declaration lowers to an all-zero coefficient row."""


class DimensionError(LpafError):
    """Mismatched variable counts between canonical forms."""


class GoldDataError(LpafError):
    """Gold-side data failed validation; gold inputs must be clean."""


class PipelineWarning(UserWarning):
    """Non-fatal condition; the operation degraded to a no-op."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"[{code}] {message}")
