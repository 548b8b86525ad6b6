"""Exception types raised across the toolkit."""


class ProcMineError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(ProcMineError, ValueError):
    """An operation was called with invalid parameters."""


class ParseError(ProcMineError, ValueError):
    """Input data could not be parsed.

    ``row`` is the 1-based data row for CSV input; ``line`` and ``column``
    locate malformed XML; ``trace``/``event`` are 0-based XES indices.
    """

    def __init__(self, message, *, row=None, line=None, column=None, trace=None, event=None):
        super().__init__(message)
        self.row = row
        self.line = line
        self.column = column
        self.trace = trace
        self.event = event


class ValidationError(ProcMineError, ValueError):
    """A declarative spec (pipeline, generator, stage) failed validation."""

    def __init__(self, message, violations=None, index=None):
        super().__init__(message)
        self.violations = list(violations or [])
        self.index = index


class GenerationError(ProcMineError, RuntimeError):
    """The synthetic generator could not finish a case."""

    def __init__(self, message, case_index=None):
        super().__init__(message)
        self.case_index = case_index
