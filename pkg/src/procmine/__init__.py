"""Process-mining toolkit: event-log I/O, cleaning, directly-follows graphs,
handover networks, stage timing and cohort comparison, plus a seeded
synthetic log generator."""

from .errors import GenerationError, ParameterError, ParseError, ProcMineError, ValidationError
from .log import Case, Event, EventLog, LogSummary, case_duration, normalize, summarize

__version__ = "0.1.0"

__all__ = [
    "Case",
    "Event",
    "EventLog",
    "GenerationError",
    "LogSummary",
    "ParameterError",
    "ParseError",
    "ProcMineError",
    "ValidationError",
    "case_duration",
    "normalize",
    "summarize",
]
