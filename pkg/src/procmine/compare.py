"""Before/after cohort comparison of stage times and session counts."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .durations import MS_PER_HOUR, DurationStats, humanize
from .errors import ParameterError
from .log import EventLog
from .performance import StageSpec, stage_duration_stats

DEFAULT_SESSION_BUCKET_MS = MS_PER_HOUR


@dataclass(frozen=True)
class CohortReport:
    label_a: str
    label_b: str
    case_count_a: int
    case_count_b: int
    stage_stats_a: DurationStats | None
    stage_stats_b: DurationStats | None
    excluded_a: int
    excluded_b: int
    mean_delta: float | None = None
    median_delta: float | None = None
    mean_relative_change: float | None = None
    median_relative_change: float | None = None
    session_count_a: int | None = None
    session_count_b: int | None = None
    session_relative_change: float | None = None

    def to_dict(self) -> dict:
        def side(stats, excluded):
            return {"stats": None if stats is None else stats.to_dict(), "excluded": excluded}

        return {
            "label_a": self.label_a,
            "label_b": self.label_b,
            "case_counts": {"a": self.case_count_a, "b": self.case_count_b},
            "stage": {"a": side(self.stage_stats_a, self.excluded_a), "b": side(self.stage_stats_b, self.excluded_b)},
            "deltas": {
                "mean_ms": self.mean_delta,
                "median_ms": self.median_delta,
                "mean_rel": self.mean_relative_change,
                "median_rel": self.median_relative_change,
            },
            "sessions": {"a": self.session_count_a, "b": self.session_count_b, "rel_change": self.session_relative_change},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CohortReport":
        def stats(side):
            raw = d["stage"][side]["stats"]
            return None if raw is None else DurationStats.from_dict(raw)

        return cls(
            label_a=d["label_a"],
            label_b=d["label_b"],
            case_count_a=d["case_counts"]["a"],
            case_count_b=d["case_counts"]["b"],
            stage_stats_a=stats("a"),
            stage_stats_b=stats("b"),
            excluded_a=d["stage"]["a"]["excluded"],
            excluded_b=d["stage"]["b"]["excluded"],
            mean_delta=d["deltas"]["mean_ms"],
            median_delta=d["deltas"]["median_ms"],
            mean_relative_change=d["deltas"]["mean_rel"],
            median_relative_change=d["deltas"]["median_rel"],
            session_count_a=d["sessions"]["a"],
            session_count_b=d["sessions"]["b"],
            session_relative_change=d["sessions"]["rel_change"],
        )


def _relative(a, b):
    if a is None or b is None or a == 0:
        return None
    return (b - a) / a


def compare_stage(
    log_a: EventLog,
    log_b: EventLog,
    stage: StageSpec,
    label_a: str = "a",
    label_b: str = "b",
    session_activity: str | None = None,
    session_bucket_ms: int = DEFAULT_SESSION_BUCKET_MS,
) -> CohortReport:
    """Stage statistics for both cohorts and the change from a to b.

    A negative delta means cohort b is faster.
    """
    stats_a, excl_a = stage_duration_stats(log_a, stage)
    stats_b, excl_b = stage_duration_stats(log_b, stage)
    mean_delta = median_delta = None
    if stats_a is not None and stats_b is not None:
        mean_delta = stats_b.mean - stats_a.mean
        median_delta = stats_b.median - stats_a.median
    sessions_a = sessions_b = None
    if session_activity is not None:
        sessions_a = count_sessions(log_a, session_activity, session_bucket_ms)
        sessions_b = count_sessions(log_b, session_activity, session_bucket_ms)
    return CohortReport(
        label_a=label_a,
        label_b=label_b,
        case_count_a=len(log_a),
        case_count_b=len(log_b),
        stage_stats_a=stats_a,
        stage_stats_b=stats_b,
        excluded_a=excl_a,
        excluded_b=excl_b,
        mean_delta=mean_delta,
        median_delta=median_delta,
        mean_relative_change=_relative(stats_a and stats_a.mean, stats_b and stats_b.mean),
        median_relative_change=_relative(stats_a and stats_a.median, stats_b and stats_b.median),
        session_count_a=sessions_a,
        session_count_b=sessions_b,
        session_relative_change=_relative(sessions_a, sessions_b),
    )


def count_sessions(log: EventLog, session_activity: str, bucket_ms: int = DEFAULT_SESSION_BUCKET_MS) -> int:
    """Number of distinct UTC time buckets holding at least one ``session_activity`` event.

    Group sessions share a timestamp and collapse into one bucket; one-on-one
    sessions at distinct times count separately.
    """
    if bucket_ms <= 0:
        raise ParameterError(f"session bucket must be positive, got {bucket_ms}")
    return len({e.timestamp // bucket_ms for e in log.events() if e.activity == session_activity})


def relative_reduction(a: int, b: int) -> float:
    """Fraction by which ``b`` is below ``a``; 191 -> 76 gives about 0.602."""
    if a <= 0:
        raise ParameterError(f"baseline must be positive, got {a}")
    return (a - b) / a


def _pct(x):
    return "n/a" if x is None else f"{x * 100:+.1f}%"


def _dur(x):
    return "n/a" if x is None else humanize(x)


def render_report(r: CohortReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return (json.dumps(r.to_dict(), indent=2) + "\n").encode("utf-8")
    if fmt != "text":
        raise ParameterError(f"unknown report format {fmt!r}")

    def stats_line(label, stats, excluded, cases):
        if stats is None:
            return f"{label}: cases={cases} included=0 excluded={excluded} mean=n/a median=n/a"
        return (
            f"{label}: cases={cases} included={stats.count} excluded={excluded} "
            f"mean={humanize(stats.mean)} median={humanize(stats.median)}"
        )

    def count(x):
        return "n/a" if x is None else str(x)

    lines = [
        f"Cohort comparison: {r.label_a} -> {r.label_b}",
        stats_line(r.label_a, r.stage_stats_a, r.excluded_a, r.case_count_a),
        stats_line(r.label_b, r.stage_stats_b, r.excluded_b, r.case_count_b),
        f"mean delta: {_dur(r.mean_delta)} ({_pct(r.mean_relative_change)})",
        f"median delta: {_dur(r.median_delta)} ({_pct(r.median_relative_change)})",
        f"sessions: {count(r.session_count_a)} -> {count(r.session_count_b)} ({_pct(r.session_relative_change)})",
    ]
    return ("\n".join(lines) + "\n").encode("utf-8")
