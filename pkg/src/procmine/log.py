"""In-memory event log model.

Timestamps are stored as integer milliseconds since the Unix epoch, UTC.
An event records only when an activity *started*; durations between events
therefore mix service and waiting time.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

from .durations import median
from .errors import ParameterError

NO_RESOURCE = "(none)"

T = TypeVar("T")
R = TypeVar("R")

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2})(?::(\d{2})(?:[.,](\d{1,9}))?)?"
    r"\s*(Z|z|[+-]\d{2}(?::?\d{2})?)?$"
)


def parse_iso(text: str, *, assume_utc: bool = False) -> int:
    """Parse an ISO-8601 instant into epoch milliseconds (UTC).

    An explicit offset is required unless ``assume_utc`` is set. Sub-millisecond
    digits are truncated.
    """
    m = _ISO_RE.match(text.strip())
    if not m:
        raise ValueError(f"not an ISO-8601 timestamp: {text!r}")
    year, month, day, hour, minute = (int(g) for g in m.group(1, 2, 3, 4, 5))
    second = int(m.group(6) or 0)
    frac = (m.group(7) or "").ljust(3, "0")[:3]
    offset = m.group(8)
    if offset is None:
        if not assume_utc:
            raise ValueError(f"timestamp has no timezone offset: {text!r}")
        tz = timezone.utc
    elif offset in ("Z", "z"):
        tz = timezone.utc
    else:
        digits = offset[1:].replace(":", "")
        hours, minutes = int(digits[:2]), int(digits[2:] or 0)
        delta = timedelta(hours=hours, minutes=minutes)
        tz = timezone(-delta if offset[0] == "-" else delta)
    dt = datetime(year, month, day, hour, minute, second, tzinfo=tz)
    return datetime_to_ms(dt) + int(frac)


def datetime_to_ms(dt: datetime) -> int:
    if dt.tzinfo is None:
        raise ValueError("naive datetime; an explicit timezone is required")
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def ms_to_datetime(ms: int) -> datetime:
    return _EPOCH + timedelta(milliseconds=ms)


def format_iso(ms: int, *, always_millis: bool = False) -> str:
    """Render epoch ms as ISO-8601 with a ``+00:00`` offset."""
    dt = ms_to_datetime(ms)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    millis = ms % 1000
    if millis or always_millis:
        base += f".{millis:03d}"
    return base + "+00:00"


@dataclass(frozen=True)
class Event:
    case_id: str
    activity: str
    timestamp: int
    resource: str | None = None
    attributes: Mapping[str, str] = field(default_factory=dict)
    seq: int = 0

    def __post_init__(self):
        if not self.activity:
            raise ParameterError(f"event in case {self.case_id!r} has an empty activity")

    @property
    def sort_key(self) -> tuple[int, int]:
        return (self.timestamp, self.seq)

    @property
    def resource_key(self) -> str:
        return NO_RESOURCE if self.resource is None else self.resource


@dataclass(frozen=True)
class Case:
    case_id: str
    events: tuple[Event, ...]

    def __len__(self):
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    @property
    def activities(self) -> list[str]:
        return [e.activity for e in self.events]


@dataclass(frozen=True)
class EventLog:
    """Cases keyed by case id, in first-appearance order."""

    cases: Mapping[str, Case] = field(default_factory=dict)
    source_meta: Mapping[str, str] = field(default_factory=dict)

    def __len__(self):
        return len(self.cases)

    def __iter__(self) -> Iterator[Case]:
        return iter(self.cases.values())

    @property
    def event_count(self) -> int:
        return sum(len(c) for c in self.cases.values())

    def events(self) -> Iterator[Event]:
        for case in self.cases.values():
            yield from case.events

    def with_meta(self, **extra: str) -> "EventLog":
        meta = dict(self.source_meta)
        meta.update(extra)
        return replace(self, source_meta=meta)

    @classmethod
    def from_events(cls, events: Iterable[Event], source_meta: Mapping[str, str] | None = None) -> "EventLog":
        """Group events into cases (first-appearance order) and normalize."""
        grouped: dict[str, list[Event]] = {}
        for event in events:
            grouped.setdefault(event.case_id, []).append(event)
        cases = {cid: Case(cid, tuple(evs)) for cid, evs in grouped.items()}
        return normalize(cls(cases, dict(source_meta or {})))


def canonical_tuples(log: EventLog) -> list[tuple[str, str, int, str | None]]:
    """(case_id, activity, timestamp, resource) in case-id then event order."""
    out = []
    for cid in sorted(log.cases):
        for e in log.cases[cid].events:
            out.append((e.case_id, e.activity, e.timestamp, e.resource))
    return out


def _normalize_case(case: Case) -> Case:
    ordered = sorted(case.events, key=lambda e: e.sort_key)
    events = tuple(
        e if e.seq == i and e.case_id == case.case_id else replace(e, seq=i, case_id=case.case_id)
        for i, e in enumerate(ordered)
    )
    return Case(case.case_id, events)


def normalize(log: EventLog) -> EventLog:
    """Sort every case by (timestamp, seq) and renumber seq densely; drop empty cases."""
    cases = {cid: _normalize_case(c) for cid, c in log.cases.items() if c.events}
    return EventLog(cases, dict(log.source_meta))


def rebuild(log: EventLog, cases: Iterable[Case], **meta: str) -> EventLog:
    """New normalized log from ``cases``, keeping ``log``'s provenance."""
    merged = dict(log.source_meta)
    merged.update(meta)
    return normalize(EventLog({c.case_id: c for c in cases}, merged))


def case_duration(case: Case) -> int:
    """Elapsed calendar time from first to last event, in ms."""
    if not case.events:
        raise ParameterError(f"case {case.case_id!r} has no events")
    stamps = [e.timestamp for e in case.events]
    return max(stamps) - min(stamps)


@dataclass(frozen=True)
class LogSummary:
    case_count: int
    event_count: int
    event_class_counts: Mapping[str, int]
    resource_counts: Mapping[str, int]
    first_timestamp: int | None
    last_timestamp: int | None
    mean_case_duration: float | None
    median_case_duration: float | None

    def to_dict(self) -> dict:
        return {
            "case_count": self.case_count,
            "event_count": self.event_count,
            "event_class_counts": dict(sorted(self.event_class_counts.items())),
            "resource_counts": dict(sorted(self.resource_counts.items())),
            "first_timestamp": None if self.first_timestamp is None else format_iso(self.first_timestamp),
            "last_timestamp": None if self.last_timestamp is None else format_iso(self.last_timestamp),
            "mean_case_duration_ms": self.mean_case_duration,
            "median_case_duration_ms": self.median_case_duration,
        }


def summarize(log: EventLog) -> LogSummary:
    classes: dict[str, int] = {}
    resources: dict[str, int] = {}
    first = last = None
    durations = []
    for case in log.cases.values():
        for e in case.events:
            classes[e.activity] = classes.get(e.activity, 0) + 1
            resources[e.resource_key] = resources.get(e.resource_key, 0) + 1
            first = e.timestamp if first is None else min(first, e.timestamp)
            last = e.timestamp if last is None else max(last, e.timestamp)
        durations.append(case_duration(case))
    return LogSummary(
        case_count=len(log.cases),
        event_count=sum(classes.values()),
        event_class_counts=classes,
        resource_counts=resources,
        first_timestamp=first,
        last_timestamp=last,
        mean_case_duration=sum(durations) / len(durations) if durations else None,
        median_case_duration=median(durations) if durations else None,
    )


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: int = 1) -> list[R]:
    """``[func(x) for x in items]``, optionally on a thread pool; order is preserved."""
    if threads <= 1 or len(items) < 2:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
