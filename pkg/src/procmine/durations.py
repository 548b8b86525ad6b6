"""Duration statistics and human-readable duration labels.

Durations are integer milliseconds throughout the package. Only the
presentation helpers here turn them into strings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

MS_PER_SECOND = 1_000
MS_PER_MINUTE = 60 * MS_PER_SECOND
MS_PER_HOUR = 60 * MS_PER_MINUTE
MS_PER_DAY = 24 * MS_PER_HOUR

# (unit, size in ms, smallest magnitude shown in this unit)
_UNITS = (
    ("d", MS_PER_DAY, 2 * MS_PER_DAY),
    ("h", MS_PER_HOUR, MS_PER_HOUR),
    ("min", MS_PER_MINUTE, MS_PER_MINUTE),
    ("s", MS_PER_SECOND, MS_PER_SECOND),
)


@dataclass(frozen=True)
class DurationStats:
    """Summary of a non-empty sample of durations (milliseconds)."""

    count: int
    mean: float
    median: float
    min: int
    max: int

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean_ms": self.mean,
            "median_ms": self.median,
            "min_ms": self.min,
            "max_ms": self.max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DurationStats":
        return cls(
            count=int(data["count"]),
            mean=float(data["mean_ms"]),
            median=float(data["median_ms"]),
            min=int(data["min_ms"]),
            max=int(data["max_ms"]),
        )


def median(values: list[int] | list[float]) -> float:
    """Median of a non-empty sample; even counts average the two middle values."""
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2


def duration_stats(durations: Iterable[int]) -> DurationStats | None:
    """Return stats over ``durations`` or ``None`` for an empty sample."""
    values = sorted(durations)
    if not values:
        return None
    return DurationStats(
        count=len(values),
        mean=sum(values) / len(values),
        median=median(values),
        min=values[0],
        max=values[-1],
    )


def humanize(ms: float) -> str:
    """Format a duration with one decimal in ms, s, min, h or d.

    The largest unit whose value reaches 1 is used, except that days are
    only used from 2 days upward, so 45.9 hours stays in hours.
    """
    sign = "-" if ms < 0 else ""
    magnitude = abs(ms)
    for unit, size, floor in _UNITS:
        if magnitude >= floor:
            return f"{sign}{magnitude / size:.1f} {unit}"
    return f"{sign}{magnitude:.1f} ms"
