"""Case and stage durations, and repeated-activity (loop) counts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

from .durations import DurationStats, duration_stats
from .errors import ParameterError, ValidationError
from .log import Case, EventLog, case_duration

FIRST_ENTRY_FIRST_EXIT = "first_entry_first_exit"


def case_duration_stats(log: EventLog) -> DurationStats:
    if not len(log):
        raise ParameterError("cannot compute case durations of an empty log")
    return duration_stats(case_duration(c) for c in log)


@dataclass(frozen=True)
class StageSpec:
    """A case segment from the first entry activity to the first exit at or after it."""

    entry_activities: frozenset[str]
    exit_activities: frozenset[str]
    policy: str = FIRST_ENTRY_FIRST_EXIT

    def __post_init__(self):
        object.__setattr__(self, "entry_activities", frozenset(self.entry_activities))
        object.__setattr__(self, "exit_activities", frozenset(self.exit_activities))
        problems = []
        if not self.entry_activities:
            problems.append("entry activity set is empty")
        if not self.exit_activities:
            problems.append("exit activity set is empty")
        if self.policy != FIRST_ENTRY_FIRST_EXIT:
            problems.append(f"unsupported stage policy {self.policy!r}")
        if problems:
            raise ValidationError("invalid stage: " + "; ".join(problems), problems)

    @classmethod
    def from_dict(cls, data) -> "StageSpec":
        if not isinstance(data, dict):
            raise ValidationError('stage spec must be an object with "entry" and "exit" lists')
        unknown = set(data) - {"entry", "exit", "policy"}
        if unknown:
            raise ValidationError(f"unknown stage keys: {sorted(unknown)}")
        for key in ("entry", "exit"):
            if not isinstance(data.get(key), list) or not all(isinstance(a, str) for a in data[key]):
                raise ValidationError(f'stage "{key}" must be a list of activity names')
        return cls(frozenset(data["entry"]), frozenset(data["exit"]), data.get("policy", FIRST_ENTRY_FIRST_EXIT))

    @classmethod
    def load(cls, path) -> "StageSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"entry": sorted(self.entry_activities), "exit": sorted(self.exit_activities), "policy": self.policy}


def stage_duration(case: Case, stage: StageSpec) -> int | None:
    """Stage time for one case, or ``None`` when a boundary is missing.

    The exit search starts at the entry event itself, so an activity that is
    both entry and exit closes the stage with a zero duration.
    """
    events = case.events
    for i, e in enumerate(events):
        if e.activity in stage.entry_activities:
            for later in events[i:]:
                if later.activity in stage.exit_activities:
                    return later.timestamp - e.timestamp
            return None
    return None


def stage_duration_stats(log: EventLog, stage: StageSpec) -> tuple[DurationStats | None, int]:
    """Stats over cases that pass through the stage, and the count of those that don't."""
    durations = []
    excluded = 0
    for case in log:
        d = stage_duration(case, stage)
        if d is None:
            excluded += 1
        else:
            durations.append(d)
    return duration_stats(durations), excluded


@dataclass(frozen=True)
class LoopRow:
    activity: str
    cases_with_repeats: int
    total_repeat_instances: int


def loop_report(log: EventLog) -> list[LoopRow]:
    """Activities performed more than once in a case, most repeats first."""
    cases_with: dict[str, int] = {}
    repeats: dict[str, int] = {}
    for case in log:
        counts: dict[str, int] = {}
        for a in case.activities:
            counts[a] = counts.get(a, 0) + 1
        for a, n in counts.items():
            if n > 1:
                cases_with[a] = cases_with.get(a, 0) + 1
                repeats[a] = repeats.get(a, 0) + n - 1
    rows = [LoopRow(a, cases_with[a], repeats[a]) for a in repeats]
    rows.sort(key=lambda r: (-r.total_repeat_instances, r.activity))
    return rows


def loop_rows_to_dicts(rows: Iterable[LoopRow]) -> list[dict]:
    return [
        {"activity": r.activity, "cases_with_repeats": r.cases_with_repeats, "total_repeat_instances": r.total_repeat_instances}
        for r in rows
    ]
