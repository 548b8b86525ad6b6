"""Cleaning steps for event logs and a declarative pipeline to chain them.

Every step returns ``(log, StepReport)``. Output logs are normalized and
never contain empty cases; ``report.events_removed`` plus the output event
count always equals the input event count.
"""

from __future__ import annotations

import hashlib
import hmac
import json
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping

from .errors import ParameterError, ValidationError
from .log import Case, EventLog, parse_iso, rebuild

SEQUENTIAL = "sequential"
KEYED = "keyed"
CASE_INTERSECTS = "case_intersects"
CASE_CONTAINED = "case_contained"
TOKEN_HEX_LENGTH = 32


@dataclass
class StepReport:
    op_name: str
    events_removed: int = 0
    cases_removed: int = 0
    cases_modified: int = 0
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "op": self.op_name,
            "events_removed": self.events_removed,
            "cases_removed": self.cases_removed,
            "cases_modified": self.cases_modified,
            "details": self.details,
        }


def _filter_events(log: EventLog, op_name: str, keep: Callable) -> tuple[EventLog, StepReport]:
    """Apply a per-case event filter ``keep(case) -> list[Event]`` and count the damage."""
    report = StepReport(op_name)
    cases = []
    for case in log:
        kept = keep(case)
        removed = len(case) - len(kept)
        report.events_removed += removed
        if not kept:
            report.cases_removed += 1
            continue
        if removed:
            report.cases_modified += 1
        cases.append(Case(case.case_id, tuple(kept)))
    return rebuild(log, cases), report


def remove_rare_event_classes(log: EventLog, min_count: int) -> tuple[EventLog, StepReport]:
    """Drop every event whose activity occurs fewer than ``min_count`` times log-wide."""
    if not isinstance(min_count, int) or isinstance(min_count, bool) or min_count < 1:
        raise ParameterError(f"min_count must be a positive integer, got {min_count!r}")
    counts: dict[str, int] = {}
    for e in log.events():
        counts[e.activity] = counts.get(e.activity, 0) + 1
    rare = {a for a, n in counts.items() if n < min_count}
    out, report = _filter_events(log, "remove_rare_event_classes", lambda c: [e for e in c if e.activity not in rare])
    report.details = {"min_count": min_count, "removed_classes": {a: counts[a] for a in sorted(rare)}}
    return out, report


def dedup_within_threshold(log: EventLog, threshold_ms: int) -> tuple[EventLog, StepReport]:
    """Collapse repeated (activity, resource) events closer than ``threshold_ms``.

    The gap is measured from the last *kept* occurrence of the same pair, so a
    burst of clicks 1 minute apart collapses to one event under a 3 minute
    threshold while a repeat exactly at the threshold is kept.
    """
    if threshold_ms < 0:
        raise ParameterError(f"threshold must be non-negative, got {threshold_ms}")

    def keep(case):
        last_kept: dict[tuple, int] = {}
        kept = []
        for e in case:
            key = (e.activity, e.resource)
            anchor = last_kept.get(key)
            if anchor is not None and e.timestamp - anchor < threshold_ms:
                continue
            last_kept[key] = e.timestamp
            kept.append(e)
        return kept

    out, report = _filter_events(log, "dedup_within_threshold", keep)
    report.details = {"threshold_ms": threshold_ms}
    return out, report


def _keyed_token(key: bytes, case_id: str) -> str:
    return hmac.new(key, case_id.encode("utf-8"), hashlib.sha256).hexdigest()[:TOKEN_HEX_LENGTH]


def anonymize_case_ids(log: EventLog, mode: str = SEQUENTIAL, key: str | bytes | None = None) -> tuple[EventLog, StepReport]:
    """Replace case ids by ``case-000001``-style counters or HMAC-SHA256 tokens.

    Attribute values equal to an original case id are replaced as well.
    """
    if mode not in (SEQUENTIAL, KEYED):
        raise ParameterError(f"unknown anonymization mode {mode!r}")
    if mode == KEYED:
        if not key:
            raise ParameterError("keyed anonymization requires a key")
        secret = key.encode("utf-8") if isinstance(key, str) else key
        mapping = {cid: _keyed_token(secret, cid) for cid in log.cases}
    else:
        mapping = {cid: f"case-{i:06d}" for i, cid in enumerate(log.cases, start=1)}
    if len(set(mapping.values())) != len(mapping):
        raise ParameterError("anonymization produced colliding tokens")

    cases = []
    for cid, case in log.cases.items():
        new_id = mapping[cid]
        events = tuple(
            replace(e, case_id=new_id, attributes={k: mapping.get(v, v) for k, v in e.attributes.items()})
            for e in case
        )
        cases.append(Case(new_id, events))
    out = EventLog({c.case_id: c for c in cases}, dict(log.source_meta))
    report = StepReport("anonymize_case_ids", cases_modified=len(cases), details={"mode": mode})
    return out, report


def rename_activities(log: EventLog, mapping: Mapping[str, str]) -> tuple[EventLog, StepReport]:
    bad = sorted(k for k, v in mapping.items() if not v)
    if bad:
        raise ParameterError(f"empty rename target for {bad}")
    renamed: dict[str, int] = {}
    cases = []
    modified = 0
    for case in log:
        events = []
        for e in case:
            if e.activity in mapping:
                renamed[e.activity] = renamed.get(e.activity, 0) + 1
                e = replace(e, activity=mapping[e.activity])
            events.append(e)
        if any(a is not b for a, b in zip(events, case.events)):
            modified += 1
        cases.append(Case(case.case_id, tuple(events)))
    report = StepReport("rename_activities", cases_modified=modified, details={"renamed": dict(sorted(renamed.items()))})
    return rebuild(log, cases), report


def map_resources_to_roles(
    log: EventLog, mapping: Mapping[str, str], default_role: str | None = None
) -> tuple[EventLog, StepReport]:
    """Replace resources by role names; events without a resource are left alone."""
    unmapped: dict[str, int] = {}
    cases = []
    modified = 0
    for case in log:
        events = []
        for e in case:
            if e.resource is not None:
                if e.resource in mapping:
                    e = replace(e, resource=mapping[e.resource])
                elif default_role is not None:
                    e = replace(e, resource=default_role)
                else:
                    unmapped[e.resource] = unmapped.get(e.resource, 0) + 1
            events.append(e)
        if any(a is not b for a, b in zip(events, case.events)):
            modified += 1
        cases.append(Case(case.case_id, tuple(events)))
    report = StepReport(
        "map_resources_to_roles",
        cases_modified=modified,
        details={"unmapped": dict(sorted(unmapped.items())), "default_role": default_role},
    )
    return rebuild(log, cases), report


def filter_date_range(log: EventLog, start: int, end: int, mode: str = CASE_INTERSECTS) -> tuple[EventLog, StepReport]:
    """Keep cases by their events' position relative to the closed range [start, end] (epoch ms)."""
    if start > end:
        raise ParameterError("start must not be after end")
    if mode == CASE_CONTAINED:
        def keep(case):
            return start <= case.events[0].timestamp and case.events[-1].timestamp <= end
    elif mode == CASE_INTERSECTS:
        def keep(case):
            return any(start <= e.timestamp <= end for e in case)
    else:
        raise ParameterError(f"unknown date-range mode {mode!r}")
    return _filter_cases(log, "filter_date_range", keep, {"mode": mode})


def filter_cases_by_attribute(log: EventLog, key: str, allowed) -> tuple[EventLog, StepReport]:
    allowed = set(allowed)
    if not allowed:
        raise ParameterError("allowed value set must not be empty")
    keep = lambda case: any(e.attributes.get(key) in allowed for e in case)  # noqa: E731
    return _filter_cases(log, "filter_cases_by_attribute", keep, {"key": key, "allowed": sorted(allowed)})


def _filter_cases(log, op_name, keep, details) -> tuple[EventLog, StepReport]:
    kept = [c for c in log if keep(c)]
    dropped = len(log) - len(kept)
    report = StepReport(
        op_name,
        events_removed=log.event_count - sum(len(c) for c in kept),
        cases_removed=dropped,
        details=dict(details, kept_cases=len(kept)),
    )
    return rebuild(log, kept), report


# --- pipeline ---------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    op_name: str
    parameters: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class PipelineConfig:
    steps: tuple[Step, ...] = ()

    @classmethod
    def from_dict(cls, data: Mapping) -> "PipelineConfig":
        if not isinstance(data, Mapping) or not isinstance(data.get("steps"), list):
            raise ValidationError('pipeline config must be an object with a "steps" list')
        steps = []
        for i, raw in enumerate(data["steps"], start=1):
            if not isinstance(raw, Mapping) or "op" not in raw:
                raise ValidationError(f'step {i}: expected an object with an "op" key', index=i)
            steps.append(Step(raw["op"], dict(raw.get("params") or {})))
        return cls(tuple(steps))

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"steps": [{"op": s.op_name, "params": dict(s.parameters)} for s in self.steps]}


def _require(params, name, check, what):
    if name not in params:
        raise ParameterError(f"missing parameter {name!r}")
    if not check(params[name]):
        raise ParameterError(f"parameter {name!r} must be {what}, got {params[name]!r}")
    return params[name]


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_str_map(v):
    return isinstance(v, Mapping) and all(isinstance(k, str) and isinstance(x, str) for k, x in v.items())


def _instant(params, name):
    text = _require(params, name, lambda v: isinstance(v, str), "an ISO-8601 string")
    try:
        return parse_iso(text)
    except ValueError as exc:
        raise ParameterError(f"parameter {name!r}: {exc}") from None


def _bind_rare(p):
    n = _require(p, "min_count", lambda v: _is_int(v) and v >= 1, "a positive integer")
    return lambda log: remove_rare_event_classes(log, n)


def _bind_dedup(p):
    secs = _require(p, "threshold_seconds", lambda v: _is_number(v) and v >= 0, "a non-negative number")
    return lambda log: dedup_within_threshold(log, round(secs * 1000))


def _bind_anonymize(p):
    mode = p.get("mode", SEQUENTIAL)
    if mode not in (SEQUENTIAL, KEYED):
        raise ParameterError(f"parameter 'mode' must be sequential or keyed, got {mode!r}")
    key = p.get("key")
    if mode == KEYED and not (isinstance(key, str) and key):
        raise ParameterError("keyed mode requires a non-empty string 'key'")
    return lambda log: anonymize_case_ids(log, mode, key)


def _bind_rename(p):
    mapping = _require(p, "mapping", _is_str_map, "an object of strings")
    if any(not v for v in mapping.values()):
        raise ParameterError("rename targets must be non-empty")
    return lambda log: rename_activities(log, mapping)


def _bind_roles(p):
    mapping = _require(p, "mapping", _is_str_map, "an object of strings")
    default = p.get("default_role")
    if default is not None and not isinstance(default, str):
        raise ParameterError("parameter 'default_role' must be a string")
    return lambda log: map_resources_to_roles(log, mapping, default)


def _bind_dates(p):
    start, end = _instant(p, "start"), _instant(p, "end")
    if start > end:
        raise ParameterError("start must not be after end")
    mode = p.get("mode", CASE_INTERSECTS)
    if mode not in (CASE_INTERSECTS, CASE_CONTAINED):
        raise ParameterError(f"parameter 'mode' must be case_intersects or case_contained, got {mode!r}")
    return lambda log: filter_date_range(log, start, end, mode)


def _bind_attribute(p):
    key = _require(p, "key", lambda v: isinstance(v, str) and v, "a non-empty string")
    allowed = _require(
        p, "allowed", lambda v: isinstance(v, list) and v and all(isinstance(x, str) for x in v),
        "a non-empty list of strings",
    )
    return lambda log: filter_cases_by_attribute(log, key, allowed)


# op name -> (binder, accepted parameter names)
OPERATIONS: dict[str, tuple[Callable, frozenset]] = {
    "remove_rare_event_classes": (_bind_rare, frozenset({"min_count"})),
    "dedup_within_threshold": (_bind_dedup, frozenset({"threshold_seconds"})),
    "anonymize_case_ids": (_bind_anonymize, frozenset({"mode", "key"})),
    "rename_activities": (_bind_rename, frozenset({"mapping"})),
    "map_resources_to_roles": (_bind_roles, frozenset({"mapping", "default_role"})),
    "filter_date_range": (_bind_dates, frozenset({"start", "end", "mode"})),
    "filter_cases_by_attribute": (_bind_attribute, frozenset({"key", "allowed"})),
}


def validate(config: PipelineConfig) -> list[Callable]:
    """Check every step up front and return the bound step functions.

    Raises ``ValidationError`` whose ``index`` is the 1-based position of the
    first bad step.
    """
    bound = []
    for i, step in enumerate(config.steps, start=1):
        if step.op_name not in OPERATIONS:
            raise ValidationError(f"step {i}: unknown operation {step.op_name!r}", index=i)
        binder, accepted = OPERATIONS[step.op_name]
        unknown = set(step.parameters) - accepted
        if unknown:
            raise ValidationError(f"step {i} ({step.op_name}): unknown parameters {sorted(unknown)}", index=i)
        try:
            bound.append(binder(step.parameters))
        except ParameterError as exc:
            raise ValidationError(f"step {i} ({step.op_name}): {exc}", index=i) from None
    return bound


def run_pipeline(log: EventLog, config: PipelineConfig) -> tuple[EventLog, list[StepReport]]:
    bound = validate(config)
    reports = []
    for fn in bound:
        log, report = fn(log)
        reports.append(report)
    if config.steps:
        trail = json.loads(log.source_meta.get("pipeline", "[]"))
        for s in config.steps:
            params = {k: ("<redacted>" if k == "key" else v) for k, v in s.parameters.items()}
            trail.append({"op": s.op_name, "params": params})
        log = log.with_meta(pipeline=json.dumps(trail, sort_keys=True))
    return log, reports
