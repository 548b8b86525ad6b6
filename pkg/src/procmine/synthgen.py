"""Seeded event-log generator driven by a weighted transition system.

Each case walks from the start activity, picking outgoing transitions with
probability ``weight / sum(weights)`` and advancing the clock by the
transition's sampled delay, until it reaches a terminal activity.

Randomness: every case gets its own ``random.Random`` (Mersenne Twister)
seeded with ``sha256(f"{seed}:{case_index}")``. Cases are therefore
independent of generation order and of the number of worker threads.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from .durations import MS_PER_SECOND
from .errors import GenerationError, ValidationError
from .log import Case, Event, EventLog, format_iso, parallel_map, parse_iso

CONSTANT, UNIFORM, EXPONENTIAL = "constant", "uniform", "exponential"
FIXED_INTERVAL = "fixed_interval"
DEMO_SPEC = "pss_demo.json"


@dataclass(frozen=True)
class DelayDistribution:
    """Delay in ms; ``a`` is the constant, the uniform low bound or the exponential mean."""

    kind: str
    a: float
    b: float | None = None

    def problems(self) -> list[str]:
        if self.kind not in (CONSTANT, UNIFORM, EXPONENTIAL):
            return [f"unknown delay kind {self.kind!r}"]
        out = []
        if not self.a > 0:
            out.append(f"{self.kind} delay parameter must be positive")
        if self.kind == UNIFORM and (self.b is None or not self.a <= self.b):
            out.append("uniform delay needs low <= high")
        return out

    def sample(self, rng: random.Random) -> int:
        if self.kind == CONSTANT:
            value = self.a
        elif self.kind == UNIFORM:
            value = rng.uniform(self.a, self.b)
        else:
            value = rng.expovariate(1.0 / self.a)
        return max(1, round(value))

    @property
    def mean(self) -> float:
        return (self.a + self.b) / 2 if self.kind == UNIFORM else self.a

    @classmethod
    def from_dict(cls, d: Mapping) -> "DelayDistribution":
        kind = d.get("kind")
        s = MS_PER_SECOND
        if kind == CONSTANT:
            return cls(kind, d["seconds"] * s)
        if kind == UNIFORM:
            return cls(kind, d["low_seconds"] * s, d["high_seconds"] * s)
        if kind == EXPONENTIAL:
            return cls(kind, d["mean_seconds"] * s)
        raise ValidationError(f"unknown delay kind {kind!r}", [f"unknown delay kind {kind!r}"])

    def to_dict(self) -> dict:
        s = MS_PER_SECOND
        if self.kind == CONSTANT:
            return {"kind": CONSTANT, "seconds": self.a / s}
        if self.kind == UNIFORM:
            return {"kind": UNIFORM, "low_seconds": self.a / s, "high_seconds": self.b / s}
        return {"kind": EXPONENTIAL, "mean_seconds": self.a / s}


def constant(ms: float) -> DelayDistribution:
    return DelayDistribution(CONSTANT, ms)


def uniform(lo_ms: float, hi_ms: float) -> DelayDistribution:
    return DelayDistribution(UNIFORM, lo_ms, hi_ms)


def exponential(mean_ms: float) -> DelayDistribution:
    return DelayDistribution(EXPONENTIAL, mean_ms)


@dataclass(frozen=True)
class Transition:
    target: str
    weight: float
    delay: DelayDistribution


@dataclass(frozen=True)
class Arrival:
    """Case start times: ``start + i * interval`` or uniform on ``[start, end]`` (epoch ms)."""

    kind: str
    start: int
    interval: int | None = None
    end: int | None = None

    def problems(self) -> list[str]:
        if self.kind == FIXED_INTERVAL:
            return [] if self.interval is not None and self.interval > 0 else ["arrival interval must be positive"]
        if self.kind == UNIFORM:
            return [] if self.end is not None and self.start <= self.end else ["arrival needs start <= end"]
        return [f"unknown arrival kind {self.kind!r}"]

    def sample(self, index: int, rng: random.Random) -> int:
        if self.kind == FIXED_INTERVAL:
            return self.start + index * self.interval
        return rng.randint(self.start, self.end)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Arrival":
        kind = d.get("kind")
        if kind == FIXED_INTERVAL:
            return cls(kind, parse_iso(d["start"]), interval=round(d["interval_seconds"] * MS_PER_SECOND))
        if kind == UNIFORM:
            return cls(kind, parse_iso(d["start"]), end=parse_iso(d["end"]))
        raise ValidationError(f"unknown arrival kind {kind!r}", [f"unknown arrival kind {kind!r}"])

    def to_dict(self) -> dict:
        if self.kind == FIXED_INTERVAL:
            return {"kind": self.kind, "start": format_iso(self.start), "interval_seconds": self.interval / MS_PER_SECOND}
        return {"kind": self.kind, "start": format_iso(self.start), "end": format_iso(self.end)}


@dataclass(frozen=True)
class GeneratorSpec:
    activities: frozenset[str]
    start_activity: str
    terminal_activities: frozenset[str]
    transitions: Mapping[str, Sequence[Transition]]
    resource_of: Mapping[str, str] = field(default_factory=dict)
    case_count: int = 100
    arrival: Arrival = field(default_factory=lambda: Arrival(FIXED_INTERVAL, 0, interval=3_600_000))
    seed: int = 0
    max_events_per_case: int = 1000

    def with_changes(self, **changes) -> "GeneratorSpec":
        return replace(self, **changes)

    def problems(self) -> list[str]:
        out = []
        acts = set(self.activities)
        if self.start_activity not in acts:
            out.append(f"start activity {self.start_activity!r} is not a declared activity")
        if not self.terminal_activities:
            out.append("no terminal activities")
        for t in sorted(set(self.terminal_activities) - acts):
            out.append(f"terminal activity {t!r} is not a declared activity")
        for src in sorted(self.transitions):
            if src not in acts:
                out.append(f"transition source {src!r} is not a declared activity")
            trans = self.transitions[src]
            if trans and not sum(t.weight for t in trans) > 0:
                out.append(f"weights out of {src!r} do not sum to a positive value")
            for t in trans:
                if t.target not in acts:
                    out.append(f"transition {src!r} -> {t.target!r} targets an undeclared activity")
                if not t.weight > 0:
                    out.append(f"transition {src!r} -> {t.target!r} has a non-positive weight")
                out.extend(f"transition {src!r} -> {t.target!r}: {p}" for p in t.delay.problems())
        for a in sorted(acts - set(self.terminal_activities)):
            if not self.transitions.get(a):
                out.append(f"non-terminal activity {a!r} has no outgoing transition")
        if self.case_count < 1:
            out.append("case_count must be positive")
        if self.max_events_per_case < 1:
            out.append("max_events_per_case must be positive")
        if not -(2**63) <= self.seed < 2**64:
            out.append("seed must fit in 64 bits")
        out.extend(self.arrival.problems())
        if not out and not (_reachable(self, self.start_activity) & set(self.terminal_activities)):
            out.append("no terminal activity is reachable from the start activity")
        return out

    def validate(self) -> None:
        problems = self.problems()
        if problems:
            raise ValidationError("invalid generator spec: " + "; ".join(problems), problems)

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneratorSpec":
        try:
            transitions = {
                src: tuple(
                    Transition(t["target"], float(t["weight"]), DelayDistribution.from_dict(t["delay"])) for t in ts
                )
                for src, ts in d.get("transitions", {}).items()
            }
            spec = cls(
                activities=frozenset(d["activities"]),
                start_activity=d["start_activity"],
                terminal_activities=frozenset(d["terminal_activities"]),
                transitions=transitions,
                resource_of=dict(d.get("resource_of", {})),
                case_count=int(d.get("case_count", 100)),
                arrival=Arrival.from_dict(d["arrival"]),
                seed=int(d.get("seed", 0)),
                max_events_per_case=int(d.get("max_events_per_case", 1000)),
            )
        except ValidationError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed generator spec: {exc!r}", [repr(exc)]) from None
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "GeneratorSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "activities": sorted(self.activities),
            "start_activity": self.start_activity,
            "terminal_activities": sorted(self.terminal_activities),
            "transitions": {
                src: [{"target": t.target, "weight": t.weight, "delay": t.delay.to_dict()} for t in ts]
                for src, ts in sorted(self.transitions.items())
            },
            "resource_of": dict(sorted(self.resource_of.items())),
            "case_count": self.case_count,
            "arrival": self.arrival.to_dict(),
            "seed": self.seed,
            "max_events_per_case": self.max_events_per_case,
        }


def demo_spec() -> GeneratorSpec:
    """The shipped security-screening scenario."""
    text = resources.files("procmine.data").joinpath(DEMO_SPEC).read_text(encoding="utf-8")
    return GeneratorSpec.from_dict(json.loads(text))


def _reachable(spec: GeneratorSpec, origin: str) -> set[str]:
    seen = {origin}
    stack = [origin]
    while stack:
        a = stack.pop()
        if a in spec.terminal_activities:
            continue
        for t in spec.transitions.get(a, ()):
            if t.target not in seen:
                seen.add(t.target)
                stack.append(t.target)
    return seen


def case_rng(seed: int, index: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _case_id(index: int, width: int) -> str:
    return f"case-{index + 1:0{width}d}"


def _generate_case(spec: GeneratorSpec, index: int, width: int) -> Case:
    rng = case_rng(spec.seed, index)
    case_id = _case_id(index, width)
    t = spec.arrival.sample(index, rng)
    activity = spec.start_activity
    events = []
    while True:
        if len(events) >= spec.max_events_per_case:
            raise GenerationError(
                f"case {index} exceeded max_events_per_case={spec.max_events_per_case}", case_index=index
            )
        events.append(Event(case_id, activity, t, spec.resource_of.get(activity), {}, seq=len(events)))
        if activity in spec.terminal_activities:
            break
        options = spec.transitions[activity]
        pick = rng.random() * sum(o.weight for o in options)
        chosen = options[-1]
        for o in options:
            pick -= o.weight
            if pick < 0:
                chosen = o
                break
        t += chosen.delay.sample(rng)
        activity = chosen.target
    return Case(case_id, tuple(events))


def generate(spec: GeneratorSpec, threads: int = 1) -> EventLog:
    spec.validate()
    width = max(6, len(str(spec.case_count)))
    cases = parallel_map(lambda i: _generate_case(spec, i, width), list(range(spec.case_count)), threads)
    meta = {"source": "synthgen", "seed": str(spec.seed), "case_count": str(spec.case_count)}
    return EventLog({c.case_id: c for c in cases}, meta)


def transition_probabilities(spec: GeneratorSpec) -> dict[tuple[str, str], float]:
    """Probability of each (source, target) step; parallel transitions are summed."""
    probs: dict[tuple[str, str], float] = {}
    for src, options in spec.transitions.items():
        if src in spec.terminal_activities or not options:
            continue
        total = sum(o.weight for o in options)
        for o in options:
            probs[(src, o.target)] = probs.get((src, o.target), 0.0) + o.weight / total
    return probs


def expected_edge_fractions(spec: GeneratorSpec) -> dict[tuple[str, str], float]:
    """Expected traversals per case of every transition.

    Solves the visit-count equations ``v = e_start + Q^T v`` of the absorbing
    walk over non-terminal activities, then scales each activity's visits by
    its outgoing transition probabilities.
    """
    reachable = _reachable(spec, spec.start_activity)
    transient = sorted(a for a in reachable if a not in spec.terminal_activities)
    for a in transient:
        if not (_reachable(spec, a) & set(spec.terminal_activities)):
            raise ValidationError(f"activity {a!r} cannot reach a terminal activity; the walk is not absorbing")
    if spec.start_activity in spec.terminal_activities:
        return {}
    idx = {a: i for i, a in enumerate(transient)}
    probs = transition_probabilities(spec)
    q = np.zeros((len(transient), len(transient)))
    for (src, tgt), p in probs.items():
        if src in idx and tgt in idx:
            q[idx[src], idx[tgt]] += p
    rhs = np.zeros(len(transient))
    rhs[idx[spec.start_activity]] = 1.0
    visits = np.linalg.solve(np.eye(len(transient)) - q.T, rhs)
    return {
        (src, tgt): float(visits[idx[src]] * p)
        for (src, tgt), p in sorted(probs.items())
        if src in idx
    }


def from_traces(
    traces: Sequence[Sequence[str | tuple[str, str | None]]],
    start: int = 0,
    step_ms: int = 60_000,
    case_gap_ms: int = 86_400_000,
    resource_of: Mapping[str, str] | None = None,
) -> EventLog:
    """Build a log from explicit activity sequences (fixtures and demos).

    Items are activity names or ``(activity, resource)`` pairs. Case ``i``
    starts at ``start + i * case_gap_ms`` and events are ``step_ms`` apart.
    """
    resource_of = resource_of or {}
    width = max(6, len(str(len(traces))))
    cases = {}
    for i, trace in enumerate(traces):
        cid = _case_id(i, width)
        if not trace:
            continue
        events = []
        for j, item in enumerate(trace):
            activity, resource = item if isinstance(item, tuple) else (item, resource_of.get(item))
            events.append(Event(cid, activity, start + i * case_gap_ms + j * step_ms, resource, {}, seq=j))
        cases[cid] = Case(cid, tuple(events))
    return EventLog(cases, {"source": "from_traces"})
