"""Directly-follows graph discovery, edge filtering and DOT export."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

from .durations import DurationStats, duration_stats, humanize
from .log import Case, EventLog, parallel_map

GAP_SEMANTICS = (
    "edge durations are differences between consecutive event start times; "
    "they include both service time and waiting time"
)


@dataclass(frozen=True)
class DfgNode:
    activity: str
    event_frequency: int
    case_frequency: int
    start_count: int
    end_count: int


@dataclass(frozen=True)
class DfgEdge:
    source: str
    target: str
    pair_frequency: int
    case_frequency: int
    gap_stats: DurationStats


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    nodes: Mapping[str, DfgNode] = field(default_factory=dict)
    edges: Mapping[tuple[str, str], DfgEdge] = field(default_factory=dict)
    case_count: int = 0

    def to_dict(self) -> dict:
        return {
            "case_count": self.case_count,
            "gap_semantics": GAP_SEMANTICS,
            "nodes": [
                {
                    "activity": n.activity,
                    "event_frequency": n.event_frequency,
                    "case_frequency": n.case_frequency,
                    "start_count": n.start_count,
                    "end_count": n.end_count,
                }
                for _, n in sorted(self.nodes.items())
            ],
            "edges": [
                {
                    "source": e.source,
                    "target": e.target,
                    "pair_frequency": e.pair_frequency,
                    "case_frequency": e.case_frequency,
                    "gap": e.gap_stats.to_dict(),
                }
                for _, e in sorted(self.edges.items())
            ],
        }


def _case_pairs(case: Case):
    events = case.events
    pairs = [
        (events[i].activity, events[i + 1].activity, events[i + 1].timestamp - events[i].timestamp)
        for i in range(len(events) - 1)
    ]
    return case.activities, pairs


def discover_dfg(log: EventLog, threads: int = 1) -> DirectlyFollowsGraph:
    """Count activities and consecutive-event pairs over every case.

    Per-case extraction may run on ``threads`` workers; the merge walks cases
    in log order, so the result does not depend on scheduling.
    """
    per_case = parallel_map(_case_pairs, list(log), threads)

    event_freq: dict[str, int] = {}
    case_freq: dict[str, int] = {}
    starts: dict[str, int] = {}
    ends: dict[str, int] = {}
    pair_freq: dict[tuple[str, str], int] = {}
    pair_cases: dict[tuple[str, str], int] = {}
    gaps: dict[tuple[str, str], list[int]] = {}

    for activities, pairs in per_case:
        if not activities:
            continue
        for a in activities:
            event_freq[a] = event_freq.get(a, 0) + 1
        for a in set(activities):
            case_freq[a] = case_freq.get(a, 0) + 1
        starts[activities[0]] = starts.get(activities[0], 0) + 1
        ends[activities[-1]] = ends.get(activities[-1], 0) + 1
        seen = set()
        for src, tgt, gap in pairs:
            key = (src, tgt)
            pair_freq[key] = pair_freq.get(key, 0) + 1
            gaps.setdefault(key, []).append(gap)
            seen.add(key)
        for key in seen:
            pair_cases[key] = pair_cases.get(key, 0) + 1

    nodes = {
        a: DfgNode(a, event_freq[a], case_freq[a], starts.get(a, 0), ends.get(a, 0))
        for a in sorted(event_freq)
    }
    edges = {
        key: DfgEdge(key[0], key[1], pair_freq[key], pair_cases[key], duration_stats(gaps[key]))
        for key in sorted(pair_freq)
    }
    return DirectlyFollowsGraph(nodes, edges, sum(1 for c in log if c.events))


def filter_edges_min_cases(g: DirectlyFollowsGraph, k: int) -> DirectlyFollowsGraph:
    """Drop edges seen in ``k`` or fewer cases; nodes are kept untouched."""
    edges = {key: e for key, e in g.edges.items() if e.case_frequency > k}
    return replace(g, edges=edges)


def dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_dot(g: DirectlyFollowsGraph, show_durations: bool = True, duration_stat: str = "mean") -> bytes:
    if duration_stat not in ("mean", "median"):
        raise ValueError(f"duration_stat must be 'mean' or 'median', got {duration_stat!r}")
    lines = [
        "digraph dfg {",
        "  rankdir=TB;",
        '  node [shape=box, style="rounded"];',
    ]
    for activity, node in sorted(g.nodes.items()):
        label = dot_quote(activity)[:-1] + f'\\n{node.event_frequency}"'
        lines.append(f"  {dot_quote(activity)} [label={label}];")
    for (src, tgt), edge in sorted(g.edges.items()):
        label = str(edge.pair_frequency)
        if show_durations:
            label += "\\n" + humanize(getattr(edge.gap_stats, duration_stat))
        lines.append(f'  {dot_quote(src)} -> {dot_quote(tgt)} [label="{label}"];')
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")
