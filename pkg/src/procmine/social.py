"""Handover-of-work networks between resources and involvement tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Mapping

from .discovery import dot_quote
from .log import Case, EventLog, parallel_map


@dataclass(frozen=True)
class ResourceNode:
    event_frequency: int
    coverage: float


@dataclass(frozen=True)
class HandoverNetwork:
    nodes: Mapping[str, ResourceNode] = field(default_factory=dict)
    edges: Mapping[tuple[str, str], int] = field(default_factory=dict)
    total_events: int = 0

    def to_dict(self) -> dict:
        return {
            "total_events": self.total_events,
            "nodes": [
                {"resource": r, "event_frequency": n.event_frequency, "coverage": n.coverage}
                for r, n in sorted(self.nodes.items())
            ],
            "edges": [{"from": a, "to": b, "handover_count": c} for (a, b), c in sorted(self.edges.items())],
        }


def _case_handovers(case: Case):
    resources = [e.resource_key for e in case.events]
    return resources, list(zip(resources, resources[1:]))


def mine_handover(log: EventLog, include_self: bool = True, threads: int = 1) -> HandoverNetwork:
    """Count resource-to-resource handovers between consecutive events of each case.

    Events without a resource are attributed to ``"(none)"``.
    """
    freq: dict[str, int] = {}
    edges: dict[tuple[str, str], int] = {}
    for resources, pairs in parallel_map(_case_handovers, list(log), threads):
        for r in resources:
            freq[r] = freq.get(r, 0) + 1
        for a, b in pairs:
            if a == b and not include_self:
                continue
            edges[(a, b)] = edges.get((a, b), 0) + 1
    total = sum(freq.values())
    nodes = {r: ResourceNode(n, n / total) for r, n in sorted(freq.items())}
    return HandoverNetwork(nodes, dict(sorted(edges.items())), total)


@dataclass(frozen=True)
class InvolvementRow:
    resource: str
    frequency: int
    coverage_pct: Decimal  # two decimals, half-up

    @property
    def coverage_text(self) -> str:
        return f"{self.coverage_pct}%"


def _percent(part: int, total: int) -> Decimal:
    return (Decimal(part) * 100 / Decimal(total)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def involvement_table(network: HandoverNetwork) -> list[InvolvementRow]:
    rows = [
        InvolvementRow(r, n.event_frequency, _percent(n.event_frequency, network.total_events))
        for r, n in network.nodes.items()
    ]
    rows.sort(key=lambda row: (-row.frequency, row.resource))
    return rows


def involvement_to_dicts(rows: list[InvolvementRow]) -> list[dict]:
    return [{"resource": r.resource, "frequency": r.frequency, "coverage_pct": float(r.coverage_pct)} for r in rows]


def involvement_text(rows: list[InvolvementRow]) -> str:
    """Aligned plain-text table."""
    header = ("Stakeholder", "Frequency", "Coverage")
    body = [(r.resource, str(r.frequency), r.coverage_text) for r in rows]
    w0 = max([len(header[0])] + [len(b[0]) for b in body])
    w1 = max([len(header[1])] + [len(b[1]) for b in body])
    w2 = max([len(header[2])] + [len(b[2]) for b in body])
    lines = [f"{header[0]:<{w0}}  {header[1]:>{w1}}  {header[2]:>{w2}}", f"{'-' * w0}  {'-' * w1}  {'-' * w2}"]
    lines += [f"{a:<{w0}}  {b:>{w1}}  {c:>{w2}}" for a, b, c in body]
    return "\n".join(lines) + "\n"


def export_handover_dot(network: HandoverNetwork) -> bytes:
    lines = ["digraph handover {", "  node [shape=ellipse];"]
    for resource, node in sorted(network.nodes.items()):
        pct = _percent(node.event_frequency, network.total_events)
        label = dot_quote(resource)[:-1] + f'\\n{node.event_frequency} ({pct}%)"'
        width = 0.75 + 3 * node.coverage
        lines.append(f"  {dot_quote(resource)} [label={label}, width={width:.2f}];")
    for (a, b), count in sorted(network.edges.items()):
        lines.append(f'  {dot_quote(a)} -> {dot_quote(b)} [label="{count}"];')
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")
