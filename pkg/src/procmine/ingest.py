"""CSV and XES readers/writers.

Both writers are byte-deterministic: cases in case-id order, events in
(timestamp, seq) order, fixed formatting. Reading back what was written
reproduces every (case_id, activity, timestamp, resource) tuple.
"""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from xml.sax.saxutils import quoteattr

from .errors import ParameterError, ParseError
from .log import Event, EventLog, datetime_to_ms, format_iso, ms_to_datetime, parse_iso

ISO = "iso"
_MAPPING_KEYS = {
    "case_column",
    "activity_column",
    "timestamp_column",
    "timestamp_format",
    "resource_column",
    "attribute_columns",
}


@dataclass(frozen=True)
class ColumnMapping:
    """Which CSV columns hold the event fields.

    ``timestamp_format`` is ``"iso"`` (ISO-8601 with offset) or a
    ``strptime`` pattern; patterns without ``%z`` are read as UTC.
    """

    case_column: str = "case_id"
    activity_column: str = "activity"
    timestamp_column: str = "timestamp"
    timestamp_format: str = ISO
    resource_column: str | None = "resource"
    attribute_columns: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        core = [self.case_column, self.activity_column, self.timestamp_column]
        if len(set(core)) != 3:
            raise ParameterError("case, activity and timestamp columns must be distinct")
        object.__setattr__(self, "attribute_columns", tuple(self.attribute_columns))

    @property
    def columns(self) -> list[str]:
        cols = [self.case_column, self.activity_column, self.timestamp_column]
        if self.resource_column:
            cols.append(self.resource_column)
        cols.extend(c for c in self.attribute_columns if c not in cols)
        return cols

    def to_dict(self) -> dict:
        d = asdict(self)
        d["attribute_columns"] = list(self.attribute_columns)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ColumnMapping":
        unknown = set(data) - _MAPPING_KEYS
        if unknown:
            raise ParameterError(f"unknown column mapping keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ColumnMapping":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _parse_timestamp(text: str, fmt: str) -> int:
    if fmt == ISO:
        return parse_iso(text)
    dt = datetime.strptime(text, fmt)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return datetime_to_ms(dt)


def _format_timestamp(ms: int, fmt: str) -> str:
    if fmt == ISO:
        return format_iso(ms)
    return ms_to_datetime(ms).strftime(fmt)


def parse_csv(data: bytes, mapping: ColumnMapping | None = None, source: str = "<bytes>") -> EventLog:
    mapping = mapping or ColumnMapping()
    text = data.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("CSV input is empty; a header row is required", row=0) from None
    dupes = sorted({h for h in header if header.count(h) > 1})
    if dupes:
        raise ParseError(f"duplicate header names: {', '.join(dupes)}", row=0)
    index = {name: i for i, name in enumerate(header)}
    for col in mapping.columns:
        if col not in index:
            raise ParseError(f"mapped column {col!r} not found in header", row=0)

    ci, ai, ti = index[mapping.case_column], index[mapping.activity_column], index[mapping.timestamp_column]
    ri = index[mapping.resource_column] if mapping.resource_column else None
    attr_idx = [(c, index[c]) for c in mapping.attribute_columns]

    events = []
    for row_no, row in enumerate(reader, start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"row {row_no}: expected {len(header)} fields, got {len(row)}", row=row_no)
        try:
            ts = _parse_timestamp(row[ti], mapping.timestamp_format)
        except ValueError as exc:
            raise ParseError(f"row {row_no}: bad timestamp {row[ti]!r} ({exc})", row=row_no) from None
        if not row[ai]:
            raise ParseError(f"row {row_no}: empty activity", row=row_no)
        resource = row[ri] if ri is not None and row[ri] != "" else None
        attrs = {name: row[i] for name, i in attr_idx}
        events.append(Event(row[ci], row[ai], ts, resource, attrs, seq=row_no))

    meta = {"source": source, "format": "csv", "mapping": json.dumps(mapping.to_dict(), sort_keys=True)}
    return EventLog.from_events(events, meta)


def write_csv(log: EventLog, mapping: ColumnMapping | None = None) -> bytes:
    mapping = mapping or ColumnMapping()
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(mapping.columns)
    extra = [c for c in mapping.columns[3:] if c != mapping.resource_column]
    for cid in sorted(log.cases):
        for e in log.cases[cid].events:
            row = [e.case_id, e.activity, _format_timestamp(e.timestamp, mapping.timestamp_format)]
            if mapping.resource_column:
                row.append(e.resource or "")
            row.extend(e.attributes.get(c, "") for c in extra)
            writer.writerow(row)
    return buf.getvalue().encode("utf-8")


# --- XES ------------------------------------------------------------------

_XES_HEADER = (
    '<?xml version="1.0" encoding="UTF-8"?>\n'
    '<log xes.version="1.0" xes.features="">\n'
    '  <extension name="Concept" prefix="concept" uri="http://www.xes-standard.org/concept.xesext"/>\n'
    '  <extension name="Time" prefix="time" uri="http://www.xes-standard.org/time.xesext"/>\n'
    '  <extension name="Organizational" prefix="org" uri="http://www.xes-standard.org/org.xesext"/>\n'
)
_ATTR_TAGS = {"string", "date", "int", "float", "boolean", "id"}


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _attributes(element) -> dict[str, tuple[str, str]]:
    out = {}
    for child in element:
        tag = _local(child.tag)
        if tag in _ATTR_TAGS and "key" in child.attrib:
            out[child.attrib["key"]] = (tag, child.attrib.get("value", ""))
    return out


def parse_xes(data: bytes, source: str = "<bytes>") -> EventLog:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"malformed XML at line {line}, column {col}: {exc}", line=line, column=col) from None
    if _local(root.tag) != "log":
        raise ParseError(f"root element is <{_local(root.tag)}>, expected <log>", line=1, column=0)

    events = []
    traces = [t for t in root if _local(t.tag) == "trace"]
    for ti, trace in enumerate(traces):
        tattrs = _attributes(trace)
        if "concept:name" not in tattrs:
            raise ParseError(f"trace {ti}: missing concept:name", trace=ti)
        case_id = tattrs["concept:name"][1]
        for ei, ev in enumerate(t for t in trace if _local(t.tag) == "event"):
            attrs = _attributes(ev)
            if "concept:name" not in attrs:
                raise ParseError(f"trace {ti}, event {ei}: missing concept:name", trace=ti, event=ei)
            if "time:timestamp" not in attrs:
                raise ParseError(f"trace {ti}, event {ei}: missing time:timestamp", trace=ti, event=ei)
            if not attrs["concept:name"][1]:
                raise ParseError(f"trace {ti}, event {ei}: empty concept:name", trace=ti, event=ei)
            try:
                ts = parse_iso(attrs["time:timestamp"][1])
            except ValueError as exc:
                raise ParseError(f"trace {ti}, event {ei}: {exc}", trace=ti, event=ei) from None
            resource = attrs["org:resource"][1] if "org:resource" in attrs else None
            extra = {
                k: v for k, (_, v) in attrs.items()
                if k not in ("concept:name", "time:timestamp", "org:resource")
            }
            events.append(Event(case_id, attrs["concept:name"][1], ts, resource, extra, seq=len(events)))

    return EventLog.from_events(events, {"source": source, "format": "xes"})


def _string(key: str, value: str, indent: str) -> str:
    return f"{indent}<string key={quoteattr(key)} value={quoteattr(value)}/>\n"


def write_xes(log: EventLog) -> bytes:
    parts = [_XES_HEADER]
    for cid in sorted(log.cases):
        parts.append("  <trace>\n")
        parts.append(_string("concept:name", cid, "    "))
        for e in log.cases[cid].events:
            parts.append("    <event>\n")
            parts.append(_string("concept:name", e.activity, "      "))
            parts.append(
                f'      <date key="time:timestamp" value="{format_iso(e.timestamp, always_millis=True)}"/>\n'
            )
            if e.resource is not None:
                parts.append(_string("org:resource", e.resource, "      "))
            for key in sorted(e.attributes):
                parts.append(_string(key, e.attributes[key], "      "))
            parts.append("    </event>\n")
        parts.append("  </trace>\n")
    parts.append("</log>\n")
    return "".join(parts).encode("utf-8")


def read_log(path, mapping: ColumnMapping | None = None) -> EventLog:
    """Read a ``.csv`` or ``.xes`` file, chosen by extension."""
    path = Path(path)
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".xes":
        return parse_xes(data, source=path.name)
    if suffix == ".csv":
        return parse_csv(data, mapping, source=path.name)
    raise ParameterError(f"cannot infer log format from {path.name!r}; use .csv or .xes")


def write_log(log: EventLog, path, mapping: ColumnMapping | None = None) -> None:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".xes":
        path.write_bytes(write_xes(log))
    elif suffix == ".csv":
        path.write_bytes(write_csv(log, mapping))
    else:
        raise ParameterError(f"cannot infer log format from {path.name!r}; use .csv or .xes")
