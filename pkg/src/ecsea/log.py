"""Events, traces and event logs, plus XES and CSV ingestion.

Timestamps are held as integer epoch milliseconds (UTC). Naive timestamps in
input files are read as UTC.
"""

from __future__ import annotations

import csv
import io
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Iterator, Mapping

ACTIVITY_KEY = "concept:name"
TIMESTAMP_KEY = "time:timestamp"
CASE_KEY = "concept:name"

XES_NS = "http://www.xes-standard.org/"


class LogFormatError(ValueError):
    """Raised when an input log cannot be read into an EventLog."""


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: int
    case_id: str
    attributes: Mapping[str, str] = field(default_factory=dict)
    ingest_index: int = field(default=0, compare=False)

    def __post_init__(self):
        if not self.activity:
            raise ValueError("event activity must be non-empty")
        if not self.case_id:
            raise ValueError("event case id must be non-empty")
        if not isinstance(self.timestamp, int):
            raise TypeError(f"timestamp must be int epoch-ms, got {self.timestamp!r}")

    def get(self, name: str) -> str | None:
        """Attribute value, or None when the event does not carry `name`."""
        return self.attributes.get(name)

    def __hash__(self):
        return hash((self.activity, self.timestamp, self.case_id, self.ingest_index))


def _event_order(e: Event):
    return (e.timestamp, e.ingest_index)


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: tuple[Event, ...] = ()

    @classmethod
    def from_events(cls, case_id: str, events: Iterable[Event]) -> "Trace":
        evs = sorted(events, key=_event_order)
        for e in evs:
            if e.case_id != case_id:
                raise ValueError(f"event case id {e.case_id!r} does not match trace {case_id!r}")
        return cls(case_id, tuple(evs))

    def __len__(self):
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def __getitem__(self, i):
        return self.events[i]

    def activities(self) -> tuple[str, ...]:
        return tuple(e.activity for e in self.events)


@dataclass(frozen=True)
class EventLog:
    traces: Mapping[str, Trace] = field(default_factory=dict)

    @classmethod
    def from_traces(cls, traces: Iterable[Trace]) -> "EventLog":
        out: dict[str, Trace] = {}
        for t in traces:
            if t.case_id in out:
                raise ValueError(f"duplicate case id {t.case_id!r}")
            out[t.case_id] = t
        return cls(out)

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> "EventLog":
        """Group events into traces by case id, keeping first-appearance case order."""
        groups: dict[str, list[Event]] = {}
        for e in events:
            groups.setdefault(e.case_id, []).append(e)
        return cls({c: Trace.from_events(c, evs) for c, evs in groups.items()})

    def __len__(self):
        return len(self.traces)

    def __iter__(self) -> Iterator[Trace]:
        return iter(self.traces.values())

    def __getitem__(self, case_id: str) -> Trace:
        return self.traces[case_id]

    def __contains__(self, case_id) -> bool:
        return case_id in self.traces

    def case_ids(self) -> list[str]:
        return list(self.traces)

    def n_events(self) -> int:
        return sum(len(t) for t in self.traces.values())

    def activities(self) -> set[str]:
        return {e.activity for t in self.traces.values() for e in t.events}

    def subset(self, case_ids: Iterable[str]) -> "EventLog":
        keep = set(case_ids)
        return EventLog({c: t for c, t in self.traces.items() if c in keep})


# --- timestamps -------------------------------------------------------------

_FRACTION = re.compile(r"(\d{2}:\d{2}:\d{2})\.(\d+)")


def parse_timestamp(value: str) -> int:
    """Parse ISO-8601 text or integer epoch milliseconds into epoch ms."""
    s = value.strip()
    if re.fullmatch(r"-?\d+", s):
        return int(s)
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    # fromisoformat (3.10) only accepts 3- or 6-digit fractions
    m = _FRACTION.search(s)
    if m:
        frac = (m.group(2) + "000000")[:6]
        s = s[: m.start()] + f"{m.group(1)}.{frac}" + s[m.end():]
    if re.search(r"[+-]\d{4}$", s):
        s = s[:-2] + ":" + s[-2:]
    try:
        dt = datetime.fromisoformat(s)
    except ValueError as exc:
        raise ValueError(f"unparseable timestamp {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - datetime(1970, 1, 1, tzinfo=timezone.utc)
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def format_timestamp(ms: int) -> str:
    """Epoch ms to ISO-8601 UTC with millisecond precision."""
    secs, millis = divmod(ms, 1000)
    dt = datetime.fromtimestamp(secs, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{millis:03d}+00:00"


# --- XES --------------------------------------------------------------------

def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_xes(data: bytes) -> EventLog:
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise LogFormatError(f"malformed XES at line {line}, column {col}: {exc}") from exc
    if _local(root.tag) != "log":
        raise LogFormatError(f"XES root element must be <log>, got <{_local(root.tag)}>")

    traces: dict[str, Trace] = {}
    ingest = 0
    for t_idx, t_el in enumerate(c for c in root if _local(c.tag) == "trace"):
        case_id = None
        for a in t_el:
            if _local(a.tag) != "event" and a.get("key") == CASE_KEY:
                case_id = a.get("value")
        if not case_id:
            raise LogFormatError(f"trace #{t_idx} has no {CASE_KEY}")
        events = []
        for e_idx, e_el in enumerate(c for c in t_el if _local(c.tag) == "event"):
            activity = None
            ts = None
            attrs: dict[str, str] = {}
            for a in e_el:
                key, value = a.get("key"), a.get("value")
                if key is None or value is None:
                    continue
                if key == ACTIVITY_KEY:
                    activity = value
                elif key == TIMESTAMP_KEY:
                    try:
                        ts = parse_timestamp(value)
                    except ValueError as exc:
                        raise LogFormatError(
                            f"trace {case_id!r}, event {e_idx}: {exc}") from exc
                else:
                    attrs[key] = value
            if not activity:
                raise LogFormatError(f"trace {case_id!r}, event {e_idx}: missing {ACTIVITY_KEY}")
            if ts is None:
                raise LogFormatError(f"trace {case_id!r}, event {e_idx}: missing {TIMESTAMP_KEY}")
            events.append(Event(activity, ts, case_id, attrs, ingest))
            ingest += 1
        if case_id in traces:
            raise LogFormatError(f"duplicate trace {case_id!r}")
        traces[case_id] = Trace.from_events(case_id, events)
    return EventLog(traces)


def write_xes(log: EventLog) -> bytes:
    root = ET.Element("log", {"xes.version": "1.0", "xmlns": XES_NS})
    for name, prefix, uri in (
        ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
        ("Time", "time", "http://www.xes-standard.org/time.xesext"),
    ):
        ET.SubElement(root, "extension", {"name": name, "prefix": prefix, "uri": uri})
    for trace in log:
        t_el = ET.SubElement(root, "trace")
        ET.SubElement(t_el, "string", {"key": CASE_KEY, "value": trace.case_id})
        for e in trace:
            e_el = ET.SubElement(t_el, "event")
            ET.SubElement(e_el, "string", {"key": ACTIVITY_KEY, "value": e.activity})
            ET.SubElement(e_el, "date", {"key": TIMESTAMP_KEY, "value": format_timestamp(e.timestamp)})
            for k in sorted(e.attributes):
                ET.SubElement(e_el, "string", {"key": k, "value": e.attributes[k]})
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


# --- CSV --------------------------------------------------------------------

@dataclass(frozen=True)
class ColumnMap:
    """Which CSV headers hold case id, activity and timestamp.

    ``attrs=None`` turns every remaining column into an attribute.
    """

    case: str = "case"
    activity: str = "activity"
    time: str = "timestamp"
    attrs: tuple[str, ...] | None = None

    @classmethod
    def parse(cls, text: str) -> "ColumnMap":
        """Build from ``"case=C_ID,activity=EVENT_NAME,time=EVENT_TS,attrs=A|B"``."""
        kw: dict = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, _, value = part.partition("=")
            key = key.strip()
            if key not in ("case", "activity", "time", "attrs"):
                raise ValueError(f"unknown column-map key {key!r}")
            if key == "attrs":
                kw[key] = tuple(v for v in value.split("|") if v)
            else:
                kw[key] = value.strip()
        return cls(**kw)


def parse_csv(data: bytes, column_map: ColumnMap = ColumnMap(), delimiter: str = ",") -> EventLog:
    text = data.decode("utf-8-sig")
    reader = csv.DictReader(io.StringIO(text, newline=""), delimiter=delimiter)
    header = reader.fieldnames or []
    if not header:
        return EventLog({})
    core = (column_map.case, column_map.activity, column_map.time)
    attr_cols = column_map.attrs if column_map.attrs is not None else tuple(
        h for h in header if h not in core)
    for col in (*core, *attr_cols):
        if col not in header:
            raise LogFormatError(f"missing CSV column {col!r}")

    events = []
    for i, row in enumerate(reader):
        rowno = i + 2  # header is line 1
        try:
            ts = parse_timestamp(row[column_map.time] or "")
        except ValueError as exc:
            raise LogFormatError(f"row {rowno}: {exc}") from exc
        case_id, activity = row[column_map.case], row[column_map.activity]
        if not case_id or not activity:
            raise LogFormatError(f"row {rowno}: empty case id or activity")
        # empty cell means the attribute is absent
        attrs = {c: row[c] for c in attr_cols if row.get(c)}
        events.append(Event(activity, ts, case_id, attrs, i))
    return EventLog.from_events(events)


def write_csv(log: EventLog, column_map: ColumnMap = ColumnMap(), delimiter: str = ",") -> bytes:
    if column_map.attrs is not None:
        attr_cols = list(column_map.attrs)
    else:
        attr_cols = sorted({k for t in log for e in t for k in e.attributes})
    buf = io.StringIO(newline="")
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow([column_map.case, column_map.activity, column_map.time, *attr_cols])
    for trace in log:
        for e in trace:
            w.writerow([e.case_id, e.activity, format_timestamp(e.timestamp),
                        *(e.attributes.get(c, "") for c in attr_cols)])
    return buf.getvalue().encode("utf-8")


def read_log(path, fmt: str | None = None, column_map: ColumnMap = ColumnMap()) -> EventLog:
    """Read a log file, choosing the parser by `fmt` or the file suffix."""
    path = str(path)
    fmt = fmt or ("csv" if path.lower().endswith(".csv") else "xes")
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_csv(data, column_map) if fmt == "csv" else parse_xes(data)


def write_log(log: EventLog, path, fmt: str | None = None) -> None:
    path = str(path)
    fmt = fmt or ("csv" if path.lower().endswith(".csv") else "xes")
    data = write_csv(log) if fmt == "csv" else write_xes(log)
    with open(path, "wb") as fh:
        fh.write(data)
