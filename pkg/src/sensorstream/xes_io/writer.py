"""XES writer for SensorStream content.

Attribute form (the default) puts semantic annotations on the list element
as ``stream:*`` XML attributes, keeps ``stream:id``/``stream:source`` as keyed
children and writes the reading as ``<date stream:timestamp=.../>`` and
``<string stream:value=.../>``. Element form writes every field as a keyed
child (``<date key="stream:timestamp" value=.../>``). Trait references are
always one ``stream:trait="1 2"`` XML attribute and relations are always
``<stream:relation>`` elements.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import IO, Iterable

from ..model import (
    SOSA_NS,
    SSN_NS,
    STREAM_EXTENSION_URI,
    STREAM_NS,
    Event,
    ExtensionDecl,
    MultiPoint,
    SemanticAnnotations,
    SensorLog,
    SensorPoint,
    SensorStreamGroup,
    Trace,
    XesAttribute,
)
from .reader import Dialect

KNOWN_EXTENSIONS = {
    "stream": ExtensionDecl("SensorStream", "stream", STREAM_EXTENSION_URI),
    "concept": ExtensionDecl("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
    "lifecycle": ExtensionDecl("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"),
    "time": ExtensionDecl("Time", "time", "http://www.xes-standard.org/time.xesext"),
}
KNOWN_NAMESPACES = {"stream": STREAM_NS, "ssn": SSN_NS, "sosa": SOSA_NS}


class XesWriteError(Exception):
    """The model cannot be serialized (e.g. dangling trait references)."""


@dataclass(frozen=True)
class WriteOptions:
    dialect: Dialect = Dialect.ATTRIBUTE_FORM
    indent: int = 2
    emit_extension_decls: bool = True


_ESCAPES = str.maketrans(
    {"&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "\n": "&#10;", "\r": "&#13;", "\t": "&#9;"}
)


def _q(text: str) -> str:
    return '"' + text.translate(_ESCAPES) + '"'


def _ann_attrs(annotations: SemanticAnnotations) -> str:
    return "".join(f" stream:{name}={_q(value)}" for name, value in annotations.items())


class _Emitter:
    def __init__(self, options: WriteOptions) -> None:
        if options.dialect not in (Dialect.ATTRIBUTE_FORM, Dialect.ELEMENT_FORM):
            raise ValueError(f"cannot write dialect {options.dialect!r}")
        self.attribute_form = options.dialect is Dialect.ATTRIBUTE_FORM
        self.step = " " * options.indent
        self.newline = "\n" if options.indent else ""
        self.out: list[str] = []

    def line(self, depth: int, text: str) -> None:
        self.out.append(self.step * depth + text + self.newline)

    def take(self) -> str:
        text = "".join(self.out)
        self.out.clear()
        return text

    # -- generic XES attributes -------------------------------------------

    def attribute(self, attr: XesAttribute, depth: int) -> None:
        head = f"<{attr.data_type} key={_q(attr.key)}"
        if attr.value is not None:
            head += f" value={_q(attr.value)}"
        if not attr.children:
            self.line(depth, head + "/>")
            return
        self.line(depth, head + ">")
        for child in attr.children:
            self.attribute(child, depth + 1)
        self.line(depth, f"</{attr.data_type}>")

    def keyed(self, depth: int, data_type: str, name: str, value: str) -> None:
        self.line(depth, f'<{data_type} key="stream:{name}" value={_q(value)}/>')

    def annotations_open(self, annotations: SemanticAnnotations) -> str:
        return _ann_attrs(annotations) if self.attribute_form else ""

    def annotations_children(self, annotations: SemanticAnnotations, depth: int) -> None:
        if not self.attribute_form:
            for name, value in annotations.items():
                self.keyed(depth, "string", name, value)

    # -- points ------------------------------------------------------------

    def fields(self, point, depth: int) -> None:
        """id/source/timestamp/value/meta of a point or of multipoint shared fields."""
        timestamp = point.timestamp.original_text if point.timestamp is not None else None
        value = getattr(point, "value", None)
        raw = value.raw if value is not None else None
        if self.attribute_form:
            if point.id is not None:
                self.keyed(depth, "string", "id", point.id)
            if point.source is not None:
                self.keyed(depth, "string", "source", point.source)
            if timestamp is not None:
                self.line(depth, f"<date stream:timestamp={_q(timestamp)}/>")
            if raw is not None:
                self.line(depth, f"<string stream:value={_q(raw)}/>")
        else:
            if timestamp is not None:
                self.keyed(depth, "date", "timestamp", timestamp)
            if point.id is not None:
                self.keyed(depth, "string", "id", point.id)
            if point.source is not None:
                self.keyed(depth, "string", "source", point.source)
            if raw is not None:
                self.keyed(depth, "string", "value", raw)
        if point.meta is not None:
            if point.meta:
                self.line(depth, '<list key="stream:meta">')
                for attr in point.meta:
                    self.attribute(attr, depth + 1)
                self.line(depth, "</list>")
            else:
                self.line(depth, '<list key="stream:meta"/>')

    def point(self, point: SensorPoint, depth: int) -> None:
        head = '<list key="stream:point"' + self.annotations_open(point.annotations)
        if point.trait_refs:
            head += f" stream:trait={_q(' '.join(point.trait_refs))}"
        self.line(depth, head + ">")
        self.annotations_children(point.annotations, depth + 1)
        self.fields(point, depth + 1)
        for relation in point.relations:
            self.line(depth + 1, f"<stream:relation value={_q(relation.kind)}>")
            self.keyed(depth + 2, "string", "id", relation.target_sensor_id)
            self.line(depth + 1, "</stream:relation>")
        self.line(depth, "</list>")

    def multipoint(self, multipoint: MultiPoint, depth: int) -> None:
        shared = multipoint.shared
        self.line(depth, '<list key="stream:multipoint"' + self.annotations_open(shared.annotations) + ">")
        self.annotations_children(shared.annotations, depth + 1)
        self.fields(shared, depth + 1)
        for partial in multipoint.points:
            self.point(partial, depth + 1)
        self.line(depth, "</list>")

    def container(self, points, multipoints, depth: int) -> None:
        for point in points:
            self.point(point, depth)
        for multipoint in multipoints:
            self.multipoint(multipoint, depth)

    # -- structure ---------------------------------------------------------

    def interleave(self, groups, direct_events: Iterable[int], trace: Trace, depth: int, group_fn) -> None:
        """Write groups in model order with events placed by ordinal around them."""
        pending = sorted(direct_events)
        position = 0
        for group in groups:
            first = _first_event(group)
            while first is not None and position < len(pending) and pending[position] < first:
                self.event(trace.events[pending[position]], trace, depth)
                position += 1
            group_fn(group, depth)
        for ordinal in pending[position:]:
            self.event(trace.events[ordinal], trace, depth)

    def group(self, group: SensorStreamGroup, trace: Trace, depth: int) -> None:
        self.line(depth, '<list key="stream:sensorstream"' + self.annotations_open(group.annotations) + ">")
        if group.name is not None:
            self.keyed(depth + 1, "string", "name", group.name)
        self.annotations_children(group.annotations, depth + 1)
        self.container(group.points, group.multipoints, depth + 1)
        self.interleave(
            group.child_groups,
            group.grouped_events,
            trace,
            depth + 1,
            lambda g, d: self.group(g, trace, d),
        )
        self.line(depth, "</list>")

    def event(self, event: Event, trace: Trace, depth: int) -> None:
        self.line(depth, "<event>")
        for attr in event.attributes:
            self.attribute(attr, depth + 1)
        for group in event.streams:
            if group.all_grouped_events():
                raise XesWriteError(f"event {event.event_index} has a sensorstream that groups events")
            self.group(group, trace, depth + 1)
        self.line(depth, "</event>")

    def trace(self, trace: Trace, depth: int) -> None:
        self.line(depth, "<trace>")
        for attr in trace.attributes:
            self.attribute(attr, depth + 1)
        self.container(trace.trace_points, trace.trace_multipoints, depth + 1)
        grouped = trace.grouped_event_ordinals()
        top_level = [e for e in range(len(trace.events)) if e not in grouped]
        self.interleave(trace.groups, top_level, trace, depth + 1, lambda g, d: self.group(g, trace, d))
        self.line(depth, "</trace>")


def _first_event(group: SensorStreamGroup) -> int | None:
    events = group.all_grouped_events()
    return events[0] if events else None


def _iter_all_points(log: SensorLog):
    for trace in log.traces:
        yield from _trace_points(trace)


def _trace_points(trace: Trace):
    yield from trace.trace_points
    for mp in trace.trace_multipoints:
        yield from mp.points
    stack = list(trace.groups)
    for event in trace.events:
        stack.extend(event.streams)
    while stack:
        group = stack.pop()
        yield from group.points
        for mp in group.multipoints:
            yield from mp.points
        stack.extend(group.child_groups)


def _has_annotations(log: SensorLog) -> bool:
    if any(not t.annotations.is_empty() for t in log.traits):
        return True
    for trace in log.traces:
        for mp in trace.trace_multipoints:
            if not mp.shared.annotations.is_empty():
                return True
        stack = list(trace.groups)
        for event in trace.events:
            stack.extend(event.streams)
        while stack:
            group = stack.pop()
            if not group.annotations.is_empty():
                return True
            if any(not mp.shared.annotations.is_empty() for mp in group.multipoints):
                return True
            stack.extend(group.child_groups)
    return any(not p.annotations.is_empty() for p in _iter_all_points(log))


def _used_prefixes(log: SensorLog) -> set[str]:
    used: set[str] = set()

    def scan(attrs) -> None:
        for attr in attrs:
            if ":" in attr.key:
                used.add(attr.key.split(":", 1)[0])
            scan(attr.children)

    scan(log.log_attributes)
    for _, attrs in log.globals:
        scan(attrs)
    for trace in log.traces:
        scan(trace.attributes)
        for event in trace.events:
            scan(event.attributes)
    if log.has_stream_content():
        used.add("stream")
    return used


def _check_traits(log: SensorLog) -> None:
    known = {t.id for t in log.traits}
    for point in _iter_all_points(log):
        for ref in point.trait_refs:
            if ref not in known:
                raise XesWriteError(f"point {point.id!r} references unknown trait {ref!r}")


def _declarations(log: SensorLog, options: WriteOptions) -> tuple[list[ExtensionDecl], list[tuple[str, str]]]:
    extensions = list(log.extensions)
    namespaces = list(log.namespaces)
    if options.emit_extension_decls:
        declared = {ext.prefix for ext in extensions}
        used = _used_prefixes(log)
        for prefix in ("stream", "concept", "lifecycle", "time"):
            if prefix in used and prefix not in declared:
                extensions.append(KNOWN_EXTENSIONS[prefix])
    bound = {prefix for prefix, _ in namespaces}
    needed = ["stream"] if log.has_stream_content() else []
    if _has_annotations(log):
        needed += ["ssn", "sosa"]
    for prefix in needed:
        if prefix not in bound:
            namespaces.append((prefix, KNOWN_NAMESPACES[prefix]))
    return extensions, namespaces


def _write_header(log: SensorLog, options: WriteOptions, emitter: _Emitter) -> None:
    extensions, namespaces = _declarations(log, options)
    attrs = ""
    if log.xes_version is not None:
        attrs += f" xes.version={_q(log.xes_version)}"
    if log.features is not None:
        attrs += f" xes.features={_q(log.features)}"
    if log.creator is not None:
        attrs += f" xes.creator={_q(log.creator)}"
    for prefix, uri in namespaces:
        attrs += f" xmlns={_q(uri)}" if not prefix else f" xmlns:{prefix}={_q(uri)}"
    emitter.out.append('<?xml version="1.0" encoding="UTF-8"?>\n')
    emitter.line(0, f"<log{attrs}>")
    for ext in extensions:
        emitter.line(1, f"<extension name={_q(ext.name)} prefix={_q(ext.prefix)} uri={_q(ext.uri)}/>")
    for scope, attributes in log.globals:
        emitter.line(1, f"<global scope={_q(scope)}>")
        for attr in attributes:
            emitter.attribute(attr, 2)
        emitter.line(1, "</global>")
    for classifier in log.classifiers:
        emitter.line(1, f"<classifier name={_q(classifier.name)} keys={_q(classifier.keys)}/>")
    for attr in log.log_attributes:
        emitter.attribute(attr, 1)
    for trait in log.traits:
        head = f"<stream:trait id={_q(trait.id)}"
        if trait.comment is not None:
            head += f" comment={_q(trait.comment)}"
        head += emitter.annotations_open(trait.annotations)
        if emitter.attribute_form or trait.annotations.is_empty():
            emitter.line(1, head + "/>")
        else:
            emitter.line(1, head + ">")
            emitter.annotations_children(trait.annotations, 2)
            emitter.line(1, "</stream:trait>")


def write_log_to(log: SensorLog, stream: IO[bytes], options: WriteOptions | None = None) -> None:
    """Serialize ``log`` as UTF-8 XES into a binary stream, trace by trace."""
    write_traces_to(log, log.traces, stream, options)


def write_traces_to(
    header: SensorLog, traces: Iterable[Trace], stream: IO[bytes], options: WriteOptions | None = None
) -> None:
    """Write ``header`` (declarations, traits) followed by ``traces``.

    ``traces`` may be a generator, which keeps memory flat for big logs; the
    declarations are derived from ``header`` alone in that case.
    """
    options = options or WriteOptions()
    _check_traits(header)
    emitter = _Emitter(options)
    _write_header(header, options, emitter)
    stream.write(emitter.take().encode("utf-8"))
    for trace in traces:
        emitter.trace(trace, 1)
        stream.write(emitter.take().encode("utf-8"))
    emitter.line(0, "</log>")
    stream.write(emitter.take().encode("utf-8"))


def write_log(log: SensorLog, options: WriteOptions | None = None) -> bytes:
    buffer = io.BytesIO()
    write_log_to(log, buffer, options)
    return buffer.getvalue()


def serialize_points(points, multipoints, depth: int, options: WriteOptions | None = None) -> str:
    """Serialized text of a container's points at ``depth``; used for size decisions."""
    emitter = _Emitter(options or WriteOptions())
    emitter.container(points, multipoints, depth)
    return emitter.take()
