"""XES reader for SensorStream content.

Both the whole-document reader and the streaming reader feed top-level
``<log>`` children through the same :class:`_LogBuilder`, so they produce
identical models. The whole-document reader keeps the element tree alive
until the end; the streaming reader converts and discards every ``<trace>``
as soon as its end tag is seen.
"""

from __future__ import annotations

import gzip
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import IO, Callable, Union

from ..model import (
    ANNOTATION_FIELDS,
    STREAM_NS,
    XES_TYPES,
    Classifier,
    Event,
    ExtensionDecl,
    Finding,
    MultiPoint,
    Relation,
    SemanticAnnotations,
    SensorLog,
    SensorPoint,
    SensorStreamGroup,
    SensorValue,
    Severity,
    SharedFields,
    Timestamp,
    Trace,
    TraitDef,
    XesAttribute,
)

Source = Union[str, Path, bytes, IO[bytes]]

_S = "{" + STREAM_NS + "}"
_RELATION_TAG = _S + "relation"
_TRAIT_TAG = _S + "trait"
_TRAIT_ATTR = _S + "trait"
_POINT_FIELDS = ("id", "source", "timestamp", "value")
_ANNOTATIONS = frozenset(ANNOTATION_FIELDS)


class Dialect(str, Enum):
    AUTO = "auto"
    ATTRIBUTE_FORM = "attribute_form"
    ELEMENT_FORM = "element_form"
    MIXED = "mixed"


@dataclass(frozen=True)
class ReadOptions:
    strict: bool = False
    dialect: Dialect = Dialect.AUTO


class XesReadError(Exception):
    """Fatal problem while reading a log."""


class XesSyntaxError(XesReadError):
    def __init__(self, message: str, line: int | None, column: int | None) -> None:
        super().__init__(f"XML syntax error at line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass
class StreamSummary:
    header: SensorLog
    traces: int
    stopped_early: bool
    findings: list[Finding] = field(default_factory=list)
    dialect: Dialect | None = None


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[1] if tag[:1] == "{" else tag


def _is_stream(tag: str) -> bool:
    return tag.startswith(_S)


def _xes_local(tag: str) -> str | None:
    """Local name of an element outside the stream namespace."""
    if _is_stream(tag):
        return None
    return _local(tag)


def open_source(source: Source) -> tuple[IO[bytes], bool]:
    """Binary stream for ``source`` with gzip transparently undone.

    Returns the stream and whether the caller owns (must close) it.
    """
    owned = False
    if isinstance(source, (str, Path)):
        stream: IO[bytes] = open(source, "rb")
        owned = True
    elif isinstance(source, (bytes, bytearray)):
        stream = io.BytesIO(source)
        owned = True
    else:
        stream = source
    if hasattr(stream, "peek"):
        magic = stream.peek(2)[:2]  # type: ignore[union-attr]
    elif stream.seekable():
        magic = stream.read(2)
        stream.seek(-len(magic), io.SEEK_CUR)
    else:
        stream = io.BytesIO(stream.read())
        owned = True
        magic = stream.getvalue()[:2]
    if magic == b"\x1f\x8b":
        return gzip.GzipFile(fileobj=stream), True
    return stream, owned


class _LogBuilder:
    def __init__(self, options: ReadOptions) -> None:
        self.options = options
        self.findings: list[Finding] = []
        self.saw_attribute_form = False
        self.saw_element_form = False
        self.log_info: dict[str, str | None] = {}
        self.namespaces: list[tuple[str, str]] = []
        self.extensions: list[ExtensionDecl] = []
        self.globals: list[tuple[str, tuple[XesAttribute, ...]]] = []
        self.classifiers: list[Classifier] = []
        self.log_attributes: list[XesAttribute] = []
        self.traits: list[TraitDef] = []
        self.trace_count = 0

    # -- diagnostics -------------------------------------------------------

    def _finding(self, severity: Severity, rule: str, path: str, message: str) -> None:
        self.findings.append(Finding(severity, rule, path, message))

    def _unknown(self, path: str, what: str) -> None:
        if self.options.strict:
            raise XesReadError(f"{path}: unknown SensorStream key {what!r}")
        self._finding(Severity.WARNING, "SS-301", path, f"unknown SensorStream key {what!r}")

    def _unexpected(self, path: str, what: str) -> None:
        if self.options.strict:
            raise XesReadError(f"{path}: {what}")
        self._finding(Severity.WARNING, "SS-302", path, what)

    def _form(self, attribute_form: bool, path: str) -> None:
        if attribute_form:
            self.saw_attribute_form = True
        else:
            self.saw_element_form = True
        wanted = self.options.dialect
        if wanted in (Dialect.ATTRIBUTE_FORM, Dialect.ELEMENT_FORM):
            if (wanted is Dialect.ATTRIBUTE_FORM) != attribute_form:
                self._finding(
                    Severity.WARNING,
                    "SS-303",
                    path,
                    f"content not in the requested {wanted.value} dialect",
                )

    @property
    def dialect(self) -> Dialect | None:
        if self.saw_attribute_form and self.saw_element_form:
            return Dialect.MIXED
        if self.saw_attribute_form:
            return Dialect.ATTRIBUTE_FORM
        if self.saw_element_form:
            return Dialect.ELEMENT_FORM
        return None

    # -- log level ---------------------------------------------------------

    def start_log(self, elem: ET.Element, namespaces: list[tuple[str, str]]) -> None:
        if _local(elem.tag) != "log":
            raise XesReadError(f"root element is <{_local(elem.tag)}>, expected <log>")
        self.log_info = {
            "xes_version": elem.get("xes.version"),
            "creator": elem.get("xes.creator"),
            "features": elem.get("xes.features"),
        }
        self.namespaces = list(namespaces)

    def add_child(self, elem: ET.Element) -> Trace | None:
        """Consume one ``<log>`` child; returns the trace when it was one."""
        tag = elem.tag
        if tag == _TRAIT_TAG:
            self._read_trait(elem)
            return None
        local = _xes_local(tag)
        if local == "trace":
            trace = self._read_trace(elem, self.trace_count)
            self.trace_count += 1
            return trace
        if local == "extension":
            self.extensions.append(
                ExtensionDecl(elem.get("name", ""), elem.get("prefix", ""), elem.get("uri", ""))
            )
        elif local == "global":
            attrs = tuple(self._attribute(c) for c in elem if _xes_local(c.tag) in XES_TYPES)
            self.globals.append((elem.get("scope", "event"), attrs))
        elif local == "classifier":
            self.classifiers.append(Classifier(elem.get("name", ""), elem.get("keys", "")))
        elif local in XES_TYPES:
            key = elem.get("key", "")
            if key.startswith("stream:"):
                self._unknown("log", key)
            self.log_attributes.append(self._attribute(elem))
        else:
            self._unexpected("log", f"unexpected element <{_local(tag)}>")
        return None

    def header(self) -> SensorLog:
        return SensorLog(
            xes_version=self.log_info.get("xes_version"),
            creator=self.log_info.get("creator"),
            features=self.log_info.get("features"),
            extensions=tuple(self.extensions),
            namespaces=tuple(self.namespaces),
            globals=tuple(self.globals),
            classifiers=tuple(self.classifiers),
            log_attributes=tuple(self.log_attributes),
            traits=tuple(self.traits),
        )

    def _read_trait(self, elem: ET.Element) -> None:
        trait_id = elem.get("id")
        path = f"trait[{len(self.traits)}]"
        if not trait_id:
            raise XesReadError(f"{path}: stream:trait without id")
        if any(t.id == trait_id for t in self.traits):
            raise XesReadError(f"duplicate stream:trait id {trait_id!r}")
        annotations = self._annotation_attrs(elem, path, skip={"id", "comment"})
        extra = {}
        for child in elem:
            key = child.get("key", "")
            name = key[7:] if key.startswith("stream:") else None
            if name in _ANNOTATIONS:
                extra[name] = child.get("value")
                self._form(False, path)
            else:
                self._unexpected(path, f"unexpected content in trait: {key or _local(child.tag)!r}")
        if extra:
            annotations = annotations.merged(SemanticAnnotations(**extra))
        self.traits.append(TraitDef(trait_id, elem.get("comment"), annotations))

    # -- plain XES attributes ----------------------------------------------

    def _attribute(self, elem: ET.Element) -> XesAttribute:
        children = tuple(self._attribute(c) for c in elem if _xes_local(c.tag) in XES_TYPES)
        return XesAttribute(_local(elem.tag), elem.get("key", ""), elem.get("value"), children)

    def _annotation_attrs(
        self, elem: ET.Element, path: str, skip: set[str] = frozenset()  # type: ignore[assignment]
    ) -> SemanticAnnotations:
        values = {}
        for name, value in elem.attrib.items():
            if name.startswith(_S):
                local = name[len(_S):]
                if local in _ANNOTATIONS:
                    values[local] = value
                elif local != "trait":
                    self._unknown(path, "stream:" + local)
            elif name != "key" and name not in skip:
                self._unexpected(path, f"unexpected XML attribute {name!r}")
        if not values:
            return SemanticAnnotations()
        self._form(True, path)
        return SemanticAnnotations(**values)

    def _trait_refs(self, elem: ET.Element) -> tuple[str, ...]:
        refs = elem.get(_TRAIT_ATTR)
        return tuple(refs.split()) if refs else ()

    # -- points --------------------------------------------------------------

    def _point_fields(
        self, elem: ET.Element, path: str, allow_value: bool, allow_events: bool = False
    ) -> dict:
        """Collect point-ish fields from ``elem``'s children.

        Returns a dict with scalar fields, ``annotations`` (element form),
        ``meta``, ``relations`` and the remaining ``children`` that are not
        point fields (nested points for multipoints).
        """
        found: dict = {"relations": [], "rest": [], "element_annotations": {}}
        for child in elem:
            tag = child.tag
            if tag == _RELATION_TAG:
                relation = self._read_relation(child, path)
                if relation is not None:
                    found["relations"].append(relation)
                continue
            local = _xes_local(tag)
            if local not in XES_TYPES:
                if not (local == "event" and allow_events):
                    self._unexpected(path, f"unexpected element <{_local(tag)}>")
                continue
            key = child.get("key")
            if key is None:
                stream_attrs = [(n[len(_S):], v) for n, v in child.attrib.items() if n.startswith(_S)]
                if len(stream_attrs) != 1:
                    self._unexpected(path, f"<{local}> without key or single stream attribute")
                    continue
                name, value = stream_attrs[0]
                if name not in _POINT_FIELDS:
                    self._unknown(path, "stream:" + name)
                    continue
                if name in ("timestamp", "value"):
                    self._form(True, path)
                self._set_field(found, name, value, path, allow_value)
                continue
            if not key.startswith("stream:"):
                self._unexpected(path, f"non-SensorStream attribute {key!r} inside a point")
                continue
            name = key[7:]
            if name in ("point", "multipoint", "sensorstream"):
                found["rest"].append(child)
            elif name == "meta":
                found["meta"] = tuple(self._attribute(c) for c in child if _xes_local(c.tag) in XES_TYPES)
            elif name in _POINT_FIELDS:
                if name in ("timestamp", "value"):
                    self._form(False, path)
                self._set_field(found, name, child.get("value"), path, allow_value)
            elif name in _ANNOTATIONS:
                self._form(False, path)
                found["element_annotations"][name] = child.get("value")
            elif name == "name":
                found["name"] = child.get("value")
            else:
                self._unknown(path, key)
        return found

    def _set_field(self, found: dict, name: str, value: str | None, path: str, allow_value: bool) -> None:
        if name == "value" and not allow_value:
            self._unexpected(path, "stream:value outside a point")
            return
        if value is None:
            self._unexpected(path, f"stream:{name} without a value")
            return
        if name in found:
            self._unexpected(path, f"duplicate stream:{name}; last one kept")
        found[name] = value

    def _annotations(self, elem: ET.Element, found: dict, path: str) -> SemanticAnnotations:
        annotations = self._annotation_attrs(elem, path)
        if found["element_annotations"]:
            annotations = annotations.merged(SemanticAnnotations(**found["element_annotations"]))
        return annotations

    def _build_point(self, elem: ET.Element, found: dict, path: str) -> SensorPoint:
        timestamp = found.get("timestamp")
        value = found.get("value")
        return SensorPoint(
            id=found.get("id"),
            timestamp=Timestamp(timestamp) if timestamp is not None else None,
            value=SensorValue(value) if value is not None else None,
            source=found.get("source"),
            meta=found.get("meta"),
            annotations=self._annotations(elem, found, path),
            relations=tuple(found["relations"]),
            trait_refs=self._trait_refs(elem),
        )

    def _check_complete(self, point: SensorPoint, path: str) -> bool:
        missing = point.missing_fields()
        if not missing:
            return True
        message = f"point missing mandatory field(s): {', '.join(missing)}"
        if self.options.strict:
            raise XesReadError(f"{path}: {message}")
        self._finding(Severity.ERROR, "SS-003", path, message + "; point dropped")
        return False

    def _read_point(self, elem: ET.Element, path: str) -> SensorPoint | None:
        found = self._point_fields(elem, path, allow_value=True)
        for child in found["rest"]:
            self._unexpected(path, f"{child.get('key')} nested inside a point")
        if "name" in found:
            self._unknown(path, "stream:name")
        point = self._build_point(elem, found, path)
        return point if self._check_complete(point, path) else None

    def _read_relation(self, elem: ET.Element, path: str) -> Relation | None:
        kind = elem.get("value")
        target = None
        for child in elem:
            if child.get("key") == "stream:id":
                target = child.get("value")
            elif child.get(_S + "id") is not None:
                target = child.get(_S + "id")
        if target is None:
            target = elem.get(_S + "id")
        if not kind or not target:
            self._unexpected(path, "stream:relation needs a kind value and a target stream:id")
            return None
        return Relation(kind, target)

    def _read_multipoint(self, elem: ET.Element, path: str) -> MultiPoint:
        found = self._point_fields(elem, path, allow_value=False)
        if "name" in found:
            self._unknown(path, "stream:name")
        if found["relations"]:
            self._unexpected(path, "stream:relation on a multipoint is ignored")
        if elem.get(_TRAIT_ATTR):
            self._unexpected(path, "stream:trait on a multipoint is ignored")
        timestamp = found.get("timestamp")
        shared = SharedFields(
            id=found.get("id"),
            source=found.get("source"),
            timestamp=Timestamp(timestamp) if timestamp is not None else None,
            meta=found.get("meta"),
            annotations=self._annotations(elem, found, path),
        )
        multipoint = MultiPoint(shared)
        partials = []
        index = 0
        for child in found["rest"]:
            if child.get("key") != "stream:point":
                self._unexpected(path, f"{child.get('key')} inside a multipoint")
                continue
            ppath = f"{path}/point[{index}]"
            pfound = self._point_fields(child, ppath, allow_value=True)
            for nested in pfound["rest"]:
                self._unexpected(ppath, f"{nested.get('key')} nested inside a point")
            partial = self._build_point(child, pfound, ppath)
            if self._check_complete(multipoint.merge(partial), ppath):
                partials.append(partial)
                index += 1
        return MultiPoint(shared, tuple(partials))

    # -- groups, events, traces ---------------------------------------------

    def _read_group(self, elem: ET.Element, path: str, ctx: list) -> SensorStreamGroup:
        found = self._point_fields(elem, path, allow_value=False, allow_events=True)
        for name in ("id", "source", "timestamp"):
            if name in found:
                self._unexpected(path, f"stream:{name} directly inside a sensorstream")
        if found["relations"]:
            self._unexpected(path, "stream:relation directly inside a sensorstream")
        if elem.get(_TRAIT_ATTR):
            self._unexpected(path, "stream:trait on a sensorstream is ignored")
        annotations = self._annotations(elem, found, path)
        points: list[SensorPoint] = []
        multipoints: list[MultiPoint] = []
        children: list[SensorStreamGroup] = []
        events: list[int] = []
        rest = set(map(id, found["rest"]))
        for child in elem:
            if _xes_local(child.tag) == "event":
                events.append(self._read_event(child, ctx))
                continue
            if id(child) not in rest:
                continue
            key = child.get("key")
            if key == "stream:point":
                point = self._read_point(child, f"{path}/point[{len(points)}]")
                if point is not None:
                    points.append(point)
            elif key == "stream:multipoint":
                multipoints.append(self._read_multipoint(child, f"{path}/multipoint[{len(multipoints)}]"))
            else:
                children.append(self._read_group(child, f"{path}/group[{len(children)}]", ctx))
        if "meta" in found:
            self._unexpected(path, "stream:meta directly inside a sensorstream is ignored")
        return SensorStreamGroup(
            name=found.get("name"),
            points=tuple(points),
            multipoints=tuple(multipoints),
            child_groups=tuple(children),
            grouped_events=tuple(events),
            annotations=annotations,
        )

    def _read_event(self, elem: ET.Element, ctx: list) -> int:
        ordinal = len(ctx[1])
        ctx[1].append(None)
        path = f"trace[{ctx[0]}]/event[{ordinal}]"
        attributes: list[XesAttribute] = []
        streams: list[SensorStreamGroup] = []
        for child in elem:
            local = _xes_local(child.tag)
            if local not in XES_TYPES:
                self._unexpected(path, f"unexpected element <{_local(child.tag)}>")
                continue
            key = child.get("key", "")
            if key == "stream:sensorstream":
                streams.append(self._read_group(child, f"{path}/group[{len(streams)}]", ctx))
            elif key in ("stream:point", "stream:multipoint"):
                self._unexpected(path, f"{key} directly under an event must be inside a stream:sensorstream; dropped")
            else:
                if key.startswith("stream:"):
                    self._unknown(path, key)
                attributes.append(self._attribute(child))
        ctx[1][ordinal] = Event(tuple(attributes), tuple(streams), ordinal)
        return ordinal

    def _read_trace(self, elem: ET.Element, index: int) -> Trace:
        path = f"trace[{index}]"
        ctx: list = [index, []]
        attributes: list[XesAttribute] = []
        points: list[SensorPoint] = []
        multipoints: list[MultiPoint] = []
        groups: list[SensorStreamGroup] = []
        for child in elem:
            local = _xes_local(child.tag)
            if local == "event":
                self._read_event(child, ctx)
                continue
            if local not in XES_TYPES:
                self._unexpected(path, f"unexpected element <{_local(child.tag)}>")
                continue
            key = child.get("key", "")
            if key == "stream:point":
                point = self._read_point(child, f"{path}/point[{len(points)}]")
                if point is not None:
                    points.append(point)
            elif key == "stream:multipoint":
                multipoints.append(self._read_multipoint(child, f"{path}/multipoint[{len(multipoints)}]"))
            elif key == "stream:sensorstream":
                groups.append(self._read_group(child, f"{path}/group[{len(groups)}]", ctx))
            else:
                if key.startswith("stream:"):
                    self._unknown(path, key)
                attributes.append(self._attribute(child))
        return Trace(
            attributes=tuple(attributes),
            events=tuple(ctx[1]),
            trace_points=tuple(points),
            trace_multipoints=tuple(multipoints),
            groups=tuple(groups),
        )


def _syntax_error(exc: ET.ParseError) -> XesSyntaxError:
    line, column = getattr(exc, "position", (None, None))
    return XesSyntaxError(str(exc), line, column)


class XesReader:
    """Reads SensorStream-enriched XES; keeps findings and the detected dialect."""

    def __init__(self, options: ReadOptions | None = None) -> None:
        self.options = options or ReadOptions()
        self.findings: list[Finding] = []
        self.dialect: Dialect | None = None

    def read(self, source: Source) -> SensorLog:
        """Parse a whole document into memory and convert it."""
        builder = _LogBuilder(self.options)
        stream, owned = open_source(source)
        namespaces: list[tuple[str, str]] = []
        root = None
        try:
            for event, item in ET.iterparse(stream, events=("start-ns", "start")):
                if event == "start-ns":
                    if root is None:
                        namespaces.append(item)  # type: ignore[arg-type]
                elif root is None:
                    root = item
        except ET.ParseError as exc:
            raise _syntax_error(exc) from None
        finally:
            if owned:
                stream.close()
        if root is None:
            raise XesSyntaxError("no root element", None, None)
        builder.start_log(root, namespaces)
        traces = []
        for child in root:
            trace = builder.add_child(child)
            if trace is not None:
                traces.append(trace)
        self.findings = builder.findings
        self.dialect = builder.dialect
        return replace(builder.header(), traces=tuple(traces))

    def read_streaming(self, source: Source, callback: Callable[[Trace], object]) -> StreamSummary:
        """Convert traces one at a time; ``callback`` returning False stops."""
        builder = _LogBuilder(self.options)
        stream, owned = open_source(source)
        namespaces: list[tuple[str, str]] = []
        root = None
        depth = 0
        stopped = False
        try:
            for event, item in ET.iterparse(stream, events=("start-ns", "start", "end")):
                if event == "start":
                    depth += 1
                    if root is None:
                        root = item
                        builder.start_log(root, namespaces)  # type: ignore[arg-type]
                elif event == "end":
                    depth -= 1
                    if depth == 1:
                        trace = builder.add_child(item)  # type: ignore[arg-type]
                        item.clear()  # type: ignore[union-attr]
                        root.remove(item)  # type: ignore[union-attr, arg-type]
                        if trace is not None and callback(trace) is False:
                            stopped = True
                            break
                elif root is None:
                    namespaces.append(item)  # type: ignore[arg-type]
        except ET.ParseError as exc:
            raise _syntax_error(exc) from None
        finally:
            if owned:
                stream.close()
        self.findings = builder.findings
        self.dialect = builder.dialect
        return StreamSummary(builder.header(), builder.trace_count, stopped, builder.findings, builder.dialect)


def read_log(source: Source, options: ReadOptions | None = None) -> tuple[SensorLog, list[Finding]]:
    reader = XesReader(options)
    log = reader.read(source)
    return log, reader.findings


def read_log_streaming(
    source: Source, callback: Callable[[Trace], object], options: ReadOptions | None = None
) -> StreamSummary:
    return XesReader(options).read_streaming(source, callback)
