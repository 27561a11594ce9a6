"""Domain types for SensorStream-enriched XES logs.

Every type here is a frozen dataclass holding tuples, so whole logs are
hashable and can be shared between threads or processes without copying.
Transformations elsewhere in the package build new instances with
:func:`dataclasses.replace`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Iterator, Union

STREAM_NS = "https://cpee.org/sensorstream/"
SSN_NS = "http://www.w3.org/ns/ssn/"
SOSA_NS = "http://www.w3.org/ns/sosa/"
STREAM_EXTENSION_URI = "https://cpee.org/sensorstream/sensorstream.xesext"

XES_TYPES = frozenset({"string", "date", "int", "float", "boolean", "id", "list", "container"})


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"

    @property
    def rank(self) -> int:
        return {"error": 2, "warning": 1, "info": 0}[self.value]


class ContextKind(str, Enum):
    """Where a sensor reading is attached relative to the process."""

    SINGLE_ACTIVITY = "SingleActivity"
    GROUP_OF_ACTIVITIES = "GroupOfActivities"
    TRACE = "Trace"


class _Token(str, Enum):
    """Enum whose members are prefixed vocabulary tokens (``stream:binary``)."""

    @property
    def bare(self) -> str:
        return self.value.split(":", 1)[1]

    @classmethod
    def parse(cls, token: str | None):
        """Return the member for ``token`` or None.

        Accepts the canonical prefixed token and the bare local name,
        case-insensitively on the local part.
        """
        if token is None:
            return None
        text = token.strip()
        prefix = cls._prefix()
        if ":" in text:
            given_prefix, local = text.split(":", 1)
            if given_prefix != prefix:
                return None
        else:
            local = text
        local = local.lower()
        for member in cls:
            if member.bare.lower() == local:
                return member
        return None

    @classmethod
    def _prefix(cls) -> str:
        return next(iter(cls)).value.split(":", 1)[0]

    @classmethod
    def tokens(cls) -> list[str]:
        return [m.value for m in cls]


class SosaSystemType(_Token):
    SENSOR = "sosa:Sensor"
    ACTUATOR = "sosa:Actuator"


class InteractionType(_Token):
    OBSERVATION = "sosa:Observation"
    ACTUATION = "sosa:Actuation"
    SAMPLING = "sosa:Sampling"


class ProcedureType(_Token):
    BINARY = "stream:binary"
    DISCRETE = "stream:discrete"
    CONTINUOUS = "stream:continuous"


class ProcedureTransition(_Token):
    FROM = "stream:from"
    TO = "stream:to"
    EXACT = "stream:exact"


class LifecyclePhase(_Token):
    START = "stream:start"
    END = "stream:end"
    PAUSE = "stream:pause"
    ACTIVE = "stream:active"
    RAMPUP = "stream:rampup"
    RAMPDOWN = "stream:rampdown"


class RelationKind(_Token):
    INCREASE = "stream:increase"
    DECREASE = "stream:decrease"
    ALTERNATING = "stream:alternating"


# ---------------------------------------------------------------------------
# Timestamps and values

_STRICT_TS = re.compile(
    r"\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}\.(?:\d{3}|\d{6})(?:Z|[+-]\d{2}:\d{2})?"
)
_LENIENT_TS = re.compile(
    r"(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2})(?::(\d{2})(?:[.,](\d+))?)?"
    r"(Z|[+-]\d{2}:?\d{2})?"
)


def _parse_instant(text: str) -> tuple[datetime | None, bool]:
    m = _LENIENT_TS.fullmatch(text)
    if m is None:
        return None, False
    year, month, day, hour, minute, second, frac, zone = m.groups()
    micro = int((frac or "0")[:6].ljust(6, "0"))
    if zone is None:
        tz = timezone.utc
    elif zone == "Z":
        tz = timezone.utc
    else:
        sign = -1 if zone[0] == "-" else 1
        digits = zone[1:].replace(":", "")
        offset = timedelta(hours=int(digits[:2]), minutes=int(digits[2:]))
        try:
            tz = timezone(sign * offset)
        except ValueError:
            return None, zone is not None
    try:
        instant = datetime(
            int(year), int(month), int(day), int(hour), int(minute), int(second or 0), micro, tz
        )
    except ValueError:
        return None, zone is not None
    return instant, zone is not None


@dataclass(frozen=True, slots=True)
class Timestamp:
    """A reading timestamp; equality and hashing use the original text only.

    Text without a UTC offset is interpreted as UTC and flagged through
    ``offset_present``. Unparseable text is kept with ``instant=None`` so that
    validation can report it.
    """

    original_text: str
    instant: datetime | None = field(init=False, compare=False, repr=False)
    offset_present: bool = field(init=False, compare=False, repr=False)
    well_formed: bool = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        instant, offset = _parse_instant(self.original_text)
        object.__setattr__(self, "instant", instant)
        object.__setattr__(self, "offset_present", offset)
        object.__setattr__(
            self,
            "well_formed",
            instant is not None and _STRICT_TS.fullmatch(self.original_text) is not None,
        )

    def utc_text(self) -> str | None:
        """RFC 3339 rendering normalized to UTC with microseconds."""
        if self.instant is None:
            return None
        return self.instant.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


class ValueKind(str, Enum):
    NUMBER = "number"
    TEXT = "text"
    BOOLEAN = "boolean"
    VECTOR = "vector"
    OPAQUE = "opaque"


_INT = re.compile(r"[+-]?\d+")
_FLOAT = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_NUM = r"\s*[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?\s*"
_VECTOR = re.compile(r"\[" + _NUM + r"(?:," + _NUM + r")*\]")
_CONTROL = re.compile(r"[\x00-\x1f\x7f]")


def parse_value(raw: str) -> tuple[ValueKind, object]:
    """Interpret a serialized reading: int, float, boolean, numeric vector, text."""
    text = raw.strip()
    if _INT.fullmatch(text):
        return ValueKind.NUMBER, int(text)
    if _FLOAT.fullmatch(text):
        return ValueKind.NUMBER, float(text)
    lowered = text.lower()
    if lowered in ("true", "false"):
        return ValueKind.BOOLEAN, lowered == "true"
    if _VECTOR.fullmatch(text):
        return ValueKind.VECTOR, tuple(float(part) for part in text[1:-1].split(","))
    if not text or text[0] in "[{" or _CONTROL.search(raw):
        return ValueKind.OPAQUE, raw
    return ValueKind.TEXT, raw


@dataclass(frozen=True, slots=True)
class SensorValue:
    """Serialized reading. ``raw`` is authoritative and written back verbatim."""

    raw: str
    kind: ValueKind = field(init=False, compare=False, repr=False)
    parsed: object = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        kind, parsed = parse_value(self.raw)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "parsed", parsed)

    @property
    def components(self) -> tuple[str, ...]:
        """Textual components: one for scalars, one per element for vectors."""
        if self.kind is ValueKind.VECTOR:
            return tuple(part.strip() for part in self.raw.strip()[1:-1].split(","))
        if self.kind is ValueKind.OPAQUE:
            return ()
        return (self.raw.strip(),)

    def as_number(self) -> float | None:
        """Scalar numeric view (booleans as 0/1), None for anything else."""
        if self.kind is ValueKind.NUMBER:
            return float(self.parsed)  # type: ignore[arg-type]
        if self.kind is ValueKind.BOOLEAN:
            return 1.0 if self.parsed else 0.0
        return None


# ---------------------------------------------------------------------------
# XES base structures


@dataclass(frozen=True, slots=True)
class XesAttribute:
    data_type: str
    key: str
    value: str | None = None
    children: tuple[XesAttribute, ...] = ()


@dataclass(frozen=True, slots=True)
class ExtensionDecl:
    name: str
    prefix: str
    uri: str


@dataclass(frozen=True, slots=True)
class Classifier:
    name: str
    keys: str


# ---------------------------------------------------------------------------
# SensorStream structures

ANNOTATION_FIELDS = (
    "system",
    "system_type",
    "interaction_type",
    "observation",
    "observation_specification",
    "procedure",
    "procedure_type",
    "procedure_transition",
    "lifecycle",
)


@dataclass(frozen=True, slots=True)
class SemanticAnnotations:
    """Optional semantic annotations, stored in their lexical form.

    Enumerated fields keep whatever token the document carried so that
    unknown tokens survive reading and can be reported by validation; use
    the enum classes' ``parse`` for typed access.
    """

    system: str | None = None
    system_type: str | None = None
    interaction_type: str | None = None
    observation: str | None = None
    observation_specification: str | None = None
    procedure: str | None = None
    procedure_type: str | None = None
    procedure_transition: str | None = None
    lifecycle: str | None = None

    def items(self) -> list[tuple[str, str]]:
        return [(name, getattr(self, name)) for name in ANNOTATION_FIELDS if getattr(self, name) is not None]

    def is_empty(self) -> bool:
        return all(getattr(self, name) is None for name in ANNOTATION_FIELDS)

    def merged(self, override: SemanticAnnotations) -> SemanticAnnotations:
        """Return a copy where every field set in ``override`` wins."""
        if override.is_empty():
            return self
        if self.is_empty():
            return override
        return SemanticAnnotations(
            **{
                name: getattr(override, name) if getattr(override, name) is not None else getattr(self, name)
                for name in ANNOTATION_FIELDS
            }
        )


EMPTY_ANNOTATIONS = SemanticAnnotations()


@dataclass(frozen=True, slots=True)
class Relation:
    kind: str
    target_sensor_id: str

    @property
    def relation_kind(self) -> RelationKind | None:
        return RelationKind.parse(self.kind)


@dataclass(frozen=True, slots=True)
class TraitDef:
    id: str
    comment: str | None = None
    annotations: SemanticAnnotations = EMPTY_ANNOTATIONS


@dataclass(frozen=True, slots=True)
class SensorPoint:
    """One sensor reading.

    Outside a multipoint ``id``, ``timestamp`` and ``value`` are mandatory;
    they are still typed optional so that partial points and defective input
    can be represented and reported instead of rejected on construction.
    """

    id: str | None = None
    timestamp: Timestamp | None = None
    value: SensorValue | None = None
    source: str | None = None
    meta: tuple[XesAttribute, ...] | None = None
    annotations: SemanticAnnotations = EMPTY_ANNOTATIONS
    relations: tuple[Relation, ...] = ()
    trait_refs: tuple[str, ...] = ()

    def missing_fields(self) -> list[str]:
        missing = []
        if not self.id:
            missing.append("id")
        if self.timestamp is None:
            missing.append("timestamp")
        if self.value is None:
            missing.append("value")
        return missing


PartialPoint = SensorPoint

SHARED_FIELDS = ("id", "source", "timestamp", "meta")


@dataclass(frozen=True, slots=True)
class SharedFields:
    id: str | None = None
    source: str | None = None
    timestamp: Timestamp | None = None
    meta: tuple[XesAttribute, ...] | None = None
    annotations: SemanticAnnotations = EMPTY_ANNOTATIONS


@dataclass(frozen=True, slots=True)
class MultiPoint:
    shared: SharedFields
    points: tuple[SensorPoint, ...] = ()

    def duplicated_fields(self, partial: SensorPoint) -> list[str]:
        """Shared fields that ``partial`` repeats (shadowing is not allowed)."""
        return [
            name
            for name in SHARED_FIELDS
            if getattr(self.shared, name) is not None and getattr(partial, name) is not None
        ]

    def merge(self, partial: SensorPoint) -> SensorPoint:
        """Complete ``partial`` with the shared fields; partial values win."""
        shared = self.shared
        return SensorPoint(
            id=partial.id if partial.id is not None else shared.id,
            timestamp=partial.timestamp if partial.timestamp is not None else shared.timestamp,
            value=partial.value,
            source=partial.source if partial.source is not None else shared.source,
            meta=partial.meta if partial.meta is not None else shared.meta,
            annotations=shared.annotations.merged(partial.annotations),
            relations=partial.relations,
            trait_refs=partial.trait_refs,
        )

    def expanded(self) -> tuple[SensorPoint, ...]:
        return tuple(self.merge(p) for p in self.points)


@dataclass(frozen=True, slots=True)
class SensorStreamGroup:
    """A ``stream:sensorstream`` node.

    ``grouped_events`` holds the trace-local ordinals of the events physically
    contained in this node (not in its child groups).
    """

    name: str | None = None
    points: tuple[SensorPoint, ...] = ()
    multipoints: tuple[MultiPoint, ...] = ()
    child_groups: tuple[SensorStreamGroup, ...] = ()
    grouped_events: tuple[int, ...] = ()
    annotations: SemanticAnnotations = EMPTY_ANNOTATIONS

    def all_grouped_events(self) -> tuple[int, ...]:
        """Ordinals grouped here or by any descendant group, ascending."""
        found = set(self.grouped_events)
        for child in self.child_groups:
            found.update(child.all_grouped_events())
        return tuple(sorted(found))

    def point_count(self) -> int:
        """Readings in this subtree, with multipoints expanded."""
        return (
            len(self.points)
            + sum(len(mp.points) for mp in self.multipoints)
            + sum(child.point_count() for child in self.child_groups)
        )


@dataclass(frozen=True, slots=True)
class Event:
    attributes: tuple[XesAttribute, ...] = ()
    streams: tuple[SensorStreamGroup, ...] = ()
    event_index: int = 0

    @property
    def name(self) -> str | None:
        return attribute_value(self.attributes, "concept:name")


@dataclass(frozen=True, slots=True)
class Trace:
    attributes: tuple[XesAttribute, ...] = ()
    events: tuple[Event, ...] = ()
    trace_points: tuple[SensorPoint, ...] = ()
    trace_multipoints: tuple[MultiPoint, ...] = ()
    groups: tuple[SensorStreamGroup, ...] = ()

    @property
    def name(self) -> str | None:
        return attribute_value(self.attributes, "concept:name")

    def grouped_event_ordinals(self) -> set[int]:
        """Ordinals held by any group of this trace, at trace or event level."""
        found: set[int] = set()
        stack = list(self.groups)
        for event in self.events:
            stack.extend(event.streams)
        while stack:
            group = stack.pop()
            found.update(group.grouped_events)
            stack.extend(group.child_groups)
        return found


@dataclass(frozen=True, slots=True)
class SensorLog:
    xes_version: str | None = "1.0"
    creator: str | None = None
    features: str | None = None
    extensions: tuple[ExtensionDecl, ...] = ()
    namespaces: tuple[tuple[str, str], ...] = ()
    globals: tuple[tuple[str, tuple[XesAttribute, ...]], ...] = ()
    classifiers: tuple[Classifier, ...] = ()
    log_attributes: tuple[XesAttribute, ...] = ()
    traits: tuple[TraitDef, ...] = ()
    traces: tuple[Trace, ...] = ()

    def trait_map(self) -> dict[str, TraitDef]:
        return {trait.id: trait for trait in self.traits}

    def has_stream_content(self) -> bool:
        if self.traits:
            return True
        for trace in self.traces:
            if trace.trace_points or trace.trace_multipoints or trace.groups:
                return True
            if any(event.streams for event in trace.events):
                return True
        return False


@dataclass(frozen=True, slots=True)
class Finding:
    severity: Severity
    rule_id: str
    path: str
    message: str

    def as_record(self) -> dict[str, str]:
        return {
            "rule_id": self.rule_id,
            "severity": self.severity.value,
            "path": self.path,
            "message": self.message,
        }

    def __str__(self) -> str:
        return f"{self.severity.value} {self.rule_id} {self.path}: {self.message}"


def attribute_value(attributes: tuple[XesAttribute, ...], key: str) -> str | None:
    for attr in attributes:
        if attr.key == key:
            return attr.value
    return None


# ---------------------------------------------------------------------------
# Location paths
#
# Paths name model positions, e.g. ``trace[0]/event[3]/group[0]/point[2]`` or
# ``trace[1]/group[0]/group[1]/multipoint[0]/point[4]``. Events are addressed
# by their trace-local ordinal regardless of where they sit in the document.


class LocationError(LookupError):
    """A location path does not resolve to an element of the log."""


_STEP = re.compile(r"([a-z]+)\[(\d+)\]")

Located = Union[Trace, Event, SensorStreamGroup, MultiPoint, SensorPoint, TraitDef]


def parse_path(path: str) -> list[tuple[str, int]]:
    steps = []
    for part in path.split("/"):
        m = _STEP.fullmatch(part)
        if m is None:
            raise LocationError(f"malformed path step {part!r} in {path!r}")
        steps.append((m.group(1), int(m.group(2))))
    return steps


def _pick(items: tuple, index: int, path: str):
    if index >= len(items):
        raise LocationError(f"{path}: index {index} out of range")
    return items[index]


def locate(log: SensorLog, path: str) -> tuple[Located, ContextKind | None]:
    """Resolve ``path`` to its model object and the context a point there has."""
    steps = parse_path(path)
    kind, index = steps[0]
    if kind == "trait":
        if len(steps) != 1:
            raise LocationError(f"{path}: traits have no children")
        return _pick(log.traits, index, path), None
    if kind != "trace":
        raise LocationError(f"{path}: must start with trace[...] or trait[...]")
    node: Located = _pick(log.traces, index, path)
    context = ContextKind.TRACE
    for kind, index in steps[1:]:
        if isinstance(node, Trace):
            if kind == "event":
                node = _pick(node.events, index, path)
                context = ContextKind.SINGLE_ACTIVITY
            elif kind == "group":
                node = _pick(node.groups, index, path)
                context = ContextKind.GROUP_OF_ACTIVITIES
            elif kind == "point":
                node = _pick(node.trace_points, index, path)
            elif kind == "multipoint":
                node = _pick(node.trace_multipoints, index, path)
            else:
                raise LocationError(f"{path}: trace has no {kind!r} children")
        elif isinstance(node, Event):
            if kind != "group":
                raise LocationError(f"{path}: event has no {kind!r} children")
            node = _pick(node.streams, index, path)
        elif isinstance(node, SensorStreamGroup):
            if kind == "group":
                node = _pick(node.child_groups, index, path)
            elif kind == "point":
                node = _pick(node.points, index, path)
            elif kind == "multipoint":
                node = _pick(node.multipoints, index, path)
            else:
                raise LocationError(f"{path}: group has no {kind!r} children")
        elif isinstance(node, MultiPoint):
            if kind != "point":
                raise LocationError(f"{path}: multipoint has no {kind!r} children")
            node = _pick(node.points, index, path)
        else:
            raise LocationError(f"{path}: a point has no children")
    return node, context


def classify_context(log: SensorLog, path: str) -> ContextKind:
    """Context of the point at ``path``.

    Points under an event's sensorstream are SingleActivity, points under a
    trace-level sensorstream are GroupOfActivities and points attached
    directly to the trace (plain or in a multipoint) are Trace.
    """
    node, context = locate(log, path)
    if not isinstance(node, SensorPoint) or context is None:
        raise LocationError(f"{path} does not name a sensor point")
    return context


def iter_paths(log: SensorLog) -> Iterator[str]:
    """Every addressable path in model order; used for document ordering."""
    for i in range(len(log.traits)):
        yield f"trait[{i}]"
    for t, trace in enumerate(log.traces):
        base = f"trace[{t}]"
        yield base
        yield from _container_paths(base, trace.trace_points, trace.trace_multipoints)
        for g, group in enumerate(trace.groups):
            yield from _group_paths(f"{base}/group[{g}]", group)
        for e, event in enumerate(trace.events):
            epath = f"{base}/event[{e}]"
            yield epath
            for g, group in enumerate(event.streams):
                yield from _group_paths(f"{epath}/group[{g}]", group)


def _container_paths(base: str, points, multipoints) -> Iterator[str]:
    for p in range(len(points)):
        yield f"{base}/point[{p}]"
    for m, mp in enumerate(multipoints):
        yield f"{base}/multipoint[{m}]"
        for p in range(len(mp.points)):
            yield f"{base}/multipoint[{m}]/point[{p}]"


def _group_paths(base: str, group: SensorStreamGroup) -> Iterator[str]:
    yield base
    yield from _container_paths(base, group.points, group.multipoints)
    for c, child in enumerate(group.child_groups):
        yield from _group_paths(f"{base}/group[{c}]", child)
