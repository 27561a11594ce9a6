"""Seeded generator of smart-factory style SensorStream logs.

Randomness comes from :class:`random.Random` (Mersenne Twister) seeded with
``f"{seed}:{trace_index}"`` per trace, so traces can be produced lazily or
in any order with identical results. Outputs are deterministic per
implementation only.

Readings sit on a per-rate time grid: a sensor sampled ``rate`` times per
event takes its k-th sample of event e at
``event_start + (k + 1) * EVENT_SLOT / (rate + 1)``. Sensors with equal rates
therefore share timestamps, which lets declared relations pair exactly and
gives timestamp multipoints something to fold.

A sensor that declares an ``increase``/``decrease`` relation is derived from
its target by an integer affine map, so the declared direction holds with
agreement 1.0. A sensor declaring ``alternating`` follows a zigzag.
"""

from __future__ import annotations

import configparser
import random
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator, NamedTuple

from .model import (
    EMPTY_ANNOTATIONS,
    SOSA_NS,
    SSN_NS,
    STREAM_EXTENSION_URI,
    STREAM_NS,
    Event,
    ExtensionDecl,
    InteractionType,
    MultiPoint,
    ProcedureType,
    Relation,
    RelationKind,
    SemanticAnnotations,
    SensorLog,
    SensorPoint,
    SensorStreamGroup,
    SensorValue,
    SharedFields,
    SosaSystemType,
    Timestamp,
    Trace,
    TraitDef,
    XesAttribute,
)
from .normalize import compact_multipoints, map_containers

GENERATORS = ("random_walk", "constant", "ramp", "binary_toggle")
CONTEXTS = ("event", "group", "trace")
EVENT_SLOT = timedelta(seconds=10)
TRACE_GAP = timedelta(minutes=5)
IRI_BASE = "https://example.org/factory#"
XES_NS = "http://www.xes-standard.org"

ACTIVITIES = (
    "calibrating motor 3",
    "picking workpiece",
    "moving to oven",
    "burning",
    "milling",
    "sorting by color",
    "quality check",
    "storing workpiece",
    "retrieving workpiece",
    "drilling",
)
RESOURCES = ("vgr_1", "ov_1", "mm_1", "sm_1", "hbw_1")

SUPPORTED_DEFECTS = (
    "SS-001", "SS-002", "SS-003", "SS-004", "SS-005", "SS-006", "SS-007", "SS-008", "SS-009",
    "SS-101", "SS-102", "SS-103", "SS-104", "SS-105",
)


class SynthConfigError(ValueError):
    """The configuration cannot be generated from."""


@dataclass(frozen=True)
class SensorProfile:
    id: str
    arity: int = 1
    units: tuple[str, ...] = ("1",)
    procedure_type: ProcedureType = ProcedureType.CONTINUOUS
    rate: int = 1
    generator: str = "random_walk"
    relations: tuple[Relation, ...] = ()
    context: str = "event"
    components: tuple[str, ...] | None = None
    interaction_type: InteractionType = InteractionType.OBSERVATION
    source: str | None = None
    meta: tuple[XesAttribute, ...] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise SynthConfigError("sensor id must not be empty")
        if self.arity < 1 or len(self.units) != self.arity:
            raise SynthConfigError(f"sensor {self.id!r}: need arity >= 1 and one unit per component")
        if self.components is not None and len(self.components) != self.arity:
            raise SynthConfigError(f"sensor {self.id!r}: need one component name per component")
        if self.generator not in GENERATORS:
            raise SynthConfigError(f"sensor {self.id!r}: unknown generator {self.generator!r}")
        if self.context not in CONTEXTS:
            raise SynthConfigError(f"sensor {self.id!r}: unknown context {self.context!r}")
        if self.rate < 1:
            raise SynthConfigError(f"sensor {self.id!r}: rate must be at least 1")

    @property
    def component_names(self) -> tuple[str, ...]:
        if self.components is not None:
            return self.components
        if self.arity == 1:
            return (self.id.rsplit("/", 1)[-1],)
        if self.arity <= 3:
            return ("x", "y", "z")[: self.arity]
        return tuple(f"c{i}" for i in range(1, self.arity + 1))

    def annotations(self) -> SemanticAnnotations:
        actuator = self.interaction_type is InteractionType.ACTUATION
        local = self.id.replace("/", "_")
        return SemanticAnnotations(
            system=IRI_BASE + local.rsplit("_", 1)[0],
            system_type=(SosaSystemType.ACTUATOR if actuator else SosaSystemType.SENSOR).value,
            interaction_type=self.interaction_type.value,
            observation=IRI_BASE + local,
            observation_specification=f"[{','.join(self.component_names)}] [{','.join(self.units)}]",
            procedure_type=self.procedure_type.value,
        )


def default_sensors() -> tuple[SensorProfile, ...]:
    return (
        SensorProfile(
            "vgr_1/crane_jib/acceleration", 3, ("m/s^2",) * 3, rate=3, components=("x", "y", "z")
        ),
        SensorProfile(
            "vgr_1/motor_3/speed", 1, ("rpm",), rate=2, generator="ramp",
            interaction_type=InteractionType.ACTUATION,
        ),
        SensorProfile(
            "vgr_1/motor_3/current", 1, ("A",), rate=2,
            relations=(Relation(RelationKind.INCREASE.value, "vgr_1/motor_3/speed"),),
        ),
        SensorProfile("ov_1/temperature", 1, ("degree celsius",), procedure_type=ProcedureType.DISCRETE, rate=2, context="group"),
        SensorProfile(
            "sld_1/light_barrier", 1, ("1",), procedure_type=ProcedureType.BINARY, rate=1,
            generator="binary_toggle", context="trace",
        ),
    )


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    traces: int = 1
    events_per_trace: int = 4
    sensors: tuple[SensorProfile, ...] = field(default_factory=default_sensors)
    defects: tuple[str, ...] = ()
    use_multipoints: bool = False
    use_traits: bool = False
    group_size: int = 2
    nest_groups: bool = False
    start: datetime = datetime(2021, 6, 25, 8, 0, tzinfo=timezone.utc)

    def __post_init__(self) -> None:
        if self.traces < 1:
            raise SynthConfigError("traces must be at least 1")
        if self.events_per_trace < 1:
            raise SynthConfigError("events_per_trace must be at least 1")
        if not self.sensors:
            raise SynthConfigError("at least one sensor profile is required")
        if self.group_size < 2:
            raise SynthConfigError("group_size must be at least 2")
        ids = [s.id for s in self.sensors]
        if len(set(ids)) != len(ids):
            raise SynthConfigError("sensor ids must be unique")
        for rule in self.defects:
            if rule not in SUPPORTED_DEFECTS:
                raise SynthConfigError(f"cannot inject unknown defect rule {rule!r}")
        _derivation_order(self.sensors)


class InjectedDefect(NamedTuple):
    rule_id: str
    path: str


class SynthResult(NamedTuple):
    log: SensorLog
    defects: tuple[InjectedDefect, ...]


# ---------------------------------------------------------------------------
# Series


def _monotone_target(profile: SensorProfile) -> tuple[str, int] | None:
    """(target id, direction) of the profile's monotone relation, if any."""
    found = [
        r for r in profile.relations if r.relation_kind in (RelationKind.INCREASE, RelationKind.DECREASE)
    ]
    if len(found) > 1:
        raise SynthConfigError(f"sensor {profile.id!r} declares more than one increase/decrease relation")
    for r in profile.relations:
        if r.relation_kind is None:
            raise SynthConfigError(f"sensor {profile.id!r}: unknown relation kind {r.kind!r}")
    if not found:
        return None
    return found[0].target_sensor_id, 1 if found[0].relation_kind is RelationKind.INCREASE else -1


def _derivation_order(sensors: tuple[SensorProfile, ...]) -> list[SensorProfile]:
    """Profiles ordered so every derived sensor follows its target."""
    by_id = {s.id: s for s in sensors}
    for s in sensors:
        link = _monotone_target(s)
        if link is None:
            continue
        target = by_id.get(link[0])
        if target is None:
            raise SynthConfigError(f"sensor {s.id!r}: relation target {link[0]!r} is not configured")
        if target.rate != s.rate or target.arity != 1 or s.arity != 1:
            raise SynthConfigError(f"sensor {s.id!r}: related sensors must be scalar with equal rates")
    order: list[SensorProfile] = []
    state: dict[str, int] = {}

    def visit(s: SensorProfile) -> None:
        if state.get(s.id) == 2:
            return
        if state.get(s.id) == 1:
            raise SynthConfigError(f"relation cycle through sensor {s.id!r}")
        state[s.id] = 1
        link = _monotone_target(s)
        if link is not None:
            visit(by_id[link[0]])
        state[s.id] = 2
        order.append(s)

    for s in sensors:
        visit(s)
    return order


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _series(profile: SensorProfile, n: int, rng: random.Random) -> list[list[float]]:
    """``n`` samples of ``profile.arity`` components each."""
    zigzag = any(r.relation_kind is RelationKind.ALTERNATING for r in profile.relations)
    out = []
    for c in range(profile.arity):
        level = round(rng.uniform(-10, 10), 4)
        if zigzag:
            amp = round(rng.uniform(0.5, 2.0), 4)
            out.append([level + (amp if k % 2 else 0.0) for k in range(n)])
        elif profile.generator == "constant":
            out.append([level] * n)
        elif profile.generator == "ramp":
            step = round(rng.uniform(0.1, 1.0), 4)
            out.append([level + k * step for k in range(n)])
        elif profile.generator == "binary_toggle":
            first = rng.randrange(2)
            out.append([float((first + k) % 2) for k in range(n)])
        else:
            walk, values = level, []
            for _ in range(n):
                values.append(walk)
                walk = round(walk + rng.gauss(0, 0.5), 4)
            out.append(values)
    return [[round(out[c][k], 4) for c in range(profile.arity)] for k in range(n)]


def _render(profile: SensorProfile, sample: list[float]) -> str:
    if profile.generator == "binary_toggle" and profile.arity == 1:
        return str(int(sample[0]))
    if profile.arity == 1:
        return _fmt(sample[0])
    return "[" + ", ".join(_fmt(v) for v in sample) + "]"


def _ts(instant: datetime) -> Timestamp:
    return Timestamp(instant.strftime("%Y-%m-%dT%H:%M:%S.%f") + "+00:00")


# ---------------------------------------------------------------------------
# Traces


def _group_spans(events: int, size: int) -> list[range]:
    if events < 2:
        return []
    spans = [range(i, min(i + size, events)) for i in range(0, events, size)]
    if len(spans) > 1 and len(spans[-1]) < 2:
        last = spans.pop()
        spans[-1] = range(spans[-1].start, last.stop)
    return spans


class _TraceBuilder:
    def __init__(self, config: SynthConfig, trace_index: int) -> None:
        self.config = config
        self.t = trace_index
        self.rng = random.Random(f"{config.seed}:{trace_index}")
        span = EVENT_SLOT * config.events_per_trace + TRACE_GAP
        self.start = config.start + span * trace_index

    def sample_time(self, event: int, k: int, rate: int) -> datetime:
        return self.start + EVENT_SLOT * event + EVENT_SLOT * (k + 1) / (rate + 1)

    def build(self, trait_ids: dict[str, str]) -> Trace:
        config = self.config
        n_events = config.events_per_trace
        order = _derivation_order(config.sensors)
        # numbers[sensor][sample] -> component values, samples in time order
        numbers: dict[str, list[list[float]]] = {}
        for profile in order:
            total = n_events * profile.rate
            link = _monotone_target(profile)
            if link is None:
                numbers[profile.id] = _series(profile, total, self.rng)
            else:
                scale = self.rng.choice((2, 3)) * link[1]
                offset = self.rng.randint(-5, 5)
                numbers[profile.id] = [[round(scale * s[0] + offset, 4)] for s in numbers[link[0]]]
        by_context: dict[str, list[SensorProfile]] = {c: [] for c in CONTEXTS}
        spans = _group_spans(n_events, config.group_size)
        for profile in config.sensors:
            context = profile.context if not (profile.context == "group" and not spans) else "trace"
            by_context[context].append(profile)

        def points(profiles: list[SensorProfile], events) -> tuple[SensorPoint, ...]:
            out = []
            for e in events:
                for profile in profiles:
                    for k in range(profile.rate):
                        sample = numbers[profile.id][e * profile.rate + k]
                        out.append(self.point(profile, sample, self.sample_time(e, k, profile.rate), trait_ids))
            return tuple(out)

        events = []
        for e in range(n_events):
            attrs = (
                XesAttribute("string", "concept:name", self.rng.choice(ACTIVITIES)),
                XesAttribute("string", "lifecycle:transition", "complete"),
                XesAttribute("string", "org:resource", self.rng.choice(RESOURCES)),
                XesAttribute("date", "time:timestamp", _ts(self.start + EVENT_SLOT * e).original_text),
            )
            streams = ()
            if by_context["event"]:
                streams = (SensorStreamGroup(points=points(by_context["event"], [e])),)
            events.append(Event(attrs, streams, e))
        groups = []
        for g, span in enumerate(spans):
            groups.append(
                SensorStreamGroup(
                    name=f"batch {g + 1}",
                    points=points(by_context["group"], span),
                    grouped_events=tuple(span),
                )
            )
        if config.nest_groups and len(groups) >= 2:
            nested = []
            for i in range(0, len(groups), 2):
                pair = groups[i : i + 2]
                if len(pair) == 1:
                    nested.append(pair[0])
                else:
                    nested.append(SensorStreamGroup(name=f"line {i // 2 + 1}", child_groups=tuple(pair)))
            groups = nested
        if not by_context["group"]:
            groups = []
        trace = Trace(
            attributes=(XesAttribute("string", "concept:name", f"production order {self.t + 1}"),),
            events=tuple(events),
            trace_points=points(by_context["trace"], range(n_events)),
            groups=tuple(groups),
        )
        if config.use_multipoints:
            trace = compact_multipoints(SensorLog(traces=(trace,))).traces[0]
        return trace

    def point(self, profile: SensorProfile, sample, instant: datetime, trait_ids: dict[str, str]) -> SensorPoint:
        annotations = profile.annotations()
        refs: tuple[str, ...] = ()
        if annotations in trait_ids:
            refs, annotations = (trait_ids[annotations],), EMPTY_ANNOTATIONS  # type: ignore[index]
        return SensorPoint(
            id=profile.id,
            timestamp=_ts(instant),
            value=SensorValue(_render(profile, sample)),
            source=profile.source,
            meta=profile.meta,
            annotations=annotations,
            relations=profile.relations,
            trait_refs=refs,
        )


def _header(config: SynthConfig) -> tuple[SensorLog, dict]:
    traits: list[TraitDef] = []
    trait_ids: dict = {}
    if config.use_traits:
        for profile in config.sensors:
            bundle = profile.annotations()
            if bundle not in trait_ids:
                trait_ids[bundle] = str(len(traits) + 1)
                traits.append(TraitDef(trait_ids[bundle], f"{profile.id} properties", bundle))
    header = SensorLog(
        xes_version="1.0",
        creator="sensorstream synth",
        namespaces=(("", XES_NS), ("stream", STREAM_NS), ("ssn", SSN_NS), ("sosa", SOSA_NS)),
        extensions=(
            ExtensionDecl("SensorStream", "stream", STREAM_EXTENSION_URI),
            ExtensionDecl("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
            ExtensionDecl("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"),
            ExtensionDecl("Organizational", "org", "http://www.xes-standard.org/org.xesext"),
            ExtensionDecl("Time", "time", "http://www.xes-standard.org/time.xesext"),
        ),
        log_attributes=(XesAttribute("string", "concept:name", "synthetic smart factory"),),
        traits=tuple(traits),
    )
    return header, trait_ids


def generate_header(config: SynthConfig) -> SensorLog:
    """Log declarations and traits, without traces."""
    return _header(config)[0]


def iter_traces(config: SynthConfig) -> Iterator[Trace]:
    """Defect-free traces one at a time, for logs too big to hold in memory."""
    _, trait_ids = _header(config)
    for t in range(config.traces):
        yield _TraceBuilder(config, t).build(trait_ids)


def generate(config: SynthConfig) -> SynthResult:
    """Build the whole log and inject the configured defects.

    Defect ``i`` goes into trace ``i % traces``; the returned paths locate
    the injected defects in the returned log.
    """
    header = generate_header(config)
    log = replace(header, traces=tuple(iter_traces(config)))
    rng = random.Random(f"{config.seed}:defects")
    injected = []
    for i, rule in enumerate(config.defects):
        log, path = MUTATORS[rule](log, i % len(log.traces), rng)
        injected.append(InjectedDefect(rule, path))
    return SynthResult(log, tuple(injected))


# ---------------------------------------------------------------------------
# Defect injection
#
# Each mutator changes one spot so that exactly its rule fires there and no
# other error appears. The in-memory result may not be writable (the writer
# refuses dangling trait references and event-level groups that group events).


class DefectInjectionError(SynthConfigError):
    pass


def _point_sites(trace: Trace, t: int):
    """(container path, index, point, multipoint or None) for every point of a trace."""
    sites = []

    def collect(path, depth, points, multipoints):
        for i, p in enumerate(points):
            sites.append((path, i, p, None))
        for m, mp in enumerate(multipoints):
            for i, p in enumerate(mp.points):
                sites.append((f"{path}/multipoint[{m}]", i, p, mp))
        return points, multipoints

    map_containers(SensorLog(traces=(trace,)), collect)
    return [(path.replace("trace[0]", f"trace[{t}]", 1), i, p, mp) for path, i, p, mp in sites]


def _replace_point(log: SensorLog, t: int, container: str, index: int, fn) -> SensorLog:
    target_container = container.replace(f"trace[{t}]", "trace[0]", 1)
    trace_log = SensorLog(traces=(log.traces[t],))

    def edit(path, depth, points, multipoints):
        if path == target_container:
            points = points[:index] + (fn(points[index]),) + points[index + 1 :]
        elif target_container.startswith(path + "/multipoint["):
            m = int(target_container[len(path) + len("/multipoint[") : -1])
            mp = multipoints[m]
            partials = mp.points[:index] + (fn(mp.points[index]),) + mp.points[index + 1 :]
            multipoints = multipoints[:m] + (replace(mp, points=partials),) + multipoints[m + 1 :]
        return points, multipoints

    new_trace = map_containers(trace_log, edit).traces[0]
    return replace(log, traces=log.traces[:t] + (new_trace,) + log.traces[t + 1 :])


def _edit_point(log: SensorLog, t: int, rng: random.Random, accept, fn, rule: str) -> tuple[SensorLog, str]:
    sites = [s for s in _point_sites(log.traces[t], t) if accept(*s)]
    if not sites:
        raise DefectInjectionError(f"{rule}: no suitable point in trace {t}")
    container, index, _, _ = rng.choice(sites)
    return _replace_point(log, t, container, index, fn), f"{container}/point[{index}]"


def _any(*_):
    return True


def _own_timestamp(container, index, point, mp):
    return point.timestamp is not None


def _inject_ss001(log, t, rng):
    trace = log.traces[t]
    candidates = [g for g, group in enumerate(trace.groups) if _last_leaf(group)[1].grouped_events]
    if not candidates:
        raise DefectInjectionError("SS-001 needs trace-level groups (a sensor with context 'group')")
    g = rng.choice(candidates)
    steps, leaf = _last_leaf(trace.groups[g])
    shrunk = replace(leaf, grouped_events=leaf.grouped_events[:1])
    new_group = _replace_leaf(trace.groups[g], steps, shrunk)
    trace = replace(trace, groups=trace.groups[:g] + (new_group,) + trace.groups[g + 1 :])
    path = f"trace[{t}]/group[{g}]" + "".join(f"/group[{s}]" for s in steps)
    return replace(log, traces=log.traces[:t] + (trace,) + log.traces[t + 1 :]), path


def _last_leaf(group: SensorStreamGroup) -> tuple[list[int], SensorStreamGroup]:
    steps = []
    while group.child_groups:
        steps.append(len(group.child_groups) - 1)
        group = group.child_groups[-1]
    return steps, group


def _replace_leaf(group: SensorStreamGroup, steps: list[int], leaf: SensorStreamGroup) -> SensorStreamGroup:
    if not steps:
        return leaf
    i = steps[0]
    child = _replace_leaf(group.child_groups[i], steps[1:], leaf)
    return replace(group, child_groups=group.child_groups[:i] + (child,) + group.child_groups[i + 1 :])


def _replace_event(log, t, e, event):
    trace = log.traces[t]
    trace = replace(trace, events=trace.events[:e] + (event,) + trace.events[e + 1 :])
    return replace(log, traces=log.traces[:t] + (trace,) + log.traces[t + 1 :])


def _inject_ss002(log, t, rng):
    e = rng.randrange(len(log.traces[t].events))
    event = log.traces[t].events[e]
    path = f"trace[{t}]/event[{e}]/group[{len(event.streams)}]"
    return _replace_event(log, t, e, replace(event, streams=event.streams + (SensorStreamGroup(),))), path


def _inject_ss004(log, t, rng):
    candidates = [e for e, event in enumerate(log.traces[t].events) if event.streams]
    if not candidates:
        raise DefectInjectionError("SS-004 needs event-level sensorstreams (a sensor with context 'event')")
    e = rng.choice(candidates)
    event = log.traces[t].events[e]
    group = replace(event.streams[0], grouped_events=(e,))
    return _replace_event(log, t, e, replace(event, streams=(group,) + event.streams[1:])), f"trace[{t}]/event[{e}]/group[0]"


def _repeat_shared(mp: MultiPoint):
    def fn(partial: SensorPoint) -> SensorPoint:
        name = next(n for n in ("id", "timestamp", "source", "meta") if getattr(mp.shared, n) is not None)
        return replace(partial, **{name: getattr(mp.shared, name)})

    return fn


def _inject_ss005(log, t, rng):
    """Repeat a shared field in a partial point.

    Without multipoints, the last plain point of a container is wrapped into
    a new multipoint that shares (and so duplicates) its id.
    """
    sites = _point_sites(log.traces[t], t)
    partials = [s for s in sites if s[3] is not None and any(
        getattr(s[3].shared, n) is not None for n in ("id", "timestamp", "source", "meta"))]
    if partials:
        container, index, _, mp = rng.choice(partials)
        return _replace_point(log, t, container, index, _repeat_shared(mp)), f"{container}/point[{index}]"
    sites = [s for s in sites if s[3] is None]
    last = {}
    for container, index, point, _ in sites:
        last[container] = (index, point)
    if not last:
        raise DefectInjectionError("SS-005 needs a plain point")
    container = rng.choice(sorted(last))
    index, point = last[container]
    target = container.replace(f"trace[{t}]", "trace[0]", 1)
    result = {}

    def edit(path, depth, points, multipoints):
        if path == target:
            result["path"] = f"{container}/multipoint[{len(multipoints)}]/point[0]"
            return points[:index], multipoints + (MultiPoint(SharedFields(id=point.id), (point,)),)
        return points, multipoints

    new_trace = map_containers(SensorLog(traces=(log.traces[t],)), edit).traces[0]
    return replace(log, traces=log.traces[:t] + (new_trace,) + log.traces[t + 1 :]), result["path"]


def _inject_ss007(log, t, rng):
    return replace(log, extensions=tuple(x for x in log.extensions if x.prefix != "stream")), "log"


def _strip_fraction(point: SensorPoint) -> SensorPoint:
    text = point.timestamp.original_text  # type: ignore[union-attr]
    head, _, rest = text.partition(".")
    return replace(point, timestamp=Timestamp(head + rest[6:] if len(rest) > 6 else head))


def _strip_offset(point: SensorPoint) -> SensorPoint:
    text = point.timestamp.original_text  # type: ignore[union-attr]
    return replace(point, timestamp=Timestamp(text[:-6] if text[-6] in "+-" else text.rstrip("Z")))


def _with_annotation(**values):
    return lambda p: replace(p, annotations=p.annotations.merged(SemanticAnnotations(**values)))


def _wrong_arity(point: SensorPoint) -> SensorPoint:
    width = len(point.value.components) + 1  # type: ignore[union-attr]
    spec = f"[{','.join(f'c{i}' for i in range(width))}] [{','.join('1' for _ in range(width))}]"
    return _with_annotation(observation_specification=spec)(point)


def _point_mutator(rule, accept, fn):
    return lambda log, t, rng: _edit_point(log, t, rng, accept, fn, rule)


MUTATORS = {
    "SS-001": _inject_ss001,
    "SS-002": _inject_ss002,
    "SS-003": _point_mutator("SS-003", _any, lambda p: replace(p, value=None)),
    "SS-004": _inject_ss004,
    "SS-005": _inject_ss005,
    "SS-006": _point_mutator("SS-006", _any, lambda p: replace(p, trait_refs=p.trait_refs + ("undefined",))),
    "SS-007": _inject_ss007,
    "SS-008": _point_mutator("SS-008", _own_timestamp, _strip_fraction),
    "SS-009": _point_mutator("SS-009", _own_timestamp, _strip_offset),
    "SS-101": _point_mutator("SS-101", _any, _with_annotation(procedure_type="stream:sporadic")),
    "SS-102": _point_mutator("SS-102", _any, _with_annotation(observation_specification="[x,y [m,m]")),
    "SS-103": _point_mutator("SS-103", _any, _wrong_arity),
    "SS-104": _point_mutator("SS-104", _any, _with_annotation(system="not an iri")),
    "SS-105": _point_mutator(
        "SS-105", _any, lambda p: replace(p, relations=p.relations + (Relation("stream:increase", "ghost/sensor"),))
    ),
}


# ---------------------------------------------------------------------------
# Configuration files


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "yes", "true", "on"):
        return True
    if lowered in ("0", "no", "false", "off"):
        return False
    raise SynthConfigError(f"not a boolean: {text!r}")


def _list(text: str) -> tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def _profile_from_section(sensor_id: str, section) -> SensorProfile:
    known = {
        "arity", "units", "components", "procedure_type", "rate", "generator", "context",
        "relations", "interaction_type", "source", "meta",
    }
    unknown = set(section) - known
    if unknown:
        raise SynthConfigError(f"sensor {sensor_id!r}: unknown key(s) {sorted(unknown)}")
    procedure = ProcedureType.parse(section.get("procedure_type", "continuous"))
    interaction = InteractionType.parse(section.get("interaction_type", "observation"))
    if procedure is None or interaction is None:
        raise SynthConfigError(f"sensor {sensor_id!r}: unknown procedure_type or interaction_type")
    relations = []
    for item in _list(section.get("relations", "")):
        kind, _, target = item.partition(":")
        parsed = RelationKind.parse(kind)
        if parsed is None or not target:
            raise SynthConfigError(f"sensor {sensor_id!r}: relation {item!r} is not kind:target")
        relations.append(Relation(parsed.value, target.strip()))
    meta = None
    if "meta" in section:
        pairs = [p.partition("=") for p in section["meta"].split(";") if p.strip()]
        meta = tuple(XesAttribute("string", k.strip(), v.strip()) for k, _, v in pairs)
    arity = int(section.get("arity", "1"))
    units = _list(section.get("units", ",".join(["1"] * arity)))
    components = _list(section["components"]) if "components" in section else None
    return SensorProfile(
        id=sensor_id,
        arity=arity,
        units=units,
        procedure_type=procedure,
        rate=int(section.get("rate", "1")),
        generator=section.get("generator", "random_walk"),
        relations=tuple(relations),
        context=section.get("context", "event"),
        components=components,
        interaction_type=interaction,
        source=section.get("source"),
        meta=meta,
    )


def parse_config(text: str) -> SynthConfig:
    """Read a SynthConfig from INI text.

    A ``[synth]`` section holds the scalar settings, each
    ``[sensor:<id>]`` section one sensor profile. Without sensor sections
    the default smart-factory sensors are used.
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment]
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SynthConfigError(str(exc)) from None
    synth = parser["synth"] if parser.has_section("synth") else {}
    known = {
        "seed", "traces", "events_per_trace", "defects", "use_multipoints", "use_traits",
        "group_size", "nest_groups", "start",
    }
    unknown = set(synth) - known
    if unknown:
        raise SynthConfigError(f"[synth]: unknown key(s) {sorted(unknown)}")
    sensors = tuple(
        _profile_from_section(name[len("sensor:"):], parser[name])
        for name in parser.sections()
        if name.startswith("sensor:")
    )
    extra = [name for name in parser.sections() if name != "synth" and not name.startswith("sensor:")]
    if extra:
        raise SynthConfigError(f"unknown section(s) {extra}")
    kwargs: dict = {}
    try:
        for key in ("seed", "traces", "events_per_trace", "group_size"):
            if key in synth:
                kwargs[key] = int(synth[key])
        for key in ("use_multipoints", "use_traits", "nest_groups"):
            if key in synth:
                kwargs[key] = _bool(synth[key])
        if "defects" in synth:
            kwargs["defects"] = _list(synth["defects"])
        if "start" in synth:
            start = datetime.fromisoformat(synth["start"])
            kwargs["start"] = start if start.tzinfo else start.replace(tzinfo=timezone.utc)
    except ValueError as exc:
        raise SynthConfigError(str(exc)) from None
    if sensors:
        kwargs["sensors"] = sensors
    return SynthConfig(**kwargs)


def load_config(path: str | Path) -> SynthConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


__all__ = [
    "ACTIVITIES",
    "DefectInjectionError",
    "GENERATORS",
    "InjectedDefect",
    "MUTATORS",
    "SUPPORTED_DEFECTS",
    "SensorProfile",
    "SynthConfig",
    "SynthConfigError",
    "SynthResult",
    "default_sensors",
    "generate",
    "generate_header",
    "iter_traces",
    "load_config",
    "parse_config",
]
