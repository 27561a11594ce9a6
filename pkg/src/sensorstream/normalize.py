"""Structure-preserving rewrites of SensorStream logs.

All functions take an immutable :class:`~sensorstream.model.SensorLog` and
return a new one. Points and multipoints are rewritten per *container*: the
trace itself or one ``stream:sensorstream`` node, wherever it sits.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterator

from .model import (
    EMPTY_ANNOTATIONS,
    ContextKind,
    MultiPoint,
    SemanticAnnotations,
    SensorLog,
    SensorPoint,
    SensorStreamGroup,
    SharedFields,
    Trace,
    TraitDef,
)
from .xes_io.writer import WriteOptions, serialize_points


class NormalizationError(ValueError):
    """A rewrite cannot be applied to the given log."""


class TraitResolutionError(NormalizationError):
    def __init__(self, trait_id: str, path: str) -> None:
        super().__init__(f"{path}: unknown trait id {trait_id!r}")
        self.trait_id = trait_id
        self.path = path


class GroupBy(str, Enum):
    ID_SOURCE = "id_source"
    TIMESTAMP = "timestamp"
    AUTO = "auto"


Points = tuple[SensorPoint, ...]
MultiPoints = tuple[MultiPoint, ...]
# (path, depth, points, multipoints) -> (points, multipoints)
ContainerFn = Callable[[str, int, Points, MultiPoints], tuple[Points, MultiPoints]]


# ---------------------------------------------------------------------------
# Container traversal
#
# Depths follow the writer's layout: <trace> at 1, its children at 2, an
# event's sensorstream at 3 and so on. They only matter for size decisions.


def map_containers(log: SensorLog, fn: ContainerFn) -> SensorLog:
    """Rebuild ``log`` with ``fn`` applied to every point container."""
    traces = []
    for t, trace in enumerate(log.traces):
        base = f"trace[{t}]"
        points, multipoints = fn(base, 2, trace.trace_points, trace.trace_multipoints)
        groups = tuple(_map_group(g, f"{base}/group[{i}]", 2, fn) for i, g in enumerate(trace.groups))
        events = tuple(
            replace(
                event,
                streams=tuple(
                    _map_group(g, f"{base}/event[{e}]/group[{i}]", 3, fn) for i, g in enumerate(event.streams)
                ),
            )
            if event.streams
            else event
            for e, event in enumerate(trace.events)
        )
        traces.append(
            replace(trace, trace_points=points, trace_multipoints=multipoints, groups=groups, events=events)
        )
    return replace(log, traces=tuple(traces))


def _map_group(group: SensorStreamGroup, path: str, depth: int, fn: ContainerFn) -> SensorStreamGroup:
    points, multipoints = fn(path, depth + 1, group.points, group.multipoints)
    children = tuple(
        _map_group(c, f"{path}/group[{i}]", depth + 1, fn) for i, c in enumerate(group.child_groups)
    )
    return replace(group, points=points, multipoints=multipoints, child_groups=children)


def _map_all_points(log: SensorLog, fn: Callable[[str, SensorPoint], SensorPoint]) -> SensorLog:
    """Apply ``fn`` to every plain point and every multipoint partial."""

    def container(path: str, depth: int, points: Points, multipoints: MultiPoints):
        new_points = tuple(fn(f"{path}/point[{i}]", p) for i, p in enumerate(points))
        new_multipoints = tuple(
            replace(mp, points=tuple(fn(f"{path}/multipoint[{m}]/point[{i}]", p) for i, p in enumerate(mp.points)))
            for m, mp in enumerate(multipoints)
        )
        return new_points, new_multipoints

    return map_containers(log, container)


# ---------------------------------------------------------------------------
# Traits


def _trait_annotations(
    refs: tuple[str, ...], traits: dict[str, TraitDef], path: str, strict: bool = True
) -> SemanticAnnotations:
    merged = EMPTY_ANNOTATIONS
    for ref in refs:
        trait = traits.get(ref)
        if trait is None:
            if strict:
                raise TraitResolutionError(ref, path)
            continue
        merged = merged.merged(trait.annotations)
    return merged


def resolve_traits(log: SensorLog) -> SensorLog:
    """Inline trait annotations into the referencing points.

    Traits merge in listed order (later wins), then point-local values win.
    The trait definitions stay in the log, unreferenced.
    """
    traits = log.trait_map()

    def resolve(path: str, point: SensorPoint) -> SensorPoint:
        if not point.trait_refs:
            return point
        inherited = _trait_annotations(point.trait_refs, traits, path)
        return replace(point, annotations=inherited.merged(point.annotations), trait_refs=())

    return _map_all_points(log, resolve)


def _next_trait_id(traits: list[TraitDef]) -> Iterator[str]:
    numeric = [int(t.id) for t in traits if t.id.isdigit()]
    n = max(numeric, default=0)
    taken = {t.id for t in traits}
    while True:
        n += 1
        if str(n) not in taken:
            yield str(n)


def extract_traits(log: SensorLog, min_support: int = 2) -> SensorLog:
    """Hoist annotation bundles shared by at least ``min_support`` points.

    The log is resolved first, so existing references are re-derived. A
    bundle equal to an existing trait reuses that trait, which makes the
    operation idempotent. New traits get the next free numeric ids, in
    order of first occurrence.
    """
    if min_support < 2:
        raise ValueError("min_support must be at least 2")
    resolved = resolve_traits(log)
    support: Counter[SemanticAnnotations] = Counter()

    def count(path: str, point: SensorPoint) -> SensorPoint:
        if not point.annotations.is_empty():
            support[point.annotations] += 1
        return point

    _map_all_points(resolved, count)
    traits = list(resolved.traits)
    by_bundle: dict[SemanticAnnotations, str] = {}
    for trait in traits:
        by_bundle.setdefault(trait.annotations, trait.id)
    fresh = _next_trait_id(traits)
    chosen: dict[SemanticAnnotations, str] = {}
    for bundle, n in support.items():  # insertion order = first occurrence
        if n < min_support:
            continue
        if bundle not in by_bundle:
            trait = TraitDef(next(fresh), None, bundle)
            traits.append(trait)
            by_bundle[bundle] = trait.id
        chosen[bundle] = by_bundle[bundle]

    def hoist(path: str, point: SensorPoint) -> SensorPoint:
        trait_id = chosen.get(point.annotations)
        if trait_id is None:
            return point
        return replace(point, annotations=EMPTY_ANNOTATIONS, trait_refs=(trait_id,))

    return replace(_map_all_points(resolved, hoist), traits=tuple(traits))


# ---------------------------------------------------------------------------
# Multipoints


def expand_multipoints(log: SensorLog) -> SensorLog:
    """Replace every multipoint by complete points appended to its container."""

    def expand(path: str, depth: int, points: Points, multipoints: MultiPoints):
        if not multipoints:
            return points, multipoints
        out = list(points)
        for m, mp in enumerate(multipoints):
            for i, partial in enumerate(mp.points):
                point = mp.merge(partial)
                missing = point.missing_fields()
                if missing:
                    raise NormalizationError(
                        f"{path}/multipoint[{m}]/point[{i}]: merged point lacks {', '.join(missing)}"
                    )
                out.append(point)
        return tuple(out), ()

    return map_containers(log, expand)


def _same(values: list) -> bool:
    return all(v == values[0] for v in values[1:])


def _key(point: SensorPoint, mode: GroupBy):
    if mode is GroupBy.ID_SOURCE:
        return (point.id, point.source) if point.id is not None else None
    return point.timestamp


def _make_multipoint(run: list[SensorPoint], mode: GroupBy) -> MultiPoint:
    first = run[0]
    meta = first.meta if _same([p.meta for p in run]) else None
    annotations = first.annotations if _same([p.annotations for p in run]) else EMPTY_ANNOTATIONS
    if mode is GroupBy.ID_SOURCE:
        shared = SharedFields(id=first.id, source=first.source, meta=meta, annotations=annotations)
        drop = {"id": None, "source": None}
    else:
        shared = SharedFields(timestamp=first.timestamp, meta=meta, annotations=annotations)
        drop = {"timestamp": None}
    if meta is not None:
        drop["meta"] = None
    partials = tuple(
        replace(p, annotations=EMPTY_ANNOTATIONS if not annotations.is_empty() else p.annotations, **drop)
        for p in run
    )
    return MultiPoint(shared, partials)


def _compact_container(
    points: Points, multipoints: MultiPoints, mode: GroupBy, depth: int, options: WriteOptions
) -> tuple[Points, MultiPoints]:
    kept: list[SensorPoint] = []
    made: list[MultiPoint] = []
    i = 0
    while i < len(points):
        key = _key(points[i], mode)
        j = i + 1
        while key is not None and j < len(points) and _key(points[j], mode) == key:
            j += 1
        run = list(points[i:j])
        if len(run) >= 2:
            candidate = _make_multipoint(run, mode)
            before = len(serialize_points(run, (), depth, options).encode("utf-8"))
            after = len(serialize_points((), (candidate,), depth, options).encode("utf-8"))
            if after <= before:
                made.append(candidate)
                i = j
                continue
        kept.extend(run)
        i = j
    return tuple(kept), multipoints + tuple(made)


def compact_multipoints(
    log: SensorLog, group_by: GroupBy | str = GroupBy.AUTO, options: WriteOptions | None = None
) -> SensorLog:
    """Fold maximal runs of adjacent sibling points into multipoints.

    ``id_source`` groups runs with equal sensor id and source, ``timestamp``
    groups runs with an equal timestamp, ``auto`` picks per container
    whichever gives the smaller serialization. Meta and annotations are
    hoisted into the shared part when they are equal across the run. A run
    is only folded when that does not grow its serialization under
    ``options``, so compaction never inflates a log. Existing
    multipoints are left alone.
    """
    mode = GroupBy(group_by)
    options = options or WriteOptions()

    def size(points: Points, multipoints: MultiPoints, depth: int) -> int:
        return len(serialize_points(points, multipoints, depth, options).encode("utf-8"))

    def compact(path: str, depth: int, points: Points, multipoints: MultiPoints):
        if len(points) < 2:
            return points, multipoints
        if mode is not GroupBy.AUTO:
            return _compact_container(points, multipoints, mode, depth, options)
        by_id = _compact_container(points, multipoints, GroupBy.ID_SOURCE, depth, options)
        by_ts = _compact_container(points, multipoints, GroupBy.TIMESTAMP, depth, options)
        return min((by_id, by_ts), key=lambda pm: size(pm[0], pm[1], depth))

    return map_containers(log, compact)


# ---------------------------------------------------------------------------
# Flattening


@dataclass(frozen=True, slots=True)
class FlatPoint:
    """One reading with its context resolved.

    ``point`` is complete: multipoint fields are merged in and its
    annotations are the effective ones (groups, multipoint, traits, local,
    in increasing priority), with no trait references left.
    """

    trace_index: int
    trace_name: str | None
    context: ContextKind
    event_indices: tuple[int, ...]
    event_names: tuple[str | None, ...]
    group_path: tuple[str, ...]
    path: str
    point: SensorPoint


class _Flattener:
    def __init__(self, traits: dict[str, TraitDef], strict: bool) -> None:
        self.traits = traits
        self.strict = strict

    def trace(self, trace: Trace, t: int) -> Iterator[FlatPoint]:
        base = f"trace[{t}]"
        names = tuple(e.name for e in trace.events)

        def make(context, events, group_path):
            def build(path: str, point: SensorPoint) -> FlatPoint:
                return FlatPoint(
                    t, trace.name, context, events, tuple(names[e] for e in events), group_path, path, point
                )

            return build

        yield from self.container(
            base, trace.trace_points, trace.trace_multipoints, EMPTY_ANNOTATIONS, make(ContextKind.TRACE, (), ())
        )
        for g, group in enumerate(trace.groups):
            yield from self.group(
                group, f"{base}/group[{g}]", g, (), EMPTY_ANNOTATIONS,
                lambda grp, gp: make(ContextKind.GROUP_OF_ACTIVITIES, grp.all_grouped_events(), gp),
            )
        for e, event in enumerate(trace.events):
            for g, group in enumerate(event.streams):
                yield from self.group(
                    group, f"{base}/event[{e}]/group[{g}]", g, (), EMPTY_ANNOTATIONS,
                    lambda grp, gp, e=e: make(ContextKind.SINGLE_ACTIVITY, (e,), gp),
                )

    def group(self, group, path, ordinal, parent_path, inherited, factory) -> Iterator[FlatPoint]:
        group_path = parent_path + (group.name if group.name is not None else str(ordinal),)
        inherited = inherited.merged(group.annotations)
        yield from self.container(path, group.points, group.multipoints, inherited, factory(group, group_path))
        for c, child in enumerate(group.child_groups):
            yield from self.group(child, f"{path}/group[{c}]", c, group_path, inherited, factory)

    def container(self, path, points, multipoints, inherited, build) -> Iterator[FlatPoint]:
        for i, point in enumerate(points):
            flat = self.effective(point, inherited, f"{path}/point[{i}]")
            if flat is not None:
                yield build(f"{path}/point[{i}]", flat)
        for m, mp in enumerate(multipoints):
            shared_ann = inherited.merged(mp.shared.annotations)
            for i, partial in enumerate(mp.points):
                ppath = f"{path}/multipoint[{m}]/point[{i}]"
                merged = replace(mp.merge(partial), annotations=partial.annotations)
                flat = self.effective(merged, shared_ann, ppath)
                if flat is not None:
                    yield build(ppath, flat)

    def effective(self, point: SensorPoint, inherited: SemanticAnnotations, path: str) -> SensorPoint | None:
        missing = point.missing_fields()
        if missing:
            if self.strict:
                raise NormalizationError(f"{path}: point lacks {', '.join(missing)}")
            return None
        from_traits = _trait_annotations(point.trait_refs, self.traits, path, self.strict)
        annotations = inherited.merged(from_traits).merged(point.annotations)
        if annotations == point.annotations and not point.trait_refs:
            return point
        return replace(point, annotations=annotations, trait_refs=())


def iter_flat_points(log: SensorLog, strict: bool = True) -> Iterator[FlatPoint]:
    """Lazily flatten ``log`` in model order.

    With ``strict=False`` incomplete points and unknown trait references are
    skipped instead of raising, which is what validation needs.
    """
    flattener = _Flattener(log.trait_map(), strict)
    for t, trace in enumerate(log.traces):
        yield from flattener.trace(trace, t)


def flatten_trace(
    trace: Trace, trace_index: int = 0, traits: dict[str, TraitDef] | None = None, strict: bool = True
) -> list[FlatPoint]:
    return list(_Flattener(traits or {}, strict).trace(trace, trace_index))


def flatten_points(log: SensorLog, strict: bool = True) -> list[FlatPoint]:
    """One record per sensor reading, duplicates across groups kept apart."""
    return list(iter_flat_points(log, strict))


__all__ = [
    "FlatPoint",
    "GroupBy",
    "NormalizationError",
    "TraitResolutionError",
    "compact_multipoints",
    "expand_multipoints",
    "extract_traits",
    "flatten_points",
    "flatten_trace",
    "iter_flat_points",
    "map_containers",
    "resolve_traits",
]
