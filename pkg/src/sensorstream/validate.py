"""Rule-driven validation of SensorStream logs.

Three validators share one rule registry: structural rules (``SS-0xx``),
vocabulary rules (``SS-1xx``) and time-series checks of declared
``stream:relation`` expectations (``SS-2xx``). The reader reports its own
irregularities with ``SS-3xx`` ids from the same registry.

Validators never modify the log and return findings in document order.
"""

from __future__ import annotations

import bisect
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import timedelta
from typing import Iterable, Iterator

from .model import (
    Finding,
    InteractionType,
    LifecyclePhase,
    MultiPoint,
    ProcedureTransition,
    ProcedureType,
    RelationKind,
    SemanticAnnotations,
    SensorLog,
    SensorPoint,
    SensorStreamGroup,
    Severity,
    SosaSystemType,
    Timestamp,
    Trace,
    TraitDef,
    iter_paths,
)
from .normalize import FlatPoint, flatten_trace
from .obs_spec import SpecSyntaxError, check_value_arity, parse_observation_spec


@dataclass(frozen=True, slots=True)
class Rule:
    rule_id: str
    severity: Severity
    description: str
    citation: str


class RuleRegistry:
    """The published rule set; ids are stable."""

    def __init__(self, rules: Iterable[Rule]) -> None:
        self._rules = {rule.rule_id: rule for rule in rules}

    @property
    def rules(self) -> list[Rule]:
        return list(self._rules.values())

    def __contains__(self, rule_id: object) -> bool:
        return rule_id in self._rules

    def __getitem__(self, rule_id: str) -> Rule:
        return self._rules[rule_id]

    def finding(self, rule_id: str, path: str, message: str) -> Finding:
        return Finding(self._rules[rule_id].severity, rule_id, path, message)


E, W, I = Severity.ERROR, Severity.WARNING, Severity.INFO

REGISTRY = RuleRegistry(
    [
        Rule("SS-001", E, "trace-level sensorstream groups fewer than 2 events", "SensorStreamGroup, trace level"),
        Rule("SS-002", E, "sensorstream contains no point", "SensorStreamGroup"),
        Rule("SS-003", E, "point lacks id, timestamp or value", "SensorPoint"),
        Rule("SS-004", E, "event-level sensorstream groups events", "SensorStreamGroup, event level"),
        Rule("SS-005", E, "partial point repeats a field shared by its multipoint", "MultiPoint"),
        Rule("SS-006", E, "trait reference does not resolve", "SensorLog.traits"),
        Rule("SS-007", W, "SensorStream content without a stream extension declaration", "SensorLog.extensions"),
        Rule("SS-008", E, "timestamp is not ISO 8601 with milli- or microseconds", "Timestamp"),
        Rule("SS-009", I, "timestamp has no UTC offset, read as UTC", "Timestamp"),
        Rule("SS-101", E, "annotation token outside its vocabulary", "SemanticAnnotations"),
        Rule("SS-102", E, "observation_specification does not parse", "ObservationSpec"),
        Rule("SS-103", W, "value arity differs from observation_specification", "ObservationSpec"),
        Rule("SS-104", W, "annotation IRI is not an absolute IRI", "SemanticAnnotations"),
        Rule("SS-105", W, "relation target sensor never observed in the trace", "Relation"),
        Rule("SS-201", W, "relation agreement below threshold", "Relation"),
        Rule("SS-202", I, "too few aligned pairs to check a relation", "Relation"),
        Rule("SS-203", W, "relation series not numeric, check skipped", "Relation"),
        Rule("SS-301", W, "unknown SensorStream key while reading", "reader"),
        Rule("SS-302", W, "unexpected or misplaced content while reading", "reader"),
        Rule("SS-303", W, "content not in the requested dialect", "reader"),
    ]
)


@dataclass(frozen=True, slots=True)
class RelationCheckConfig:
    alignment_window: timedelta = timedelta(seconds=1)
    min_pairs: int = 3
    agreement_threshold: float = 0.8

    def __post_init__(self) -> None:
        if self.min_pairs < 2:
            raise ValueError("min_pairs must be at least 2")
        if not 0 < self.agreement_threshold <= 1:
            raise ValueError("agreement_threshold must be in (0, 1]")
        if self.alignment_window < timedelta(0):
            raise ValueError("alignment_window must not be negative")


# ---------------------------------------------------------------------------
# Structure


def _points_in(path: str, points, multipoints) -> Iterator[tuple[str, SensorPoint, MultiPoint | None]]:
    for i, point in enumerate(points):
        yield f"{path}/point[{i}]", point, None
    for m, mp in enumerate(multipoints):
        for i, partial in enumerate(mp.points):
            yield f"{path}/multipoint[{m}]/point[{i}]", partial, mp


def _walk_groups(path: str, groups) -> Iterator[tuple[str, SensorStreamGroup]]:
    for g, group in enumerate(groups):
        gpath = f"{path}/group[{g}]"
        yield gpath, group
        yield from _walk_groups(gpath, group.child_groups)


def _containers(trace: Trace, t: int) -> Iterator[tuple[str, tuple, tuple, SensorStreamGroup | None, bool]]:
    """(path, points, multipoints, group, at_trace_level) for every container."""
    base = f"trace[{t}]"
    yield base, trace.trace_points, trace.trace_multipoints, None, True
    for gpath, group in _walk_groups(base, trace.groups):
        yield gpath, group.points, group.multipoints, group, True
    for e, event in enumerate(trace.events):
        for gpath, group in _walk_groups(f"{base}/event[{e}]", event.streams):
            yield gpath, group.points, group.multipoints, group, False


def _timestamp_findings(timestamp: Timestamp | None, path: str) -> list[Finding]:
    if timestamp is None:
        return []
    if not timestamp.well_formed:
        return [REGISTRY.finding("SS-008", path, f"timestamp {timestamp.original_text!r} is not ISO 8601 with milli- or microseconds")]
    if not timestamp.offset_present:
        return [REGISTRY.finding("SS-009", path, f"timestamp {timestamp.original_text!r} has no UTC offset; read as UTC")]
    return []


def _structure_trace(trace: Trace, t: int, trait_ids: frozenset[str]) -> list[Finding]:
    findings: list[Finding] = []
    for path, points, multipoints, group, trace_level in _containers(trace, t):
        if group is not None:
            if group.point_count() == 0:
                findings.append(REGISTRY.finding("SS-002", path, "sensorstream contains no point"))
            grouped = group.all_grouped_events()
            if trace_level and len(grouped) < 2:
                findings.append(
                    REGISTRY.finding("SS-001", path, f"trace-level sensorstream groups {len(grouped)} event(s), needs at least 2")
                )
            if not trace_level and group.grouped_events:
                findings.append(
                    REGISTRY.finding("SS-004", path, f"event-level sensorstream groups events {list(group.grouped_events)}")
                )
        for m, mp in enumerate(multipoints):
            findings += _timestamp_findings(mp.shared.timestamp, f"{path}/multipoint[{m}]")
        for ppath, point, mp in _points_in(path, points, multipoints):
            complete = mp.merge(point) if mp is not None else point
            missing = complete.missing_fields()
            if missing:
                findings.append(REGISTRY.finding("SS-003", ppath, f"point lacks {', '.join(missing)}"))
            if mp is not None:
                for name in mp.duplicated_fields(point):
                    findings.append(
                        REGISTRY.finding("SS-005", ppath, f"stream:{name} is already shared by the multipoint")
                    )
            for ref in point.trait_refs:
                if ref not in trait_ids:
                    findings.append(REGISTRY.finding("SS-006", ppath, f"trait {ref!r} is not defined"))
            findings += _timestamp_findings(point.timestamp, ppath)
    return findings


def _structure_log(log: SensorLog) -> list[Finding]:
    if log.has_stream_content() and not any(ext.prefix == "stream" for ext in log.extensions):
        return [REGISTRY.finding("SS-007", "log", "SensorStream content present but no 'stream' extension declared")]
    return []


# ---------------------------------------------------------------------------
# Semantics

_IRI = re.compile(r"[A-Za-z][A-Za-z0-9+.\-]*:[^\s<>\"{}|\\^`]+")
_VOCAB_PREFIXES = ("sosa:", "ssn:", "stream:")

_ENUM_FIELDS = {
    "interaction_type": InteractionType,
    "procedure_type": ProcedureType,
    "procedure_transition": ProcedureTransition,
    "lifecycle": LifecyclePhase,
}
_IRI_FIELDS = ("system", "observation", "procedure")


def _is_vocab_token(text: str) -> bool:
    return ":" not in text or text.startswith(_VOCAB_PREFIXES)


def _annotation_findings(annotations: SemanticAnnotations, path: str) -> list[Finding]:
    findings: list[Finding] = []
    for name, enum in _ENUM_FIELDS.items():
        token = getattr(annotations, name)
        if token is not None and enum.parse(token) is None:
            findings.append(
                REGISTRY.finding(
                    "SS-101", path, f"{name} {token!r} is not one of {{{', '.join(enum.tokens())}}}"
                )
            )
    system_type = annotations.system_type
    if system_type is not None:
        if _is_vocab_token(system_type):
            if SosaSystemType.parse(system_type) is None:
                findings.append(
                    REGISTRY.finding(
                        "SS-101",
                        path,
                        f"system_type {system_type!r} is neither an IRI nor one of {{{', '.join(SosaSystemType.tokens())}}}",
                    )
                )
        elif not _IRI.fullmatch(system_type):
            findings.append(REGISTRY.finding("SS-104", path, f"system_type {system_type!r} is not an absolute IRI"))
    for name in _IRI_FIELDS:
        value = getattr(annotations, name)
        if value is not None and not _IRI.fullmatch(value):
            findings.append(REGISTRY.finding("SS-104", path, f"{name} {value!r} is not an absolute IRI"))
    spec = annotations.observation_specification
    if spec is not None:
        try:
            parse_observation_spec(spec)
        except SpecSyntaxError as exc:
            findings.append(
                REGISTRY.finding("SS-102", path, f"observation_specification {spec!r}: {exc.reason} at offset {exc.offset}")
            )
    return findings


def _spec_arity_finding(flat: FlatPoint) -> Finding | None:
    spec_text = flat.point.annotations.observation_specification
    if spec_text is None or flat.point.value is None:
        return None
    try:
        spec = parse_observation_spec(spec_text)
    except SpecSyntaxError:
        return None  # reported as SS-102 where it is written
    result = check_value_arity(spec, flat.point.value)
    if result:
        return None
    found = "an unreadable value" if result.found is None else f"{result.found} component(s)"
    return REGISTRY.finding(
        "SS-103", flat.path, f"observation_specification expects {result.expected} component(s), value has {found}"
    )


def _semantics_trace(trace: Trace, t: int, traits: dict[str, TraitDef]) -> list[Finding]:
    findings: list[Finding] = []
    for path, points, multipoints, group, _ in _containers(trace, t):
        if group is not None:
            findings += _annotation_findings(group.annotations, path)
        for m, mp in enumerate(multipoints):
            findings += _annotation_findings(mp.shared.annotations, f"{path}/multipoint[{m}]")
        for ppath, point, _mp in _points_in(path, points, multipoints):
            findings += _annotation_findings(point.annotations, ppath)
            for relation in point.relations:
                if relation.relation_kind is None:
                    findings.append(
                        REGISTRY.finding(
                            "SS-101", ppath, f"relation kind {relation.kind!r} is not one of {{{', '.join(RelationKind.tokens())}}}"
                        )
                    )
    flats = flatten_trace(trace, t, traits, strict=False)
    observed = {flat.point.id for flat in flats}
    for flat in flats:
        arity = _spec_arity_finding(flat)
        if arity is not None:
            findings.append(arity)
        for relation in flat.point.relations:
            if relation.target_sensor_id not in observed:
                findings.append(
                    REGISTRY.finding(
                        "SS-105", flat.path, f"relation target {relation.target_sensor_id!r} is never observed in this trace"
                    )
                )
    return findings


def _semantics_log(log: SensorLog) -> list[Finding]:
    findings: list[Finding] = []
    for i, trait in enumerate(log.traits):
        findings += _annotation_findings(trait.annotations, f"trait[{i}]")
    return findings


# ---------------------------------------------------------------------------
# Relations


@dataclass(frozen=True, slots=True)
class RelationResult:
    sensor_id: str
    kind: RelationKind
    target_sensor_id: str
    path: str
    pairs: int
    agreement: float | None
    numeric: bool = True


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _series(flats: list[FlatPoint], sensor_id: str):
    """Time-ordered (instant, number) samples; None when a value is not numeric."""
    seen = set()
    samples = []
    for flat in flats:
        point = flat.point
        if point.id != sensor_id or point.timestamp is None or point.timestamp.instant is None:
            continue
        key = (point.timestamp.original_text, point.value.raw)  # type: ignore[union-attr]
        if key in seen:
            continue  # the same reading duplicated across overlapping groups
        seen.add(key)
        number = point.value.as_number()  # type: ignore[union-attr]
        if number is None:
            return None
        samples.append((point.timestamp.instant, number))
    samples.sort(key=lambda s: s[0])
    return samples


def _value_at(samples, times, instant, window: timedelta) -> float | None:
    """Target value at ``instant``: exact, interpolated or nearest within ``window``."""
    i = bisect.bisect_left(times, instant)
    if i < len(times) and times[i] == instant:
        return samples[i][1]
    before = samples[i - 1] if i > 0 else None
    after = samples[i] if i < len(samples) else None
    near_before = before is not None and instant - before[0] <= window
    near_after = after is not None and after[0] - instant <= window
    if near_before and near_after:
        span = (after[0] - before[0]).total_seconds()  # type: ignore[index]
        frac = (instant - before[0]).total_seconds() / span  # type: ignore[index]
        return before[1] + frac * (after[1] - before[1])  # type: ignore[index]
    if near_before:
        return before[1]  # type: ignore[index]
    if near_after:
        return after[1]  # type: ignore[index]
    return None


def relation_agreement(a, b, kind: RelationKind, window: timedelta) -> tuple[int, float | None]:
    """Pair count and agreement of series ``a`` against ``b`` for ``kind``.

    Series are time-ordered ``(instant, number)`` lists. Zero deltas of ``a``
    are left out; ``alternating`` looks at ``a`` alone.
    """
    deltas = [(a[i][0], a[i + 1][0], a[i + 1][1] - a[i][1]) for i in range(len(a) - 1)]
    deltas = [d for d in deltas if d[2] != 0]
    if kind is RelationKind.ALTERNATING:
        pairs = len(deltas) - 1
        if pairs <= 0:
            return 0, None
        hits = sum(_sign(deltas[i][2]) != _sign(deltas[i + 1][2]) for i in range(pairs))
        return pairs, hits / pairs
    times = [s[0] for s in b]
    sign = 1 if kind is RelationKind.INCREASE else -1
    pairs = hits = 0
    for start, end, delta_a in deltas:
        b0 = _value_at(b, times, start, window)
        b1 = _value_at(b, times, end, window)
        if b0 is None or b1 is None:
            continue
        pairs += 1
        hits += _sign(b1 - b0) == sign * _sign(delta_a)
    return pairs, (hits / pairs if pairs else None)


def relation_results(trace: Trace, config: RelationCheckConfig | None = None, trace_index: int = 0) -> list[RelationResult]:
    """Evaluate every declared relation of ``trace`` once per (sensor, kind, target)."""
    config = config or RelationCheckConfig()
    flats = flatten_trace(trace, trace_index, strict=False)
    observed = {flat.point.id for flat in flats}
    declared: dict[tuple[str, RelationKind, str], str] = {}
    for flat in flats:
        for relation in flat.point.relations:
            kind = relation.relation_kind
            if kind is None or relation.target_sensor_id not in observed:
                continue  # reported by validate_semantics
            declared.setdefault((flat.point.id, kind, relation.target_sensor_id), flat.path)  # type: ignore[arg-type]
    results = []
    for (sensor, kind, target), path in declared.items():
        a = _series(flats, sensor)
        b = _series(flats, target) if kind is not RelationKind.ALTERNATING else []
        if a is None or b is None:
            results.append(RelationResult(sensor, kind, target, path, 0, None, numeric=False))
            continue
        pairs, agreement = relation_agreement(a, b, kind, config.alignment_window)
        results.append(RelationResult(sensor, kind, target, path, pairs, agreement))
    return results


def check_relations(trace: Trace, config: RelationCheckConfig | None = None, trace_index: int = 0) -> list[Finding]:
    config = config or RelationCheckConfig()
    findings = []
    for r in relation_results(trace, config, trace_index):
        what = f"{r.kind.value} relation of {r.sensor_id!r} to {r.target_sensor_id!r}"
        if not r.numeric:
            findings.append(REGISTRY.finding("SS-203", r.path, f"{what}: series not numeric, check skipped"))
        elif r.pairs < config.min_pairs:
            findings.append(
                REGISTRY.finding("SS-202", r.path, f"{what}: {r.pairs} pair(s), fewer than {config.min_pairs}; inconclusive")
            )
        elif r.agreement is not None and r.agreement < config.agreement_threshold:
            findings.append(
                REGISTRY.finding(
                    "SS-201",
                    r.path,
                    f"{what}: agreement {r.agreement:.3f} over {r.pairs} pairs is below {config.agreement_threshold}",
                )
            )
    return findings


# ---------------------------------------------------------------------------
# Entry points


def _order(log: SensorLog, findings: list[Finding]) -> list[Finding]:
    position = {path: i for i, path in enumerate(iter_paths(log))}
    return sorted(findings, key=lambda f: (position.get(f.path, -1), f.rule_id))


def validate_structure(log: SensorLog) -> list[Finding]:
    trait_ids = frozenset(t.id for t in log.traits)
    findings = _structure_log(log)
    for t, trace in enumerate(log.traces):
        findings += _structure_trace(trace, t, trait_ids)
    return _order(log, findings)


def validate_semantics(log: SensorLog) -> list[Finding]:
    traits = log.trait_map()
    findings = _semantics_log(log)
    for t, trace in enumerate(log.traces):
        findings += _semantics_trace(trace, t, traits)
    return _order(log, findings)


def _validate_trace(args) -> list[Finding]:
    trace, t, traits, config = args
    return (
        _structure_trace(trace, t, frozenset(traits))
        + _semantics_trace(trace, t, traits)
        + check_relations(trace, config, t)
    )


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def counts_by_severity(self) -> dict[str, int]:
        counts = Counter(f.severity.value for f in self.findings)
        return {s.value: counts.get(s.value, 0) for s in Severity}

    @property
    def counts_by_rule(self) -> dict[str, int]:
        return dict(sorted(Counter(f.rule_id for f in self.findings).items()))

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity is Severity.ERROR]

    def exit_status(self, strict_warnings: bool = False) -> int:
        counts = self.counts_by_severity
        if counts["error"]:
            return 2
        if strict_warnings and counts["warning"]:
            return 1
        return 0

    def to_records(self) -> list[dict[str, str]]:
        return [f.as_record() for f in self.findings]

    def to_text(self) -> str:
        lines = [str(f) for f in self.findings]
        counts = self.counts_by_severity
        lines.append(
            f"{len(self.findings)} finding(s): "
            + ", ".join(f"{counts[s.value]} {s.value}" for s in Severity)
        )
        return "\n".join(lines) + "\n"


def validate_all(
    log: SensorLog,
    config: RelationCheckConfig | None = None,
    jobs: int = 1,
    read_findings: Iterable[Finding] = (),
) -> ValidationReport:
    """Run all validators; ``read_findings`` from the reader are merged in.

    With ``jobs > 1`` traces are validated in worker processes; the merged
    result is identical to the sequential one.
    """
    config = config or RelationCheckConfig()
    traits = log.trait_map()
    findings = list(read_findings) + _structure_log(log) + _semantics_log(log)
    work = [(trace, t, traits, config) for t, trace in enumerate(log.traces)]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for part in pool.map(_validate_trace, work, chunksize=max(1, len(work) // (4 * jobs))):
                findings += part
    else:
        for item in work:
            findings += _validate_trace(item)
    return ValidationReport(_order(log, findings))


__all__ = [
    "REGISTRY",
    "RelationCheckConfig",
    "RelationResult",
    "Rule",
    "RuleRegistry",
    "ValidationReport",
    "check_relations",
    "relation_agreement",
    "relation_results",
    "validate_all",
    "validate_semantics",
    "validate_structure",
]
