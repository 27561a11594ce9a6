"""Tabular export (csv, jsonl) and descriptive statistics.

Both formats carry the same string cells, one record per flattened
reading. The number of ``value_c*``/``unit_c*`` columns is the widest
``observation_specification`` arity in the log (at least one).
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterator

from .model import ContextKind, SensorLog
from .normalize import FlatPoint, iter_flat_points, map_containers
from .obs_spec import ObservationSpec, SpecSyntaxError, parse_observation_spec

FORMATS = ("csv", "jsonl")

LEADING_COLUMNS = (
    "trace_index",
    "trace_name",
    "context",
    "event_index",
    "event_name",
    "group_path",
    "sensor_id",
    "source",
    "timestamp",
    "value_raw",
)
ANNOTATION_COLUMNS = (
    "system",
    "system_type",
    "interaction_type",
    "observation",
    "procedure_type",
    "procedure_transition",
    "lifecycle",
)


def _spec(flat: FlatPoint) -> ObservationSpec | None:
    text = flat.point.annotations.observation_specification
    if text is None:
        return None
    try:
        return parse_observation_spec(text)
    except SpecSyntaxError:
        return None


def max_arity(log: SensorLog) -> int:
    widest = 1
    for flat in iter_flat_points(log, strict=False):
        spec = _spec(flat)
        if spec is not None:
            widest = max(widest, spec.arity)
    return widest


def columns(arity: int) -> list[str]:
    return (
        list(LEADING_COLUMNS)
        + [f"value_c{i}" for i in range(1, arity + 1)]
        + [f"unit_c{i}" for i in range(1, arity + 1)]
        + list(ANNOTATION_COLUMNS)
    )


def _record(flat: FlatPoint, arity: int) -> dict[str, str]:
    point = flat.point
    spec = _spec(flat)
    components: tuple[str, ...] = point.value.components if point.value is not None else ()
    width = spec.arity if spec is not None else arity
    if len(components) > width:
        components = ()  # wider than declared: value_raw only
    units = spec.units if spec is not None else ()
    row = {
        "trace_index": str(flat.trace_index),
        "trace_name": flat.trace_name or "",
        "context": flat.context.value,
        "event_index": ";".join(str(e) for e in flat.event_indices),
        "event_name": ";".join(name or "" for name in flat.event_names),
        "group_path": "/".join(flat.group_path),
        "sensor_id": point.id or "",
        "source": point.source or "",
        "timestamp": (point.timestamp.utc_text() if point.timestamp is not None else None) or "",
        "value_raw": point.value.raw if point.value is not None else "",
    }
    for i in range(arity):
        row[f"value_c{i + 1}"] = components[i] if i < len(components) else ""
    for i in range(arity):
        row[f"unit_c{i + 1}"] = units[i] if i < len(units) else ""
    annotations = point.annotations
    for name in ANNOTATION_COLUMNS:
        row[name] = getattr(annotations, name) or ""
    return row


def iter_records(log: SensorLog, strict: bool = False) -> Iterator[dict[str, str]]:
    """Export records in document order; incomplete points are skipped unless ``strict``."""
    arity = max_arity(log)
    for flat in iter_flat_points(log, strict=strict):
        yield _record(flat, arity)


def export_to(log: SensorLog, stream: IO[str], fmt: str = "csv") -> int:
    """Write the export to a text stream; returns the record count."""
    if fmt not in FORMATS:
        raise ValueError(f"unknown export format {fmt!r}, expected one of {FORMATS}")
    header = columns(max_arity(log))
    count = 0
    if fmt == "csv":
        writer = csv.DictWriter(stream, fieldnames=header, lineterminator="\r\n")
        writer.writeheader()
        for record in iter_records(log):
            writer.writerow(record)
            count += 1
    else:
        for record in iter_records(log):
            stream.write(json.dumps({k: (v if v != "" else None) for k, v in record.items()}, ensure_ascii=False))
            stream.write("\n")
            count += 1
    return count


def export_tabular(log: SensorLog, fmt: str = "csv") -> bytes:
    buffer = io.StringIO(newline="")
    export_to(log, buffer, fmt)
    return buffer.getvalue().encode("utf-8")


# ---------------------------------------------------------------------------
# Statistics


@dataclass
class SensorStats:
    points: int = 0
    median_interval_s: float | None = None


@dataclass
class StatsReport:
    traces: int = 0
    events: int = 0
    points: int = 0
    contexts: dict[str, int] = field(default_factory=dict)
    sensors: dict[str, SensorStats] = field(default_factory=dict)
    multipoint_points: int = 0
    trait_usage: dict[str, int] = field(default_factory=dict)

    @property
    def compression_ratio(self) -> float:
        """Share of readings stored inside multipoints."""
        return self.multipoint_points / self.points if self.points else 0.0

    def as_dict(self) -> dict:
        return {
            "traces": self.traces,
            "events": self.events,
            "points": self.points,
            "contexts": dict(self.contexts),
            "sensors": {
                sid: {"points": s.points, "median_interval_s": s.median_interval_s}
                for sid, s in self.sensors.items()
            },
            "multipoint_points": self.multipoint_points,
            "compression_ratio": self.compression_ratio,
            "trait_usage": dict(self.trait_usage),
        }

    def to_text(self) -> str:
        lines = [
            f"traces: {self.traces}",
            f"events: {self.events}",
            f"points: {self.points}",
            "contexts: " + ", ".join(f"{k}={v}" for k, v in self.contexts.items()),
            f"multipoint compression ratio: {self.compression_ratio:.4f}",
        ]
        for sid, s in self.sensors.items():
            interval = "n/a" if s.median_interval_s is None else f"{s.median_interval_s:.6g}s"
            lines.append(f"sensor {sid}: {s.points} point(s), median interval {interval}")
        for trait_id, n in self.trait_usage.items():
            lines.append(f"trait {trait_id}: {n} reference(s)")
        return "\n".join(lines) + "\n"


def stats(log: SensorLog) -> StatsReport:
    report = StatsReport(traces=len(log.traces))
    report.events = sum(len(trace.events) for trace in log.traces)
    contexts: Counter[str] = Counter()
    per_sensor: dict[str, list] = defaultdict(list)
    trait_usage: Counter[str] = Counter({t.id: 0 for t in log.traits})
    multipoint = 0
    for flat in iter_flat_points(log, strict=False):
        report.points += 1
        contexts[flat.context.value] += 1
        if "/multipoint[" in flat.path:
            multipoint += 1
        point = flat.point
        instant = point.timestamp.instant if point.timestamp is not None else None
        per_sensor[point.id].append((flat.trace_index, instant))  # type: ignore[index]

    # trait usage counts references as written, before resolution
    def count_refs(path, depth, points, multipoints):
        for p in points:
            trait_usage.update(p.trait_refs)
        for mp in multipoints:
            for p in mp.points:
                trait_usage.update(p.trait_refs)
        return points, multipoints

    map_containers(log, count_refs)
    report.contexts = {kind.value: contexts.get(kind.value, 0) for kind in ContextKind}
    report.multipoint_points = multipoint
    report.trait_usage = dict(trait_usage)
    for sid, samples in per_sensor.items():
        report.sensors[sid] = SensorStats(len(samples), _median_interval(samples))
    return report


def _median_interval(samples: list) -> float | None:
    """Median gap between consecutive readings of one sensor within each trace."""
    by_trace: dict[int, list] = defaultdict(list)
    for trace_index, instant in samples:
        if instant is not None:
            by_trace[trace_index].append(instant)
    gaps = []
    for instants in by_trace.values():
        instants.sort()
        gaps += [(b - a).total_seconds() for a, b in zip(instants, instants[1:])]
    return statistics.median(gaps) if gaps else None


__all__ = [
    "FORMATS",
    "SensorStats",
    "StatsReport",
    "columns",
    "export_tabular",
    "export_to",
    "iter_records",
    "max_arity",
    "stats",
]
