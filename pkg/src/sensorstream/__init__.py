"""Reference toolkit for SensorStream-enriched XES event logs.

The submodules are usable on their own: :mod:`~sensorstream.model` (domain
types), :mod:`~sensorstream.obs_spec`, :mod:`~sensorstream.xes_io`,
:mod:`~sensorstream.normalize`, :mod:`~sensorstream.validate`,
:mod:`~sensorstream.export`, :mod:`~sensorstream.synth` and the
:mod:`~sensorstream.cli`.
"""

from .export import StatsReport, export_tabular, stats
from .model import (
    ContextKind,
    Finding,
    MultiPoint,
    SemanticAnnotations,
    SensorLog,
    SensorPoint,
    SensorStreamGroup,
    SensorValue,
    Severity,
    Timestamp,
    Trace,
    classify_context,
)
from .normalize import (
    FlatPoint,
    compact_multipoints,
    expand_multipoints,
    extract_traits,
    flatten_points,
    resolve_traits,
)
from .obs_spec import ObservationSpec, SpecSyntaxError, check_value_arity, parse_observation_spec
from .synth import SensorProfile, SynthConfig, generate
from .validate import RelationCheckConfig, ValidationReport, check_relations, validate_all, validate_semantics, validate_structure
from .xes_io import ReadOptions, WriteOptions, read_log, read_log_streaming, write_log

__all__ = [
    "ContextKind",
    "Finding",
    "FlatPoint",
    "MultiPoint",
    "ObservationSpec",
    "ReadOptions",
    "RelationCheckConfig",
    "SemanticAnnotations",
    "SensorLog",
    "SensorPoint",
    "SensorProfile",
    "SensorStreamGroup",
    "SensorValue",
    "Severity",
    "SpecSyntaxError",
    "StatsReport",
    "SynthConfig",
    "Timestamp",
    "Trace",
    "ValidationReport",
    "WriteOptions",
    "check_relations",
    "check_value_arity",
    "classify_context",
    "compact_multipoints",
    "expand_multipoints",
    "export_tabular",
    "extract_traits",
    "flatten_points",
    "generate",
    "parse_observation_spec",
    "read_log",
    "read_log_streaming",
    "resolve_traits",
    "stats",
    "validate_all",
    "validate_semantics",
    "validate_structure",
    "write_log",
]
