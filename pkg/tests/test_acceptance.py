"""Acceptance gate: one test per criterion, each under its runtime budget.

Every test records a PASS/FAIL line that the terminal summary prints under
"acceptance criteria".
"""

from __future__ import annotations

import csv
import io
import json
import math
import random
import subprocess
import sys
import time
from collections import Counter
from contextlib import contextmanager
from dataclasses import replace
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import HealthCheck, Phase, given, settings

from sensorstream.export import export_tabular, stats
from sensorstream.model import (
    ContextKind,
    Event,
    Relation,
    RelationKind,
    SensorPoint,
    SensorStreamGroup,
    SensorValue,
    Severity,
    Timestamp,
    Trace,
    XesAttribute,
)
from sensorstream.normalize import (
    compact_multipoints,
    expand_multipoints,
    extract_traits,
    flatten_points,
    resolve_traits,
)
from sensorstream.synth import SUPPORTED_DEFECTS, SensorProfile, SynthConfig, generate, generate_header, iter_traces
from sensorstream.validate import RelationCheckConfig, check_relations, relation_results, validate_all
from sensorstream.xes_io import Dialect, WriteOptions, read_log, write_log, write_traces_to

from conftest import ACCEPTANCE_RESULTS, LISTINGS, fixture_path
from strategies import logs


@contextmanager
def criterion(name: str, budget_s: float):
    """Record the outcome of one criterion and enforce its runtime budget."""
    detail: dict = {}
    start = time.perf_counter()
    try:
        yield detail
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        ACCEPTANCE_RESULTS.append((name, False, f"{type(exc).__name__}: {exc} ({elapsed:.2f}s)".replace("\n", " ")))
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < budget_s
    facts = ", ".join(f"{k}={v}" for k, v in detail.items())
    ACCEPTANCE_RESULTS.append((name, ok, f"{facts}; {elapsed:.2f}s of {budget_s:g}s budget"))
    assert ok, f"{name} took {elapsed:.2f}s, budget {budget_s}s"


def synthetic(seed: int, **extra):
    """Seeded synthetic log with options varying by seed."""
    options = {
        "use_multipoints": seed % 2 == 1,
        "use_traits": seed % 3 == 1,
        "nest_groups": seed % 5 == 2,
        "events_per_trace": 2 + seed % 5,
        "traces": 1 + seed % 3,
    }
    options.update(extra)
    return generate(SynthConfig(seed=seed, **options)).log


def exhaust(strategy, examples: int, check) -> int:
    """Run ``check`` on ``examples`` hypothesis-drawn values, return the count."""
    seen = [0]

    @settings(
        max_examples=examples,
        database=None,
        derandomize=True,
        deadline=None,
        phases=[Phase.generate],
        suppress_health_check=list(HealthCheck),
    )
    @given(strategy)
    def run(value):
        seen[0] += 1
        check(value)

    run()
    return seen[0]


# -- 1 -----------------------------------------------------------------------


def _shape_checks():
    def group_points(log):
        return log.traces[0].events[0].streams[0].points

    def listing1(log):
        assert len(log.traces[0].events) == 2
        assert not log.has_stream_content()

    def listing2(log):
        (trace,) = log.traces
        (outer,) = trace.groups
        assert len(trace.trace_points) == 1
        assert [g.grouped_events for g in outer.child_groups] == [(0, 1), (2, 3)]

    def listing3(log):
        (mp,) = log.traces[0].events[0].streams[0].multipoints
        assert (mp.shared.id, mp.shared.source, len(mp.points)) == ("keyence/mesurement", "keyence", 2)

    def listing4(log):
        (mp,) = log.traces[0].events[0].streams[0].multipoints
        assert mp.shared.timestamp is not None and len(mp.points) == 2

    def listing5(log):
        assert log.traces == ()
        assert any(ext.prefix == "stream" for ext in log.extensions)

    def listing6(log):
        first = group_points(log)[0]
        assert first.relations[0].relation_kind is RelationKind.INCREASE

    def listing7(log):
        assert log.traces[0].events[0].name == "calibrating motor 3"
        assert len(group_points(log)) == 4

    def listing8(log):
        points = group_points(log)
        assert len(points) >= 3
        assert all(p.annotations.observation_specification.startswith("[x,y,z]") for p in points)
        assert all(len(p.value.parsed) == 3 for p in points)
        assert all(f.context is ContextKind.SINGLE_ACTIVITY for f in flatten_points(log))

    def listing9(log):
        (point,) = group_points(log)
        assert point.annotations.interaction_type == "sosa:Actuation"

    def listing10(log):
        assert [t.id for t in log.traits] == ["1", "2"]
        assert log.traces[0].trace_points[0].trait_refs == ("1", "2")

    return {
        1: listing1,
        2: listing2,
        3: listing3,
        4: listing4,
        5: listing5,
        6: listing6,
        7: listing7,
        8: listing8,
        9: listing9,
        10: listing10,
    }


def test_criterion_1_fixture_fidelity():
    checks = _shape_checks()
    with criterion("1 fixture fidelity", 1.0) as detail:
        for n in LISTINGS:
            log, findings = read_log(fixture_path(n))
            assert not [f for f in findings if f.severity is Severity.ERROR]
            assert not validate_all(log, read_findings=findings).errors, n
            checks[n](log)
        detail["fixtures"] = len(LISTINGS)


# -- 2 -----------------------------------------------------------------------


def test_criterion_2_roundtrip():
    with criterion("2 roundtrip", 30.0) as detail:
        models = [read_log(fixture_path(n))[0] for n in LISTINGS]
        models += [synthetic(seed) for seed in range(200)]
        for i, log in enumerate(models):
            dialect = Dialect.ELEMENT_FORM if i % 2 else Dialect.ATTRIBUTE_FORM
            back, findings = read_log(io.BytesIO(write_log(log, WriteOptions(dialect=dialect))))
            assert not findings
            assert back == log, i
            # equality covers SensorValue.raw and Timestamp.original_text; check them directly too
            assert [(f.point.value.raw, f.point.timestamp.original_text) for f in flatten_points(back)] == [
                (f.point.value.raw, f.point.timestamp.original_text) for f in flatten_points(log)
            ]
        detail["models"] = len(models)


# -- 3 -----------------------------------------------------------------------


def _bag(log):
    return Counter(
        (f.point.id, f.point.source, f.point.timestamp, f.point.value.raw, f.point.annotations)
        for f in flatten_points(log)
    )


def test_criterion_3_normalization_algebra():
    def expand_compact_expand(log):
        expanded = expand_multipoints(log)
        for mode in ("id_source", "timestamp", "auto"):
            assert _bag(expand_multipoints(compact_multipoints(expanded, mode))) == _bag(expanded)

    def traits_preserve_annotations(log):
        before = [(f.path, f.point.annotations) for f in flatten_points(log)]
        after = [(f.path, f.point.annotations) for f in flatten_points(resolve_traits(extract_traits(log)))]
        assert after == before

    with criterion("3 normalization algebra", 60.0) as detail:
        detail["expand_compact_logs"] = exhaust(logs(), 100, expand_compact_expand)
        detail["trait_logs"] = exhaust(logs(), 100, traits_preserve_annotations)
        assert detail["expand_compact_logs"] == detail["trait_logs"] == 100


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_validator_sensitivity_specificity():
    with criterion("4 validator sensitivity/specificity", 30.0) as detail:
        for seed in range(100):
            report = validate_all(synthetic(seed))
            assert report.errors == [], (seed, report.errors)
        for i, rule in enumerate(SUPPORTED_DEFECTS):
            result = generate(SynthConfig(seed=1000 + i, traces=2, defects=(rule,)))
            (defect,) = result.defects
            findings = validate_all(result.log).findings
            hits = [f for f in findings if f.rule_id == rule]
            assert [(f.rule_id, f.path) for f in hits] == [(rule, defect.path)], rule
            others = [f for f in findings if f.severity is Severity.ERROR and f.rule_id != rule]
            assert others == [], (rule, others)
        detail["clean_logs"] = 100
        detail["rules"] = len(SUPPORTED_DEFECTS)


# -- 5 -----------------------------------------------------------------------

T0 = datetime(2022, 3, 1, tzinfo=timezone.utc)


def _pair_trace(a, b, kind, b_offset=0.0, b_step=1.0):
    rel = (Relation(kind.value, "B"),)
    text = lambda i, step, off: Timestamp((T0 + timedelta(seconds=off + i * step)).isoformat(timespec="microseconds"))
    pts = [SensorPoint("A", text(i, 1.0, 0.0), SensorValue(repr(x)), relations=rel) for i, x in enumerate(a)]
    pts += [SensorPoint("B", text(i, b_step, b_offset), SensorValue(repr(y))) for i, y in enumerate(b)]
    return Trace(events=(Event(streams=(SensorStreamGroup(points=tuple(pts)),)),))


def _agreement(trace):
    (result,) = relation_results(trace)
    return result.agreement


def test_criterion_5_relation_checking():
    config = RelationCheckConfig(agreement_threshold=0.8)
    with criterion("5 relation checking", 10.0) as detail:
        co = _pair_trace([1, 2, 3, 4], [10, 20, 30, 40], RelationKind.INCREASE)
        assert _agreement(co) == 1.0
        assert [f.rule_id for f in check_relations(co, config)] == []
        anti = _pair_trace([1, 2, 3, 4], [40, 30, 20, 10], RelationKind.INCREASE)
        findings = check_relations(anti, config)
        assert [f.rule_id for f in findings] == ["SS-201"]
        assert _agreement(anti) == 0.0
        detail["anti_agreement"] = _agreement(anti)
        rng = random.Random("relation-duality")
        for _ in range(50):
            n = rng.randint(5, 40)
            a = [round(sum(rng.gauss(0, 1) for _ in range(k)), 3) for k in range(n)]
            b = [round(sum(rng.gauss(0, 1) for _ in range(k)), 3) for k in range(2 * n)]
            neg = [-y for y in b]
            # B is sampled twice as often and off-grid, so pairing interpolates
            offset = rng.choice([0.0, 0.25, 0.3])
            for kind, dual in ((RelationKind.INCREASE, RelationKind.DECREASE), (RelationKind.DECREASE, RelationKind.INCREASE)):
                plain = _agreement(_pair_trace(a, b, kind, offset, 0.5))
                negated = _agreement(_pair_trace(a, neg, dual, offset, 0.5))
                assert plain == negated
        detail["walks"] = 50


# -- 6 -----------------------------------------------------------------------


def test_criterion_6_export_consistency():
    with criterion("6 export consistency", 20.0) as detail:
        models = [read_log(fixture_path(n))[0] for n in LISTINGS]
        models += [synthetic(seed) for seed in range(50)]
        for log in models:
            rows = list(csv.DictReader(io.StringIO(export_tabular(log, "csv").decode(), newline="")))
            lines = export_tabular(log, "jsonl").decode().splitlines()
            assert len(rows) == len(lines) == stats(log).points
            assert rows == [{k: v or "" for k, v in json.loads(line).items()} for line in lines]
        detail["logs"] = len(models)


# -- 7 -----------------------------------------------------------------------


def test_criterion_7_compaction_never_inflates():
    meta = (XesAttribute("string", "station", "press 1"), XesAttribute("string", "calibration", "2021-06-01"))
    with criterion("7 compaction size", 20.0) as detail:
        for seed in range(50):
            sensors = (
                SensorProfile("line/press/force", rate=1 + seed % 4, source="plc_1", meta=meta),
                SensorProfile("line/press/temp", rate=2, source="plc_1", meta=meta, context="group"),
                SensorProfile("line/belt/speed", rate=3, meta=meta[:1], context="trace"),
            )
            log = generate(SynthConfig(seed=seed, traces=2, events_per_trace=4, sensors=sensors)).log
            before = len(write_log(log))
            for mode in ("id_source", "timestamp", "auto"):
                assert len(write_log(compact_multipoints(log, mode))) <= before, (seed, mode)
        uniform = SensorProfile("line/press/force", rate=100, source="plc_1", meta=meta)
        log = generate(SynthConfig(seed=1, events_per_trace=100, sensors=(uniform,))).log
        assert stats(log).points == 10_000
        before = len(write_log(log))
        after = len(write_log(compact_multipoints(log)))
        reduction = 1 - after / before
        detail["uniform_reduction"] = f"{reduction:.1%}"
        assert reduction >= 0.20


# -- 8 -----------------------------------------------------------------------

_PROBE = r"""
import hashlib, json, resource, sys
from dataclasses import replace
from sensorstream.xes_io import read_log, read_log_streaming

mode, path = sys.argv[1], sys.argv[2]
traces = hashlib.sha256()
if mode == "whole":
    log, _ = read_log(path)
    header = replace(log, traces=())
    for trace in log.traces:
        traces.update(repr(trace).encode())
    count = len(log.traces)
else:
    count = 0
    def seen(trace):
        global count
        traces.update(repr(trace).encode())
        count += 1
    header = read_log_streaming(path, seen).header
peak_kib = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
print(json.dumps({
    "header": hashlib.sha256(repr(header).encode()).hexdigest(),
    "traces": traces.hexdigest(),
    "count": count,
    "peak_kib": peak_kib,
}))
"""


def _probe(mode: str, path) -> dict:
    proc = subprocess.run([sys.executable, "-c", _PROBE, mode, str(path)], capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


@pytest.mark.slow
def test_criterion_8_streaming_equivalence(tmp_path):
    target = 100 * 2**20
    path = tmp_path / "big.xes"
    with criterion("8 streaming equivalence", 180.0) as detail:
        probe = SynthConfig(seed=8, traces=20, events_per_trace=10, use_traits=True)
        per_trace = len(write_log(generate(probe).log)) / probe.traces
        config = replace(probe, traces=math.ceil(target * 1.1 / per_trace))
        with open(path, "wb") as out:
            write_traces_to(generate_header(config), iter_traces(config), out)
        size = path.stat().st_size
        assert size >= target
        whole = _probe("whole", path)
        streaming = _probe("stream", path)
        assert whole["count"] == streaming["count"] == config.traces
        assert whole["header"] == streaming["header"]
        assert whole["traces"] == streaming["traces"]
        ratio = streaming["peak_kib"] / whole["peak_kib"]
        detail["size_mb"] = f"{size / 2**20:.1f}"
        detail["traces"] = config.traces
        detail["peak_whole_mb"] = f"{whole['peak_kib'] / 1024:.0f}"
        detail["peak_stream_mb"] = f"{streaming['peak_kib'] / 1024:.0f}"
        detail["ratio"] = f"{ratio:.1%}"
        assert ratio < 0.25
