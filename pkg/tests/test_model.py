from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sensorstream.model import (
    ContextKind,
    InteractionType,
    LocationError,
    MultiPoint,
    ProcedureType,
    RelationKind,
    SemanticAnnotations,
    SensorPoint,
    SensorValue,
    SharedFields,
    SosaSystemType,
    Timestamp,
    ValueKind,
    classify_context,
    iter_paths,
    locate,
)

from conftest import load_listing
from strategies import logs, model_settings


class TestTimestamp:
    def test_offset_free_text_is_utc(self):
        ts = Timestamp("2021-06-25T17:08:50.414718")
        assert ts.well_formed
        assert not ts.offset_present
        assert ts.instant == datetime(2021, 6, 25, 17, 8, 50, 414718, tzinfo=timezone.utc)

    def test_offset_is_applied(self):
        ts = Timestamp("2021-11-04T15:22:19.367+01:00")
        assert ts.offset_present
        assert ts.utc_text() == "2021-11-04T14:22:19.367000Z"

    def test_equality_uses_text_only(self):
        a = Timestamp("2021-01-01T00:00:00.000Z")
        b = Timestamp("2021-01-01T01:00:00.000+01:00")
        assert a.instant == b.instant
        assert a != b
        assert len({a, Timestamp("2021-01-01T00:00:00.000Z")}) == 1

    @pytest.mark.parametrize("text", ["yesterday", "", "2021-13-40T00:00:00.000Z"])
    def test_garbage_is_kept(self, text):
        ts = Timestamp(text)
        assert ts.instant is None
        assert not ts.well_formed
        assert ts.utc_text() is None
        assert ts.original_text == text

    def test_missing_fraction_parses_but_is_not_well_formed(self):
        ts = Timestamp("2021-06-25T17:08:50Z")
        assert ts.instant is not None
        assert not ts.well_formed

    @given(st.datetimes(min_value=datetime(1971, 1, 1), max_value=datetime(2200, 1, 1)),
           st.integers(-14 * 60, 14 * 60))
    def test_rendered_instants_parse_back(self, moment, minutes):
        zone = timezone(timedelta(minutes=minutes))
        aware = moment.replace(tzinfo=zone)
        text = aware.isoformat(timespec="microseconds")
        ts = Timestamp(text)
        assert ts.well_formed
        assert ts.instant == aware


class TestValueLadder:
    @pytest.mark.parametrize(
        "raw, kind, parsed",
        [
            ("19", ValueKind.NUMBER, 19),
            ("-3", ValueKind.NUMBER, -3),
            ("0.0", ValueKind.NUMBER, 0.0),
            ("1e3", ValueKind.NUMBER, 1000.0),
            ("true", ValueKind.BOOLEAN, True),
            ("False", ValueKind.BOOLEAN, False),
            ("[-0.721, -10.2483, -0.7114]", ValueKind.VECTOR, (-0.721, -10.2483, -0.7114)),
            ("12:30-1,12:31-2,3,4,5", ValueKind.TEXT, "12:30-1,12:31-2,3,4,5"),
            ("[a, b]", ValueKind.OPAQUE, "[a, b]"),
            ("", ValueKind.OPAQUE, ""),
        ],
    )
    def test_kinds(self, raw, kind, parsed):
        value = SensorValue(raw)
        assert value.kind is kind
        assert value.parsed == parsed
        assert value.raw == raw

    def test_components(self):
        assert SensorValue("[180.5, 181.2]").components == ("180.5", "181.2")
        assert SensorValue(" 75.3 ").components == ("75.3",)
        assert SensorValue("{}").components == ()

    def test_as_number(self):
        assert SensorValue("1").as_number() == 1.0
        assert SensorValue("true").as_number() == 1.0
        assert SensorValue("[1, 2]").as_number() is None
        assert SensorValue("hot").as_number() is None

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_floats_are_numbers(self, x):
        assert SensorValue(repr(x)).as_number() == x

    @given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=6))
    def test_integer_vectors(self, xs):
        value = SensorValue("[" + ", ".join(map(str, xs)) + "]")
        assert value.kind is ValueKind.VECTOR
        assert value.parsed == tuple(float(x) for x in xs)
        assert value.components == tuple(map(str, xs))


class TestTokens:
    def test_prefixed_and_bare(self):
        assert ProcedureType.parse("stream:binary") is ProcedureType.BINARY
        assert ProcedureType.parse("binary") is ProcedureType.BINARY
        assert ProcedureType.parse("Continuous") is ProcedureType.CONTINUOUS
        assert ProcedureType.parse("stream:sporadic") is None
        assert ProcedureType.parse("sosa:binary") is None
        assert ProcedureType.parse(None) is None

    def test_vocabularies(self):
        assert SosaSystemType.parse("sosa:Actuator") is SosaSystemType.ACTUATOR
        assert InteractionType.parse("sosa:Actuation") is InteractionType.ACTUATION
        assert RelationKind.tokens() == ["stream:increase", "stream:decrease", "stream:alternating"]
        assert RelationKind.ALTERNATING.bare == "alternating"


class TestAnnotations:
    def test_merge_override_wins(self):
        base = SemanticAnnotations(procedure_type="stream:binary", lifecycle="stream:start")
        top = SemanticAnnotations(procedure_type="stream:continuous")
        merged = base.merged(top)
        assert merged.procedure_type == "stream:continuous"
        assert merged.lifecycle == "stream:start"

    def test_empty(self):
        assert SemanticAnnotations().is_empty()
        assert SemanticAnnotations().items() == []


class TestMultiPoint:
    def test_merge_and_duplicates(self):
        shared = SharedFields(id="keyence/mesurement", source="keyence")
        partial = SensorPoint(timestamp=Timestamp("2021-11-04T15:22:19.367+01:00"), value=SensorValue("18"))
        mp = MultiPoint(shared, (partial,))
        (full,) = mp.expanded()
        assert full.id == "keyence/mesurement"
        assert full.source == "keyence"
        assert full.missing_fields() == []
        assert mp.duplicated_fields(SensorPoint(id="x", value=SensorValue("1"))) == ["id"]


class TestContexts:
    def test_listing2(self):
        log = load_listing(2)
        assert classify_context(log, "trace[0]/point[0]") is ContextKind.TRACE
        assert classify_context(log, "trace[0]/group[0]/group[0]/point[0]") is ContextKind.GROUP_OF_ACTIVITIES

    def test_listing3(self):
        log = load_listing(3)
        assert classify_context(log, "trace[0]/event[0]/group[0]/multipoint[0]/point[1]") is ContextKind.SINGLE_ACTIVITY

    @pytest.mark.parametrize("path", ["trace[0]/event[0]", "trace[9]", "trace[0]/bogus[0]", "trace0"])
    def test_unresolved(self, path):
        with pytest.raises(LocationError):
            classify_context(load_listing(3), path)

    @model_settings
    @given(logs())
    def test_classification_is_total(self, log):
        # every point path resolves to exactly one context, matching its position
        for path in iter_paths(log):
            node, _ = locate(log, path)
            if isinstance(node, SensorPoint):
                context = classify_context(log, path)
                if "/event[" in path:
                    assert context is ContextKind.SINGLE_ACTIVITY
                elif "/group[" in path:
                    assert context is ContextKind.GROUP_OF_ACTIVITIES
                else:
                    assert context is ContextKind.TRACE

    @model_settings
    @given(logs())
    def test_models_are_hashable(self, log):
        assert hash(log) == hash(log)
