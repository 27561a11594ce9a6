import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorstream.model import ContextKind, Relation, RelationKind
from sensorstream.normalize import flatten_points
from sensorstream.synth import (
    SUPPORTED_DEFECTS,
    SensorProfile,
    SynthConfig,
    SynthConfigError,
    generate,
    generate_header,
    iter_traces,
    parse_config,
)
from sensorstream.validate import relation_results, validate_all
from sensorstream.xes_io import Dialect, WriteOptions, write_log

ACC = SensorProfile("vgr_1/crane_jib/acceleration", 3, ("m/s^2",) * 3, rate=5)

CONFIG_TEXT = """
[synth]
seed = 9
traces = 3
events_per_trace = 2
use_multipoints = yes
defects = SS-103, SS-009

[sensor:plant/temp]
units = degree celsius
procedure_type = discrete
rate = 3
meta = line=A; shift=night

[sensor:plant/fan]
relations = increase:plant/temp
rate = 3
source = plc_7
"""


def test_points_by_construction():
    config = SynthConfig(seed=1, traces=1, events_per_trace=2, sensors=(ACC,))
    flat = flatten_points(generate(config).log)
    assert len(flat) == 10
    assert {f.context for f in flat} == {ContextKind.SINGLE_ACTIVITY}
    assert all(len(f.point.value.parsed) == 3 for f in flat)


@pytest.mark.parametrize("options", [{}, {"use_multipoints": True}, {"use_traits": True, "nest_groups": True}])
def test_byte_identical_reruns(options):
    config = SynthConfig(seed=42, traces=3, **options)
    for dialect in (Dialect.ATTRIBUTE_FORM, Dialect.ELEMENT_FORM):
        first = write_log(generate(config).log, WriteOptions(dialect=dialect))
        assert write_log(generate(config).log, WriteOptions(dialect=dialect)) == first


def test_traces_are_seeded_independently():
    two = generate(SynthConfig(seed=4, traces=2)).log.traces
    three = generate(SynthConfig(seed=4, traces=3)).log.traces
    assert three[:2] == two
    assert tuple(iter_traces(SynthConfig(seed=4, traces=3))) == three


def test_seeds_differ():
    assert generate(SynthConfig(seed=1)).log != generate(SynthConfig(seed=2)).log


def test_contexts_of_default_profiles():
    flat = flatten_points(generate(SynthConfig(seed=0)).log)
    by_sensor = {}
    for f in flat:
        by_sensor.setdefault(f.point.id, set()).add(f.context)
    assert by_sensor["ov_1/temperature"] == {ContextKind.GROUP_OF_ACTIVITIES}
    assert by_sensor["sld_1/light_barrier"] == {ContextKind.TRACE}
    assert by_sensor["vgr_1/motor_3/speed"] == {ContextKind.SINGLE_ACTIVITY}
    assert len(flat) == 40


def test_declared_relations_hold():
    results = relation_results(generate(SynthConfig(seed=7, events_per_trace=6)).log.traces[0])
    assert [(r.kind, r.agreement) for r in results] == [(RelationKind.INCREASE, 1.0)]


def test_alternating_and_decrease_profiles():
    sensors = (
        SensorProfile("a", rate=4),
        SensorProfile("b", rate=4, relations=(Relation("stream:decrease", "a"),)),
        SensorProfile("z", rate=4, relations=(Relation("stream:alternating", "z"),)),
    )
    log = generate(SynthConfig(seed=3, sensors=sensors)).log
    assert {(r.sensor_id, r.agreement) for r in relation_results(log.traces[0])} == {("b", 1.0), ("z", 1.0)}
    assert validate_all(log).findings == []


def test_traits_and_multipoints():
    log = generate(SynthConfig(seed=5, use_traits=True, use_multipoints=True)).log
    assert [t.id for t in log.traits] == [str(i) for i in range(1, len(log.traits) + 1)]
    assert len(log.traits) == 5
    assert validate_all(log).findings == []


def test_header_matches_generated_log():
    config = SynthConfig(seed=5, use_traits=True)
    header = generate_header(config)
    log = generate(config).log
    assert header.traits == log.traits and header.traces == ()


@pytest.mark.parametrize(
    "kwargs",
    [
        {"traces": 0},
        {"events_per_trace": 0},
        {"sensors": ()},
        {"group_size": 1},
        {"defects": ("SS-999",)},
        {"sensors": (SensorProfile("a"), SensorProfile("a"))},
        {"sensors": (SensorProfile("a", relations=(Relation("stream:increase", "b"),)),
                     SensorProfile("b", relations=(Relation("stream:increase", "a"),)))},
        {"sensors": (ACC, SensorProfile("b", relations=(Relation("stream:increase", ACC.id),)))},
    ],
)
def test_invalid_configs(kwargs):
    with pytest.raises(SynthConfigError):
        SynthConfig(**kwargs)


@pytest.mark.parametrize(
    "kwargs",
    [{"id": ""}, {"arity": 2}, {"generator": "chaos"}, {"context": "factory"}, {"rate": 0}],
)
def test_invalid_profiles(kwargs):
    base = {"id": "s"}
    base.update(kwargs)
    with pytest.raises(SynthConfigError):
        SensorProfile(**base)


def test_parse_config():
    config = parse_config(CONFIG_TEXT)
    assert (config.seed, config.traces, config.events_per_trace, config.use_multipoints) == (9, 3, 2, True)
    assert config.defects == ("SS-103", "SS-009")
    temp, fan = config.sensors
    assert temp.units == ("degree celsius",)
    assert [(m.key, m.value) for m in temp.meta] == [("line", "A"), ("shift", "night")]
    assert fan.relations == (Relation("stream:increase", "plant/temp"),)
    assert fan.source == "plc_7"
    result = generate(config)
    assert [d.rule_id for d in result.defects] == ["SS-103", "SS-009"]
    assert [d.path.split("/")[0] for d in result.defects] == ["trace[0]", "trace[1]"]


@pytest.mark.parametrize(
    "text",
    [
        "[synth]\ncolour = red\n",
        "[elsewhere]\n",
        "[synth]\ntraces = many\n",
        "[sensor:x]\ngenerator = chaos\n",
        "[sensor:x]\nrelations = sideways:y\n",
        "[sensor:x]\nwobble = 1\n",
        "not ini at all",
    ],
)
def test_parse_config_errors(text):
    with pytest.raises(SynthConfigError):
        parse_config(text)


def test_supported_defects_cover_structure_and_semantics():
    assert SUPPORTED_DEFECTS == tuple(f"SS-00{i}" for i in range(1, 10)) + tuple(f"SS-10{i}" for i in range(1, 6))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6), st.booleans(), st.booleans(), st.booleans())
def test_defect_free_output_is_clean(seed, events, multipoints, traits, nested):
    config = SynthConfig(
        seed=seed, events_per_trace=events, use_multipoints=multipoints, use_traits=traits, nest_groups=nested
    )
    assert validate_all(generate(config).log).errors == []
