import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorstream.export import columns, export_tabular, stats
from sensorstream.model import SensorLog
from sensorstream.normalize import compact_multipoints, expand_multipoints
from sensorstream.synth import SensorProfile, SynthConfig, generate

from conftest import LISTINGS, load_listing


def csv_rows(log):
    return list(csv.DictReader(io.StringIO(export_tabular(log, "csv").decode("utf-8"), newline="")))


def jsonl_rows(log):
    lines = export_tabular(log, "jsonl").decode("utf-8").splitlines()
    return [{k: ("" if v is None else v) for k, v in json.loads(line).items()} for line in lines]


def test_listing8_rows():
    rows = csv_rows(load_listing(8))
    assert len(rows) == 3
    first = rows[0]
    assert (first["value_c1"], first["value_c2"], first["value_c3"]) == ("-0.721", "-10.2483", "-0.7114")
    assert first["unit_c1"] == "m/s^2"
    assert first["context"] == "SingleActivity"
    assert first["event_name"] == "calibrating motor 3"
    assert first["timestamp"] == "2021-06-25T17:08:50.414718Z"


def test_listing9_row():
    (row,) = csv_rows(load_listing(9))
    assert row["value_c1"] == "0.0"
    assert row["interaction_type"] == "sosa:Actuation"


def test_listing2_group_rows():
    rows = {r["sensor_id"]: r for r in csv_rows(load_listing(2))}
    assert rows["pressure"]["event_index"] == "0;1"
    assert rows["pressure"]["event_name"] == "Task 1;Task 2"
    assert rows["pressure"]["group_path"] == "0/0"
    assert rows["humidity"]["context"] == "Trace"
    assert rows["humidity"]["timestamp"] == "2021-11-04T14:22:19.367000Z"


def test_empty_log_is_header_only():
    data = export_tabular(SensorLog(), "csv")
    assert data.decode() == ",".join(columns(1)) + "\r\n"
    assert export_tabular(SensorLog(), "jsonl") == b""


def test_wide_value_stays_raw():
    rows = csv_rows(load_listing(6))
    temperature = rows[0]
    assert temperature["value_raw"] == "[180.5, 181.2]"
    assert (temperature["value_c1"], temperature["value_c2"]) == ("180.5", "181.2")
    assert temperature["unit_c2"] == "degree celsius"


def test_unknown_format():
    with pytest.raises(ValueError):
        export_tabular(SensorLog(), "xlsx")


@pytest.mark.parametrize("n", LISTINGS)
def test_formats_agree_on_fixtures(n):
    log = load_listing(n)
    assert csv_rows(log) == jsonl_rows(log)
    assert len(csv_rows(log)) == stats(log).points


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_formats_agree_on_synthetic(seed, multipoints):
    log = generate(SynthConfig(seed=seed, traces=2, use_multipoints=multipoints)).log
    rows = csv_rows(log)
    assert rows == jsonl_rows(log)
    assert len(rows) == stats(log).points


def test_stats_listing2():
    report = stats(load_listing(2))
    assert report.traces == 1
    assert report.contexts == {"SingleActivity": 0, "GroupOfActivities": 2, "Trace": 1}


def test_stats_counts_by_construction():
    config = SynthConfig(seed=1, traces=5, events_per_trace=4, sensors=(SensorProfile("s", rate=10),))
    report = stats(generate(config).log)
    assert (report.traces, report.events, report.points) == (5, 20, 200)
    assert report.sensors["s"].points == 200
    # ten samples spread over a 10 s event slot
    assert report.sensors["s"].median_interval_s == pytest.approx(10 / 11)


def test_compression_ratio_recount():
    config = SynthConfig(seed=3, traces=2, sensors=(SensorProfile("line/s1", rate=6, source="plc_1"),))
    log = compact_multipoints(generate(config).log, "id_source")
    inside = 0
    total = 0
    for trace in log.traces:
        for event in trace.events:
            for group in event.streams:
                inside += sum(len(mp.points) for mp in group.multipoints)
                total += group.point_count()
    report = stats(log)
    assert inside > 0
    assert report.points == total
    assert report.compression_ratio == inside / total
    assert stats(expand_multipoints(log)).compression_ratio == 0.0


def test_trait_usage():
    report = stats(load_listing(10))
    assert report.trait_usage == {"1": 1, "2": 1}
    assert "trait 1: 1 reference(s)" in report.to_text()
    assert report.as_dict()["points"] == 1
