import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DAY, event_logs
from oracles import log_from_rows, random_rows, seeded, traces
from procmine import preprocess as pp
from procmine.errors import ParameterError, ValidationError
from procmine.log import Case, Event, EventLog, canonical_tuples, normalize, summarize
from procmine.synthgen import from_traces

S = 1000


def _case(cid, *events):
    return Case(cid, tuple(Event(cid, a, t, r, {}, seq=i) for i, (a, t, r) in enumerate(events)))


def _log(*cases):
    return normalize(EventLog({c.case_id: c for c in cases}))


def _conserves(before, after, report):
    assert report.events_removed + after.event_count == before.event_count
    assert report.events_removed >= 0 and report.cases_removed >= 0 and report.cases_modified >= 0
    assert len(before) - report.cases_removed == len(after)


# --- rare classes -------------------------------------------------------------


def test_rare_class_threshold():
    log = from_traces([["X"] * 9 + ["Y"] * 10])
    out, report = pp.remove_rare_event_classes(log, 10)
    assert summarize(out).event_class_counts == {"Y": 10}
    assert report.events_removed == 9
    assert report.details["removed_classes"] == {"X": 9}


def test_rare_class_min_one_is_identity():
    log = from_traces([["A", "B"], ["C"]])
    out, report = pp.remove_rare_event_classes(log, 1)
    assert out == log and report.events_removed == 0


def test_rare_class_drops_emptied_cases():
    out, report = pp.remove_rare_event_classes(from_traces([["A", "A"], ["B"]]), 2)
    assert list(out.cases) == ["case-000001"]
    assert report.cases_removed == 1


def test_rare_class_brute_force():
    rows = random_rows(seeded(11), max_cases=20, max_events=15)
    log = log_from_rows(rows)
    counts = {}
    for r in rows:
        counts[r[1]] = counts.get(r[1], 0) + 1
    kept = [r for r in rows if counts[r[1]] >= 5]
    out, _ = pp.remove_rare_event_classes(log, 5)
    assert canonical_tuples(out) == canonical_tuples(log_from_rows(kept))


def test_rare_class_rejects_zero():
    with pytest.raises(ParameterError):
        pp.remove_rare_event_classes(EventLog(), 0)


# --- dedup ----------------------------------------------------------------------


def test_dedup_within_three_minutes():
    log = _log(_case("c", ("Click", 0, "u"), ("Click", 60 * S, "u")))
    out, report = pp.dedup_within_threshold(log, 180 * S)
    assert [e.timestamp for e in out.cases["c"]] == [0]
    assert report.events_removed == 1


def test_dedup_zero_threshold_no_op():
    log = _log(_case("c", ("Click", 0, "u"), ("Click", 0, "u")))
    out, report = pp.dedup_within_threshold(log, 0)
    assert out == log and report.events_removed == 0


def test_dedup_anchored_to_last_kept():
    log = _log(_case("c", ("Click", 0, "u"), ("Click", 120 * S, "u"), ("Click", 240 * S, "u")))
    out, _ = pp.dedup_within_threshold(log, 180 * S)
    assert [e.timestamp for e in out.cases["c"]] == [0, 240 * S]


def test_dedup_exact_threshold_kept():
    log = _log(_case("c", ("Click", 0, "u"), ("Click", 180 * S, "u")))
    assert pp.dedup_within_threshold(log, 180 * S)[0].event_count == 2


def test_dedup_requires_same_resource():
    log = _log(_case("c", ("Click", 0, "u"), ("Click", 10 * S, "v")))
    assert pp.dedup_within_threshold(log, 180 * S)[0].event_count == 2


def test_dedup_negative_threshold():
    with pytest.raises(ParameterError):
        pp.dedup_within_threshold(EventLog(), -1)


def _min_same_pair_gap(log):
    gaps = []
    for case in log:
        last = {}
        for e in case:
            key = (e.activity, e.resource)
            if key in last:
                gaps.append(e.timestamp - last[key])
            last[key] = e.timestamp
    return min(gaps) if gaps else None


@settings(max_examples=150, deadline=None)
@given(event_logs(max_cases=8, max_events=12, max_ts=20 * 60 * S), st.integers(0, 10 * 60 * S))
def test_dedup_properties(log, threshold):
    out, report = pp.dedup_within_threshold(log, threshold)
    _conserves(log, out, report)
    again, report2 = pp.dedup_within_threshold(out, threshold)
    assert again == out and report2.events_removed == 0
    gap = _min_same_pair_gap(out)
    assert gap is None or gap >= threshold
    zero, _ = pp.dedup_within_threshold(log, 0)
    assert zero == log


@settings(max_examples=150, deadline=None)
@given(event_logs(max_cases=8, max_events=12), st.integers(1, 12))
def test_rare_class_properties(log, min_count):
    out, report = pp.remove_rare_event_classes(log, min_count)
    _conserves(log, out, report)
    counts = summarize(out).event_class_counts
    assert all(n >= min_count for n in counts.values())
    assert all(len(c) for c in out)


# --- anonymization --------------------------------------------------------------


def test_sequential_first_appearance():
    log = EventLog.from_events([Event("B", "x", 5, seq=0), Event("A", "x", 1, seq=1), Event("B", "y", 9, seq=2)])
    out, _ = pp.anonymize_case_ids(log)
    assert out.cases["case-000001"].activities == ["x", "y"]
    assert out.cases["case-000002"].activities == ["x"]


def test_anonymize_empty():
    assert pp.anonymize_case_ids(EventLog())[0] == EventLog()


def test_keyed_tokens_injective():
    log = EventLog.from_events(Event(f"employee-{i}", "A", i, seq=i) for i in range(1000))
    out, _ = pp.anonymize_case_ids(log, "keyed", key="s3cret")
    tokens = list(out.cases)
    assert len(set(tokens)) == 1000
    assert all(len(t) == pp.TOKEN_HEX_LENGTH and int(t, 16) >= 0 for t in tokens)
    again, _ = pp.anonymize_case_ids(log, "keyed", key="s3cret")
    assert list(again.cases) == tokens


def test_keyed_requires_key():
    with pytest.raises(ParameterError):
        pp.anonymize_case_ids(EventLog(), "keyed")


def test_original_ids_removed_from_attributes():
    log = EventLog.from_events([Event("emp-7", "A", 0, attributes={"ref": "emp-7", "other": "x"})])
    out, _ = pp.anonymize_case_ids(log)
    ev = out.cases["case-000001"].events[0]
    assert ev.attributes == {"ref": "case-000001", "other": "x"}


@settings(max_examples=50)
@given(event_logs())
def test_anonymize_preserves_structure(log):
    out, report = pp.anonymize_case_ids(log, "keyed", key="k")
    _conserves(log, out, report)
    for (old, case), (new, anon) in zip(log.cases.items(), out.cases.items()):
        assert [(e.activity, e.timestamp, e.resource) for e in case] == [(e.activity, e.timestamp, e.resource) for e in anon]
        assert old not in out.cases


# --- renaming / roles -------------------------------------------------------


def test_rename():
    log = from_traces([["evt_17", "evt_2", "evt_17"]])
    out, report = pp.rename_activities(log, {"evt_17": "Applicant submits form"})
    assert out.cases["case-000001"].activities == ["Applicant submits form", "evt_2", "Applicant submits form"]
    assert report.details["renamed"] == {"evt_17": 2}


def test_rename_empty_mapping_identity():
    log = from_traces([["A", "B"]])
    assert pp.rename_activities(log, {})[0] == log


def test_rename_merge_classes():
    log = from_traces([["a1", "a2", "b"], ["a2"]])
    out, _ = pp.rename_activities(log, {"a1": "A", "a2": "A"})
    assert summarize(out).event_class_counts == {"A": 3, "b": 1}


def test_rename_empty_target():
    with pytest.raises(ParameterError):
        pp.rename_activities(EventLog(), {"a": ""})


def test_map_resources():
    log = from_traces([[("A", "j.doe@dept.gc.ca"), ("B", None), ("C", "x@dept.gc.ca")]])
    out, report = pp.map_resources_to_roles(log, {"j.doe@dept.gc.ca": "Hiring Manager"})
    assert [e.resource for e in out.cases["case-000001"]] == ["Hiring Manager", None, "x@dept.gc.ca"]
    assert report.details["unmapped"] == {"x@dept.gc.ca": 1}
    out, _ = pp.map_resources_to_roles(log, {}, default_role="Other")
    assert [e.resource for e in out.cases["case-000001"]] == ["Other", None, "Other"]


def test_map_resources_to_six_roles():
    roles = ["Applicant", "Hiring Manager", "Security Officer", "Law Enforcement", "Security Systems", "Credit Bureau"]
    mapping = {f"person{i}@dept.gc.ca": roles[i % 6] for i in range(24)}
    log = from_traces([[("A", f"person{j}@dept.gc.ca") for j in range(k, 24)] for k in range(3)])
    out, _ = pp.map_resources_to_roles(log, mapping)
    assert set(summarize(out).resource_counts) == set(roles)


# --- filters --------------------------------------------------------------------


def test_date_range_identity_and_boundary(ts):
    log = from_traces([["A", "B"], ["A", "B"]], start=ts("2022-10-26T00:00Z"), step_ms=DAY)
    everything = (ts("2022-01-01T00:00Z"), ts("2023-01-01T00:00Z"))
    for mode in ("case_intersects", "case_contained"):
        assert pp.filter_date_range(log, *everything, mode)[0] == log
    # first case lies in the range only partly (Oct 26 -> Oct 27)
    phase = (ts("2022-01-06T00:00Z"), ts("2022-10-26T23:59:59Z"))
    contained, report = pp.filter_date_range(log, *phase, "case_contained")
    assert len(contained) == 0 and report.cases_removed == 2
    intersects, _ = pp.filter_date_range(log, *phase, "case_intersects")
    assert list(intersects.cases) == ["case-000001"]
    assert intersects.event_count == 2


def test_date_range_start_after_end():
    with pytest.raises(ParameterError):
        pp.filter_date_range(EventLog(), 2, 1)


def test_date_range_brute_force():
    rng = seeded(30)
    rows = random_rows(rng, max_cases=30, max_events=6, span_ms=10**6)
    log = log_from_rows(rows)
    lo, hi = 250_000, 700_000
    tr = traces(rows)
    contained = {c for c, rs in tr.items() if lo <= rs[0][2] and rs[-1][2] <= hi}
    intersects = {c for c, rs in tr.items() if any(lo <= r[2] <= hi for r in rs)}
    assert set(pp.filter_date_range(log, lo, hi, "case_contained")[0].cases) == contained
    assert set(pp.filter_date_range(log, lo, hi, "case_intersects")[0].cases) == intersects


def _attr_log(rng, n=30):
    values = ["reliability", "secret", "top-secret"]
    events = []
    for c in range(n):
        for j in range(rng.randint(1, 4)):
            events.append(Event(f"c{c}", "A", j, attributes={"clearance": rng.choice(values)}, seq=j))
    return EventLog.from_events(events)


def test_filter_by_attribute():
    log = _attr_log(seeded(1))
    out, report = pp.filter_cases_by_attribute(log, "clearance", {"reliability"})
    assert all(any(e.attributes["clearance"] == "reliability" for e in c) for c in out)
    brute = {c.case_id for c in log if "reliability" in {e.attributes["clearance"] for e in c}}
    assert set(out.cases) == brute
    assert report.cases_removed == len(log) - len(brute)
    assert pp.filter_cases_by_attribute(log, "clearance", {"reliability", "secret", "top-secret"})[0] == log


def test_filter_by_attribute_empty_set():
    with pytest.raises(ParameterError):
        pp.filter_cases_by_attribute(EventLog(), "k", set())


# --- pipeline -----------------------------------------------------------------


def test_empty_pipeline_identity():
    log = from_traces([["A", "B"]])
    out, reports = pp.run_pipeline(log, pp.PipelineConfig())
    assert out == log and reports == []


def test_pipeline_matches_manual_composition():
    log = from_traces([["evt_1", "evt_1", "evt_2"], ["evt_2"]], step_ms=30 * S)
    config = pp.PipelineConfig.from_dict(
        {
            "steps": [
                {"op": "rename_activities", "params": {"mapping": {"evt_1": "Submit"}}},
                {"op": "dedup_within_threshold", "params": {"threshold_seconds": 180}},
            ]
        }
    )
    out, reports = pp.run_pipeline(log, config)
    manual, _ = pp.rename_activities(log, {"evt_1": "Submit"})
    manual, _ = pp.dedup_within_threshold(manual, 180 * S)
    assert canonical_tuples(out) == canonical_tuples(manual)
    assert [r.op_name for r in reports] == ["rename_activities", "dedup_within_threshold"]
    assert "dedup_within_threshold" in out.source_meta["pipeline"]


def test_pipeline_aborts_before_running():
    config = pp.PipelineConfig.from_dict(
        {
            "steps": [
                {"op": "rename_activities", "params": {"mapping": {"A": "B"}}},
                {"op": "dedup_within_threshold", "params": {"threshold_seconds": -5}},
            ]
        }
    )
    with pytest.raises(ValidationError) as err:
        pp.run_pipeline(from_traces([["A"]]), config)
    assert err.value.index == 2
    assert "step 2" in str(err.value)


@pytest.mark.parametrize(
    "step",
    [
        {"op": "no_such_op", "params": {}},
        {"op": "remove_rare_event_classes", "params": {"min_count": 0}},
        {"op": "remove_rare_event_classes", "params": {"min_count": 3, "extra": 1}},
        {"op": "anonymize_case_ids", "params": {"mode": "keyed"}},
        {"op": "filter_date_range", "params": {"start": "2022-02-01T00:00Z", "end": "2022-01-01T00:00Z"}},
        {"op": "filter_cases_by_attribute", "params": {"key": "clearance", "allowed": []}},
        {"op": "rename_activities", "params": {"mapping": {"a": ""}}},
    ],
)
def test_pipeline_rejects_bad_steps(step):
    with pytest.raises(ValidationError) as err:
        pp.validate(pp.PipelineConfig.from_dict({"steps": [step]}))
    assert err.value.index == 1


def test_pipeline_redacts_key():
    config = pp.PipelineConfig.from_dict({"steps": [{"op": "anonymize_case_ids", "params": {"mode": "keyed", "key": "hunter2"}}]})
    out, _ = pp.run_pipeline(from_traces([["A"]]), config)
    assert "hunter2" not in out.source_meta["pipeline"]


@settings(max_examples=100, deadline=None)
@given(event_logs(max_cases=6, max_events=8), st.integers(0, 3 * DAY))
def test_every_step_conserves_events(log, pivot):
    steps = [
        lambda L: pp.remove_rare_event_classes(L, 3),
        lambda L: pp.dedup_within_threshold(L, 180 * S),
        lambda L: pp.anonymize_case_ids(L),
        lambda L: pp.rename_activities(L, {"A": "B"}),
        lambda L: pp.map_resources_to_roles(L, {"Applicant": "Role"}, "Other"),
        lambda L: pp.filter_date_range(L, 0, pivot, "case_contained"),
        lambda L: pp.filter_date_range(L, pivot, 3 * DAY, "case_intersects"),
    ]
    for step in steps:
        out, report = step(log)
        _conserves(log, out, report)
        assert out == normalize(out)
