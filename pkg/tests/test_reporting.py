import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actdiag.checker import FAIL, PASS, RESOURCE_LIMIT, Verdict, check_all, check_deadlock, check_determinism
from actdiag.csp.events import TICK, Event
from actdiag.reporting import (
    ORANGE,
    RED,
    SCHEMA,
    DotSyntaxError,
    MappingError,
    Report,
    TraceMapping,
    build_report,
    check_dot,
    emit_dot,
    emit_report,
    emit_reports,
    event_elements,
    exit_code,
    map_trace,
    parse_report,
)
from conftest import CORPUS, corpus_model, corpus_verdicts, model_of, simple


def colour_of(dot, element):
    line = next(l for l in dot.splitlines() if l.strip().startswith(f'"{element}" ['))
    m = re.search(r'\bcolor="(\w+)"', line)
    return m.group(1) if m else None


def edge_colour(dot, src, dst):
    line = next(l for l in dot.splitlines() if f'"{src}" -> "{dst}" [label' in l)
    m = re.search(r'\bcolor="(\w+)"', line)
    return m.group(1) if m else None


# ---------------------------------------------------------------- mapping


def test_edge_events_map_to_the_edge_and_its_endpoints():
    m = corpus_model("minimal")
    assert event_elements(Event("ce", ("ad",), (1,)), m) == ("ad/act1", "ad/e1", "ad/init")
    assert event_elements(Event("behavior", ("act1", "ad")), m) == ("ad/act1",)
    assert event_elements(TICK, m) == ("ad",)
    with pytest.raises(MappingError):
        event_elements(Event("ce", ("ad",), (99,)), m)


def test_passing_verdicts_map_to_nothing():
    m = corpus_model("minimal")
    assert map_trace(check_deadlock(m), m) == TraceMapping()


def test_deadlock_mapping_of_the_motivating_model():
    m = corpus_model("c3_motivating")
    v = check_deadlock(m)
    t = map_trace(v, m)
    assert [s.role for s in t.steps].count("blocked") == len(v.blocked) > 0
    assert "ad/D" in t.highlighted and not t.choice
    dot = emit_dot(m.diagram, t)
    check_dot(dot)
    assert colour_of(dot, "ad/D") == RED


def test_choice_point_is_orange():
    m = corpus_model("c1_cloud_network")
    v = check_determinism(m)
    t = map_trace(v, m)
    assert t.steps[len(v.trace) - 1].role == "choice"
    assert t.choice == {"cloud/e5", "cloud/S1", "cloud/VM1"}
    dot = emit_dot(m.diagram, t)
    assert colour_of(dot, "cloud/VM1") == ORANGE
    assert edge_colour(dot, "cloud/S1", "cloud/VM1") == ORANGE
    assert colour_of(dot, "cloud/init") == RED


def test_untouched_elements_keep_their_default_look():
    m = corpus_model("c1_cloud_network")
    dot = emit_dot(m.diagram)
    assert "red" not in dot and "orange" not in dot
    assert colour_of(dot, "cloud/init") is None


def test_empty_failing_trace_highlights_the_frame():
    m = corpus_model("minimal")
    v = Verdict("deadlock", FAIL)
    t = map_trace(v, m)
    assert t.highlighted == {"ad"}
    assert 'color="red";' in emit_dot(m.diagram, t)


def test_resource_limit_maps_to_nothing_and_reports_progress():
    m = corpus_model("c4_hotel")
    v, _ = check_all(m, limit=7)
    t = map_trace(v, m)
    assert t.steps == ()
    r = build_report(v, t, m).to_json()
    assert r["result"] == RESOURCE_LIMIT and r["exitCode"] == 3
    assert r["statistics"]["statesExplored"] == 7


# -------------------------------------------------------------------- DOT


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.json")), ids=lambda p: p.stem)
def test_corpus_dot_is_well_formed(path):
    m = corpus_model(path.stem)
    dl, det = corpus_verdicts(path.stem)
    t = map_trace(dl, m).merge(map_trace(det, m))
    dot = emit_dot(m.diagram, t)
    check_dot(dot)
    for a in m.diagram.activities:
        assert f'subgraph "cluster_{a.id}"' in dot
        for n in a.nodes:
            assert f'"{a.id}/{n.id}" [' in dot


def test_dot_shapes_and_labels():
    m = corpus_model("det_overlap")
    dot = emit_dot(m.diagram)
    assert re.search(r'"det/dec" \[shape="diamond"', dot)
    assert re.search(r'"det/final" \[shape="doublecircle"', dot)
    assert 'label="3 [x >= 1]"' in dot
    assert 'style="dashed"' in dot  # the object flow into the decision


def test_pins_hang_off_their_owner():
    m = corpus_model("c2_storage")
    dot = emit_dot(m.diagram)
    assert 'style="dotted", arrowhead="none"' in dot


@pytest.mark.parametrize(
    "text",
    [
        "",
        "digraph {",
        "digraph g { a -> }",
        "graph g { a -> b }",
        "digraph g { a -- b }",
        'digraph g { a [label="x" }',
        'digraph g { a [label="unterminated] }',
        "digraph g { } extra",
        "digraph g { subgraph { a } ",
    ],
)
def test_dot_checker_rejects_broken_input(text):
    with pytest.raises(DotSyntaxError):
        check_dot(text)


@pytest.mark.parametrize(
    "text",
    [
        "digraph { }",
        "strict digraph g { a -> b -> c; b [shape=box] }",
        "graph { a -- b; subgraph cluster_x { c } }",
        'digraph "x y" { // comment\n  "a" -> "b" [label=<b>bold</b>]; /* block */ }',
        "digraph { node [shape=box]; edge [color=red]; rankdir=LR; { a b } -> c }",
    ],
)
def test_dot_checker_accepts_valid_input(text):
    check_dot(text)


# ----------------------------------------------------------------- report


def test_exit_codes():
    assert [exit_code(r) for r in (PASS, FAIL, RESOURCE_LIMIT, "divergent", "token-overflow")] == [0, 1, 3, 4, 3]


def test_report_fields():
    m = corpus_model("c1_cloud_network")
    v = check_determinism(m)
    obj = json.loads(emit_report(v, map_trace(v, m), m, v.full_trace))
    assert obj["schema"] == SCHEMA
    assert obj["choicePoint"] == "ce_cloud.5"
    assert obj["trace"][-1] == "ce_cloud.5"
    assert "tau" not in obj["trace"] and "tau" in obj["fullTrace"]
    assert obj["diagram"] == {"topLevel": "cloud", "nodes": m.diagram.node_count, "edges": m.diagram.edge_count}
    assert obj["config"]["maxTokens"] == {"cloud": m.max_tokens["cloud"]}
    assert obj["tool"]["name"] == "actdiag"
    assert sorted(obj["choiceElements"]) == obj["choiceElements"]
    # nothing time dependent, so reports are reproducible
    assert "time" not in json.dumps(obj).lower()


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.json")), ids=lambda p: p.stem)
def test_reports_round_trip(path):
    m = corpus_model(path.stem)
    reports = [build_report(v, map_trace(v, m), m) for v in corpus_verdicts(path.stem)]
    text = emit_reports(reports)
    assert parse_report(text) == reports
    assert json.loads(text)["exitCode"] == max(r.exit_code for r in reports)
    single = emit_reports(reports[:1])
    assert parse_report(single) == reports[:1]


def test_unknown_schema_is_refused():
    with pytest.raises(ValueError):
        parse_report(json.dumps({"schema": "report-v0"}))


_names = st.text("abcdef_./", min_size=1, max_size=8)


@settings(max_examples=100)
@given(
    st.sampled_from([PASS, FAIL, RESOURCE_LIMIT, "divergent", "token-overflow"]),
    st.lists(_names, max_size=5),
    st.integers(0, 10**6),
    st.one_of(st.none(), st.lists(_names, max_size=5)),
)
def test_any_report_round_trips(result, trace, states, full):
    r = Report(
        property="deadlock",
        result=result,
        trace=tuple(trace),
        highlighted=tuple(sorted(set(trace))),
        mapping=tuple({"event": x, "elements": [x], "role": "path"} for x in trace),
        states=states,
        exit_code=exit_code(result),
        full_trace=None if full is None else tuple(full),
    )
    assert Report.from_json(json.loads(json.dumps(r.to_json()))) == r


def test_guards_render_infix_in_dot():
    d = simple(
        [
            ("init", "Initial"),
            ("p", "InputParameter", {"valueType": {"type": "int", "min": 0, "max": 3}}),
            ("d", "Decision"),
            ("a", "BasicAction"),
            ("b", "BasicAction"),
            ("fin", "ActivityFinal"),
            ("f2", "ActivityFinal"),
        ],
        [
            ("init", "d"),
            ("p", "d", {"kind": "Object", "stereotype": "decisionInputFlow"}),
            ("d", "a", {"guard": "(and (>= x 1) (< x 3))"}),
            ("d", "b", {"guard": "(not (and (>= x 1) (< x 3)))"}),
            ("a", "fin"),
            ("b", "f2"),
        ],
    )
    dot = emit_dot(model_of(d).diagram)
    check_dot(dot)
    assert "x >= 1" in dot and "x < 3" in dot
