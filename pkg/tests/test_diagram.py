import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actdiag.diagram import (
    DiagramError,
    errors,
    load_diagram,
    parse_diagram,
    serialize_diagram,
    to_json,
    validate,
)
from conftest import CORPUS, activity, diagram, simple

MINIMAL = [("init", "Initial"), ("a", "BasicAction"), ("fin", "ActivityFinal")]
MINIMAL_E = [("init", "a"), ("a", "fin")]


def rules(d):
    return {(v.element, v.rule) for v in errors(validate(d))}


def test_corpus_files_are_valid():
    for path in sorted(CORPUS.glob("*.json")):
        d = load_diagram(path)
        assert errors(validate(d)) == [], path.name


def test_element_ids_are_qualified():
    d = simple(MINIMAL, MINIMAL_E)
    assert d.element_ids() == {"ad", "ad/init", "ad/a", "ad/fin", "ad/e1", "ad/e2"}
    assert (d.node_count, d.edge_count) == (3, 2)


def test_missing_indices_are_assigned_in_file_order():
    text = json.dumps(
        {
            "topLevel": "ad",
            "activities": [
                {
                    "id": "ad",
                    "nodes": [{"id": "i", "kind": "Initial"}, {"id": "a", "kind": "BasicAction"}, {"id": "f", "kind": "ActivityFinal"}],
                    "edges": [
                        {"id": "x", "source": "a", "target": "f"},
                        {"id": "y", "index": 1, "source": "i", "target": "a"},
                    ],
                }
            ],
        }
    )
    d = parse_diagram(text)
    assert {e.id: e.index for e in d.top.edges} == {"x": 2, "y": 1}


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda o: o.pop("topLevel"), "topLevel"),
        (lambda o: o.update(topLevel="nope"), "names no activity"),
        (lambda o: o["activities"][0]["nodes"].append({"id": "a", "kind": "BasicAction"}), "duplicate node"),
        (lambda o: o["activities"][0]["nodes"].append({"id": "z", "kind": "Teleport"}), "unknown node kind"),
        (lambda o: o["activities"][0]["edges"].append({"id": "e9", "source": "a", "target": "ghost"}), "dangling"),
        (lambda o: o["activities"][0]["edges"][0].update(index=0), "positive integer"),
        (lambda o: o["activities"][0]["edges"][0].update(guard="(<= x"), "syntax"),
        (lambda o: o["activities"][0]["nodes"][1].update(id="bad id"), "identifier"),
    ],
)
def test_parse_errors_name_the_problem(mutate, fragment):
    obj = {"topLevel": "ad", "activities": [activity("ad", MINIMAL, MINIMAL_E)]}
    mutate(obj)
    with pytest.raises(DiagramError) as info:
        parse_diagram(json.dumps(obj))
    assert fragment in str(info.value)


def test_invalid_json_reports_position():
    with pytest.raises(DiagramError) as info:
        parse_diagram("{\n  nope")
    assert "line 2" in str(info.value)


def test_structural_rules():
    d = simple(
        [
            ("init", "Initial"),
            ("fork", "Fork"),
            ("join", "Join"),
            ("fin", "ActivityFinal"),
            ("ff", "FlowFinal"),
        ],
        [("init", "fork"), ("init", "join"), ("join", "fin"), ("join", "ff"), ("ff", "init")],
    )
    got = rules(d)
    assert ("ad/init", "initial-no-incoming") in got
    assert ("ad/join", "join-incoming") in got
    assert ("ad/join", "join-one-outgoing") in got
    assert ("ad/ff", "final-no-outgoing") in got
    assert ("ad/fork", "control-outgoing") in got


def test_edge_indices_must_be_contiguous():
    obj = activity("ad", MINIMAL, MINIMAL_E)
    obj["edges"][1]["index"] = 5
    assert ("ad", "edge-indices") in rules(diagram(obj))


def test_guard_rules():
    nodes = [("init", "Initial"), ("d", "Decision"), ("a", "BasicAction"), ("b", "BasicAction"), ("fin", "ActivityFinal")]
    edges = [("init", "d"), ("d", "a", {"guard": "(<= x 1)"}), ("d", "b", {"guard": "true"}), ("a", "fin"), ("b", "fin", {"guard": "true"})]
    got = rules(simple(nodes, edges))
    assert ("ad/e2", "guard-typecheck") in got  # x without a decision input
    assert ("ad/e5", "guard-on-decision-only") in got


def test_missing_guard_beside_a_guarded_sibling_is_a_warning():
    nodes = [("init", "Initial"), ("d", "Decision"), ("a", "BasicAction"), ("b", "BasicAction"), ("fin", "ActivityFinal"), ("f2", "ActivityFinal")]
    edges = [("init", "d"), ("d", "a", {"guard": "true"}), ("d", "b"), ("a", "fin"), ("b", "f2")]
    found = validate(simple(nodes, edges))
    assert [(v.element, v.severity) for v in found] == [("ad/e3", "warning")]


def test_decision_input_rules():
    nodes = [
        ("init", "Initial"),
        ("p", "InputParameter", {"valueType": {"type": "int", "min": 0, "max": 3}}),
        ("d", "Decision"),
        ("a", "BasicAction"),
        ("fin", "ActivityFinal"),
    ]
    edges = [("init", "d"), ("p", "d", {"kind": "Object", "stereotype": "decisionInputFlow"}), ("d", "a", {"guard": "(> x 7)"}), ("a", "fin")]
    assert ("ad/e3", "guard-typecheck") in rules(simple(nodes, edges))
    edges[1] = ("p", "a", {"kind": "Object", "stereotype": "decisionInputFlow"})
    assert ("ad/e2", "decision-input-target") in rules(simple(nodes, edges))


def test_object_and_pin_rules():
    nodes = [
        ("init", "Initial"),
        ("a", "BasicAction"),
        ("pin", "OutputPin", {"owner": "ghost", "valueType": {"type": "bool"}}),
        ("o", "ObjectNode"),
        ("fin", "ActivityFinal"),
    ]
    edges = [("init", "a"), ("a", "fin", {"kind": "Object"}), ("pin", "o", {"kind": "Object"}), ("init", "o")]
    got = rules(simple(nodes, edges))
    assert ("ad/pin", "pin-owner") in got
    assert ("ad/o", "object-value-type") in got
    assert ("ad/e2", "object-edge-endpoint") in got
    assert ("ad/e4", "control-edge-endpoint") in got


def test_call_rules():
    top = activity("top", [("init", "Initial"), ("c", "CallBehavior", {"callee": "sub"}), ("fin", "ActivityFinal")], [("init", "c"), ("c", "fin")])
    sub = activity("sub", [("init", "Initial"), ("c", "CallBehavior", {"callee": "top"}), ("fin", "ActivityFinal")], [("init", "c"), ("c", "fin")])
    assert any(r == "call-acyclic" for _, r in rules(diagram(top, sub)))
    lone = activity("top", [("init", "Initial"), ("c", "CallBehavior", {"callee": "nowhere"}), ("fin", "ActivityFinal")], [("init", "c"), ("c", "fin")])
    assert ("top/c", "callee-resolves") in rules(diagram(lone))


def test_signal_rules():
    d = simple([("init", "Initial"), ("s", "SendSignal"), ("fin", "ActivityFinal")], [("init", "s"), ("s", "fin")])
    assert ("ad/s", "signal-declared") in rules(d)


def test_corpus_round_trips_through_json():
    for path in sorted(CORPUS.glob("*.json")):
        d = load_diagram(path)
        assert parse_diagram(serialize_diagram(d)) == d


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.data())
def test_generated_chains_round_trip(n, data):
    kinds = data.draw(st.lists(st.sampled_from(["BasicAction", "Merge", "Decision"]), min_size=n, max_size=n))
    nodes = [("init", "Initial")] + [(f"n{i}", k) for i, k in enumerate(kinds)] + [("fin", "ActivityFinal")]
    ids = [x[0] for x in nodes]
    edges = list(zip(ids, ids[1:]))
    d = simple(nodes, edges)
    assert errors(validate(d)) == []
    again = parse_diagram(json.dumps(to_json(d)))
    assert again == d
