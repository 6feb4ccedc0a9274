"""Activity diagram model, JSON loader/serializer and structural validation."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

from .expr import (
    DEFAULT_INT_CAP,
    DataType,
    Expr,
    ExprError,
    check_guard,
    datatype_from_json,
    parse_expr,
    render_prefix,
)

NODE_KINDS = (
    "BasicAction",
    "SendSignal",
    "AcceptEvent",
    "CallBehavior",
    "Initial",
    "ActivityFinal",
    "FlowFinal",
    "Merge",
    "Decision",
    "Fork",
    "Join",
    "ObjectNode",
    "InputPin",
    "OutputPin",
    "InputParameter",
    "OutputParameter",
)
ACTIONS = {"BasicAction", "SendSignal", "AcceptEvent", "CallBehavior"}
PINS = {"InputPin", "OutputPin"}
OBJECT_BEARING = {"ObjectNode", "InputPin", "OutputPin", "InputParameter", "OutputParameter"}
DECISION_INPUT = "decisionInputFlow"

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class DiagramError(Exception):
    """Malformed diagram file: syntax error, duplicate id, dangling endpoint..."""

    def __init__(self, message: str, position: str | None = None):
        self.position = position
        super().__init__(f"{position}: {message}" if position else message)


@dataclass(frozen=True)
class Node:
    id: str
    kind: str
    name: str = ""
    signal: str | None = None
    callee: str | None = None
    value_type: DataType | None = None
    owner: str | None = None

    @property
    def label(self) -> str:
        return self.name or self.id


@dataclass(frozen=True)
class Edge:
    id: str
    index: int
    source: str
    target: str
    kind: str = "Control"
    guard: Expr | None = None
    stereotype: str | None = None

    @property
    def is_object(self) -> bool:
        return self.kind == "Object"

    @property
    def is_decision_input(self) -> bool:
        return self.stereotype == DECISION_INPUT


@dataclass(frozen=True)
class Activity:
    id: str
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def node(self, node_id: str) -> Node:
        return self._nodes[node_id]

    @cached_property
    def _nodes(self) -> dict[str, Node]:
        return {n.id: n for n in self.nodes}

    def incoming(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.target == node_id]

    def outgoing(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.source == node_id]

    def pins_of(self, action_id: str, kind: str) -> list[Node]:
        return [n for n in self.nodes if n.kind == kind and n.owner == action_id]

    @property
    def parameters(self) -> list[Node]:
        return [n for n in self.nodes if n.kind in ("InputParameter", "OutputParameter")]

    @property
    def input_parameters(self) -> list[Node]:
        return [n for n in self.nodes if n.kind == "InputParameter"]

    @property
    def output_parameters(self) -> list[Node]:
        return [n for n in self.nodes if n.kind == "OutputParameter"]


@dataclass(frozen=True)
class ActivityDiagram:
    activities: tuple[Activity, ...]
    top_level: str

    def activity(self, activity_id: str) -> Activity:
        for a in self.activities:
            if a.id == activity_id:
                return a
        raise KeyError(activity_id)

    @property
    def top(self) -> Activity:
        return self.activity(self.top_level)

    @property
    def node_count(self) -> int:
        return sum(len(a.nodes) for a in self.activities)

    @property
    def edge_count(self) -> int:
        return sum(len(a.edges) for a in self.activities)

    def element_ids(self) -> set[str]:
        """Qualified ids: the activity frame ``A`` plus ``A/node`` and ``A/edge``."""
        ids = set()
        for a in self.activities:
            ids.add(a.id)
            ids.update(qualify(a.id, n.id) for n in a.nodes)
            ids.update(qualify(a.id, e.id) for e in a.edges)
        return ids


def qualify(activity_id: str, element_id: str) -> str:
    return f"{activity_id}/{element_id}"


@dataclass(frozen=True)
class Violation:
    element: str
    rule: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.severity}: {self.element}: {self.rule}: {self.message}"


# ------------------------------------------------------------------- parsing


def _require(obj, key, where, kind=str):
    if key not in obj:
        raise DiagramError(f"missing key {key!r}", where)
    val = obj[key]
    if not isinstance(val, kind):
        raise DiagramError(f"key {key!r} must be {kind.__name__}", where)
    return val


def _ident(value: str, where: str) -> str:
    if not _IDENT.match(value):
        raise DiagramError(f"identifier {value!r} must match [A-Za-z_][A-Za-z0-9_]*", where)
    return value


def parse_diagram(text: str, int_cap: int = DEFAULT_INT_CAP) -> ActivityDiagram:
    """Load a diagram from its JSON text.

    Edge indices missing from the file are assigned in file order, continuing
    after the largest explicit index of the activity.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DiagramError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(data, dict):
        raise DiagramError("top level must be a JSON object")
    acts_json = _require(data, "activities", "$", list)
    top = _require(data, "topLevel", "$")

    activities = []
    seen_acts = set()
    for ai, aj in enumerate(acts_json):
        where = f"activities[{ai}]"
        if not isinstance(aj, dict):
            raise DiagramError("activity must be an object", where)
        aid = _ident(_require(aj, "id", where), where)
        if aid in seen_acts:
            raise DiagramError(f"duplicate activity id {aid!r}", where)
        seen_acts.add(aid)
        activities.append(_parse_activity(aj, aid, where, int_cap))

    if top not in seen_acts:
        raise DiagramError(f"topLevel {top!r} names no activity", "$.topLevel")
    return ActivityDiagram(tuple(activities), top)


def _parse_activity(aj: dict, aid: str, where: str, int_cap: int) -> Activity:
    nodes = []
    node_ids = set()
    for ni, nj in enumerate(_require(aj, "nodes", where, list)):
        nw = f"{where}.nodes[{ni}]"
        if not isinstance(nj, dict):
            raise DiagramError("node must be an object", nw)
        nid = _ident(_require(nj, "id", nw), nw)
        if nid in node_ids:
            raise DiagramError(f"duplicate node id {nid!r}", nw)
        node_ids.add(nid)
        kind = _require(nj, "kind", nw)
        if kind not in NODE_KINDS:
            raise DiagramError(f"unknown node kind {kind!r}", nw)
        vt = None
        if nj.get("valueType") is not None:
            try:
                vt = datatype_from_json(nj["valueType"], int_cap)
            except ExprError as exc:
                raise DiagramError(str(exc), nw) from None
        nodes.append(
            Node(
                id=nid,
                kind=kind,
                name=nj.get("name") or "",
                signal=nj.get("signal"),
                callee=nj.get("callee"),
                value_type=vt,
                owner=nj.get("owner"),
            )
        )

    edges_json = _require(aj, "edges", where, list)
    explicit = [ej.get("index") for ej in edges_json if isinstance(ej, dict) and ej.get("index") is not None]
    next_index = max([i for i in explicit if isinstance(i, int)], default=0) + 1
    edges = []
    edge_ids = set()
    for ei, ej in enumerate(edges_json):
        ew = f"{where}.edges[{ei}]"
        if not isinstance(ej, dict):
            raise DiagramError("edge must be an object", ew)
        eid = _ident(_require(ej, "id", ew), ew)
        if eid in edge_ids:
            raise DiagramError(f"duplicate edge id {eid!r}", ew)
        edge_ids.add(eid)
        src = _require(ej, "source", ew)
        tgt = _require(ej, "target", ew)
        for end in (src, tgt):
            if end not in node_ids:
                raise DiagramError(f"dangling edge endpoint {end!r}", ew)
        index = ej.get("index")
        if index is None:
            index = next_index
            next_index += 1
        elif not isinstance(index, int) or isinstance(index, bool) or index < 1:
            raise DiagramError("edge index must be a positive integer", ew)
        kind = ej.get("kind", "Control")
        kind = {"control": "Control", "object": "Object"}.get(kind, kind)
        if kind not in ("Control", "Object"):
            raise DiagramError(f"unknown edge kind {kind!r}", ew)
        guard = None
        if ej.get("guard") is not None:
            try:
                guard = parse_expr(ej["guard"])
            except ExprError as exc:
                raise DiagramError(str(exc), ew) from None
        stereo = ej.get("stereotype")
        if stereo is not None and stereo != DECISION_INPUT:
            raise DiagramError(f"unsupported stereotype {stereo!r}", ew)
        edges.append(Edge(eid, index, src, tgt, kind, guard, stereo))
    return Activity(aid, tuple(nodes), tuple(edges))


def load_diagram(path, int_cap: int = DEFAULT_INT_CAP) -> ActivityDiagram:
    with open(path, encoding="utf-8") as fh:
        return parse_diagram(fh.read(), int_cap)


def to_json(d: ActivityDiagram) -> dict:
    acts = []
    for a in d.activities:
        nodes = []
        for n in a.nodes:
            nj = {"id": n.id, "kind": n.kind}
            if n.name:
                nj["name"] = n.name
            if n.signal is not None:
                nj["signal"] = n.signal
            if n.callee is not None:
                nj["callee"] = n.callee
            if n.value_type is not None:
                nj["valueType"] = n.value_type.to_json()
            if n.owner is not None:
                nj["owner"] = n.owner
            nodes.append(nj)
        edges = []
        for e in a.edges:
            ej = {"id": e.id, "index": e.index, "source": e.source, "target": e.target, "kind": e.kind}
            if e.guard is not None:
                ej["guard"] = render_prefix(e.guard)
            if e.stereotype is not None:
                ej["stereotype"] = e.stereotype
            edges.append(ej)
        acts.append({"id": a.id, "nodes": nodes, "edges": edges})
    return {"activities": acts, "topLevel": d.top_level}


def serialize_diagram(d: ActivityDiagram) -> str:
    return json.dumps(to_json(d), indent=2) + "\n"


# ---------------------------------------------------------------- validation


def validate(d: ActivityDiagram) -> list[Violation]:
    """Check every structural rule; violations come back as data.

    Warnings (``severity="warning"``) do not block translation.
    """
    out: list[Violation] = []
    act_ids = {a.id for a in d.activities}
    for a in d.activities:
        out.extend(_validate_activity(a, act_ids))
    out.extend(_validate_calls(d))
    return out


def errors(violations: Iterable[Violation]) -> list[Violation]:
    return [v for v in violations if v.severity == "error"]


def _validate_calls(d: ActivityDiagram) -> list[Violation]:
    out = []
    graph = {}
    for a in d.activities:
        graph[a.id] = [n.callee for n in a.nodes if n.kind == "CallBehavior" and n.callee]
    # cycle detection on the call graph reachable from the top level
    state: dict[str, int] = {}

    def visit(aid, stack):
        state[aid] = 1
        for callee in graph.get(aid, ()):
            if callee not in graph:
                continue
            if state.get(callee) == 1:
                out.append(Violation(aid, "call-acyclic", f"call cycle through {' -> '.join(stack + [callee])}"))
            elif callee not in state:
                visit(callee, stack + [callee])
        state[aid] = 2

    visit(d.top_level, [d.top_level])
    return out


def _validate_activity(a: Activity, act_ids: set[str]) -> list[Violation]:
    out = []

    def bad(elem, rule, msg, severity="error"):
        where = elem if elem == a.id else qualify(a.id, elem)
        out.append(Violation(where, rule, msg, severity))

    indices = sorted(e.index for e in a.edges)
    if indices != list(range(1, len(a.edges) + 1)):
        bad(a.id, "edge-indices", f"edge indices must be exactly 1..{len(a.edges)}, got {indices}")

    for n in a.nodes:
        inc = a.incoming(n.id)
        outg = a.outgoing(n.id)
        k = n.kind
        if k == "Initial":
            if inc:
                bad(n.id, "initial-no-incoming", "initial node has incoming edges")
            if not outg:
                bad(n.id, "initial-outgoing", "initial node needs an outgoing edge")
        elif k in ("ActivityFinal", "FlowFinal"):
            if not inc:
                bad(n.id, "final-incoming", "final node needs an incoming edge")
            if outg:
                bad(n.id, "final-no-outgoing", "final node has outgoing edges")
        elif k in ("Merge", "Decision"):
            flow_in = [e for e in inc if not e.is_decision_input]
            if not flow_in:
                bad(n.id, "control-incoming", f"{k.lower()} node needs an incoming edge")
            if not outg:
                bad(n.id, "control-outgoing", f"{k.lower()} node needs an outgoing edge")
        elif k == "Fork":
            if len(inc) != 1:
                bad(n.id, "fork-one-incoming", f"fork has {len(inc)} incoming edges")
            if not outg:
                bad(n.id, "control-outgoing", "fork node needs an outgoing edge")
        elif k == "Join":
            if len(inc) < 2:
                bad(n.id, "join-incoming", f"join has {len(inc)} incoming edges, needs >= 2")
            if len(outg) != 1:
                bad(n.id, "join-one-outgoing", f"join has {len(outg)} outgoing edges")
        elif k == "InputParameter":
            if inc:
                bad(n.id, "input-parameter-outgoing-only", "input parameter has incoming edges")
        elif k == "OutputParameter":
            if outg:
                bad(n.id, "output-parameter-incoming-only", "output parameter has outgoing edges")

        if k in OBJECT_BEARING and n.value_type is None:
            bad(n.id, "object-value-type", "object-bearing node needs a valueType")
        if k in PINS:
            owner = a._nodes.get(n.owner) if n.owner else None
            if owner is None or owner.kind not in ACTIONS:
                bad(n.id, "pin-owner", "pin must name an owning action in this activity")
            if k == "InputPin" and outg:
                bad(n.id, "input-pin-incoming-only", "input pin has outgoing edges")
            if k == "OutputPin" and inc:
                bad(n.id, "output-pin-outgoing-only", "output pin has incoming edges")
        if k in ("SendSignal", "AcceptEvent") and not n.signal:
            bad(n.id, "signal-declared", "signal action needs a signal id")
        if n.signal is not None and not _IDENT.match(n.signal):
            bad(n.id, "signal-declared", f"signal id {n.signal!r} is not an identifier")
        if k == "CallBehavior":
            if not n.callee:
                bad(n.id, "callee-declared", "call behavior action needs a callee")
            elif n.callee not in act_ids:
                bad(n.id, "callee-resolves", f"callee {n.callee!r} is not an activity")

        if k == "Decision":
            dins = [e for e in inc if e.is_decision_input]
            if len(dins) > 1:
                bad(n.id, "decision-input-single", "at most one decisionInputFlow edge is allowed")
            dtype = None
            if dins:
                src = a._nodes[dins[0].source]
                dtype = src.value_type
                if src.kind not in ("InputParameter", "ObjectNode", "OutputPin"):
                    bad(dins[0].id, "decision-input-source", "decisionInputFlow must leave an object node, output pin or input parameter")
            guarded = [e for e in outg if e.guard is not None]
            if guarded and len(guarded) != len(outg):
                for e in outg:
                    if e.guard is None:
                        bad(e.id, "decision-guards-complete", "decision branch has no guard while a sibling does", "warning")
            for e in guarded:
                try:
                    check_guard(e.guard, dtype)
                except ExprError as exc:
                    bad(e.id, "guard-typecheck", str(exc))

    for e in a.edges:
        src = a._nodes[e.source]
        tgt = a._nodes[e.target]
        if e.guard is not None and src.kind != "Decision":
            bad(e.id, "guard-on-decision-only", "guards are only allowed on decision outgoing edges")
        if e.is_decision_input:
            if tgt.kind != "Decision":
                bad(e.id, "decision-input-target", "decisionInputFlow must target a decision")
            if not e.is_object:
                bad(e.id, "decision-input-object", "decisionInputFlow must be an object edge")
        if e.is_object and not (src.kind in OBJECT_BEARING or tgt.kind in OBJECT_BEARING):
            bad(e.id, "object-edge-endpoint", "object edge needs an object-bearing endpoint")
        if not e.is_object and (src.kind in OBJECT_BEARING or tgt.kind in OBJECT_BEARING):
            bad(e.id, "control-edge-endpoint", "control edge touches an object-bearing node")
        if src.kind in PINS and src.kind != "OutputPin":
            bad(e.id, "pin-direction", "edges may only leave output pins")
        if tgt.kind in PINS and tgt.kind != "InputPin":
            bad(e.id, "pin-direction", "edges may only enter input pins")
    return out
