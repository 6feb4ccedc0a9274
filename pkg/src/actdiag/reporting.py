"""Counterexample mapping, DOT rendering and JSON reports.

A verdict's visible trace is mapped back to diagram elements through the
model's trace map.  Edge events also pull in both endpoints so the
highlighted path is connected.  For a determinism failure the final event
is the choice point and is styled orange; everything else on the defect
path is red.

Report schema ``report-v1``: one JSON object per checked property, or
``{"schema": "report-v1", "checks": [...]}`` when several properties were
checked in one run.  Reports carry no timestamps or wall times, so the same
input always gives the same bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ._version import __version__
from .checker.checks import DIVERGENT, FAIL, PASS, RESOURCE_LIMIT, TOKEN_OVERFLOW, Verdict
from .csp.events import TAU, TICK, Event
from .csp.pretty import render_expr
from .diagram import ActivityDiagram, qualify
from .translate import CspModel

SCHEMA = "report-v1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3
EXIT_DIVERGENT = 4

EXIT_CODES = {PASS: EXIT_OK, FAIL: EXIT_FAIL, RESOURCE_LIMIT: EXIT_LIMIT, TOKEN_OVERFLOW: EXIT_LIMIT, DIVERGENT: EXIT_DIVERGENT}

ADVICE = {
    PASS: "property holds; nothing to do",
    FAIL: "property fails; follow the highlighted path to the defect",
    RESOURCE_LIMIT: "state limit reached before exploration finished; raise --state-limit or simplify the model",
    TOKEN_OVERFLOW: "an activity held more tokens than its bound; raise --max-tokens or look for an unbounded loop",
    DIVERGENT: "the model can loop on internal steps forever; determinism is undefined until the cycle is removed",
}

RED = "red"
ORANGE = "orange"


class MappingError(Exception):
    """A trace event has no diagram element; the translation is broken."""


def exit_code(result: str) -> int:
    return EXIT_CODES[result]


# ---------------------------------------------------------------- mapping


@dataclass(frozen=True)
class MappedEvent:
    event: str
    elements: tuple[str, ...]
    role: str = "path"  # "path", "choice" or "blocked"


@dataclass(frozen=True)
class TraceMapping:
    steps: tuple[MappedEvent, ...] = ()

    @property
    def highlighted(self) -> frozenset:
        return frozenset(x for s in self.steps for x in s.elements)

    @property
    def choice(self) -> frozenset:
        return frozenset(x for s in self.steps if s.role == "choice" for x in s.elements)

    @property
    def trace(self) -> tuple[str, ...]:
        return tuple(s.event for s in self.steps if s.role != "blocked")

    def merge(self, other: "TraceMapping") -> "TraceMapping":
        return TraceMapping(self.steps + other.steps)


def event_elements(e: Event, m: CspModel) -> tuple[str, ...]:
    """Diagram elements behind one visible event, endpoints of edges included."""
    d = m.diagram
    if e is TICK:
        return (d.top_level,)
    found = m.trace_map.get(e)
    if not found:
        raise MappingError(f"event {e} maps to no diagram element")
    out = set(found)
    if e.base in ("ce", "oe"):
        a = d.activity(e.qual[0])
        for x in a.edges:
            if qualify(a.id, x.id) in found:
                out.add(qualify(a.id, x.source))
                out.add(qualify(a.id, x.target))
    return tuple(sorted(out))


def map_trace(v: Verdict, m: CspModel, d: ActivityDiagram | None = None) -> TraceMapping:
    """Resolve the verdict's visible trace (and blocked events) to elements.

    A passing verdict maps to nothing.  A failing one with an empty trace
    highlights the top-level activity frame.
    """
    d = d or m.diagram
    if v.result == PASS:
        return TraceMapping()
    steps = []
    trace = [e for e in v.trace if e is not TAU]
    for i, e in enumerate(trace):
        role = "choice" if v.choice_event is not None and i == len(trace) - 1 and e is v.choice_event else "path"
        steps.append(MappedEvent(str(e), event_elements(e, m), role))
    for e in v.blocked:
        steps.append(MappedEvent(str(e), event_elements(e, m), "blocked"))
    if not steps and v.result != RESOURCE_LIMIT:
        steps.append(MappedEvent("", (d.top_level,), "path"))
    return TraceMapping(tuple(steps))


# -------------------------------------------------------------------- DOT


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _attrs(pairs: dict) -> str:
    return "[" + ", ".join(f"{k}={_q(str(v))}" for k, v in pairs.items()) + "]"


_SHAPES = {
    "Initial": {"shape": "circle", "style": "filled", "fillcolor": "black", "label": "", "width": "0.25"},
    "ActivityFinal": {"shape": "doublecircle", "style": "filled", "fillcolor": "black", "label": "", "width": "0.2"},
    "FlowFinal": {"shape": "circle", "label": "X", "width": "0.3"},
    "Decision": {"shape": "diamond", "label": "", "width": "0.4", "height": "0.4"},
    "Merge": {"shape": "diamond", "label": "", "width": "0.4", "height": "0.4"},
    "Fork": {"shape": "box", "style": "filled", "fillcolor": "black", "label": "", "width": "1.2", "height": "0.06"},
    "Join": {"shape": "box", "style": "filled", "fillcolor": "black", "label": "", "width": "1.2", "height": "0.06"},
    "BasicAction": {"shape": "box", "style": "rounded"},
    "CallBehavior": {"shape": "box", "style": "rounded"},
    "SendSignal": {"shape": "cds"},
    "AcceptEvent": {"shape": "invhouse"},
    "ObjectNode": {"shape": "box"},
    "InputParameter": {"shape": "box"},
    "OutputParameter": {"shape": "box"},
    "InputPin": {"shape": "square", "label": "", "width": "0.15"},
    "OutputPin": {"shape": "square", "label": "", "width": "0.15"},
}


def _node_attrs(n, color: str | None) -> dict:
    attrs = dict(_SHAPES.get(n.kind, {"shape": "box"}))
    if "label" not in attrs:
        label = n.label
        if n.kind == "CallBehavior":
            label = f"{label}\n(calls {n.callee})"
        elif n.kind in ("SendSignal", "AcceptEvent"):
            label = f"{label}\n<{n.signal}>"
        attrs["label"] = label
    if n.kind in ("InputPin", "OutputPin"):
        attrs["xlabel"] = n.label
    if color:
        attrs["color"] = color
        attrs["fontcolor"] = color
        attrs["penwidth"] = "2"
        if attrs.get("fillcolor") == "black":
            attrs["fillcolor"] = color
    return attrs


def emit_dot(d: ActivityDiagram, t: TraceMapping | None = None) -> str:
    """Graphviz rendering with the mapped elements highlighted."""
    t = t or TraceMapping()
    hi, choice = t.highlighted, t.choice

    def color(x: str) -> str | None:
        if x in choice:
            return ORANGE
        if x in hi:
            return RED
        return None

    out = [f"digraph {_q(d.top_level)} {{"]
    out.append('  graph [rankdir="TB", fontname="Helvetica", compound="true"];')
    out.append('  node [fontname="Helvetica", fontsize="11"];')
    out.append('  edge [fontname="Helvetica", fontsize="10"];')
    for a in d.activities:
        out.append(f"  subgraph {_q('cluster_' + a.id)} {{")
        ga = {"label": a.id, "style": "rounded"}
        c = color(a.id)
        if c:
            ga.update(color=c, fontcolor=c, penwidth="2")
        for k, v in ga.items():
            out.append(f"    {k}={_q(v)};")
        for n in a.nodes:
            out.append(f"    {_q(qualify(a.id, n.id))} {_attrs(_node_attrs(n, color(qualify(a.id, n.id))))};")
        for n in a.nodes:
            if n.owner is not None:
                pin = _q(qualify(a.id, n.id))
                owner = _q(qualify(a.id, n.owner))
                out.append(f'    {pin} -> {owner} [style="dotted", arrowhead="none"];')
        for e in sorted(a.edges, key=lambda x: x.index):
            label = str(e.index)
            if e.guard is not None:
                label += f" [{render_expr(e.guard).strip('()')}]"
            attrs = {"label": label}
            if e.is_object:
                attrs["style"] = "dashed"
            c = color(qualify(a.id, e.id))
            if c:
                attrs.update(color=c, fontcolor=c, penwidth="2")
            src, dst = _q(qualify(a.id, e.source)), _q(qualify(a.id, e.target))
            out.append(f"    {src} -> {dst} {_attrs(attrs)};")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


# ------------------------------------------------------------ DOT syntax


class DotSyntaxError(ValueError):
    pass


_DOT_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|//[^\n]*|/\*.*?\*/|\#[^\n]*)
  | (?P<edgeop>->|--)
  | (?P<punct>[{}\[\];,=:])
  | (?P<id>[A-Za-z_\x80-\uffff][A-Za-z_0-9\x80-\uffff]*|-?(?:\.[0-9]+|[0-9]+(?:\.[0-9]*)?))
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<html><)
    """,
    re.VERBOSE | re.DOTALL,
)
_KEYWORDS = {"strict", "graph", "digraph", "node", "edge", "subgraph"}


def _dot_tokens(text: str) -> list[tuple[str, str]]:
    toks = []
    i = 0
    while i < len(text):
        m = _DOT_TOKEN.match(text, i)
        if not m:
            raise DotSyntaxError(f"unexpected character {text[i]!r} at offset {i}")
        kind = m.lastgroup
        if kind == "html":
            depth, j = 0, i
            while j < len(text):
                if text[j] == "<":
                    depth += 1
                elif text[j] == ">":
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            if depth:
                raise DotSyntaxError("unterminated HTML string")
            toks.append(("id", text[i : j + 1]))
            i = j + 1
            continue
        if kind != "ws":
            val = m.group()
            if kind == "id" and val.lower() in _KEYWORDS:
                toks.append(("kw", val.lower()))
            elif kind == "str":
                toks.append(("id", val))
            else:
                toks.append((kind if kind != "punct" else val, val))
        i = m.end()
    return toks


class _DotParser:
    """Recursive descent over the Graphviz grammar (graph, stmt_list, ...)."""

    def __init__(self, text: str):
        self.toks = _dot_tokens(text)
        self.i = 0
        self.directed = False

    def peek(self, k: int = 0):
        j = self.i + k
        return self.toks[j][0] if j < len(self.toks) else None

    def take(self, kind: str, value: str | None = None) -> str:
        if self.peek() != kind or (value is not None and self.toks[self.i][1].lower() != value):
            got = self.toks[self.i][1] if self.i < len(self.toks) else "end of input"
            raise DotSyntaxError(f"expected {value or kind}, got {got!r}")
        self.i += 1
        return self.toks[self.i - 1][1]

    def accept(self, kind: str, value: str | None = None) -> bool:
        if self.peek() == kind and (value is None or self.toks[self.i][1].lower() == value):
            self.i += 1
            return True
        return False

    def graph(self) -> None:
        self.accept("kw", "strict")
        if self.accept("kw", "digraph"):
            self.directed = True
        else:
            self.take("kw", "graph")
        self.accept("id")
        self.take("{")
        self.stmt_list()
        self.take("}")
        if self.i != len(self.toks):
            raise DotSyntaxError("trailing input after graph")

    def stmt_list(self) -> None:
        while self.peek() not in ("}", None):
            self.stmt()
            self.accept(";")

    def stmt(self) -> None:
        if self.peek() == "kw" and self.toks[self.i][1] in ("graph", "node", "edge"):
            self.i += 1
            self.attr_list(required=True)
            return
        if self.peek() == "id" and self.peek(1) == "=":
            self.i += 2
            self.take("id")
            return
        self.operand()
        if self.peek() == "edgeop":
            while self.peek() == "edgeop":
                op = self.take("edgeop")
                if (op == "->") != self.directed:
                    raise DotSyntaxError(f"edge operator {op} in the wrong kind of graph")
                self.operand()
            self.attr_list()
        else:
            self.attr_list()

    def operand(self) -> None:
        if self.peek() in ("kw", "{"):
            self.subgraph()
        else:
            self.take("id")
            if self.accept(":"):
                self.take("id")
                if self.accept(":"):
                    self.take("id")

    def subgraph(self) -> None:
        if self.accept("kw", "subgraph"):
            self.accept("id")
        self.take("{")
        self.stmt_list()
        self.take("}")

    def attr_list(self, required: bool = False) -> None:
        if required and self.peek() != "[":
            self.take("[")
        while self.accept("["):
            while self.peek() != "]":
                self.take("id")
                if self.accept("="):
                    self.take("id")
                if not self.accept(","):
                    self.accept(";")
            self.take("]")


def check_dot(text: str) -> None:
    """Raise :class:`DotSyntaxError` unless ``text`` is one DOT graph."""
    _DotParser(text).graph()


# ----------------------------------------------------------------- report


@dataclass(frozen=True)
class Report:
    property: str
    result: str
    trace: tuple[str, ...] = ()
    choice_point: str | None = None
    blocked: tuple[str, ...] = ()
    highlighted: tuple[str, ...] = ()
    choice_elements: tuple[str, ...] = ()
    mapping: tuple[dict, ...] = ()
    states: int = 0
    transitions: int = 0
    detail: str = ""
    exit_code: int = 0
    advice: str = ""
    tool: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    diagram: dict = field(default_factory=dict)
    full_trace: tuple[str, ...] | None = None

    def to_json(self) -> dict:
        out = {
            "schema": SCHEMA,
            "property": self.property,
            "result": self.result,
            "exitCode": self.exit_code,
            "advice": self.advice,
            "detail": self.detail,
            "trace": list(self.trace),
            "choicePoint": self.choice_point,
            "blocked": list(self.blocked),
            "highlighted": list(self.highlighted),
            "choiceElements": list(self.choice_elements),
            "mapping": [dict(x) for x in self.mapping],
            "statistics": {"states": self.states, "transitions": self.transitions},
            "diagram": self.diagram,
            "config": self.config,
            "tool": self.tool,
        }
        if self.result == RESOURCE_LIMIT:
            out["statistics"]["statesExplored"] = self.states
        if self.full_trace is not None:
            out["fullTrace"] = list(self.full_trace)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Report":
        if obj.get("schema") != SCHEMA:
            raise ValueError(f"unsupported report schema {obj.get('schema')!r}")
        stats = obj.get("statistics", {})
        full = obj.get("fullTrace")
        return cls(
            property=obj["property"],
            result=obj["result"],
            trace=tuple(obj.get("trace", ())),
            choice_point=obj.get("choicePoint"),
            blocked=tuple(obj.get("blocked", ())),
            highlighted=tuple(obj.get("highlighted", ())),
            choice_elements=tuple(obj.get("choiceElements", ())),
            mapping=tuple(obj.get("mapping", ())),
            states=stats.get("states", 0),
            transitions=stats.get("transitions", 0),
            detail=obj.get("detail", ""),
            exit_code=obj.get("exitCode", 0),
            advice=obj.get("advice", ""),
            tool=obj.get("tool", {}),
            config=obj.get("config", {}),
            diagram=obj.get("diagram", {}),
            full_trace=None if full is None else tuple(full),
        )


def _config_json(m: CspModel | None) -> dict:
    if m is None:
        return {}
    c = m.config
    return {
        "maxTokens": dict(sorted(m.max_tokens.items())),
        "hidden": sorted(c.hidden),
        "intCap": c.int_cap,
        "strictTokens": c.strict_tokens,
        "stateLimit": m.bounds.get("stateLimit"),
    }


def build_report(
    v: Verdict,
    t: TraceMapping | None = None,
    m: CspModel | None = None,
    full_trace: Sequence[Event] | None = None,
) -> Report:
    t = t or TraceMapping()
    diagram = {}
    if m is not None:
        d = m.diagram
        diagram = {"topLevel": d.top_level, "nodes": d.node_count, "edges": d.edge_count}
    return Report(
        property=v.property,
        result=v.result,
        trace=tuple(str(e) for e in v.trace if e is not TAU),
        choice_point=None if v.choice_event is None else str(v.choice_event),
        blocked=tuple(str(e) for e in v.blocked),
        highlighted=tuple(sorted(t.highlighted)),
        choice_elements=tuple(sorted(t.choice)),
        mapping=tuple({"event": s.event, "elements": list(s.elements), "role": s.role} for s in t.steps),
        states=v.states,
        transitions=v.transitions,
        detail=v.detail,
        exit_code=exit_code(v.result),
        advice=ADVICE[v.result],
        tool={"name": "actdiag", "version": __version__},
        config=_config_json(m),
        diagram=diagram,
        full_trace=None if full_trace is None else tuple(str(e) for e in full_trace),
    )


def emit_report(
    v: Verdict,
    t: TraceMapping | None = None,
    m: CspModel | None = None,
    full_trace: Sequence[Event] | None = None,
) -> str:
    return _dump(build_report(v, t, m, full_trace).to_json())


def emit_reports(reports: Iterable[Report]) -> str:
    """Several properties of one run in a single document."""
    reports = list(reports)
    if len(reports) == 1:
        return _dump(reports[0].to_json())
    return _dump(
        {
            "schema": SCHEMA,
            "exitCode": max((r.exit_code for r in reports), default=0),
            "checks": [r.to_json() for r in reports],
        }
    )


def parse_report(text: str) -> list[Report]:
    obj = json.loads(text)
    if obj.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {obj.get('schema')!r}")
    if "checks" in obj:
        return [Report.from_json(x) for x in obj["checks"]]
    return [Report.from_json(obj)]


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
