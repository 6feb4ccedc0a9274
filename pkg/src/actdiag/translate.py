"""Activity diagram to process-term translation.

Every node becomes one definition ``<node>_<activity>`` plus an interrupt
wrapper ``<node>_<activity>_t`` that lets ``endDiagram`` tear it down.
Per activity there is one ``Token_Manager_<activity>(n, init)`` and one
memory ``Mem_<node>_<activity>(x)`` per parameter, pin, object node and
decision with an input flow.  The harness that composes all of this is
built inline, so it adds no definitions of its own.

Channel naming: ``<base>_<qualifier>`` followed by dotted values, e.g.
``ce_A.3``, ``oe_A.2.true``, ``update_A.-1``, ``behavior_pay_A``,
``signal_S.A.B``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .csp import terms as T
from .csp.alphabet import alphabet, definition_alphabet
from .csp.events import Event, sort_key
from .csp.semantics import CspError, Environment
from .csp.terms import SKIP, STOP, EventSet, In, Out, Term
from .diagram import (
    ACTIONS,
    OBJECT_BEARING,
    PINS,
    Activity,
    ActivityDiagram,
    Edge,
    Node,
    errors,
    qualify,
    validate,
)
from .expr import DEFAULT_INT_CAP, Bool, BoundedInt, Const, DataType, Op, Var, distinct_sorted

DEFAULT_HIDDEN = frozenset({"update", "clear", "dc", "get", "set", "sysdone"})
CHANNEL_BASES = (
    "ce",
    "oe",
    "update",
    "clear",
    "endDiagram",
    "startActivity",
    "endActivity",
    "signal",
    "behavior",
    "dc",
    "get",
    "set",
    "sysdone",
)
# raised by the token manager in strict mode; never hidden
OVERFLOW = "tokenOverflow"
DEFAULT_STATE_LIMIT = 1_000_000


class TranslationError(Exception):
    pass


def default_state_limit() -> int:
    env = os.environ.get("ACTDIAG_STATE_LIMIT")
    if env:
        try:
            val = int(env)
        except ValueError:
            raise TranslationError(f"ACTDIAG_STATE_LIMIT={env!r} is not an integer") from None
        if val < 1:
            raise TranslationError("ACTDIAG_STATE_LIMIT must be positive")
        return val
    return DEFAULT_STATE_LIMIT


@dataclass(frozen=True)
class TranslationConfig:
    """Knobs for :func:`translate`.

    ``max_tokens`` of None means ``|edges| + |nodes|`` per activity.
    ``hidden`` holds channel bases (``update``, ``get``...) hidden in main.
    """

    max_tokens: int | None = None
    hidden: frozenset = DEFAULT_HIDDEN
    int_cap: int = DEFAULT_INT_CAP
    strict_tokens: bool = False
    state_limit: int | None = None

    def with_visibility(self, visible: Iterable[str] = (), hide: Iterable[str] = ()) -> "TranslationConfig":
        vis = {_base_name(c) for c in visible}
        hid = {_base_name(c) for c in hide}
        for c in vis | hid:
            if c not in CHANNEL_BASES:
                raise TranslationError(f"unknown channel {c!r}; expected one of {', '.join(CHANNEL_BASES)}")
        return replace(self, hidden=frozenset((self.hidden - vis) | hid))

    @property
    def effective_state_limit(self) -> int:
        return self.state_limit if self.state_limit is not None else default_state_limit()


def _base_name(c: str) -> str:
    return c.strip().rstrip("*")


@dataclass(frozen=True, eq=False)
class CspModel:
    diagram: ActivityDiagram
    config: TranslationConfig
    env: Environment
    main: Term
    trace_map: Mapping[Event, frozenset]
    visible_set: frozenset
    hidden_set: frozenset
    bounds: Mapping[str, object]
    sync_sets: Mapping[str, frozenset] = field(default_factory=dict)
    max_tokens: Mapping[str, int] = field(default_factory=dict)

    def elements(self, e: Event) -> frozenset:
        return self.trace_map.get(e, frozenset())

    @property
    def alphabet(self) -> frozenset:
        return self.visible_set | self.hidden_set


# ------------------------------------------------------------------- naming


def node_process(node_id: str, activity_id: str) -> str:
    return f"{node_id}_{activity_id}"


def wrapper_process(node_id: str, activity_id: str) -> str:
    return f"{node_id}_{activity_id}_t"


def token_manager(activity_id: str) -> str:
    return f"Token_Manager_{activity_id}"


def memory_process(node_id: str, activity_id: str) -> str:
    return f"Mem_{node_id}_{activity_id}"


def activity_process(activity_id: str) -> str:
    return f"Activity_{activity_id}"


def ce(a: str, i: int) -> Event:
    return Event("ce", (a,), (i,))


def oe(a: str, i: int, v) -> Event:
    return Event("oe", (a,), (i, v))


def update(a: str, k: int) -> Event:
    return Event("update", (a,), (k,))


def clear(a: str) -> Event:
    return Event("clear", (a,))


def end_diagram(a: str) -> Event:
    return Event("endDiagram", (a,))


def behavior(node_id: str, a: str, values: tuple = ()) -> Event:
    return Event("behavior", (node_id, a), values)


SYSDONE = Event("sysdone")


def _pfx(ev: Event, cont: Term = SKIP) -> Term:
    return T.event_prefix(ev, cont)


def _balanced(items: Sequence, combine):
    """Balanced binary fold, so shared sub-compositions stay shallow."""
    items = list(items)
    if not items:
        return None
    while len(items) > 1:
        nxt = []
        for i in range(0, len(items) - 1, 2):
            nxt.append(combine(items[i], items[i + 1]))
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


# ------------------------------------------------------------- edge typing


def edge_types(a: Activity) -> dict[str, DataType]:
    """Value type carried by each object edge of ``a``."""
    types: dict[str, DataType] = {}
    for e in a.edges:
        if not e.is_object:
            continue
        src, tgt = a.node(e.source), a.node(e.target)
        st = src.value_type if src.kind in OBJECT_BEARING else None
        tt = tgt.value_type if tgt.kind in OBJECT_BEARING else None
        if st is not None and tt is not None and st != tt:
            raise TranslationError(f"{qualify(a.id, e.id)}: object edge joins {st.to_json()} to {tt.to_json()}")
        if st is not None or tt is not None:
            types[e.id] = st if st is not None else tt
    # merges and decisions pass values through unchanged
    changed = True
    while changed:
        changed = False
        for e in a.edges:
            if not e.is_object or e.id in types:
                continue
            src = a.node(e.source)
            if src.kind in ("Merge", "Decision"):
                ins = [types.get(x.id) for x in a.incoming(src.id) if x.is_object and not x.is_decision_input]
                ins = [t for t in ins if t is not None]
                if ins:
                    types[e.id] = ins[0]
                    changed = True
    for e in a.edges:
        if e.is_object and e.id not in types:
            raise TranslationError(f"{qualify(a.id, e.id)}: cannot determine the value type of object edge")
    return types


# ----------------------------------------------------------- node builders


class _ActivityBuilder:
    """Builds node, token manager and memory definitions for one activity."""

    def __init__(self, d: ActivityDiagram, a: Activity, cfg: TranslationConfig, env: Environment):
        self.d = d
        self.a = a
        self.A = a.id
        self.cfg = cfg
        self.env = env
        self.types = edge_types(a)
        self.live = _reachable_activities(d) if d.top_level in {x.id for x in d.activities} else [a]
        self.memories: dict[str, tuple] = {}  # node id -> domain
        self._fresh = 0

    # helpers ----------------------------------------------------------
    def var(self, stem: str) -> str:
        self._fresh += 1
        return f"{stem}{self._fresh}"

    def dom(self, e: Edge) -> tuple:
        return self.types[e.id].values()

    def recv(self, e: Edge, var: str | None = None, cont: Term = SKIP) -> Term:
        if e.is_object:
            return T.Prefix("oe", (self.A,), (Out(e.index), In(var or "_", self.dom(e))), cont)
        return _pfx(ce(self.A, e.index), cont)

    def send(self, e: Edge, value=None) -> Term:
        if e.is_object:
            if value is None:
                # an object edge leaving a plain action carries an unspecified value
                return T.Prefix("oe", (self.A,), (Out(e.index), In("_", self.dom(e))), SKIP)
            return T.Prefix("oe", (self.A,), (Out(e.index), Out(value)), SKIP)
        return _pfx(ce(self.A, e.index))

    def upd(self, k: int, cont: Term = SKIP) -> Term:
        return _pfx(update(self.A, k), cont)

    def get(self, node_id: str, var: str, cont: Term) -> Term:
        return T.Prefix("get", (node_id, self.A), (In(var, self.memories[node_id]),), cont)

    def set(self, node_id: str, value, cont: Term = SKIP) -> Term:
        return T.Prefix("set", (node_id, self.A), (Out(value),), cont)

    def memory(self, n: Node, dtype: DataType) -> None:
        self.memories[n.id] = dtype.values()

    def flow_in(self, n: Node) -> list[Edge]:
        return [e for e in self.a.incoming(n.id) if not e.is_decision_input]

    # dispatch ---------------------------------------------------------
    def node_body(self, n: Node) -> Term:
        k = n.kind
        if k in ACTIONS:
            return self.action(n)
        fn = getattr(self, "k_" + k, None)
        if fn is None:
            raise TranslationError(f"{qualify(self.A, n.id)}: unsupported node kind {k}")
        return fn(n)

    def recurse(self, n: Node) -> Term:
        return T.Ref(node_process(n.id, self.A))

    # control nodes ----------------------------------------------------
    def k_Initial(self, n: Node) -> Term:
        outs = self.a.outgoing(n.id)
        return self.upd(len(outs), T.inter_all(self.send(e) for e in outs))

    def k_Fork(self, n: Node) -> Term:
        outs = self.a.outgoing(n.id)
        (inc,) = self.a.incoming(n.id)
        emit = T.inter_all(self.send(e) for e in outs)
        return T.seq_all([self.recv(inc), self.upd(len(outs) - 1), emit, self.recurse(n)])

    def k_Join(self, n: Node) -> Term:
        ins = self.a.incoming(n.id)
        (out,) = self.a.outgoing(n.id)
        intake = T.inter_all(self.recv(e) for e in ins)
        return T.seq_all([intake, self.upd(1 - len(ins)), self.send(out), self.recurse(n)])

    def k_FlowFinal(self, n: Node) -> Term:
        intake = T.ext_all(self.recv(e) for e in self.a.incoming(n.id))
        return T.seq_all([intake, self.upd(-1), self.recurse(n)])

    def k_ActivityFinal(self, n: Node) -> Term:
        intake = T.ext_all(self.recv(e) for e in self.a.incoming(n.id))
        return T.seq(intake, _pfx(clear(self.A)))

    def k_Merge(self, n: Node) -> Term:
        outs = self.a.outgoing(n.id)
        branches = []
        for e in self.a.incoming(n.id):
            v = "v" if e.is_object else None
            emit = T.inter_all(self.send(o, Var(v) if (v and o.is_object) else None) for o in outs)
            # count first, as a fork does, so the total never dips below the tokens held
            if len(outs) != 1:
                emit = self.upd(len(outs) - 1, emit)
            branches.append(self.recv(e, v, emit))
        return T.seq(T.ext_all(branches), self.recurse(n))

    def k_Decision(self, n: Node) -> Term:
        outs = self.a.outgoing(n.id)
        ins = self.flow_in(n)
        dins = [e for e in self.a.incoming(n.id) if e.is_decision_input]
        dc = Event("dc", (self.A, n.id))
        hide_dc = EventSet(channels=[dc.channel])

        def choice(value_var):
            alts = []
            for e in outs:
                val = Var(value_var) if (value_var and e.is_object) else None
                if e.is_object and val is None and not dins:
                    raise TranslationError(f"{qualify(self.A, e.id)}: object branch of a decision needs an object input")
                alts.append(T.Guard(e.guard if e.guard is not None else Const(True), _pfx(dc, self.send(e, val))))
            return T.hide(T.ext_all(alts), hide_dc)

        if not dins:
            branches = []
            for e in ins:
                v = "v" if e.is_object else None
                branches.append(self.recv(e, v, choice(v)))
            return T.seq(T.ext_all(branches), self.recurse(n))

        if any(e.is_object for e in ins) and any(e.is_object for e in outs):
            raise TranslationError(f"{qualify(self.A, n.id)}: a decision with a decisionInputFlow cannot pass object values through")
        (din,) = dins
        self.memory(n, self.types[din.id])
        intake = T.inter(
            T.ext_all(self.recv(e) for e in ins),
            self.recv(din, "x", self.set(n.id, Var("x"))),
        )
        decide = self.get(n.id, "x", choice(None))
        return T.seq_all([intake, self.upd(-1), decide, self.recurse(n)])

    # object nodes -----------------------------------------------------
    def k_InputParameter(self, n: Node) -> Term:
        self.memory(n, n.value_type)
        outs = self.a.outgoing(n.id)
        if not outs:
            return SKIP
        emit = T.inter_all(self.send(e, Var("x")) for e in outs)
        return self.upd(len(outs), self.get(n.id, "x", emit))

    def k_OutputParameter(self, n: Node) -> Term:
        self.memory(n, n.value_type)
        branches = [self.recv(e, "x", self.set(n.id, Var("x"), self.upd(-1))) for e in self.a.incoming(n.id)]
        return T.seq(T.ext_all(branches), self.recurse(n))

    def k_ObjectNode(self, n: Node) -> Term:
        self.memory(n, n.value_type)
        outs = self.a.outgoing(n.id)
        store = T.ext_all(self.recv(e, "x", self.set(n.id, Var("x"))) for e in self.a.incoming(n.id))
        parts = [store]
        if outs:
            parts.append(self.get(n.id, "y", T.ext_all(self.send(e, Var("y")) for e in outs)))
        else:
            parts.append(self.upd(-1))
        return T.seq_all(parts + [self.recurse(n)])

    # actions ----------------------------------------------------------
    def action(self, n: Node) -> Term:
        a = self.a
        in_pins = a.pins_of(n.id, "InputPin")
        out_pins = a.pins_of(n.id, "OutputPin")
        for p in in_pins + out_pins:
            self.memory(p, p.value_type)
        fed_pins = [p for p in in_pins if a.incoming(p.id)]
        intake_parts = [self.recv(e) for e in a.incoming(n.id)]
        for p in fed_pins:
            intake_parts.append(T.ext_all(self.recv(e, "x", self.set(p.id, Var("x"))) for e in a.incoming(p.id)))
        in_count = len(intake_parts)
        intake = T.inter_all(intake_parts)

        own_out = a.outgoing(n.id)
        emit_parts = [self.send(e) for e in own_out]
        out_count = len(own_out)
        for q in out_pins:
            qo = a.outgoing(q.id)
            if qo:
                out_count += len(qo)
                emit_parts.append(self.get(q.id, "y", T.inter_all(self.send(e, Var("y")) for e in qo)))
        emission = T.inter_all(emit_parts)

        parts = [intake, self.effect(n, in_pins, out_pins)]
        if out_count != in_count:
            parts.append(self.upd(out_count - in_count))
        parts.append(emission)
        if in_count:
            parts.append(self.recurse(n))
        # an action without incoming edges is enabled once, at activity start
        return T.seq_all(parts)

    def effect(self, n: Node, in_pins: list[Node], out_pins: list[Node]) -> Term:
        k = n.kind
        if k == "BasicAction":
            vars_ = [f"o{i}" for i in range(len(out_pins))]
            stores = SKIP
            for q, v in reversed(list(zip(out_pins, vars_))):
                stores = self.set(q.id, Var(v), stores)
            fields = [In(v, q.value_type.values()) for q, v in zip(out_pins, vars_)]
            return T.Prefix("behavior", (n.id, self.A), fields, stores)
        if out_pins and k != "CallBehavior":
            raise TranslationError(f"{qualify(self.A, n.id)}: output pins are only supported on basic actions and calls")
        if k == "SendSignal":
            targets = [x.id for x in self.live if _has_signal(x, "AcceptEvent", n.signal)]
            return T.Prefix("signal", (n.signal,), (Out(self.A), In("target", targets)), SKIP)
        if k == "AcceptEvent":
            senders = [x.id for x in self.live if _has_signal(x, "SendSignal", n.signal)]
            return T.Prefix("signal", (n.signal,), (In("sender", senders), Out(self.A)), SKIP)
        # CallBehavior
        callee = self.d.activity(n.callee)
        params = callee.input_parameters
        results = callee.output_parameters
        if in_pins and len(in_pins) == len(params):
            args = [self.var("a") for _ in params]
            start = T.Prefix("startActivity", (callee.id,), tuple(Out(Var(v)) for v in args), SKIP)
            for p, v in reversed(list(zip(in_pins, args))):
                start = self.get(p.id, v, start)
        else:
            start = T.Prefix("startActivity", (callee.id,), tuple(In(self.var("a"), p.value_type.values()) for p in params), SKIP)
        outs = [self.var("r") for _ in results]
        stores = SKIP
        if out_pins:
            if len(out_pins) != len(results):
                raise TranslationError(f"{qualify(self.A, n.id)}: {len(out_pins)} output pins but {callee.id} has {len(results)} output parameters")
            for q, v in reversed(list(zip(out_pins, outs))):
                stores = self.set(q.id, Var(v), stores)
        end = T.Prefix("endActivity", (callee.id,), tuple(In(v, p.value_type.values()) for v, p in zip(outs, results)), stores)
        return T.seq(start, end)

    # token manager and memories --------------------------------------
    def token_manager(self, updates: Iterable[int], max_tokens: int) -> None:
        A = self.A
        n, init, x = Var("n"), Var("init"), Var("x")
        total = Op("+", n, x)
        if self.cfg.strict_tokens:
            grow = T.ext(
                T.Guard(Op("and", Op("<=", total, Const(max_tokens)), Op(">=", total, Const(0))), T.Ref(token_manager(A), (total, Const(True)))),
                T.Guard(Op("or", Op(">", total, Const(max_tokens)), Op("<", total, Const(0))), _pfx(Event(OVERFLOW, (A,)), STOP)),
            )
        else:
            clamped = Op("max", Const(0), Op("min", Const(max_tokens), total))
            grow = T.Ref(token_manager(A), (clamped, Const(True)))
        body = T.ExtChoice(
            T.Prefix("update", (A,), (In("x", distinct_sorted(updates)),), grow),
            T.ExtChoice(
                _pfx(clear(A), _pfx(end_diagram(A))),
                T.Guard(Op("and", Op("=", n, Const(0)), init), _pfx(end_diagram(A))),
            ),
        )
        self.env.define(token_manager(A), body, [("n", range(0, max_tokens + 1)), ("init", (False, True))])

    def define_memories(self) -> None:
        for nid, dom in self.memories.items():
            name = memory_process(nid, self.A)
            body = T.ExtChoice(
                T.Prefix("get", (nid, self.A), (Out(Var("x")),), T.Ref(name, (Var("x"),))),
                T.Prefix("set", (nid, self.A), (In("y", dom),), T.Ref(name, (Var("y"),))),
            )
            self.env.define(name, body, [("x", dom)])


def _has_signal(a: Activity, kind: str, signal: str) -> bool:
    return any(n.kind == kind and n.signal == signal for n in a.nodes)


# ------------------------------------------------------------- public ops


def _builder(node: Node, activity: Activity, diagram: ActivityDiagram | None, cfg: TranslationConfig | None):
    d = diagram or ActivityDiagram((activity,), activity.id)
    return _ActivityBuilder(d, activity, cfg or TranslationConfig(), Environment())


def translate_basic_action(node: Node, activity: Activity, diagram: ActivityDiagram | None = None) -> Term:
    """Body of a BasicAction: intake ; behavior ; token update ; emission ; recursion."""
    if node.kind != "BasicAction":
        raise TranslationError(f"{node.id} is a {node.kind}, not a BasicAction")
    return _builder(node, activity, diagram, None).node_body(node)


def translate_signal_action(node: Node, activity: Activity, diagram: ActivityDiagram | None = None) -> Term:
    if node.kind not in ("SendSignal", "AcceptEvent"):
        raise TranslationError(f"{node.id} is not a signal action")
    if not node.signal:
        raise TranslationError(f"{node.id}: undeclared signal")
    return _builder(node, activity, diagram, None).node_body(node)


def translate_call_behavior(node: Node, activity: Activity, diagram: ActivityDiagram) -> Term:
    if node.kind != "CallBehavior":
        raise TranslationError(f"{node.id} is not a CallBehavior")
    if node.callee not in {a.id for a in diagram.activities}:
        raise TranslationError(f"{node.id}: callee {node.callee!r} missing")
    return _builder(node, activity, diagram, None).node_body(node)


def translate_control(node: Node, activity: Activity) -> Term:
    if node.kind not in ("Initial", "Fork", "FlowFinal", "Join", "ActivityFinal", "Merge", "Decision"):
        raise TranslationError(f"{node.id} is not a control node")
    return _builder(node, activity, None, None).node_body(node)


def translate_object_node(node: Node, activity: Activity) -> tuple[Term, Term]:
    """Node body and its memory definition body."""
    if node.kind not in OBJECT_BEARING - PINS:
        raise TranslationError(f"{node.id} is not an object node or parameter")
    if node.value_type is None:
        raise TranslationError(f"{node.id}: missing valueType")
    b = _builder(node, activity, None, None)
    body = b.node_body(node)
    b.define_memories()
    return body, b.env[memory_process(node.id, activity.id)].body


def build_token_manager(activity_id: str, max_tokens: int, updates: Iterable[int] = (-1, 1), strict: bool = False) -> Environment:
    """Environment holding just ``Token_Manager_<activity_id>``."""
    b = _ActivityBuilder(
        ActivityDiagram((Activity(activity_id, (), ()),), activity_id),
        Activity(activity_id, (), ()),
        TranslationConfig(strict_tokens=strict),
        Environment(),
    )
    b.token_manager(updates, max_tokens)
    return b.env


# -------------------------------------------------------------- translate


@dataclass
class _ActivityParts:
    body: Term  # expects the input parameter variables bound
    params: list  # (var, domain) of input parameters
    results: list  # domains of output parameters
    max_tokens: int


def _reachable_activities(d: ActivityDiagram) -> list[Activity]:
    """Activities reachable from the top level, every caller before its callees."""
    post: list[str] = []
    seen: set[str] = set()

    def visit(aid):
        seen.add(aid)
        for n in d.activity(aid).nodes:
            if n.kind == "CallBehavior" and n.callee not in seen:
                visit(n.callee)
        post.append(aid)

    visit(d.top_level)
    return [d.activity(aid) for aid in reversed(post)]


def translate(d: ActivityDiagram, cfg: TranslationConfig | None = None) -> CspModel:
    cfg = cfg or TranslationConfig()
    errs = errors(validate(d))
    if errs:
        raise TranslationError("diagram is invalid: " + "; ".join(map(str, errs)))
    env = Environment()
    acts = _reachable_activities(d)
    parts: dict[str, _ActivityParts] = {}
    sync_sets: dict[str, frozenset] = {}
    try:
        for a in acts:
            parts[a.id] = _translate_activity(d, a, cfg, env, sync_sets)
    except CspError as exc:
        raise TranslationError(str(exc)) from None

    top = parts[d.top_level]
    inner = T.Prefix("startActivity", (d.top_level,), [In(v, dom) for v, dom in top.params], T.seq(top.body, _pfx(SYSDONE)))
    callees = []
    for a in acts[1:]:
        p = parts[a.id]
        name = activity_process(a.id)
        env.define(name, T.Prefix("startActivity", (a.id,), [In(v, dom) for v, dom in p.params], T.seq(p.body, T.Ref(name))))
        callees.append((a, T.Interrupt(T.Ref(name), _pfx(SYSDONE))))
    # callers come before callees; two callers of W interleave on W's
    # brackets and only W itself synchronises with them
    composed = inner
    comp_alpha = alphabet(inner, env)
    for a, w in callees:
        w_alpha = alphabet(w, env)
        sync = EventSet(
            e for e in comp_alpha & w_alpha if e.base not in ("startActivity", "endActivity") or e.qual[0] == a.id
        )
        composed = T.Par(composed, sync, w)
        comp_alpha |= w_alpha
    full_alpha = alphabet(composed, env)
    hidden_chans = sorted({e.channel for e in full_alpha if e.base in cfg.hidden})
    main = T.hide(composed, EventSet(channels=hidden_chans))
    hidden_set = frozenset(e for e in full_alpha if e.base in cfg.hidden)
    visible_set = frozenset(full_alpha - hidden_set)
    trace_map = {e: _elements_of(e, d) for e in sorted(full_alpha, key=sort_key)}
    bounds = {
        "maxTokens": {a.id: parts[a.id].max_tokens for a in acts},
        "stateLimit": cfg.effective_state_limit,
    }
    return CspModel(
        diagram=d,
        config=cfg,
        env=env,
        main=main,
        trace_map=trace_map,
        visible_set=visible_set,
        hidden_set=hidden_set,
        bounds=bounds,
        sync_sets=sync_sets,
        max_tokens=bounds["maxTokens"],
    )


# shared by several nodes of one activity, but each occurrence pairs with a
# single partner (the token manager or a callee), never with a sibling node
_NODE_PRIVATE = frozenset({"update", "clear", "startActivity", "endActivity"})


def _translate_activity(d, a: Activity, cfg, env, sync_sets) -> _ActivityParts:
    b = _ActivityBuilder(d, a, cfg, env)
    A = a.id
    wrappers = []
    for n in a.nodes:
        if n.kind in PINS:
            continue
        env.define(node_process(n.id, A), b.node_body(n))
        wname = wrapper_process(n.id, A)
        env.define(wname, T.Interrupt(T.Ref(node_process(n.id, A)), _pfx(end_diagram(A))))
        wrappers.append((n, T.Ref(wname)))

    alpha = {n.id: definition_alphabet(wrapper_process(n.id, A), env) for n, _ in wrappers}
    for n, _ in wrappers:
        sync_sets[qualify(A, n.id)] = frozenset(e for e in alpha[n.id] if e.base in ("ce", "oe"))

    updates = set()
    for s in alpha.values():
        updates.update(e.values[0] for e in s if e.base == "update")
    max_tokens = cfg.max_tokens if cfg.max_tokens is not None else len(a.edges) + len(a.nodes)
    if max_tokens < 1:
        raise TranslationError("max tokens must be positive")
    b.token_manager(updates, max_tokens)

    # the node fold synchronises each pair of subtrees on what they share
    folded = _balanced(
        [(ref, alpha[n.id]) for n, ref in wrappers],
        lambda l, r: (T.Par(l[0], EventSet(e for e in l[1] & r[1] if e.base not in _NODE_PRIVATE), r[0]), l[1] | r[1]),
    )
    nodes_term = folded[0] if folded else SKIP
    tm_sync = EventSet(channels=[f"update_{A}", f"clear_{A}", f"endDiagram_{A}"])
    core = T.Par(nodes_term, tm_sync, T.Ref(token_manager(A), (0, False)))

    results = a.output_parameters
    out_vars = [f"r_{p.id}" for p in results]
    finish = T.Prefix("endActivity", (A,), [Out(Var(v)) for v in out_vars], SKIP)
    for p, v in reversed(list(zip(results, out_vars))):
        finish = b.get(p.id, v, finish)
    run = T.seq(core, finish)

    b.define_memories()
    params = [(f"p_{p.id}", p.value_type.values()) for p in a.input_parameters]
    pvars = {p.id: v for (v, _), p in zip(params, a.input_parameters)}
    if b.memories:
        stop_mem = T.Prefix("endActivity", (A,), [In("_", p.value_type.values()) for p in results], SKIP)
        mems = []
        for nid, dom in b.memories.items():
            init = Var(pvars[nid]) if nid in pvars else Const(dom[0])
            mems.append(T.Interrupt(T.Ref(memory_process(nid, A), (init,)), stop_mem))
        end_sync = EventSet(channels=[f"endActivity_{A}"])
        mem_term = _balanced(mems, lambda l, r: T.Par(l, end_sync, r))
        mem_chans = [f"{k}_{nid}_{A}" for nid in b.memories for k in ("get", "set")]
        body = T.Par(run, EventSet(channels=mem_chans + [f"endActivity_{A}"]), mem_term)
    else:
        body = run
    return _ActivityParts(body, params, [p.value_type.values() for p in results], max_tokens)


# ------------------------------------------------------------ trace map


def _elements_of(e: Event, d: ActivityDiagram) -> frozenset:
    base = e.base
    if base in ("ce", "oe"):
        a = d.activity(e.qual[0])
        idx = e.values[0]
        return frozenset(qualify(a.id, x.id) for x in a.edges if x.index == idx)
    if base in ("behavior", "get", "set"):
        return frozenset({qualify(e.qual[1], e.qual[0])})
    if base == "dc":
        return frozenset({qualify(e.qual[0], e.qual[1])})
    if base == "signal":
        sender, target = e.values
        out = {qualify(sender, n.id) for n in d.activity(sender).nodes if n.kind == "SendSignal" and n.signal == e.qual[0]}
        out |= {qualify(target, n.id) for n in d.activity(target).nodes if n.kind == "AcceptEvent" and n.signal == e.qual[0]}
        return frozenset(out)
    if base in ("startActivity", "endActivity"):
        w = e.qual[0]
        out = {w}
        for a in d.activities:
            out |= {qualify(a.id, n.id) for n in a.nodes if n.kind == "CallBehavior" and n.callee == w}
        return frozenset(out)
    if base == "sysdone":
        return frozenset({d.top_level})
    # update, clear, endDiagram, token overflow: the activity frame
    return frozenset({e.qual[0]})
