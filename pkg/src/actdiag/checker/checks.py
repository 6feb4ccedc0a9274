"""Deadlock, determinism and divergence verdicts over an explored LTS."""

from __future__ import annotations

from array import array
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from ..csp.events import TAU, TICK, Event, sort_key
from ..csp.semantics import Environment, Semantics
from ..csp.terms import OMEGA, Term
from ..translate import CspModel
from . import graph
from .lts import Lts, ResourceLimit, TokenBoundExceeded, build_lts

PASS = "pass"
FAIL = "fail"
RESOURCE_LIMIT = "resource-limit"
DIVERGENT = "divergent"
TOKEN_OVERFLOW = "token-overflow"

# a prefix never expands references, so any environment will do
_PREFIX_SEM = Semantics(Environment())

# channels that show what a stuck sub-process is waiting for
_PROGRESS = ("ce", "oe", "behavior", "signal", "startActivity", "endActivity")


@dataclass(frozen=True)
class Lasso:
    stem: tuple  # labels from the root to the first state of the cycle
    cycle: tuple  # tau labels around the cycle
    state: int


@dataclass(frozen=True)
class Verdict:
    property: str  # "deadlock" or "determinism"
    result: str
    trace: tuple = ()  # visible events only
    full_trace: tuple = ()  # every label on a witness path, tau included
    detail: str = ""
    choice_event: Event | None = None
    blocked: tuple = ()
    lasso: Lasso | None = None
    states: int = 0
    transitions: int = 0
    witness_state: int | None = None
    path: tuple = field(default=(), compare=False)  # state ids along full_trace

    @property
    def failed(self) -> bool:
        return self.result != PASS


def visible(trace: Iterable[Event]) -> tuple:
    return tuple(e for e in trace if e is not TAU)


# ------------------------------------------------------------------ paths


def _bfs(lts: Lts):
    return graph.bfs(lts.offsets, lts.labels, lts.targets, lts.n, lts.root)


def _path(parent, plabel, target: int) -> tuple[list, list]:
    labels, states = [], [target]
    s = target
    while parent[s] >= 0:
        labels.append(plabel[s])
        s = parent[s]
        states.append(s)
    labels.reverse()
    states.reverse()
    return labels, states


def shortest_trace(lts: Lts, target: int) -> list:
    """Least-length path root -> target; ties go to the lexicographically least."""
    _, dist, parent, plabel = _bfs(lts)
    if dist[target] < 0:
        raise ValueError(f"state {target} is unreachable")
    labels, _ = _path(parent, plabel, target)
    return [lts.events[x] for x in labels]


# ---------------------------------------------------------------- deadlock


def explore(prop: str, source, limit: int | None = None) -> Lts | Verdict:
    """The LTS of ``source``, or a verdict for ``prop`` when exploration gives up."""
    if isinstance(source, Lts):
        return source
    try:
        return build_lts(source, limit)
    except ResourceLimit as exc:
        return Verdict(prop, RESOURCE_LIMIT, detail=str(exc), states=exc.states_explored)
    except TokenBoundExceeded as exc:
        full = tuple(exc.trace)
        return Verdict(prop, TOKEN_OVERFLOW, trace=visible(full), full_trace=full, detail=str(exc))


def check_deadlock(source: Lts | CspModel, limit: int | None = None) -> Verdict:
    lts = explore("deadlock", source, limit)
    if isinstance(lts, Verdict):
        return lts
    stats = {"states": lts.n, "transitions": lts.n_transitions}
    stuck = graph.sinks(lts.offsets, lts.n, lts.terminated)
    if not len(stuck):
        return Verdict("deadlock", PASS, **stats)
    order, dist, parent, plabel = _bfs(lts)
    stuck_set = set(stuck)
    target = next(s for s in order if s in stuck_set)
    labels, states = _path(parent, plabel, target)
    full = tuple(lts.events[x] for x in labels)
    blocked = pending_events(lts.states[target])
    return Verdict(
        "deadlock",
        FAIL,
        trace=visible(full),
        full_trace=full,
        detail=f"{len(stuck)} deadlocked state(s); shortest reached after {len(full)} steps",
        blocked=blocked,
        witness_state=target,
        path=tuple(states),
        **stats,
    )


def pending_events(state: Term) -> tuple:
    """Progress events offered by sub-processes that are part-way through.

    A node sitting at its recursion point (or never started) is an
    unexpanded reference and is idle; a node that has consumed part of its
    intake shows up here with the edge it is still waiting for.
    """
    found: set = set()
    _collect(state, found)
    return tuple(sorted(found, key=sort_key))


def _collect(t: Term, out: set) -> None:
    tag = t.tag
    a = t.args
    if tag in ("par", "inter", "ext"):
        _collect(a[0], out)
        _collect(a[-1], out)
    elif tag in ("hide", "seq", "interrupt"):
        _collect(a[0], out)
    elif tag == "guard":
        _collect(a[1], out)
    elif tag == "prefix" and a[0] in _PROGRESS:
        out.update(e for e, _ in _PREFIX_SEM.transitions(t))


# ------------------------------------------------------------- divergence


def find_divergence(lts: Lts) -> Lasso | None:
    """A reachable tau cycle (stem + cycle), or None."""
    comp, cyclic = graph.tau_sccs(lts.offsets, lts.labels, lts.targets, lts.n)
    if not any(cyclic):
        return None
    order, dist, parent, plabel = _bfs(lts)
    s = next((x for x in order if cyclic[comp[x]]), None)
    if s is None:
        return None
    stem, _ = _path(parent, plabel, s)
    # shortest tau path from s back to s inside its component
    back = {s: None}
    q = deque([s])
    cycle = None
    while q and cycle is None:
        u = q.popleft()
        for k in range(lts.offsets[u], lts.offsets[u + 1]):
            if lts.labels[k] != 0:
                continue
            v = lts.targets[k]
            if comp[v] != comp[s]:
                continue
            if v == s:
                steps = 1
                w = u
                while back[w] is not None:
                    steps += 1
                    w = back[w]
                cycle = (TAU,) * steps
                break
            if v not in back:
                back[v] = u
                q.append(v)
    return Lasso(tuple(lts.events[x] for x in stem), cycle or (TAU,), s)


# ------------------------------------------------------------ determinism


@dataclass(eq=False)
class NormalizedLts:
    members: list  # sorted member states per macro-state; macro 0 is the root
    offsets: Sequence
    labels: Sequence
    targets: Sequence
    lts: Lts

    @property
    def n(self) -> int:
        return len(self.members)

    def enabled(self, m: int) -> list:
        return [self.labels[k] for k in range(self.offsets[m], self.offsets[m + 1])]

    def successor(self, m: int, label: int) -> int | None:
        for k in range(self.offsets[m], self.offsets[m + 1]):
            if self.labels[k] == label:
                return self.targets[k]
        return None

    def acceptances(self, m: int) -> list:
        """(state, acceptance label set) for every stable member."""
        out = []
        L = self.lts
        for q in self.members[m]:
            if L.is_stable(q):
                out.append((q, {L.labels[k] for k in range(L.offsets[q], L.offsets[q + 1])}))
        return out


def normalize(lts: Lts) -> NormalizedLts:
    members, mo, ml, mt = graph.normalize(lts.offsets, lts.labels, lts.targets, lts.n, lts.root)
    return NormalizedLts(list(members), mo, ml, mt, lts)


def check_determinism(source: Lts | CspModel, limit: int | None = None) -> Verdict:
    lts = explore("determinism", source, limit)
    if isinstance(lts, Verdict):
        return lts
    stats = {"states": lts.n, "transitions": lts.n_transitions}
    lasso = find_divergence(lts)
    if lasso is not None:
        return Verdict(
            "determinism",
            DIVERGENT,
            trace=visible(lasso.stem),
            full_trace=lasso.stem + lasso.cycle,
            detail=f"tau cycle of length {len(lasso.cycle)} reachable; determinism is undefined",
            lasso=lasso,
            witness_state=lasso.state,
            **stats,
        )
    norm = normalize(lts)
    found = None
    for m in range(norm.n):
        enabled = set(norm.enabled(m))
        for q, acc in norm.acceptances(m):
            missing = enabled - acc
            if missing:
                a = min(missing)
                if found is None or (found[0] == m and a < found[2]):
                    found = (m, q, a)
        if found is not None:
            break
    if found is None:
        return Verdict("determinism", PASS, **stats)
    m, q, a = found
    mparent, mplabel = _macro_tree(norm)
    s_labels, _ = _path(mparent, mplabel, m)
    s = tuple(lts.events[x] for x in s_labels)
    ev = lts.events[a]
    full, states = _raw_path(lts, s, q)
    return Verdict(
        "determinism",
        FAIL,
        trace=s + (ev,),
        full_trace=full,
        detail=f"after {len(s)} visible events {ev} can be both accepted and refused",
        choice_event=ev,
        blocked=pending_events(lts.states[q]),
        witness_state=q,
        path=tuple(states),
        **stats,
    )


def _macro_tree(norm: NormalizedLts):
    _, _, parent, plabel = graph.bfs(
        array("q", norm.offsets), array("q", norm.labels), array("q", norm.targets), norm.n, 0
    )
    return parent, plabel


def _raw_path(lts: Lts, trace: Sequence[Event], goal: int) -> tuple[tuple, list]:
    """Shortest raw path whose visible projection is ``trace`` and which ends in ``goal``."""
    want = [lts.label_of(e) for e in trace]
    start = (lts.root, 0)
    back = {start: None}
    q = deque([start])
    end = None
    while q:
        s, i = cur = q.popleft()
        if s == goal and i == len(want):
            end = cur
            break
        for k in range(lts.offsets[s], lts.offsets[s + 1]):
            lab = lts.labels[k]
            if lab == 0:
                nxt = (lts.targets[k], i)
            elif i < len(want) and lab == want[i]:
                nxt = (lts.targets[k], i + 1)
            else:
                continue
            if nxt not in back:
                back[nxt] = (cur, lab)
                q.append(nxt)
    if end is None:
        raise ValueError("witness state not reachable on the given trace")
    labels, states = [], [end[0]]
    cur = end
    while back[cur] is not None:
        cur, lab = back[cur]
        labels.append(lab)
        states.append(cur[0])
    labels.reverse()
    states.reverse()
    return tuple(lts.events[x] for x in labels), states


# ------------------------------------------------------------------ replay


def replay(lts: Lts, trace: Sequence[Event]) -> set:
    """States reachable from the root by ``trace`` (visible events, taus free)."""
    want = [e for e in trace if e is not TAU]
    cur = _tau_closure(lts, {lts.root})
    for e in want:
        try:
            lab = lts.label_of(e)
        except KeyError:
            return set()
        nxt = set()
        for s in cur:
            for k in range(lts.offsets[s], lts.offsets[s + 1]):
                if lts.labels[k] == lab:
                    nxt.add(lts.targets[k])
        cur = _tau_closure(lts, nxt)
        if not cur:
            break
    return cur


def _tau_closure(lts: Lts, states: set) -> set:
    out = set(states)
    stack = list(states)
    while stack:
        s = stack.pop()
        for k in range(lts.offsets[s], lts.offsets[s + 1]):
            if lts.labels[k] == 0 and lts.targets[k] not in out:
                out.add(lts.targets[k])
                stack.append(lts.targets[k])
    return out


def replay_terms(model: CspModel, trace: Sequence[Event], reduce: bool = True) -> set:
    """Like :func:`replay` but straight from the semantics, without the LTS.

    ``reduce`` should match the exploration for the states to be comparable.
    """
    sem = Semantics(model.env, reduce=reduce)
    cur = _term_closure(sem, {model.main})
    for e in trace:
        if e is TAU:
            continue
        cur = _term_closure(sem, {s for t in cur for ev, s in sem.transitions(t) if ev is e})
        if not cur:
            break
    return cur


def _term_closure(sem: Semantics, terms: set) -> set:
    out = set(terms)
    stack = list(terms)
    while stack:
        t = stack.pop()
        for e, s in sem.transitions(t):
            if e is TAU and s not in out:
                out.add(s)
                stack.append(s)
    return out


def is_deadlocked(sem: Semantics, t: Term) -> bool:
    return t is not OMEGA and not sem.transitions(t)


# ---------------------------------------------------------------- hidden


def explain_path(model: CspModel, lts: Lts, states: Sequence[int], labels: Sequence[Event]) -> list:
    """Replace each tau of a witness path by the hidden event behind it, if any."""
    sem = Semantics(model.env, reduce=True)
    out = []
    for i, e in enumerate(labels):
        if e is not TAU:
            out.append(e)
            continue
        src, dst = lts.states[states[i]], lts.states[states[i + 1]]
        out.append(_hidden_cause(sem, src, dst))
    return out


def _hidden_cause(sem: Semantics, src: Term, dst: Term) -> Event:
    if src.tag != "hide":
        return TAU
    inner, hidden = src.args
    for e, s in sem.transitions(inner):
        if e is TAU or e is TICK or e not in hidden:
            continue
        if sem._hide(s, hidden) is dst:
            return e
    return TAU


def check_all(source: Lts | CspModel, limit: int | None = None) -> tuple[Verdict, Verdict]:
    lts = explore("deadlock", source, limit)
    if isinstance(lts, Verdict):
        return lts, replace(lts, property="determinism")
    return check_deadlock(lts), check_determinism(lts)
