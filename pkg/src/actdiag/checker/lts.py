"""Explicit-state exploration into a CSR-encoded labelled transition system."""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import Iterator

from ..csp.events import TAU, TICK, Event, sort_key
from ..csp.semantics import CspError, Environment, Semantics
from ..csp.terms import OMEGA, Term
from ..translate import OVERFLOW, CspModel, default_state_limit


class ResourceLimit(Exception):
    def __init__(self, states_explored: int, limit: int):
        self.states_explored = states_explored
        self.limit = limit
        super().__init__(f"state limit {limit} exceeded after exploring {states_explored} states")


class TokenBoundExceeded(Exception):
    """Strict token mode: some activity held more tokens than its bound."""

    def __init__(self, activity: str, trace: list):
        self.activity = activity
        self.trace = trace
        super().__init__(f"token bound of activity {activity} exceeded")


class ModelError(Exception):
    """The model itself is broken (unguarded recursion, missing domain...)."""


@dataclass(eq=False)
class Lts:
    """States are interned terms; state 0 is the root.

    ``events[label]`` decodes labels: 0 is tau, 1 is tick, the rest are the
    visible events in canonical order.  Edges of each state are sorted by
    (label, target).
    """

    states: list
    events: list
    offsets: array
    labels: array
    targets: array
    terminated: bytearray
    root: int = 0
    env: Environment | None = None

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return len(self.labels)

    def edges(self, s: int) -> Iterator[tuple[Event, int]]:
        for k in range(self.offsets[s], self.offsets[s + 1]):
            yield self.events[self.labels[k]], self.targets[k]

    def label_of(self, e: Event) -> int:
        return self._label_index[e]

    def __post_init__(self):
        self._label_index = {e: i for i, e in enumerate(self.events)}

    def is_stable(self, s: int) -> bool:
        lo = self.offsets[s]
        return lo == self.offsets[s + 1] or self.labels[lo] != 0


def build_lts(
    source: CspModel | Term,
    limit: int | None = None,
    env: Environment | None = None,
    reduce: bool = True,
) -> Lts:
    """Breadth-first expansion of ``source`` (a model or a closed term)."""
    if isinstance(source, CspModel):
        root, env = source.main, source.env
        if limit is None:
            limit = source.bounds.get("stateLimit")
    else:
        root = source
        env = env or Environment()
    if limit is None:
        limit = default_state_limit()
    if limit < 1:
        raise ValueError("state limit must be positive")
    sem = Semantics(env, reduce=reduce)
    ids = {root: 0}
    states = [root]
    parent = [-1]
    pevent = [None]
    rows = []
    i = 0
    try:
        while i < len(states):
            row = []
            for e, s in sem.transitions(states[i]):
                if e.base == OVERFLOW:
                    raise TokenBoundExceeded(e.qual[0], _unwind(parent, pevent, i) + [e])
                j = ids.get(s)
                if j is None:
                    if len(states) >= limit:
                        raise ResourceLimit(len(states), limit)
                    j = ids[s] = len(states)
                    states.append(s)
                    parent.append(i)
                    pevent.append(e)
                row.append((e, j))
            rows.append(row)
            i += 1
    except (CspError, RecursionError) as exc:
        raise ModelError(str(exc) or type(exc).__name__) from None
    lts = _to_csr(states, rows)
    lts.env = env
    return lts


def _unwind(parent, pevent, s) -> list:
    out = []
    while parent[s] >= 0:
        out.append(pevent[s])
        s = parent[s]
    out.reverse()
    return out


def _to_csr(states, rows) -> Lts:
    seen = {e for row in rows for e, _ in row if e is not TAU and e is not TICK}
    events = [TAU, TICK] + sorted(seen, key=sort_key)
    rank = {e: i for i, e in enumerate(events)}
    offsets = array("q", [0])
    labels = array("q")
    targets = array("q")
    for row in rows:
        edges = sorted({(rank[e], j) for e, j in row})
        for lab, j in edges:
            labels.append(lab)
            targets.append(j)
        offsets.append(len(labels))
    terminated = bytearray(1 if t is OMEGA else 0 for t in states)
    return Lts(states, events, offsets, labels, targets, terminated)
