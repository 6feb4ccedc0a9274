"""Static over-approximation of the events a term may ever perform."""

from __future__ import annotations

import itertools
from typing import Mapping

from ..expr import ExprError, evaluate
from .events import Event
from .semantics import Environment
from .terms import In, Out, Term


class _Alphabets:
    def __init__(self, env: Environment):
        self.env = env
        self.defs: dict[str, frozenset] = {}
        self.busy: set[str] = set()

    def of(self, t: Term, doms: Mapping[str, tuple]) -> set[Event]:
        tag = t.tag
        a = t.args
        if tag in ("stop", "skip", "omega"):
            return set()
        if tag == "prefix":
            base, qual, fields, cont = a
            inner = dict(doms)
            out = set()
            for f in fields:
                if isinstance(f, In):
                    inner[f.var] = f.domain or ()
            out |= self._instances(base, qual, fields, inner)
            out |= self.of(cont, inner)
            return out
        if tag == "par":
            return self.of(a[0], doms) | self.of(a[2], doms)
        if tag == "hide":
            return {e for e in self.of(a[0], doms) if e not in a[1]}
        if tag == "guard":
            return self.of(a[1], doms)
        if tag == "ref":
            return set(self.of_def(a[0]))
        return self.of(a[0], doms) | self.of(a[1], doms)

    def of_def(self, name: str) -> frozenset:
        hit = self.defs.get(name)
        if hit is not None:
            return hit
        if name in self.busy:
            return frozenset()
        d = self.env.defs.get(name)
        if d is None:
            return frozenset()
        self.busy.add(name)
        try:
            res = frozenset(self.of(d.body, {p: dom or () for p, dom in d.params}))
        finally:
            self.busy.discard(name)
        # only memoise once no enclosing definition is still in progress,
        # otherwise a recursive cut could be cached as final
        if not self.busy:
            self.defs[name] = res
        return res

    def _instances(self, base, qual, fields, doms) -> set[Event]:
        per_field = []
        for f in fields:
            if isinstance(f, In):
                per_field.append(list(f.domain or ()))
                continue
            free = sorted(f.expr.free)
            if not free:
                per_field.append([evaluate(f.expr)])
                continue
            vals = {}
            for combo in itertools.product(*(doms.get(v, ()) for v in free)):
                try:
                    v = evaluate(f.expr, dict(zip(free, combo)))
                except ExprError:
                    continue
                vals[(type(v).__name__, v)] = v
            per_field.append(list(vals.values()))
        return {Event(base, qual, combo) for combo in itertools.product(*per_field)}


def alphabet(t: Term, env: Environment) -> frozenset:
    """Visible events ``t`` could ever communicate (guards ignored)."""
    return frozenset(_Alphabets(env).of(t, {}))


def definition_alphabet(name: str, env: Environment) -> frozenset:
    return _Alphabets(env).of_def(name)
