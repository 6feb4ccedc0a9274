"""Structural operational semantics for the term language.

``Semantics.transitions(t)`` returns every ``(event, successor)`` pair of a
closed term; ``initials`` and ``step`` are projections of it.  Results are
memoised per interned term, which is what makes exploring large parallel
compositions affordable: a global state is a tree of shared sub-terms whose
transitions are computed once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..expr import Const, Expr, ExprError, Value, evaluate, substitute, value_key
from . import terms as T
from .events import TAU, TICK, Event
from .terms import OMEGA, SKIP, STOP, EventSet, In, Out, Term


class CspError(Exception):
    pass


class UnresolvedRef(CspError):
    pass


class ArityError(CspError):
    pass


class DomainError(CspError):
    pass


@dataclass(frozen=True)
class Definition:
    """``name(p1, ..., pk) = body``; each parameter carries its finite domain."""

    name: str
    params: tuple[tuple[str, tuple | None], ...]
    body: Term

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass
class Environment:
    """Named process definitions.  Definitions are fixed once checking starts."""

    defs: dict[str, Definition] = field(default_factory=dict)

    def define(self, name: str, body: Term, params: Sequence[tuple[str, Sequence | None]] = ()) -> Definition:
        if name in self.defs:
            raise CspError(f"process {name!r} defined twice")
        d = Definition(name, tuple((p, None if dom is None else tuple(dom)) for p, dom in params), body)
        self.defs[name] = d
        return d

    def __contains__(self, name: str) -> bool:
        return name in self.defs

    def __getitem__(self, name: str) -> Definition:
        return self.defs[name]

    def __len__(self) -> int:
        return len(self.defs)

    def names(self) -> list[str]:
        return list(self.defs)


# --------------------------------------------------------------- substitution

_subst_cache: dict = {}


def subst(t: Term, binding: Mapping[str, Value]) -> Term:
    """Capture-free substitution of values for free variables of ``t``."""
    if not t.free:
        return t
    relevant = {k: v for k, v in binding.items() if k in t.free}
    if not relevant:
        return t
    key = (t, tuple(sorted((k, value_key(v)) for k, v in relevant.items())))
    hit = _subst_cache.get(key)
    if hit is not None:
        return hit
    out = _subst(t, relevant)
    _subst_cache[key] = out
    return out


def _sx(e: Expr, binding) -> Expr:
    return substitute(e, binding)


def _subst(t: Term, b: Mapping[str, Value]) -> Term:
    tag = t.tag
    a = t.args
    if tag == "prefix":
        base, qual, fields, cont = a
        inner = dict(b)
        new_fields = []
        for f in fields:
            if isinstance(f, Out):
                new_fields.append(Out(_sx(f.expr, inner)))
            else:
                inner.pop(f.var, None)
                new_fields.append(f)
        return T.Prefix(base, qual, new_fields, subst(cont, inner) if inner else cont)
    if tag in ("ext", "int", "seq", "inter", "interrupt"):
        return T._bin(tag, subst(a[0], b), subst(a[1], b))
    if tag == "par":
        return T.Par(subst(a[0], b), a[1], subst(a[2], b))
    if tag == "hide":
        return T.Hide(subst(a[0], b), a[1])
    if tag == "guard":
        return T.Guard(_sx(a[0], b), subst(a[1], b))
    if tag == "ref":
        return T.Ref(a[0], [_sx(x, b) for x in a[1]])
    return t


# ------------------------------------------------------------------ semantics


class Semantics:
    """Transition relation of terms under one environment.

    With ``reduce=True`` successors are normalised with the algebraic laws
    of :mod:`terms` (same failures/divergences, fewer administrative taus).
    """

    def __init__(self, env: Environment, reduce: bool = False):
        self.env = env
        self.reduce = reduce
        self._cache: dict[Term, tuple] = {}
        self._expanding: set = set()
        self._expand_cache: dict = {}
        if reduce:
            self._seq, self._ext, self._inter, self._par, self._hide = T.seq, T.ext, T.inter, T.par, T.hide
        else:
            self._seq, self._ext, self._inter, self._par, self._hide = T.Seq, T.ExtChoice, T.Interleave, T.Par, T.Hide
        self._dispatch = {
            "stop": self._t_stop,
            "omega": self._t_stop,
            "skip": self._t_skip,
            "prefix": self._t_prefix,
            "ext": self._t_ext,
            "int": self._t_int,
            "seq": self._t_seq,
            "inter": self._t_inter,
            "par": self._t_par,
            "hide": self._t_hide,
            "interrupt": self._t_interrupt,
            "guard": self._t_guard,
            "ref": self._t_ref,
        }

    # public API -------------------------------------------------------
    def transitions(self, t: Term) -> tuple:
        hit = self._cache.get(t)
        if hit is None:
            if t.free:
                raise CspError(f"term has free variables {sorted(t.free)}")
            hit = self._dispatch[t.tag](t)
            self._cache[t] = hit
        return hit

    def initials(self, t: Term) -> set[Event]:
        return {e for e, _ in self.transitions(t)}

    def step(self, t: Term, e: Event) -> set[Term]:
        return {s for ev, s in self.transitions(t) if ev is e}

    def expand_ref(self, name: str, args: Sequence = ()) -> Term:
        vals = []
        for a in args:
            if isinstance(a, Expr):
                try:
                    a = evaluate(a)
                except ExprError as exc:
                    raise CspError(str(exc)) from None
            vals.append(a)
        key = (name, tuple(value_key(v) for v in vals))
        hit = self._expand_cache.get(key)
        if hit is not None:
            return hit
        d = self.env.defs.get(name)
        if d is None:
            raise UnresolvedRef(f"undefined process {name!r}")
        if d.arity != len(vals):
            raise ArityError(f"{name} takes {d.arity} arguments, got {len(vals)}")
        binding = {}
        for (p, dom), v in zip(d.params, vals):
            if dom is not None and value_key(v) not in {value_key(x) for x in dom}:
                raise DomainError(f"argument {p}={v!r} of {name} outside its domain")
            binding[p] = v
        body = subst(d.body, binding)
        if body.free:
            raise CspError(f"{name} body has unbound variables {sorted(body.free)}")
        self._expand_cache[key] = body
        return body

    # rules --------------------------------------------------------------
    def _t_stop(self, t):
        return ()

    def _t_skip(self, t):
        return ((TICK, OMEGA),)

    def _t_prefix(self, t):
        base, qual, fields, cont = t.args
        out = []
        choices = []
        for f in fields:
            if isinstance(f, Out):
                choices.append(None)
            else:
                if f.domain is None:
                    raise DomainError(f"input {base}?{f.var} has no finite domain")
                choices.append(f.domain)
        # enumerate the input domains in order, binding left to right
        in_idx = [i for i, c in enumerate(choices) if c is not None]
        for combo in itertools.product(*(choices[i] for i in in_idx)):
            binding = dict(zip((fields[i].var for i in in_idx), combo))
            vals = []
            it = iter(combo)
            for f, c in zip(fields, choices):
                if c is None:
                    try:
                        vals.append(evaluate(f.expr, binding))
                    except ExprError as exc:
                        raise CspError(f"in prefix on {base}: {exc}") from None
                else:
                    vals.append(next(it))
            ev = Event(base, qual, tuple(vals))
            out.append((ev, subst(cont, binding) if binding else cont))
        return tuple(out)

    def _t_ext(self, t):
        left, right = t.args
        out = []
        for e, s in self.transitions(left):
            out.append((e, self._ext(s, right)) if e is TAU else (e, s))
        for e, s in self.transitions(right):
            out.append((e, self._ext(left, s)) if e is TAU else (e, s))
        return tuple(out)

    def _t_int(self, t):
        return ((TAU, t.args[0]), (TAU, t.args[1]))

    def _t_seq(self, t):
        left, right = t.args
        out = []
        for e, s in self.transitions(left):
            if e is TICK:
                out.append((TAU, right))
            else:
                out.append((e, self._seq(s, right)))
        return tuple(out)

    def _t_inter(self, t):
        return self._parallel(t.args[0], T.EMPTY, t.args[1], self._inter_mk)

    def _inter_mk(self, left, sync, right):
        return self._inter(left, right)

    def _t_par(self, t):
        left, sync, right = t.args
        return self._parallel(left, sync, right, self._par)

    def _parallel(self, left, sync, right, mk):
        lt = self.transitions(left)
        rt = self.transitions(right)
        out = []
        l_tick = r_tick = False
        r_sync: dict = {}
        for e, s in rt:
            if e is TICK:
                r_tick = True
            elif e is not TAU and e in sync:
                r_sync.setdefault(e, []).append(s)
        for e, s in lt:
            if e is TICK:
                l_tick = True
            elif e is TAU or e not in sync:
                out.append((e, mk(s, sync, right)))
            else:
                for s2 in r_sync.get(e, ()):
                    out.append((e, mk(s, sync, s2)))
        for e, s in rt:
            if e is TICK:
                continue
            if e is TAU or e not in sync:
                out.append((e, mk(left, sync, s)))
        if l_tick and r_tick:
            out.append((TICK, OMEGA))
        return tuple(out)

    def _t_hide(self, t):
        inner, hidden = t.args
        out = []
        for e, s in self.transitions(inner):
            if e is TICK:
                out.append((TICK, OMEGA))
            elif e is not TAU and e in hidden:
                out.append((TAU, self._hide(s, hidden)))
            else:
                out.append((e, self._hide(s, hidden)))
        return tuple(out)

    def _t_interrupt(self, t):
        left, right = t.args
        out = []
        for e, s in self.transitions(left):
            if e is TICK:
                out.append((TICK, OMEGA))
            else:
                out.append((e, T.Interrupt(s, right)))
        for e, s in self.transitions(right):
            if e is not TAU and e is not TICK:
                out.append((e, s))
        return tuple(out)

    def _t_guard(self, t):
        cond, body = t.args
        try:
            val = evaluate(cond)
        except ExprError as exc:
            raise CspError(f"guard: {exc}") from None
        if not isinstance(val, bool):
            raise CspError(f"guard evaluates to non-boolean {val!r}")
        return self.transitions(body) if val else ()

    def _t_ref(self, t):
        name, args = t.args
        if t in self._expanding:
            raise CspError(f"unguarded recursion through {name}")
        self._expanding.add(t)
        try:
            return self.transitions(self.expand_ref(name, args))
        finally:
            self._expanding.discard(t)


# -------------------------------------------------------- functional facade

_EMPTY_ENV = Environment()


def _sem(env: Environment | None) -> Semantics:
    env = _EMPTY_ENV if env is None else env
    s = env.__dict__.get("_semantics")
    if s is None:
        s = env.__dict__["_semantics"] = Semantics(env)
    return s


def initials(t: Term, env: Environment | None = None) -> set[Event]:
    """Events ``t`` can perform next (tau and tick included)."""
    return _sem(env).initials(t)


def step(t: Term, e: Event, env: Environment | None = None) -> set[Term]:
    """All successors of ``t`` after ``e``; empty if ``e`` is not initial."""
    return _sem(env).step(t, e)


def expand_ref(name: str, args: Sequence, env: Environment) -> Term:
    return _sem(env).expand_ref(name, args)


def visible_initials(events: Iterable[Event]) -> set[Event]:
    return {e for e in events if e is not TAU and e is not TICK}
