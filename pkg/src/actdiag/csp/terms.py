"""Hash-consed process terms.

Every constructor returns an interned :class:`Term`, so structurally equal
terms are the same object and equality/hashing is by identity.  The
capitalised constructors build exactly the requested shape; the lower-case
ones apply a few algebraic laws (``SKIP ; P = P``, ``P ; SKIP = P``,
``SKIP ||| P = P``, ``STOP [] P = P``, ``(a -> P) ; Q = a -> (P ; Q)``)
and are what the translator and the explorer use.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from ..expr import Const, Expr, Value, value_key
from .events import Event


class EventSet:
    """A set of visible events: explicit events plus whole channels."""

    __slots__ = ("events", "channels", "_hash")

    def __init__(self, events: Iterable[Event] = (), channels: Iterable[str] = ()):
        self.events = frozenset(events)
        self.channels = frozenset(channels)
        self._hash = hash((self.events, self.channels))

    def __contains__(self, e: Event) -> bool:
        return e in self.events or (bool(self.channels) and e.channel in self.channels)

    def __eq__(self, other):
        return isinstance(other, EventSet) and self.events == other.events and self.channels == other.channels

    def __hash__(self):
        return self._hash

    def __or__(self, other: "EventSet") -> "EventSet":
        return EventSet(self.events | other.events, self.channels | other.channels)

    def __bool__(self):
        return bool(self.events or self.channels)

    def __repr__(self):
        return f"EventSet({sorted(map(str, self.events))}, {sorted(self.channels)})"


EMPTY = EventSet()


class In:
    """Input field ``?var:domain`` of a prefix pattern."""

    __slots__ = ("var", "domain", "key")

    def __init__(self, var: str, domain: Sequence[Value] | None):
        self.var = var
        self.domain = None if domain is None else tuple(domain)
        self.key = ("?", var, None if domain is None else tuple(value_key(v) for v in self.domain))

    def __eq__(self, other):
        return isinstance(other, In) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"In({self.var!r}, {self.domain!r})"


class Out:
    """Output field ``!expr`` (or ``.value``) of a prefix pattern."""

    __slots__ = ("expr", "key")

    def __init__(self, expr: Expr | Value):
        if not isinstance(expr, Expr):
            expr = Const(expr)
        self.expr = expr
        self.key = ("!", expr)

    def __eq__(self, other):
        return isinstance(other, Out) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Out({self.expr!r})"


class Term:
    __slots__ = ("tag", "args", "free", "__weakref__")

    def __repr__(self):
        from .pretty import pretty

        return f"<Term {pretty(self)}>"

    def __reduce__(self):
        return (_rebuild, (self.tag, self.args))


_table: dict = {}


def _mk(tag: str, args: tuple, key: tuple, free: frozenset) -> Term:
    t = _table.get(key)
    if t is None:
        t = object.__new__(Term)
        t.tag = tag
        t.args = args
        t.free = free
        _table[key] = t
    return t


def _rebuild(tag, args):
    return _BUILDERS[tag](*args)


def interned_count() -> int:
    return len(_table)


_NOFREE = frozenset()

STOP = _mk("stop", (), ("stop",), _NOFREE)
SKIP = _mk("skip", (), ("skip",), _NOFREE)
OMEGA = _mk("omega", (), ("omega",), _NOFREE)


def Stop() -> Term:
    return STOP


def Skip() -> Term:
    return SKIP


def Prefix(base: str, qual: tuple, fields: Sequence, cont: Term) -> Term:
    fields = tuple(f if isinstance(f, (In, Out)) else Out(f) for f in fields)
    free = set()
    bound = set()
    for f in fields:
        if isinstance(f, Out):
            free |= f.expr.free - bound
        else:
            bound.add(f.var)
    free |= cont.free - bound
    key = ("prefix", base, tuple(qual), tuple(f.key for f in fields), cont)
    return _mk("prefix", (base, tuple(qual), fields, cont), key, frozenset(free))


def event_prefix(ev: Event, cont: Term) -> Term:
    return Prefix(ev.base, ev.qual, tuple(Out(v) for v in ev.values), cont)


def _bin(tag: str, left: Term, right: Term) -> Term:
    free = left.free | right.free if (left.free or right.free) else _NOFREE
    return _mk(tag, (left, right), (tag, left, right), free)


def ExtChoice(left: Term, right: Term) -> Term:
    return _bin("ext", left, right)


def IntChoice(left: Term, right: Term) -> Term:
    return _bin("int", left, right)


def Seq(left: Term, right: Term) -> Term:
    return _bin("seq", left, right)


def Interleave(left: Term, right: Term) -> Term:
    return _bin("inter", left, right)


def Interrupt(left: Term, right: Term) -> Term:
    return _bin("interrupt", left, right)


def Par(left: Term, sync: EventSet, right: Term) -> Term:
    free = left.free | right.free if (left.free or right.free) else _NOFREE
    return _mk("par", (left, sync, right), ("par", left, sync, right), free)


def Hide(term: Term, hidden: EventSet) -> Term:
    return _mk("hide", (term, hidden), ("hide", term, hidden), term.free)


def Guard(cond: Expr | bool, term: Term) -> Term:
    if not isinstance(cond, Expr):
        cond = Const(cond)
    return _mk("guard", (cond, term), ("guard", cond, term), cond.free | term.free)


def Ref(name: str, args: Sequence = ()) -> Term:
    args = tuple(a if isinstance(a, Expr) else Const(a) for a in args)
    free = frozenset().union(*(a.free for a in args)) if args else _NOFREE
    return _mk("ref", (name, args), ("ref", name, args), free)


def Omega() -> Term:
    return OMEGA


_BUILDERS = {
    "stop": lambda: STOP,
    "skip": lambda: SKIP,
    "omega": lambda: OMEGA,
    "prefix": Prefix,
    "ext": ExtChoice,
    "int": IntChoice,
    "seq": Seq,
    "inter": Interleave,
    "interrupt": Interrupt,
    "par": Par,
    "hide": Hide,
    "guard": Guard,
    "ref": Ref,
}


# ------------------------------------------------------------ law-reducing


def seq(left: Term, right: Term) -> Term:
    if left is SKIP:
        return right
    if left is STOP:
        return STOP
    if right is SKIP:
        return left
    if left.tag == "prefix":
        # (a -> P) ; Q  =  a -> (P ; Q), unless a binds a name free in Q
        base, qual, fields, cont = left.args
        if not any(isinstance(f, In) and f.var in right.free for f in fields):
            return Prefix(base, qual, fields, seq(cont, right))
    return Seq(left, right)


def ext(left: Term, right: Term) -> Term:
    if left is STOP:
        return right
    if right is STOP:
        return left
    return ExtChoice(left, right)


def inter(left: Term, right: Term) -> Term:
    if left is SKIP:
        return right
    if right is SKIP:
        return left
    return Interleave(left, right)


def par(left: Term, sync: EventSet, right: Term) -> Term:
    if left is SKIP and right is SKIP:
        return SKIP
    if not sync:
        return inter(left, right)
    return Par(left, sync, right)


def hide(term: Term, hidden: EventSet) -> Term:
    if term is SKIP or term is STOP or not hidden:
        return term
    return Hide(term, hidden)


def ext_all(terms: Iterable[Term]) -> Term:
    """Right-nested external choice; STOP for no alternatives."""
    terms = list(terms)
    out = STOP
    for t in reversed(terms):
        out = ext(t, out)
    return out


def inter_all(terms: Iterable[Term]) -> Term:
    """Right-nested interleaving; SKIP for no components."""
    terms = list(terms)
    out = SKIP
    for t in reversed(terms):
        out = inter(t, out)
    return out


def seq_all(terms: Iterable[Term]) -> Term:
    terms = list(terms)
    out = SKIP
    for t in reversed(terms):
        out = seq(t, out)
    return out
