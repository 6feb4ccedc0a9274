"""ASCII rendering of terms in CSP_M-compatible syntax."""

from __future__ import annotations

from typing import Callable

from ..expr import Const, Expr, Var
from .events import Event, render_value, sort_key
from .terms import EventSet, In, Out, Term

ValueFmt = Callable[[object], str]

_INFIX = {
    "<": "<",
    "<=": "<=",
    "=": "==",
    "!=": "!=",
    ">=": ">=",
    ">": ">",
    "and": "and",
    "or": "or",
    "+": "+",
    "-": "-",
    "*": "*",
}
_CHAIN = {"ext": " [] ", "int": " |~| ", "seq": " ; ", "inter": " ||| "}


class Printer:
    """Term printer; subclasses may rename values and channels."""

    def value(self, v) -> str:
        return render_value(v)

    def channel(self, base: str, qual: tuple, fields: tuple) -> tuple[str, tuple]:
        """Channel name and remaining fields for a prefix or event."""
        return "_".join((base,) + tuple(qual)), fields

    def channel_set(self, name: str) -> list[str]:
        return [name]

    # ------------------------------------------------------------------
    def expr(self, e: Expr) -> str:
        if isinstance(e, Const):
            v = e.value
            if isinstance(v, int) and not isinstance(v, bool) and v < 0:
                return f"({v})"
            return self.value(v)
        if isinstance(e, Var):
            return e.name
        if e.op == "not":
            return f"not {self.expr(e.args[0])}"
        if e.op == "neg":
            return f"-{self.expr(e.args[0])}"
        if e.op in ("min", "max"):
            return f"{e.op}({', '.join(self.expr(a) for a in e.args)})"
        sep = f" {_INFIX[e.op]} "
        return "(" + sep.join(self.expr(a) for a in e.args) + ")"

    def event(self, e: Event) -> str:
        name, vals = self.channel(e.base, e.qual, e.values)
        return name + "".join("." + self.expr(Const(v)) for v in vals)

    def event_set(self, s: EventSet) -> str:
        parts = []
        if s.events:
            parts.append("{" + ", ".join(self.event(e) for e in sorted(s.events, key=sort_key)) + "}")
        if s.channels:
            names = sorted({n for c in s.channels for n in self.channel_set(c)})
            parts.append("{| " + ", ".join(names) + " |}")
        if not parts:
            return "{}"
        if len(parts) == 1:
            return parts[0]
        return "union(" + ", ".join(parts) + ")"

    def domain(self, dom) -> str:
        vals = list(dom)
        ints = [v for v in vals if isinstance(v, int) and not isinstance(v, bool)]
        if len(ints) == len(vals) > 2 and ints == list(range(ints[0], ints[0] + len(ints))):
            return "{" + f"{self.expr(Const(ints[0]))}..{self.expr(Const(ints[-1]))}" + "}"
        return "{" + ", ".join(self.expr(Const(v)) for v in vals) + "}"

    def field(self, f) -> str:
        if isinstance(f, In):
            return f"?{f.var}" + ("" if f.domain is None else ":" + self.domain(f.domain))
        if isinstance(f.expr, Const):
            return "." + self.expr(f.expr)
        return "!" + self.expr(f.expr)

    def term(self, t: Term) -> str:
        tag = t.tag
        a = t.args
        if tag == "stop":
            return "STOP"
        if tag == "skip":
            return "SKIP"
        if tag == "omega":
            return "OMEGA"
        if tag == "prefix":
            base, qual, fields, cont = a
            name, fields = self.channel(base, qual, fields)
            return name + "".join(self.field(f) for f in fields) + " -> " + self.term(cont)
        if tag in _CHAIN:
            items = []
            _flatten(t, tag, items)
            return "(" + _CHAIN[tag].join(self.term(x) for x in items) + ")"
        if tag == "par":
            return f"({self.term(a[0])} [| {self.event_set(a[1])} |] {self.term(a[2])})"
        if tag == "hide":
            return f"({self.term(a[0])} \\ {self.event_set(a[1])})"
        if tag == "interrupt":
            return f"({self.term(a[0])} /\\ {self.term(a[1])})"
        if tag == "guard":
            return f"({self.expr(a[0])} & {self.term(a[1])})"
        if tag == "ref":
            name, args = a
            if not args:
                return name
            return f"{name}(" + ", ".join(self.expr(x) for x in args) + ")"
        raise ValueError(tag)  # pragma: no cover


def _flatten(t: Term, tag: str, out: list) -> None:
    if t.tag == tag:
        _flatten(t.args[0], tag, out)
        _flatten(t.args[1], tag, out)
    else:
        out.append(t)


_DEFAULT = Printer()


def pretty(t: Term) -> str:
    return _DEFAULT.term(t)


def render_expr(e: Expr) -> str:
    return _DEFAULT.expr(e)


def render_event(e: Event) -> str:
    return _DEFAULT.event(e)


def render_set(s: EventSet) -> str:
    return _DEFAULT.event_set(s)
