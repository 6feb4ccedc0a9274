"""CSP_M export for an external refinement checker.

CSP_M channels are typed per field, while an object edge's ``oe_A.i``
carries a value whose type depends on ``i``.  The exporter therefore splits
``oe_A.i.v`` into one channel per edge, ``oe_A_i.v``.  Enumeration labels
become constructors of ``datatype Label`` with an ``L_`` prefix.
"""

from __future__ import annotations

import re

from .csp.alphabet import definition_alphabet
from .csp.events import Event, sort_key
from .csp.pretty import Printer
from .csp.terms import In, Out, Term
from .expr import Const, value_key
from .translate import CspModel, TranslationError

_SPLIT = frozenset({"oe"})

_HELPERS = """\
min(a, b) = if a <= b then a else b
max(a, b) = if a >= b then a else b
"""


class _CspmPrinter(Printer):
    def __init__(self, labels: dict[str, str], split: dict[str, list[str]]):
        self.labels = labels
        self.split = split

    def value(self, v) -> str:
        if isinstance(v, str):
            return self.labels[v]
        return super().value(v)

    def channel(self, base, qual, fields):
        name, rest = super().channel(base, qual, fields)
        if base in _SPLIT and rest:
            first = rest[0]
            if isinstance(first, Out):
                if not isinstance(first.expr, Const):
                    raise TranslationError(f"{name}: edge index must be a constant")
                first = first.expr.value
            return f"{name}_{first}", rest[1:]
        return name, rest

    def channel_set(self, name):
        return self.split.get(name, [name])


def _label_names(values) -> dict[str, str]:
    out: dict[str, str] = {}
    used: set[str] = set()
    for v in sorted(values):
        stem = "L_" + re.sub(r"\W", "_", v, flags=re.ASCII)
        name, k = stem, 1
        while name in used:
            k += 1
            name = f"{stem}_{k}"
        used.add(name)
        out[v] = name
    return out


def _field_type(values, p: _CspmPrinter) -> str:
    kinds = {value_key(v)[0] for v in values}
    if len(kinds) > 1:
        raise TranslationError("a channel field mixes value types")
    if kinds == {0}:
        return "Bool"
    vals = sorted(values, key=value_key)
    return p.domain(vals)


def _prefix_fields(t: Term, out: dict, seen: set) -> None:
    """Channel -> per-field known values, for every prefix inside ``t``."""
    if t in seen:
        return
    seen.add(t)
    if t.tag == "prefix":
        base, qual, fields, cont = t.args
        vals = []
        for f in fields:
            if isinstance(f, In):
                vals.append(set(f.domain or ()))
            elif isinstance(f.expr, Const):
                vals.append({f.expr.value})
            else:
                vals.append(set())
        out.setdefault((base, tuple(qual)), []).append(vals)
        _prefix_fields(cont, out, seen)
        return
    for a in t.args:
        if isinstance(a, Term):
            _prefix_fields(a, out, seen)


def export_cspm(m: CspModel) -> str:
    """Render the model as a CSP_M script; output is a pure function of the model."""
    events: set[Event] = set(m.alphabet)
    for name in m.env.names():
        events |= definition_alphabet(name, m.env)
    prefixes: dict = {}
    seen: set = set()
    for name in m.env.names():
        _prefix_fields(m.env[name].body, prefixes, seen)
    _prefix_fields(m.main, prefixes, seen)
    strings = {v for e in events for v in e.values if isinstance(v, str)}
    strings |= {v for uses in prefixes.values() for vals in uses for s in vals for v in s if isinstance(v, str)}
    labels = _label_names(strings)

    split: dict[str, set[str]] = {}
    for e in events:
        if e.base in _SPLIT:
            split.setdefault(e.channel, set()).add(f"{e.channel}_{e.values[0]}")
    p = _CspmPrinter(labels, {k: sorted(v) for k, v in split.items()})

    # channel name -> per-field value sets
    chans: dict[str, list[set]] = {}
    for (base, qual), uses in prefixes.items():
        if base in _SPLIT:
            continue  # the alphabet already names every edge of a split channel
        for vals in uses:
            name, vals = p.channel(base, qual, vals)
            slots = chans.setdefault(name, [set() for _ in vals])
            if len(slots) != len(vals):
                raise TranslationError(f"channel {name} used with different arities")
            for s, v in zip(slots, vals):
                s.update(v)
    for e in sorted(events, key=sort_key):
        name, vals = p.channel(e.base, e.qual, e.values)
        slots = chans.setdefault(name, [set() for _ in vals])
        if len(slots) != len(vals):
            raise TranslationError(f"channel {name} used with different arities")
        for s, v in zip(slots, vals):
            s.add(v)

    # processes, channels and labels share one namespace in CSP_M
    taken = set(m.env.names()) | {"MAIN", "min", "max", "Label"} | set(labels.values())
    clash = sorted(taken & set(chans))
    if clash:
        raise TranslationError(f"name used both as a process and a channel: {', '.join(clash)}")

    out = [f"-- activity diagram {m.diagram.top_level}", ""]
    if labels:
        out.append("datatype Label = " + " | ".join(labels[v] for v in sorted(labels)))
        out.append("")
    for name in sorted(chans):
        slots = chans[name]
        if slots:
            out.append(f"channel {name} : " + ".".join(_field_type(s, p) for s in slots))
        else:
            out.append(f"channel {name}")
    out.append("")
    out.append(_HELPERS)
    for name in m.env.names():
        d = m.env[name]
        head = name if not d.params else f"{name}(" + ", ".join(x for x, _ in d.params) + ")"
        out.append(f"{head} =\n  {p.term(d.body)}")
        out.append("")
    out.append(f"MAIN =\n  {p.term(m.main)}")
    out.append("")
    out.append("assert MAIN :[deadlock free [F]]")
    out.append("assert MAIN :[deterministic [F]]")
    return "\n".join(out) + "\n"
