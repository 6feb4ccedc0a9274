"""Bounded data types and the small expression language.

The same expression trees serve two purposes: decision guards written in the
diagram file (prefix notation, e.g. ``(>= x 1)``) and the arithmetic/boolean
expressions that appear inside process terms (``n + x``, ``n == 0 and init``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

Value = Union[bool, int, str]

DEFAULT_INT_CAP = 16


class ExprError(Exception):
    """Ill-typed expression, unbound variable, or value outside its domain."""


GuardError = ExprError


def value_key(v: Value) -> tuple:
    """Total order over mixed values; keeps ``True`` and ``1`` apart."""
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (1, v)
    return (2, str(v))


def distinct_sorted(values: Iterable[Value]) -> tuple[Value, ...]:
    seen = {}
    for v in values:
        seen[value_key(v)] = v
    return tuple(seen[k] for k in sorted(seen))


# ---------------------------------------------------------------- data types


@dataclass(frozen=True)
class BoundedInt:
    min: int
    max: int

    def values(self) -> tuple[int, ...]:
        return tuple(range(self.min, self.max + 1))

    def __contains__(self, v) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and self.min <= v <= self.max

    def to_json(self) -> dict:
        return {"type": "int", "min": self.min, "max": self.max}


@dataclass(frozen=True)
class Enum:
    labels: tuple[str, ...]

    def values(self) -> tuple[str, ...]:
        return self.labels

    def __contains__(self, v) -> bool:
        return isinstance(v, str) and v in self.labels

    def to_json(self) -> dict:
        return {"type": "enum", "labels": list(self.labels)}


@dataclass(frozen=True)
class Bool:
    def values(self) -> tuple[bool, ...]:
        return (False, True)

    def __contains__(self, v) -> bool:
        return isinstance(v, bool)

    def to_json(self) -> dict:
        return {"type": "bool"}


DataType = Union[BoundedInt, Enum, Bool]


def datatype_from_json(obj, int_cap: int = DEFAULT_INT_CAP) -> DataType:
    """Parse ``{"type": "int", "min": 0, "max": 3}`` and friends."""
    if not isinstance(obj, dict) or "type" not in obj:
        raise ExprError(f"malformed valueType: {obj!r}")
    kind = obj["type"]
    if kind == "bool":
        return Bool()
    if kind == "int":
        lo, hi = obj.get("min"), obj.get("max")
        if not all(isinstance(b, int) and not isinstance(b, bool) for b in (lo, hi)):
            raise ExprError(f"int valueType needs integer min/max: {obj!r}")
        if lo > hi:
            raise ExprError(f"int valueType has min > max: {lo} > {hi}")
        if hi - lo + 1 > int_cap:
            raise ExprError(f"int range {lo}..{hi} exceeds cap of {int_cap} values")
        return BoundedInt(lo, hi)
    if kind == "enum":
        labels = obj.get("labels")
        if not labels or not all(isinstance(s, str) for s in labels):
            raise ExprError(f"enum valueType needs non-empty string labels: {obj!r}")
        if len(set(labels)) != len(labels):
            raise ExprError(f"enum labels repeat: {labels!r}")
        if len(labels) > int_cap:
            raise ExprError(f"enum has {len(labels)} labels, cap is {int_cap}")
        return Enum(tuple(labels))
    raise ExprError(f"unknown valueType {kind!r}")


# -------------------------------------------------------------- expressions


class Expr:
    __slots__ = ()

    free: frozenset = frozenset()


class Const(Expr):
    __slots__ = ("value", "_key")

    def __init__(self, value: Value):
        self.value = value
        self._key = value_key(value)

    def __eq__(self, other):
        return isinstance(other, Const) and self._key == other._key

    def __hash__(self):
        return hash(("c", self._key))

    def __repr__(self):
        return f"Const({self.value!r})"

    @property
    def free(self):
        return frozenset()


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def __eq__(self, other):
        return isinstance(other, Var) and self.name == other.name

    def __hash__(self):
        return hash(("v", self.name))

    def __repr__(self):
        return f"Var({self.name!r})"

    @property
    def free(self):
        return frozenset((self.name,))


BINARY = {"<", "<=", "=", "!=", ">=", ">", "and", "or", "+", "-", "*", "min", "max"}
UNARY = {"not", "neg"}
COMPARISONS = {"<", "<=", "=", "!=", ">=", ">"}
ARITH = {"+", "-", "*", "min", "max"}


class Op(Expr):
    __slots__ = ("op", "args", "free", "_hash")

    def __init__(self, op: str, *args: Expr):
        if op in UNARY and len(args) != 1:
            raise ExprError(f"{op} takes one argument")
        if op in BINARY and op not in ("and", "or", "+", "*") and len(args) != 2:
            raise ExprError(f"{op} takes two arguments")
        if op in ("and", "or", "+", "*") and len(args) < 2:
            raise ExprError(f"{op} takes at least two arguments")
        if op not in BINARY and op not in UNARY:
            raise ExprError(f"unknown operator {op!r}")
        self.op = op
        self.args = tuple(args)
        free = frozenset()
        for a in self.args:
            free |= a.free
        self.free = free
        self._hash = hash((op, self.args))

    def __eq__(self, other):
        return isinstance(other, Op) and self.op == other.op and self.args == other.args

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Op({self.op!r}, {', '.join(map(repr, self.args))})"


def _int(v, op):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ExprError(f"{op} expects integers, got {v!r}")
    return v


def _bool(v, op):
    if not isinstance(v, bool):
        raise ExprError(f"{op} expects booleans, got {v!r}")
    return v


def evaluate(e: Expr, env: Mapping[str, Value] | None = None) -> Value:
    """Evaluate ``e`` under ``env``; raises on unbound variables or type errors."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if env is None or e.name not in env:
            raise ExprError(f"unbound variable {e.name!r}")
        return env[e.name]
    op = e.op
    vals = [evaluate(a, env) for a in e.args]
    if op == "not":
        return not _bool(vals[0], op)
    if op == "neg":
        return -_int(vals[0], op)
    if op == "and":
        return all(_bool(v, op) for v in vals)
    if op == "or":
        return any(_bool(v, op) for v in vals)
    if op in ("=", "!="):
        a, b = vals
        if value_key(a)[0] != value_key(b)[0]:
            raise ExprError(f"cannot compare {a!r} with {b!r}")
        return (a == b) if op == "=" else (a != b)
    if op in COMPARISONS:
        a, b = (_int(v, op) for v in vals)
        return {"<": a < b, "<=": a <= b, ">=": a >= b, ">": a > b}[op]
    ints = [_int(v, op) for v in vals]
    if op == "+":
        return sum(ints)
    if op == "-":
        return ints[0] - ints[1]
    if op == "*":
        out = 1
        for v in ints:
            out *= v
        return out
    if op == "min":
        return min(ints)
    if op == "max":
        return max(ints)
    raise ExprError(f"unknown operator {op!r}")  # pragma: no cover


def substitute(e: Expr, binding: Mapping[str, Value]) -> Expr:
    """Replace bound variables by constants, folding closed subterms."""
    if not (e.free & binding.keys()):
        return e
    if isinstance(e, Var):
        return Const(binding[e.name])
    args = tuple(substitute(a, binding) for a in e.args)
    out = Op(e.op, *args)
    if not out.free:
        return Const(evaluate(out))
    return out


# -------------------------------------------------------------- guard syntax

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_OP_ALIASES = {"==": "=", "/=": "!=", "≤": "<=", "≥": ">=", "≠": "!="}


def parse_expr(text: str) -> Expr:
    """Parse a prefix-notation expression such as ``(and (>= x 1) (< x 3))``."""
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise ExprError(f"guard syntax error at offset {pos}: {text!r}")
        if m.group(1):
            tokens.append(("(", m.start(1)))
        elif m.group(2):
            tokens.append((")", m.start(2)))
        elif m.group(3):
            tokens.append((m.group(3), m.start(3)))
        pos = m.end()
    if not tokens:
        raise ExprError("empty guard")
    expr, i = _parse(tokens, 0, text)
    if i != len(tokens):
        raise ExprError(f"guard syntax error at offset {tokens[i][1]}: trailing input in {text!r}")
    return expr


def _parse(tokens, i, text):
    if i >= len(tokens):
        raise ExprError(f"guard syntax error: unexpected end of {text!r}")
    tok, off = tokens[i]
    if tok == ")":
        raise ExprError(f"guard syntax error at offset {off}: unexpected ')'")
    if tok != "(":
        return _atom(tok), i + 1
    if i + 1 >= len(tokens):
        raise ExprError(f"guard syntax error: unexpected end of {text!r}")
    op = _OP_ALIASES.get(tokens[i + 1][0], tokens[i + 1][0])
    i += 2
    args = []
    while i < len(tokens) and tokens[i][0] != ")":
        a, i = _parse(tokens, i, text)
        args.append(a)
    if i >= len(tokens):
        raise ExprError(f"guard syntax error: missing ')' in {text!r}")
    if op == "-" and len(args) == 1:
        return Op("neg", args[0]), i + 1
    try:
        return Op(op, *args), i + 1
    except ExprError as exc:
        raise ExprError(f"guard syntax error at offset {off}: {exc}") from None


def _atom(tok: str) -> Expr:
    if tok == "true":
        return Const(True)
    if tok == "false":
        return Const(False)
    if re.fullmatch(r"-?\d+", tok):
        return Const(int(tok))
    if tok == "x":
        return Var("x")
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok):
        return Const(tok)
    raise ExprError(f"bad guard token {tok!r}")


def render_prefix(e: Expr) -> str:
    """Inverse of :func:`parse_expr`."""
    if isinstance(e, Const):
        v = e.value
        if isinstance(v, bool):
            return "true" if v else "false"
        return str(v)
    if isinstance(e, Var):
        return e.name
    if e.op == "neg":
        return f"(- {render_prefix(e.args[0])})"
    return "(" + " ".join([e.op] + [render_prefix(a) for a in e.args]) + ")"


def _literals(e: Expr):
    if isinstance(e, Const):
        yield e.value
    elif isinstance(e, Op):
        for a in e.args:
            yield from _literals(a)


def check_guard(g: Expr, dtype: DataType | None) -> None:
    """Type-check a guard against the decision input type (``None`` = no input).

    Raises :class:`GuardError` when the guard is not boolean for some input,
    mentions ``x`` without a decision input, or uses an out-of-range literal.
    """
    if dtype is None:
        if "x" in g.free:
            raise GuardError("guard uses x but the decision has no decisionInputFlow")
        if not isinstance(evaluate(g), bool):
            raise GuardError(f"guard {render_prefix(g)} is not boolean")
        return
    for lit in _literals(g):
        if isinstance(lit, bool):
            continue
        if isinstance(dtype, BoundedInt) and isinstance(lit, int) and lit not in dtype:
            raise GuardError(f"literal {lit} outside {dtype.min}..{dtype.max}")
        if isinstance(dtype, Enum) and isinstance(lit, str) and lit not in dtype:
            raise GuardError(f"literal {lit!r} is not a label of {dtype.labels}")
    for v in dtype.values():
        if not isinstance(evaluate(g, {"x": v}), bool):
            raise GuardError(f"guard {render_prefix(g)} is not boolean")


def eval_guard(g: Expr, x: Value | None, dtype: DataType | None = None) -> bool:
    if dtype is not None:
        if x not in dtype:
            raise GuardError(f"decision input {x!r} outside its declared type")
        check_guard(g, dtype)
    env = {} if x is None else {"x": x}
    out = evaluate(g, env)
    if not isinstance(out, bool):
        raise GuardError(f"guard {render_prefix(g)} is not boolean")
    return out
