"""Communication labels: visible channel events plus tau and tick."""

from __future__ import annotations

from typing import Iterable

from ..expr import Value, value_key

_interned: dict = {}


class Event:
    """An interned event; compare with ``is`` or ``==`` (identity).

    ``base`` is the channel family (``ce``, ``update``...), ``qual`` the
    qualifier tuple (activity id, node id...), ``values`` the data carried.
    """

    __slots__ = ("base", "qual", "values", "key", "channel", "_hash", "__weakref__")

    def __new__(cls, base: str, qual: tuple = (), values: tuple = ()):
        qual = tuple(qual)
        values = tuple(values)
        key = (base, qual, tuple(value_key(v) for v in values))
        ev = _interned.get(key)
        if ev is None:
            ev = object.__new__(cls)
            ev.base = base
            ev.qual = qual
            ev.values = values
            ev.key = key
            ev.channel = "_".join((base,) + qual) if qual else base
            ev._hash = hash(key)
            _interned[key] = ev
        return ev

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __lt__(self, other):
        return sort_key(self) < sort_key(other)

    def __reduce__(self):
        return (Event, (self.base, self.qual, self.values))

    @property
    def visible(self) -> bool:
        return self is not TAU and self is not TICK

    def __str__(self):
        if self is TAU:
            return "tau"
        if self is TICK:
            return "tick"
        return self.channel + "".join("." + render_value(v) for v in self.values)

    def __repr__(self):
        return f"Event({str(self)!r})"


def render_value(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


TAU = Event("\x00tau")
TICK = Event("\x00tick")


def sort_key(e: Event) -> tuple:
    """Stable event order: tau, tick, then channel base, qualifier, values."""
    if e is TAU:
        return (0,)
    if e is TICK:
        return (1,)
    return (2,) + e.key


def sorted_events(events: Iterable[Event]) -> list[Event]:
    return sorted(events, key=sort_key)
