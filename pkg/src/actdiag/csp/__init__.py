"""Process-algebra kernel: events, terms, operational semantics."""

from .events import TAU, TICK, Event
from .semantics import (
    ArityError,
    CspError,
    Definition,
    DomainError,
    Environment,
    Semantics,
    UnresolvedRef,
    expand_ref,
    initials,
    step,
)
from .terms import OMEGA, SKIP, STOP, EventSet, In, Out, Term

__all__ = [
    "TAU", "TICK", "Event", "ArityError", "CspError", "Definition", "DomainError",
    "Environment", "Semantics", "UnresolvedRef", "expand_ref", "initials", "step",
    "OMEGA", "SKIP", "STOP", "EventSet", "In", "Out", "Term",
]
