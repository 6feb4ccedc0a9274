"""Deadlock and determinism checking for UML activity diagrams.

A diagram is translated into process-algebra terms, explored into a
labelled transition system and checked natively; failures are mapped back
onto the diagram.

>>> from actdiag import load_diagram, translate, check_deadlock
>>> check_deadlock(translate(load_diagram("fig1.json"))).result  # doctest: +SKIP
'fail'
"""

from ._version import __version__
from .checker import (
    BACKEND,
    DIVERGENT,
    FAIL,
    PASS,
    RESOURCE_LIMIT,
    TOKEN_OVERFLOW,
    Lts,
    ResourceLimit,
    Verdict,
    build_lts,
    check_all,
    check_deadlock,
    check_determinism,
    find_divergence,
    normalize,
)
from .diagram import ActivityDiagram, DiagramError, load_diagram, parse_diagram, validate
from .export import export_cspm
from .reporting import TraceMapping, check_dot, emit_dot, emit_report, map_trace, parse_report
from .translate import CspModel, TranslationConfig, TranslationError, translate

__all__ = [
    "__version__",
    "BACKEND",
    "DIVERGENT",
    "FAIL",
    "PASS",
    "RESOURCE_LIMIT",
    "TOKEN_OVERFLOW",
    "ActivityDiagram",
    "CspModel",
    "DiagramError",
    "Lts",
    "ResourceLimit",
    "TraceMapping",
    "TranslationConfig",
    "TranslationError",
    "Verdict",
    "build_lts",
    "check_all",
    "check_deadlock",
    "check_determinism",
    "check_dot",
    "emit_dot",
    "emit_report",
    "export_cspm",
    "find_divergence",
    "load_diagram",
    "map_trace",
    "normalize",
    "parse_diagram",
    "parse_report",
    "translate",
    "validate",
]
