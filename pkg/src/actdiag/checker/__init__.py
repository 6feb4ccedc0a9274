"""LTS exploration and property checks."""

from .checks import (
    DIVERGENT,
    FAIL,
    PASS,
    RESOURCE_LIMIT,
    TOKEN_OVERFLOW,
    Lasso,
    NormalizedLts,
    Verdict,
    check_all,
    check_deadlock,
    check_determinism,
    explain_path,
    explore,
    find_divergence,
    is_deadlocked,
    normalize,
    pending_events,
    replay,
    replay_terms,
    shortest_trace,
    visible,
)
from .graph import BACKEND
from .lts import Lts, ModelError, ResourceLimit, TokenBoundExceeded, build_lts

__all__ = [
    "DIVERGENT", "FAIL", "PASS", "RESOURCE_LIMIT", "TOKEN_OVERFLOW", "Lasso", "NormalizedLts", "Verdict",
    "check_all", "check_deadlock", "check_determinism", "explain_path", "explore", "find_divergence", "is_deadlocked",
    "normalize", "pending_events", "replay", "replay_terms", "shortest_trace", "visible",
    "BACKEND", "Lts", "ModelError", "ResourceLimit", "TokenBoundExceeded", "build_lts",
]
