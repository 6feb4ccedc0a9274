"""Picks the compiled graph kernels when available.

Set ``ACTDIAG_PURE_PYTHON=1`` to force the pure-Python implementation.
"""

from __future__ import annotations

import os

from . import _graph_py

BACKEND = "python"
_impl = _graph_py

if not os.environ.get("ACTDIAG_PURE_PYTHON"):
    try:
        from . import _graph as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "compiled"

bfs = _impl.bfs
sinks = _impl.sinks
tau_sccs = _impl.tau_sccs
normalize = _impl.normalize
TAU_LABEL = 0

__all__ = ["BACKEND", "bfs", "sinks", "tau_sccs", "normalize", "TAU_LABEL"]
