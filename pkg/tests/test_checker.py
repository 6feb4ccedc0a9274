import os
import subprocess
import sys
from array import array

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actdiag.checker import (
    BACKEND,
    DIVERGENT,
    FAIL,
    PASS,
    RESOURCE_LIMIT,
    TOKEN_OVERFLOW,
    build_lts,
    check_all,
    check_deadlock,
    check_determinism,
    find_divergence,
    is_deadlocked,
    normalize,
    replay,
    replay_terms,
    shortest_trace,
)
from actdiag.checker import _graph_py
from actdiag.csp import terms as T
from actdiag.csp.events import TAU, TICK, Event
from actdiag.csp.semantics import Environment, Semantics
from actdiag.csp.terms import SKIP, STOP, EventSet
from conftest import corpus_model, corpus_verdicts, model_of, simple
from test_csp import terms, traces

A, B, C = Event("a"), Event("b"), Event("c")


def pfx(e, cont=SKIP):
    return T.event_prefix(e, cont)


# ---------------------------------------------------------------- deadlock


def test_termination_is_not_deadlock():
    assert check_deadlock(build_lts(pfx(A))).result == PASS


def test_stop_is_deadlock_with_its_trace():
    v = check_deadlock(build_lts(pfx(A, STOP)))
    assert v.result == FAIL and v.trace == (A,) and v.blocked == ()
    assert len(v.path) == len(v.full_trace) + 1


def test_deadlock_witness_is_a_shortest_one():
    t = T.ExtChoice(pfx(A, pfx(B, STOP)), pfx(C, STOP))
    v = check_deadlock(build_lts(t))
    assert v.trace == (C,)


def test_shortest_trace_breaks_ties_by_label():
    lts = build_lts(T.ExtChoice(pfx(B, STOP), pfx(A, STOP)))
    (stop,) = [s for s in range(lts.n) if s != lts.root]
    assert shortest_trace(lts, stop) == [A]


# -------------------------------------------------------------- determinism


def test_external_choice_is_deterministic():
    assert check_determinism(build_lts(T.ExtChoice(pfx(A), pfx(B)))).result == PASS


def test_internal_choice_is_not():
    v = check_determinism(build_lts(T.IntChoice(pfx(A), pfx(B))))
    assert v.result == FAIL
    assert v.choice_event == A and v.trace == (A,)
    assert v.full_trace[0] is TAU


def test_same_event_different_futures():
    v = check_determinism(build_lts(T.ExtChoice(pfx(A, SKIP), pfx(A, STOP))))
    assert v.result == FAIL and v.trace == (A, TICK)


def _loop_env():
    env = Environment()
    env.define("P", pfx(A, T.Ref("P")))
    return env


def test_divergence_is_reported_before_determinism():
    env = _loop_env()
    lts = build_lts(T.Hide(T.ExtChoice(T.Ref("P"), pfx(B)), EventSet([A])), env=env)
    lasso = find_divergence(lts)
    assert lasso is not None and lasso.cycle and all(e is TAU for e in lasso.cycle)
    v = check_determinism(lts)
    assert v.result == DIVERGENT and v.lasso == lasso
    # a divergent state is not a sink
    assert check_deadlock(lts).result == PASS


def test_visible_loop_does_not_diverge():
    lts = build_lts(T.Ref("P"), env=_loop_env())
    assert find_divergence(lts) is None
    assert check_determinism(lts).result == PASS


def test_check_all_explores_once_and_shares_failures():
    v1, v2 = check_all(corpus_model("c4_hotel"), limit=5)
    assert v1.result == v2.result == RESOURCE_LIMIT
    assert (v1.property, v2.property) == ("deadlock", "determinism")
    assert v1.states == 5


def test_strict_tokens_report_overflow():
    d = simple(
        [("init", "Initial"), ("f", "Fork"), ("a", "BasicAction"), ("b", "BasicAction"), ("fin", "ActivityFinal")],
        [("init", "f"), ("f", "a"), ("f", "b"), ("a", "fin"), ("b", "fin")],
    )
    v = check_deadlock(model_of(d, max_tokens=1, strict_tokens=True))
    assert v.result == TOKEN_OVERFLOW
    assert str(v.full_trace[-1]) == "tokenOverflow_ad"
    assert check_deadlock(model_of(d, max_tokens=1)).result == PASS


# -------------------------------------------------------------- corpus

EXPECTED = {
    "c1_cloud_network": (FAIL, FAIL),
    "c2_storage": (PASS, FAIL),
    "c3_motivating": (FAIL, FAIL),
    "c4_hotel": (PASS, PASS),
    "c5_ecommerce": (FAIL, PASS),
    "det_disjoint": (PASS, PASS),
    "det_overlap": (FAIL, FAIL),
    "minimal": (PASS, PASS),
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_verdicts(name):
    m = corpus_model(name)
    dl, det = corpus_verdicts(name)
    assert (dl.result, det.result) == EXPECTED[name]
    lts = build_lts(m)
    for v in (dl, det):
        if v.result != FAIL:
            continue
        # every witness replays to its own state, both on the LTS and the terms
        assert v.witness_state in replay(lts, v.trace[:-1] if v is det else v.trace)
        assert lts.states[v.witness_state] in replay_terms(m, v.full_trace)
        if v is dl:
            # without the reduction laws the same trace still gets stuck
            sem = Semantics(m.env)
            assert any(is_deadlocked(sem, t) for t in replay_terms(m, v.full_trace, reduce=False))


def test_replay_of_an_impossible_trace_is_empty():
    lts = build_lts(corpus_model("minimal"))
    assert replay(lts, [Event("nonsense")]) == set()


# --------------------------------------------------------- normalisation


def _macro_traces(norm, depth):
    out = {()}
    frontier = [(0, ())]
    for _ in range(depth):
        nxt = []
        for m, tr in frontier:
            for k in range(norm.offsets[m], norm.offsets[m + 1]):
                e = norm.lts.events[norm.labels[k]]
                t2 = tr + (e,)
                out.add(t2)
                if e is not TICK:
                    nxt.append((norm.targets[k], t2))
        frontier = nxt
    return out


@settings(max_examples=120, deadline=None)
@given(terms)
def test_normalisation_preserves_traces(t):
    lts = build_lts(t, limit=200)
    norm = normalize(lts)
    want = traces(t, lts_sem(lts))
    depth = max((len(x) for x in want), default=0)
    assert _macro_traces(norm, depth) == want
    # one successor per label
    for m in range(norm.n):
        labs = norm.enabled(m)
        assert labs == sorted(set(labs))


def lts_sem(lts):
    return Semantics(lts.env)


# ---------------------------------------------------------- kernel parity


@st.composite
def csr_graphs(draw):
    n = draw(st.integers(1, 14))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, 3), st.integers(0, n - 1)), max_size=40, unique=True))
    edges.sort()
    offsets = [0] * (n + 1)
    for s, _, _ in edges:
        offsets[s + 1] += 1
    for i in range(n):
        offsets[i + 1] += offsets[i]
    labels = [lab for _, lab, _ in edges]
    targets = [t for _, _, t in edges]
    term = bytearray(draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    return n, array("q", offsets), array("q", labels), array("q", targets), term


def _lists(x):
    return [list(v) if not isinstance(v, (int, bool)) else v for v in x]


@pytest.mark.skipif(BACKEND != "compiled", reason="compiled kernels not built")
@settings(max_examples=300, deadline=None)
@given(csr_graphs(), st.data())
def test_compiled_kernels_match_python(g, data):
    from actdiag.checker import _graph

    n, off, lab, tgt, term = g
    root = data.draw(st.integers(0, n - 1))
    assert _lists(_graph.bfs(off, lab, tgt, n, root)) == _lists(_graph_py.bfs(off, lab, tgt, n, root))
    assert list(_graph.sinks(off, n, term)) == list(_graph_py.sinks(off, n, term))
    assert _lists(_graph.tau_sccs(off, lab, tgt, n)) == _lists(_graph_py.tau_sccs(off, lab, tgt, n))
    cm, co, cl, ct = _graph.normalize(off, lab, tgt, n, root)
    pm, po, pl, pt = _graph_py.normalize(off, lab, tgt, n, root)
    assert [tuple(x) for x in cm] == [tuple(x) for x in pm]
    assert (list(co), list(cl), list(ct)) == (list(po), list(pl), list(pt))


def test_pure_python_backend_can_be_forced():
    env = dict(os.environ, ACTDIAG_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import actdiag; print(actdiag.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
