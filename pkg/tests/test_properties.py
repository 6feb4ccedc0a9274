"""Properties of the translation over generated diagrams."""

import json
import random
from collections import deque
from dataclasses import replace

from hypothesis import assume, given, settings
from hypothesis import strategies as st

from actdiag.checker import build_lts
from actdiag.csp.semantics import Environment
from actdiag.diagram import ActivityDiagram, errors, parse_diagram, serialize_diagram, validate
from actdiag.translate import TranslationConfig, _translate_activity, translate
from oracle import random_activity


def generated(seed):
    rng = random.Random(seed)
    for _ in range(50):
        a = random_activity(rng, max_nodes=7)
        if a is None:
            continue
        d = parse_diagram(json.dumps({"topLevel": a["id"], "activities": [a]}))
        if not errors(validate(d)):
            return d
    return None


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_diagrams_round_trip(seed):
    d = generated(seed)
    assume(d is not None)
    assert parse_diagram(serialize_diagram(d)) == d
    assert serialize_diagram(parse_diagram(serialize_diagram(d))) == serialize_diagram(d)


def _parts(d, a):
    env, sync = Environment(), {}
    _translate_activity(d, a, TranslationConfig(), env, sync)
    return env, sync


@settings(max_examples=80, deadline=None)
@given(seeds, st.data())
def test_translation_is_compositional(seed, data):
    """Dropping one node leaves every other node's definition and interface alone."""
    d = generated(seed)
    assume(d is not None)
    a = d.top
    victim = data.draw(st.sampled_from([n for n in a.nodes if n.kind != "Initial"]))
    smaller = replace(a, nodes=tuple(n for n in a.nodes if n.id != victim.id))
    env, sync = _parts(d, a)
    env2, sync2 = _parts(ActivityDiagram((smaller,), d.top_level), smaller)
    for n in smaller.nodes:
        for name in (f"{n.id}_{a.id}", f"{n.id}_{a.id}_t"):
            assert env[name].body is env2[name].body
        assert sync[f"{a.id}/{n.id}"] == sync2[f"{a.id}/{n.id}"]
    assert f"{victim.id}_{a.id}" not in env2
    # the victim's edges are left with exactly one partner each
    for e in a.edges:
        if victim.id not in (e.source, e.target) or e.source == e.target:
            continue
        owners = [k for k, s in sync2.items() if any(x.base == "ce" and x.values[0] == e.index for x in s)]
        assert len(owners) == 1


def _manager_count(t):
    stack = [t]
    while stack:
        x = stack.pop()
        if x.tag == "ref" and x.args[0].startswith("Token_Manager_"):
            n = x.args[1][0]
            return getattr(n, "value", n)
        stack.extend(y for y in x.args if hasattr(y, "tag"))
    return None


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_token_count_is_the_sum_of_updates(seed):
    d = generated(seed)
    assume(d is not None)
    cfg = TranslationConfig(max_tokens=4 * d.edge_count + 1).with_visibility(visible=["update", "clear"])
    m = translate(d, cfg)
    lts = build_lts(m, limit=20000)
    total = {lts.root: 0}
    q = deque([lts.root])
    while q:
        s = q.popleft()
        n = _manager_count(lts.states[s])
        if n is not None:
            assert n == total[s]
        for e, t in lts.edges(s):
            if e.base == "clear":
                after = 0
            else:
                after = total[s] + (e.values[0] if e.base == "update" else 0)
            if t in total:
                # every path into a state agrees on the count
                assert total[t] == after
            else:
                total[t] = after
                q.append(t)
    assert all(v >= 0 for v in total.values())
