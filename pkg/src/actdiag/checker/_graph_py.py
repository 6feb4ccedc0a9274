"""Graph kernels over CSR transition systems, pure-Python implementation.

A transition system is given as ``offsets`` (n + 1 entries), ``labels`` and
``targets``; the edges of state ``s`` are ``offsets[s]:offsets[s + 1]``,
sorted by (label, target).  Label 0 is tau.  The compiled module
``_graph`` implements the same functions with the same results.
"""

from __future__ import annotations

TAU_LABEL = 0


def bfs(offsets, labels, targets, n: int, root: int):
    """Breadth-first tree whose paths are the lexicographically least shortest ones.

    Returns ``(order, dist, parent, plabel)``; unreachable states get -1.
    """
    dist = [-1] * n
    parent = [-1] * n
    plabel = [-1] * n
    order = [root]
    dist[root] = 0
    i = 0
    while i < len(order):
        s = order[i]
        i += 1
        d = dist[s] + 1
        for k in range(offsets[s], offsets[s + 1]):
            t = targets[k]
            if dist[t] < 0:
                dist[t] = d
                parent[t] = s
                plabel[t] = labels[k]
                order.append(t)
    return order, dist, parent, plabel


def sinks(offsets, n: int, terminated) -> list:
    """States without outgoing edges that are not in ``terminated`` (a 0/1 mask)."""
    return [s for s in range(n) if offsets[s] == offsets[s + 1] and not terminated[s]]


def tau_sccs(offsets, labels, targets, n: int):
    """Strongly connected components of the tau-only subgraph.

    Returns ``(comp, cyclic)``: the component id of every state and, per
    component, whether it contains a tau cycle (size > 1 or a self-loop).
    """
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    comp = [-1] * n
    cyclic = []
    stack = []
    counter = 0
    for start in range(n):
        if index[start] >= 0:
            continue
        work = [(start, offsets[start])]
        index[start] = low[start] = counter
        counter += 1
        stack.append(start)
        on_stack[start] = True
        while work:
            v, k = work[-1]
            end = offsets[v + 1]
            while k < end and labels[k] != TAU_LABEL:
                k += 1
            if k < end:
                work[-1] = (v, k + 1)
                w = targets[k]
                if index[w] < 0:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, offsets[w]))
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                cid = len(cyclic)
                size = 0
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = cid
                    size += 1
                    if w == v:
                        break
                loop = size > 1
                if not loop:
                    for j in range(offsets[v], offsets[v + 1]):
                        if labels[j] == TAU_LABEL and targets[j] == v:
                            loop = True
                            break
                cyclic.append(loop)
    return comp, cyclic


def _closure(offsets, labels, targets, seeds, mark):
    out = []
    stack = list(seeds)
    for s in stack:
        mark[s] = 1
    while stack:
        s = stack.pop()
        out.append(s)
        for k in range(offsets[s], offsets[s + 1]):
            if labels[k] == TAU_LABEL:
                t = targets[k]
                if not mark[t]:
                    mark[t] = 1
                    stack.append(t)
    for s in out:
        mark[s] = 0
    out.sort()
    return tuple(out)


def normalize(offsets, labels, targets, n: int, root: int):
    """Subset construction over tau-closures.

    Returns ``(members, moffsets, mlabels, mtargets)``: the sorted member
    states of every macro-state (macro 0 holds the root) and the macro
    transition relation in CSR form, one successor per (macro, label),
    labels ascending.
    """
    mark = bytearray(n)
    first = _closure(offsets, labels, targets, (root,), mark)
    ids = {first: 0}
    members = [first]
    moffsets = [0]
    mlabels = []
    mtargets = []
    i = 0
    while i < len(members):
        by_label: dict = {}
        for s in members[i]:
            for k in range(offsets[s], offsets[s + 1]):
                lab = labels[k]
                if lab != TAU_LABEL:
                    by_label.setdefault(lab, set()).add(targets[k])
        for lab in sorted(by_label):
            key = _closure(offsets, labels, targets, by_label[lab], mark)
            mid = ids.get(key)
            if mid is None:
                mid = ids[key] = len(members)
                members.append(key)
            mlabels.append(lab)
            mtargets.append(mid)
        moffsets.append(len(mlabels))
        i += 1
    return members, moffsets, mlabels, mtargets
