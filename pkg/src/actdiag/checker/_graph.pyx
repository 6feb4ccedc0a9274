# cython: language_level=3, boundscheck=False, wraparound=False
# distutils: language = c++
"""Graph kernels over CSR transition systems, compiled implementation.

Same functions and results as ``_graph_py``; inputs are int64 buffers
(``array('q')``), label 0 is tau.
"""

from libcpp.map cimport map as cmap
from libcpp.vector cimport vector
from libcpp.algorithm cimport sort as csort
from cython.operator cimport dereference as deref, preincrement as inc

ctypedef long long i64

TAU_LABEL = 0


def bfs(const i64[:] offsets, const i64[:] labels, const i64[:] targets, Py_ssize_t n, i64 root):
    cdef vector[i64] dist = vector[i64](n, -1)
    cdef vector[i64] parent = vector[i64](n, -1)
    cdef vector[i64] plabel = vector[i64](n, -1)
    cdef vector[i64] order
    cdef Py_ssize_t i = 0
    cdef i64 s, t, k, d
    order.push_back(root)
    dist[root] = 0
    while i < <Py_ssize_t>order.size():
        s = order[i]
        i += 1
        d = dist[s] + 1
        for k in range(offsets[s], offsets[s + 1]):
            t = targets[k]
            if dist[t] < 0:
                dist[t] = d
                parent[t] = s
                plabel[t] = labels[k]
                order.push_back(t)
    return order, dist, parent, plabel


def sinks(const i64[:] offsets, Py_ssize_t n, const unsigned char[:] terminated):
    cdef vector[i64] out
    cdef Py_ssize_t s
    for s in range(n):
        if offsets[s] == offsets[s + 1] and not terminated[s]:
            out.push_back(s)
    return out


def tau_sccs(const i64[:] offsets, const i64[:] labels, const i64[:] targets, Py_ssize_t n):
    cdef vector[i64] index = vector[i64](n, -1)
    cdef vector[i64] low = vector[i64](n, 0)
    cdef vector[char] on_stack = vector[char](n, 0)
    cdef vector[i64] comp = vector[i64](n, -1)
    cdef vector[char] cyclic
    cdef vector[i64] stack
    cdef vector[i64] work_v
    cdef vector[i64] work_k
    cdef i64 counter = 0
    cdef i64 start, v, k, end, w, u, cid, size, j
    cdef bint loop
    for start in range(n):
        if index[start] >= 0:
            continue
        work_v.push_back(start)
        work_k.push_back(offsets[start])
        index[start] = counter
        low[start] = counter
        counter += 1
        stack.push_back(start)
        on_stack[start] = 1
        while work_v.size():
            v = work_v.back()
            k = work_k.back()
            end = offsets[v + 1]
            while k < end and labels[k] != 0:
                k += 1
            if k < end:
                work_k[work_k.size() - 1] = k + 1
                w = targets[k]
                if index[w] < 0:
                    index[w] = counter
                    low[w] = counter
                    counter += 1
                    stack.push_back(w)
                    on_stack[w] = 1
                    work_v.push_back(w)
                    work_k.push_back(offsets[w])
                elif on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
                continue
            work_v.pop_back()
            work_k.pop_back()
            if work_v.size():
                u = work_v.back()
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                cid = cyclic.size()
                size = 0
                while True:
                    w = stack.back()
                    stack.pop_back()
                    on_stack[w] = 0
                    comp[w] = cid
                    size += 1
                    if w == v:
                        break
                loop = size > 1
                if not loop:
                    for j in range(offsets[v], offsets[v + 1]):
                        if labels[j] == 0 and targets[j] == v:
                            loop = True
                            break
                cyclic.push_back(loop)
    return comp, [bool(c) for c in cyclic]


cdef vector[i64] _closure(const i64[:] offsets, const i64[:] labels, const i64[:] targets,
                          vector[i64]& seeds, vector[char]& mark):
    cdef vector[i64] out
    cdef vector[i64] stack = seeds
    cdef i64 s, t, k
    cdef size_t i
    for i in range(stack.size()):
        mark[stack[i]] = 1
    while stack.size():
        s = stack.back()
        stack.pop_back()
        out.push_back(s)
        for k in range(offsets[s], offsets[s + 1]):
            if labels[k] == 0:
                t = targets[k]
                if not mark[t]:
                    mark[t] = 1
                    stack.push_back(t)
    for i in range(out.size()):
        mark[out[i]] = 0
    csort(out.begin(), out.end())
    return out


def normalize(const i64[:] offsets, const i64[:] labels, const i64[:] targets, Py_ssize_t n, i64 root):
    cdef vector[char] mark = vector[char](n, 0)
    cdef vector[char] seen = vector[char](n, 0)
    cdef cmap[vector[i64], i64] ids
    cdef vector[vector[i64]] members
    cdef vector[i64] moffsets
    cdef vector[i64] mlabels
    cdef vector[i64] mtargets
    cdef cmap[i64, vector[i64]] by_label
    cdef cmap[i64, vector[i64]].iterator it
    cdef cmap[vector[i64], i64].iterator found
    cdef vector[i64] seeds
    cdef vector[i64] key
    cdef size_t i = 0, j
    cdef i64 s, k, lab, mid
    seeds.push_back(root)
    key = _closure(offsets, labels, targets, seeds, mark)
    ids[key] = 0
    members.push_back(key)
    moffsets.push_back(0)
    while i < members.size():
        by_label.clear()
        for j in range(members[i].size()):
            s = members[i][j]
            for k in range(offsets[s], offsets[s + 1]):
                lab = labels[k]
                if lab != 0:
                    by_label[lab].push_back(targets[k])
        it = by_label.begin()
        while it != by_label.end():
            lab = deref(it).first
            seeds = deref(it).second
            key = _closure(offsets, labels, targets, _dedup(seeds, seen), mark)
            found = ids.find(key)
            if found == ids.end():
                mid = members.size()
                ids[key] = mid
                members.push_back(key)
            else:
                mid = deref(found).second
            mlabels.push_back(lab)
            mtargets.push_back(mid)
            inc(it)
        moffsets.push_back(mlabels.size())
        i += 1
    return [tuple(m) for m in members], moffsets, mlabels, mtargets


cdef vector[i64] _dedup(vector[i64]& xs, vector[char]& seen):
    cdef vector[i64] out
    cdef size_t i
    for i in range(xs.size()):
        if not seen[xs[i]]:
            seen[xs[i]] = 1
            out.push_back(xs[i])
    for i in range(out.size()):
        seen[out[i]] = 0
    return out
