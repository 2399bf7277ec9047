"""Brute-force oracles the tests trust instead of the implementations.

Everything here enumerates or differentiates naively: strategy families
by filtering all 2^n edge subsets, gradients by central differences,
integrals by adaptive quadrature.  Keep these independent of the
package's fast paths.
"""

import itertools

import numpy as np


def _degrees(subset, graph):
    deg = {}
    for e in subset:
        u, v = graph.edges[e - 1]
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    return deg


def _component_count(subset, graph, extra=()):
    verts = set(extra)
    for e in subset:
        u, v = graph.edges[e - 1]
        verts.add(u)
        verts.add(v)
    parent = {v: v for v in verts}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in subset:
        u, v = graph.edges[e - 1]
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    return len({find(v) for v in verts}), verts


def is_simple_path(subset, graph):
    s, t = graph.designation[1], graph.designation[2]
    if not subset:
        return False
    deg = _degrees(subset, graph)
    if deg.get(s, 0) != 1 or deg.get(t, 0) != 1:
        return False
    if any(d != 2 for v, d in deg.items() if v not in (s, t)):
        return False
    ncomp, _ = _component_count(subset, graph)
    return ncomp == 1


def is_hamiltonian_cycle(subset, graph):
    if not subset:
        return False
    deg = _degrees(subset, graph)
    if len(deg) != graph.vertex_count:
        return False
    if any(d != 2 for d in deg.values()):
        return False
    ncomp, _ = _component_count(subset, graph)
    return ncomp == 1


def is_steiner_tree(subset, graph):
    terminals = graph.designation[1]
    ncomp, verts = _component_count(subset, graph, extra=terminals)
    return ncomp == 1 and len(subset) == len(verts) - 1


PREDICATES = {
    "paths": is_simple_path,
    "hamilton": is_hamiltonian_cycle,
    "steiner": is_steiner_tree,
}


def brute_force_family(graph, kind):
    """All member sets by filtering every edge subset; sorted tuples."""
    predicate = PREDICATES[kind]
    n = graph.edge_count
    out = []
    for r in range(n + 1):
        for subset in itertools.combinations(range(1, n + 1), r):
            if predicate(subset, graph):
                out.append(tuple(sorted(subset)))
    return sorted(out)


def linear_min_by_enumeration(sets, cost):
    """(min value, lexicographically smallest minimizer)."""
    best = None
    best_set = None
    for s in sorted(sets):
        value = sum(cost[e - 1] for e in s)
        if best is None or value < best - 1e-12:
            best, best_set = value, s
    return best, best_set


def central_difference(fn, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fn(xp) - fn(xm)) / (2 * h)
    return grad


def tangential_difference(fn, x, h=1e-5):
    """Directional central differences along e_i - mean, staying on the
    sum-constrained plane."""
    x = np.asarray(x, dtype=float)
    n = x.size
    grad = np.zeros(n)
    for i in range(n):
        d = -np.ones(n) / n
        d[i] += 1.0
        grad[i] = (fn(x + h * d) - fn(x - h * d)) / (2 * h)
    return grad
