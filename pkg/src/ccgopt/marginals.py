"""Softmin marginals of a ZDD-encoded family, differentiable in the costs.

The marginal of edge i is the probability that i belongs to a random set
drawn with weight exp(-cost(S)).  It is computed by weight pushing: a
bottom-up pass accumulates per-node partition functions, a top-down pass
spreads reach probabilities, both in log domain for stability.  All
arithmetic is recorded on the autodiff tape, so gradients with respect
to the cost vector come out of one backward sweep.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyFamilyError, EnumerationOverflowError
from .tape import _LOG_ZERO, Var
from .zdd import BOT, TOP, Zdd


def softmin_marginal(zdd: Zdd, costs: list[Var]) -> list[Var]:
    """Gibbs-expectation of each edge's membership indicator, with set
    weights exp(-sum of entries of `costs` over the set).

    Adds O(|zdd|) nodes to the tape; every output lies in [0, 1].
    """
    if zdd.root == BOT:
        raise EmptyFamilyError("softmin marginal of an empty family")
    tape = costs[0].tape
    zero = tape.constant(0.0)
    if zdd.root == TOP:
        return [zero] * zdd.n
    size = len(zdd.labels)
    labels, lo, hi = zdd.labels, zdd.lo, zdd.hi

    neg_cost = {}

    def neg_of(eid):
        var = neg_cost.get(eid)
        if var is None:
            var = tape.neg(costs[eid - 1])
            neg_cost[eid] = var
        return var

    # bottom-up: log partition function per node
    log_b = [None] * size
    log_b[TOP] = zero
    for i in range(2, size):
        hi_weight = neg_of(labels[i])
        if hi[i] != TOP:
            hi_weight = tape.add(hi_weight, log_b[hi[i]])
        if lo[i] == BOT:
            log_b[i] = hi_weight
        else:
            log_b[i] = tape.logaddexp(log_b[lo[i]], hi_weight)

    # top-down: reach probabilities, pushed parents-first
    one = tape.constant(1.0)
    reach_parts = [None] * size
    reach_parts[zdd.root] = [one]
    edge_parts = {}
    for i in range(size - 1, 1, -1):
        parts = reach_parts[i]
        reach = parts[0] if len(parts) == 1 else tape.vsum(parts)
        reach_parts[i] = None
        if lo[i] == BOT:
            took = reach  # the walk must take the hi arc here
        else:
            p_lo = tape.exp(tape.sub(log_b[lo[i]], log_b[i]))
            stay = tape.mul(p_lo, reach)
            took = tape.sub(reach, stay)
            if lo[i] > TOP:
                if reach_parts[lo[i]] is None:
                    reach_parts[lo[i]] = [stay]
                else:
                    reach_parts[lo[i]].append(stay)
        if hi[i] > TOP:
            if reach_parts[hi[i]] is None:
                reach_parts[hi[i]] = [took]
            else:
                reach_parts[hi[i]].append(took)
        edge_parts.setdefault(labels[i], []).append(took)

    out = []
    for eid in range(1, zdd.n + 1):
        parts = edge_parts.get(eid)
        if parts is None:
            out.append(zero)
        elif len(parts) == 1:
            out.append(parts[0])
        else:
            out.append(tape.vsum(parts))
    return out


def log_partition_values(zdd: Zdd, costs: np.ndarray) -> np.ndarray:
    """Float-only bottom-up pass: log of the summed set weights below each
    node.  Shared by sampling and the non-differentiable solvers."""
    size = len(zdd.labels)
    log_b = np.empty(size)
    log_b[BOT] = _LOG_ZERO
    log_b[TOP] = 0.0
    labels, lo, hi = zdd.labels, zdd.lo, zdd.hi
    for i in range(2, size):
        hw = -costs[labels[i] - 1] + log_b[hi[i]]
        lb = log_b[lo[i]]
        if lb <= _LOG_ZERO:
            log_b[i] = hw
        elif hw >= lb:
            log_b[i] = hw + np.log1p(np.exp(lb - hw))
        else:
            log_b[i] = lb + np.log1p(np.exp(hw - lb))
    return log_b


def marginal_values(zdd: Zdd, costs: np.ndarray) -> np.ndarray:
    """Float-only version of softmin_marginal (no tape)."""
    if zdd.root == BOT:
        raise EmptyFamilyError("softmin marginal of an empty family")
    if zdd.root == TOP:
        return np.zeros(zdd.n)
    size = len(zdd.labels)
    labels, lo, hi = zdd.labels, zdd.lo, zdd.hi
    log_b = log_partition_values(zdd, costs)
    reach = np.zeros(size)
    reach[zdd.root] = 1.0
    x = np.zeros(zdd.n)
    for i in range(size - 1, 1, -1):
        r = reach[i]
        if lo[i] == BOT:
            took = r
        else:
            stay = np.exp(log_b[lo[i]] - log_b[i]) * r
            took = r - stay
            reach[lo[i]] += stay
        reach[hi[i]] += took
        x[labels[i] - 1] += took
    return x


def brute_force_marginal(sets, costs, n) -> np.ndarray:
    """Oracle: explicit softmax over an enumerated family.

    sets is an iterable of edge-id collections, |sets| <= 1e5; costs is
    indexed by edge id - 1.  Max-shifted for stability.
    """
    sets = list(sets)
    if not sets:
        raise EmptyFamilyError("brute-force marginal of an empty family")
    if len(sets) > 10**5:
        raise EnumerationOverflowError(f"family too large: {len(sets)} sets")
    costs = np.asarray(costs, dtype=float)
    energies = np.array([-sum(costs[e - 1] for e in s) for s in sets])
    energies -= energies.max()
    weights = np.exp(energies)
    weights /= weights.sum()
    x = np.zeros(n)
    for w, s in zip(weights, sets):
        for e in s:
            x[e - 1] += w
    return x


def sample_strategy(zdd: Zdd, costs, seed: int):
    """Draw one member set with probability proportional to its weight
    exp(-cost).  Reproducible: the PRNG is numpy's default_rng(seed)."""
    return sample_strategies(zdd, costs, seed, 1)[0]


def sample_strategies(zdd: Zdd, costs, seed: int, count: int):
    """Draw `count` sets by independent top-down walks (one shared PRNG).

    Each walk starts at the root and picks the hi arc with probability
    hi-weight / node-weight, so it can never reach the false terminal.
    """
    if zdd.root == BOT:
        raise EmptyFamilyError("cannot sample from an empty family")
    rng = np.random.default_rng(seed)
    if zdd.root == TOP:
        return [tuple()] * count
    costs = np.asarray(costs, dtype=float)
    log_b = log_partition_values(zdd, costs)
    labels, lo, hi = zdd.labels, zdd.lo, zdd.hi
    out = []
    for _ in range(count):
        node = zdd.root
        chosen = []
        while node > TOP:
            hw = -costs[labels[node] - 1] + log_b[hi[node]]
            p_hi = np.exp(hw - log_b[node])
            if rng.random() < p_hi:
                chosen.append(labels[node])
                node = hi[node]
            else:
                node = lo[node]
        out.append(tuple(sorted(chosen)))
    return out
