"""Zero-suppressed binary decision diagrams over edge-indexed ground sets.

A Zdd stores a family of edge subsets as a reduced, ordered DAG: each
nonterminal node branches on one edge id, the hi arc meaning "edge in the
set".  Families of simple s-t paths, Hamiltonian cycles, and Steiner
trees are compiled by frontier-based search: partial subgraphs that look
identical on the boundary between processed and unprocessed edges are
merged into one search state, and the state graph is then reduced into
canonical form.
"""

from __future__ import annotations

import time

from .errors import (
    ConfigurationError,
    EmptyFamilyError,
    EnumerationOverflowError,
    GraphFormatError,
)
from .graphs import Graph, StrategyClass, bfs_edge_order

BOT = 0
TOP = 1

# mate-array markers (vertex ids are >= 0)
_SAT = -3    # vertex saturated: both path/cycle slots used
_ASRC = -1   # chain end anchored at the retired source vertex
_ATGT = -2   # chain end anchored at the retired target vertex


class Zdd:
    """Reduced ordered ZDD.  Node 0 is the false terminal, node 1 the
    true terminal; nonterminals start at index 2 and are stored in
    topological order (children before parents, root last)."""

    __slots__ = ("n", "order", "labels", "lo", "hi", "root", "position",
                 "build_stats")

    def __init__(self, n, order, labels, lo, hi, root, build_stats=None):
        self.n = n
        self.order = tuple(order)
        if sorted(self.order) != list(range(1, n + 1)):
            raise ConfigurationError("variable order must permute 1..n")
        self.labels = list(labels)
        self.lo = list(lo)
        self.hi = list(hi)
        self.root = root
        self.position = {eid: pos for pos, eid in enumerate(self.order)}
        self.build_stats = build_stats or {}

    @classmethod
    def terminal(cls, n, order, accept):
        """ZDD of the empty family (accept=False) or the family {[]}."""
        return cls(n, order, [None, None], [None, None], [None, None],
                   TOP if accept else BOT)

    def __len__(self):
        """Node count |V| including both terminals."""
        return len(self.labels)

    @property
    def nonterminal_count(self):
        return len(self.labels) - 2

    def count(self) -> int:
        """Number of root-to-true paths, i.e. the family size."""
        cnt = [0, 1] + [0] * self.nonterminal_count
        for i in range(2, len(self.labels)):
            cnt[i] = cnt[self.lo[i]] + cnt[self.hi[i]]
        return cnt[self.root]

    def enumerate_sets(self, limit: int) -> list[tuple[int, ...]]:
        """All member sets, each a tuple of edge ids sorted ascending,
        listed lexicographically by variable order."""
        total = self.count()
        if total > limit:
            raise EnumerationOverflowError(
                f"family has {total} sets, limit is {limit}")
        out = []
        if self.root == BOT:
            return out
        stack = [(self.root, [])]
        while stack:
            node, chosen = stack.pop()
            if node == BOT:
                continue
            if node == TOP:
                out.append(chosen)
                continue
            stack.append((self.lo[node], chosen))
            stack.append((self.hi[node], chosen + [self.labels[node]]))
        pos = self.position
        out.sort(key=lambda s: tuple(sorted(pos[e] for e in s)))
        return [tuple(sorted(s)) for s in out]

    def linear_min(self, cost) -> tuple[float, tuple[int, ...]]:
        """Minimum of sum(cost[e-1] for e in S) over the family, with the
        lexicographically smallest minimizer (ties prefer taking the
        earliest-position edge).  cost is indexed by edge id - 1."""
        if self.root == BOT:
            raise EmptyFamilyError("linear_min over an empty family")
        size = len(self.labels)
        best = [float("inf")] * size
        best[TOP] = 0.0
        take = [False] * size
        for i in range(2, size):
            lo_val = best[self.lo[i]]
            hi_val = cost[self.labels[i] - 1] + best[self.hi[i]]
            if hi_val <= lo_val:
                best[i], take[i] = hi_val, True
            else:
                best[i], take[i] = lo_val, False
        chosen = []
        node = self.root
        while node > TOP:
            if take[node]:
                chosen.append(self.labels[node])
                node = self.hi[node]
            else:
                node = self.lo[node]
        return best[self.root], tuple(sorted(chosen))

    def reduce(self) -> "Zdd":
        """Re-apply the reduction rules (zero-suppression, duplicate
        merging, reachability compaction).  Idempotent on a valid Zdd."""
        mapped = {BOT: BOT, TOP: TOP}
        unique = {}
        labels, lo, hi = [None, None], [None, None], [None, None]
        for i in range(2, len(self.labels)):
            l, h = mapped[self.lo[i]], mapped[self.hi[i]]
            if h == BOT:
                mapped[i] = l
                continue
            key = (self.labels[i], l, h)
            idx = unique.get(key)
            if idx is None:
                idx = len(labels)
                unique[key] = idx
                labels.append(self.labels[i])
                lo.append(l)
                hi.append(h)
            mapped[i] = idx
        return _compact(self.n, self.order, labels, lo, hi, mapped[self.root],
                        dict(self.build_stats))

    def structural_violations(self) -> list[str]:
        """Check the Zdd invariants by a single traversal; returns a list
        of human-readable violation descriptions (empty when valid)."""
        issues = []
        size = len(self.labels)
        if size < 2:
            return ["missing terminal nodes"]
        if not (0 <= self.root < size):
            return [f"root index {self.root} out of range"]
        seen_keys = {}
        reachable = {self.root}
        for i in range(size - 1, 1, -1):
            lab, l, h = self.labels[i], self.lo[i], self.hi[i]
            if lab not in self.position:
                issues.append(f"node {i}: label {lab} is not an edge id")
                continue
            for child, arc in ((l, "lo"), (h, "hi")):
                if not (0 <= child < size):
                    issues.append(f"node {i}: {arc} child {child} out of range")
                elif child >= i:
                    issues.append(
                        f"node {i}: {arc} child {child} not below parent "
                        "(order/acyclicity broken)")
                elif child > TOP:
                    if self.position[self.labels[child]] <= self.position[lab]:
                        issues.append(
                            f"node {i}: child {child} violates variable order")
                    if i in reachable:
                        reachable.add(child)
            if h == BOT:
                issues.append(f"node {i}: hi arc points to false terminal "
                              "(not zero-suppressed)")
            key = (lab, l, h)
            if key in seen_keys:
                issues.append(
                    f"nodes {seen_keys[key]} and {i} are duplicates (not reduced)")
            else:
                seen_keys[key] = i
        for i in range(2, size):
            if i not in reachable:
                issues.append(f"node {i} unreachable from root")
        if size > 2 and self.root != size - 1:
            issues.append("root is not the last node")
        # arc bound |A| = 2 * nonterminals <= 2 * |V| holds structurally
        return issues

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def dumps(self) -> str:
        lines = [f"zdd {self.n} {self.nonterminal_count}",
                 "order " + " ".join(str(e) for e in self.order)]
        for i in range(2, len(self.labels)):
            lines.append(f"node {i} {self.labels[i]} {self.lo[i]} {self.hi[i]}")
        if self.nonterminal_count == 0:
            lines.append(f"root {self.root}")
        return "\n".join(lines) + "\n"


def load_zdd(path, validate=True) -> Zdd:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_zdd(fh.read(), validate=validate)


def parse_zdd(text: str, validate=True) -> Zdd:
    n = node_count = None
    order = None
    labels, lo, hi = [None, None], [None, None], [None, None]
    explicit_root = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "zdd":
                n, node_count = int(parts[1]), int(parts[2])
            elif parts[0] == "order":
                order = tuple(int(p) for p in parts[1:])
            elif parts[0] == "node":
                idx, lab, l, h = (int(p) for p in parts[1:5])
                if idx != len(labels):
                    raise GraphFormatError(
                        f"node index {idx}, expected {len(labels)}", line_no)
                labels.append(lab)
                lo.append(l)
                hi.append(h)
            elif parts[0] == "root":
                explicit_root = int(parts[1])
            else:
                raise GraphFormatError(f"unknown record {parts[0]!r}", line_no)
        except (IndexError, ValueError) as exc:
            raise GraphFormatError(f"malformed record: {exc}", line_no) from exc
    if n is None or order is None:
        raise GraphFormatError("missing zdd/order header")
    if len(labels) - 2 != node_count:
        raise GraphFormatError(
            f"header announces {node_count} nodes, found {len(labels) - 2}")
    root = explicit_root if explicit_root is not None else len(labels) - 1
    try:
        zdd = Zdd(n, order, labels, lo, hi, root)
    except ConfigurationError as exc:
        raise GraphFormatError(str(exc)) from exc
    if validate:
        issues = zdd.structural_violations()
        if issues:
            raise GraphFormatError("invalid zdd: " + "; ".join(issues))
    return zdd


def _compact(n, order, labels, lo, hi, root, build_stats):
    """Drop nodes unreachable from the root and renumber in post-order so
    children precede parents and the root comes last."""
    if root <= TOP:
        out = Zdd.terminal(n, order, root == TOP)
        out.build_stats = build_stats
        return out
    mapping = {BOT: BOT, TOP: TOP}
    new_labels, new_lo, new_hi = [None, None], [None, None], [None, None]
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if node in mapping:
            continue
        if expanded:
            mapping[node] = len(new_labels)
            new_labels.append(labels[node])
            new_lo.append(mapping[lo[node]])
            new_hi.append(mapping[hi[node]])
        else:
            stack.append((node, True))
            stack.append((hi[node], False))
            stack.append((lo[node], False))
    return Zdd(n, order, new_labels, new_lo, new_hi, mapping[root], build_stats)


# ---------------------------------------------------------------------------
# Frontier-based construction
# ---------------------------------------------------------------------------

class _FrontierPlan:
    """Static per-position data shared by the family builders."""

    def __init__(self, graph: Graph, order):
        self.order = tuple(order)
        self.endpoints = [graph.edges[eid - 1] for eid in self.order]
        first, last = {}, {}
        for pos, (u, v) in enumerate(self.endpoints):
            for w in (u, v):
                first.setdefault(w, pos)
                last[w] = pos
        self.first = first
        self.last = last
        n = len(self.order)
        self.leavers = [[] for _ in range(n)]
        for w, pos in last.items():
            self.leavers[pos].append(w)
        # frontier after processing position k (vertices still awaiting edges)
        self.frontier = []
        active = set()
        for pos, (u, v) in enumerate(self.endpoints):
            active.add(u)
            active.add(v)
            for w in self.leavers[pos]:
                active.discard(w)
            self.frontier.append(frozenset(active))
        # number of vertices that have not yet touched any processed edge
        seen = set()
        self.unseen_after = []
        touched_total = len(first)
        never_touched = graph.vertex_count - touched_total
        for pos, (u, v) in enumerate(self.endpoints):
            seen.add(u)
            seen.add(v)
            self.unseen_after.append(touched_total - len(seen) + never_touched)


def _join_mates(mate, u, v):
    """Mate update for taking edge (u, v); returns (new_mate, completed)
    or None when the edge is infeasible.  Shared by the path and cycle
    builders; anchor markers only ever occur for paths."""
    mu = mate.get(u, u)
    mv = mate.get(v, v)
    if mu == _SAT or mv == _SAT:
        return None
    if mu == v:
        return None  # would close a cycle
    new = dict(mate)
    if mu != u:
        new[u] = _SAT
    if mv != v:
        new[v] = _SAT
    completed = False
    u_anchor = mu in (_ASRC, _ATGT)
    v_anchor = mv in (_ASRC, _ATGT)
    if u_anchor and v_anchor:
        completed = True  # joined the chains hanging off both retired ends
    elif u_anchor:
        new[mv] = mu
    elif v_anchor:
        new[mu] = mv
    else:
        new[mu] = mv
        new[mv] = mu
    return new, completed


class _PathsBuilder:
    """States for simple s-t paths: a mate array over frontier vertices
    plus a flag set once the s-t chain is complete."""

    def __init__(self, plan: _FrontierPlan, s, t):
        self.plan = plan
        self.s = s
        self.t = t

    def initial(self):
        return ((), False)

    def _canon(self, mate, completed):
        return (tuple(sorted(mate.items())), completed)

    def _leave(self, mate, completed, pos):
        for w in self.plan.leavers[pos]:
            m = mate.pop(w, w)
            if w == self.s or w == self.t:
                if m == w or m == _SAT:
                    return None  # terminal vertex ends with degree 0 or 2
                other_anchor = _ATGT if w == self.s else _ASRC
                if m == other_anchor:
                    completed = True  # chain ran terminal-to-terminal
                elif m in (_ASRC, _ATGT):
                    return None
                else:
                    mate[m] = _ASRC if w == self.s else _ATGT
            else:
                if m != w and m != _SAT:
                    return None  # open chain dies at an interior vertex
        return self._canon(mate, completed)

    def children(self, state, pos):
        mate_items, completed = state
        mate = dict(mate_items)
        u, v = self.plan.endpoints[pos]
        lo = self._leave(dict(mate), completed, pos)
        if completed:
            hi = None  # a completed path admits no further edges
        else:
            joined = _join_mates(mate, u, v)
            if joined is None:
                hi = None
            else:
                new_mate, just_completed = joined
                hi = self._leave(new_mate, completed or just_completed, pos)
        return lo, hi

    def accept(self, state):
        return state[1]


class _HamiltonBuilder:
    """States for Hamiltonian cycles: mate array plus a closed flag;
    every vertex must end saturated."""

    def __init__(self, plan: _FrontierPlan):
        self.plan = plan

    def initial(self):
        return ((), False)

    def _leave(self, mate, done, pos):
        for w in self.plan.leavers[pos]:
            if mate.pop(w, w) != _SAT:
                return None  # vertex retires with degree != 2
        return (tuple(sorted(mate.items())), done)

    def children(self, state, pos):
        mate_items, done = state
        mate = dict(mate_items)
        lo = self._leave(dict(mate), done, pos)
        if done:
            return lo, None
        u, v = self.plan.endpoints[pos]
        mu = mate.get(u, u)
        mv = mate.get(v, v)
        hi = None
        if mu != _SAT and mv != _SAT:
            if mu == v:
                # closing arc: legal only when every other vertex is done
                others_ok = all(
                    mate.get(w, w) == _SAT
                    for w in self.plan.frontier[pos] if w not in (u, v))
                if others_ok and self.plan.unseen_after[pos] == 0:
                    closed = dict(mate)
                    closed[u] = _SAT
                    closed[v] = _SAT
                    hi = self._leave(closed, True, pos)
            else:
                joined = _join_mates(mate, u, v)
                if joined is not None:
                    hi = self._leave(joined[0], done, pos)
        return lo, hi

    def accept(self, state):
        return state[1]


class _SteinerBuilder:
    """States for Steiner trees: a partition of active frontier vertices
    into components, each tagged with the terminals it contains, plus a
    flag set once a sealed component covers every terminal."""

    def __init__(self, plan: _FrontierPlan, terminals):
        self.plan = plan
        self.terminals = tuple(terminals)
        self.term_bit = {t: 1 << i for i, t in enumerate(self.terminals)}
        self.full_mask = (1 << len(self.terminals)) - 1

    def initial(self):
        return ((), (), False)

    def _canon(self, comp, masks, done):
        remap = {}
        assign = []
        for w in sorted(comp):
            c = comp[w]
            if c not in remap:
                remap[c] = len(remap)
            assign.append((w, remap[c]))
        mask_list = [0] * len(remap)
        for c, idx in remap.items():
            mask_list[idx] = masks[c]
        return (tuple(assign), tuple(mask_list), done)

    def _activate_terminals(self, comp, masks, pos):
        u, v = self.plan.endpoints[pos]
        for w in (u, v):
            if w in self.term_bit and w not in comp:
                cid = len(masks)
                comp[w] = cid
                masks[cid] = self.term_bit[w]

    def _leave(self, comp, masks, done, pos):
        for w in self.plan.leavers[pos]:
            c = comp.pop(w, None)
            if c is None:
                continue
            if c in comp.values():
                continue  # component still has frontier vertices
            mask = masks.pop(c)
            if mask == self.full_mask:
                done = True  # sealed tree covering every terminal
            else:
                return None  # sealed fragment missing terminals
        return self._canon(comp, masks, done)

    def children(self, state, pos):
        assign, mask_tuple, done = state
        comp = dict(assign)
        masks = dict(enumerate(mask_tuple))
        self._activate_terminals(comp, masks, pos)
        lo = self._leave(dict(comp), dict(masks), done, pos)
        if done:
            return lo, None
        u, v = self.plan.endpoints[pos]
        cu = comp.get(u)
        cv = comp.get(v)
        if cu is not None and cu == cv:
            return lo, None  # edge inside one component closes a cycle
        bit_u = self.term_bit.get(u, 0)
        bit_v = self.term_bit.get(v, 0)
        merged = len(masks) + 1  # fresh id, remapped by _canon
        new_mask = bit_u | bit_v
        for c in (cu, cv):
            if c is not None:
                new_mask |= masks.pop(c)
        masks[merged] = new_mask
        for w, c in list(comp.items()):
            if c == cu or c == cv:
                comp[w] = merged
        comp[u] = merged
        comp[v] = merged
        hi = self._leave(comp, masks, done, pos)
        return lo, hi

    def accept(self, state):
        return state[2]


def _frontier_compile(graph: Graph, order, builder) -> Zdd:
    n = graph.edge_count
    started = time.perf_counter()
    level = {builder.initial(): 0}
    arcs = []  # arcs[k][slot] = (lo_ref, hi_ref); ref = slot index or -BOT/-TOP marker
    max_width = 1
    for pos in range(n):
        nxt = {}
        level_arcs = []

        def child_ref(state):
            if state is None:
                return ("t", BOT)
            slot = nxt.get(state)
            if slot is None:
                slot = len(nxt)
                nxt[state] = slot
            return ("s", slot)

        for state in level:
            lo_state, hi_state = builder.children(state, pos)
            level_arcs.append((child_ref(lo_state), child_ref(hi_state)))
        arcs.append(level_arcs)
        level = nxt
        max_width = max(max_width, len(level))
    final_accept = [builder.accept(state) for state in level]

    # resolve bottom-up with zero-suppression and duplicate merging
    labels, lo, hi = [None, None], [None, None], [None, None]
    unique = {}
    resolved = [TOP if acc else BOT for acc in final_accept]
    raw_nodes = sum(len(a) for a in arcs)
    for pos in range(n - 1, -1, -1):
        label = order[pos]
        current = []
        for lo_ref, hi_ref in arcs[pos]:
            l = lo_ref[1] if lo_ref[0] == "t" else resolved[lo_ref[1]]
            h = hi_ref[1] if hi_ref[0] == "t" else resolved[hi_ref[1]]
            if h == BOT:
                current.append(l)
                continue
            key = (label, l, h)
            idx = unique.get(key)
            if idx is None:
                idx = len(labels)
                unique[key] = idx
                labels.append(label)
                lo.append(l)
                hi.append(h)
            current.append(idx)
        resolved = current
    stats = {
        "raw_nodes": raw_nodes,
        "max_frontier_states": max_width,
        "max_frontier_vertices": max((len(f) for f in builder.plan.frontier),
                                     default=0),
        "build_seconds": time.perf_counter() - started,
    }
    return _compact(n, order, labels, lo, hi, resolved[0], stats)


def build_family(graph: Graph, sclass: StrategyClass, order=None) -> Zdd:
    """Compile the strategy family of a graph into a reduced Zdd."""
    if any(u == v for u, v in graph.edges):
        raise ConfigurationError("self-loop edges are not supported")
    if order is None:
        order = bfs_edge_order(graph)
    plan = _FrontierPlan(graph, order)
    if sclass.kind == "paths":
        s, t = graph.designation_for(sclass)
        builder = _PathsBuilder(plan, s, t)
    elif sclass.kind == "hamilton":
        builder = _HamiltonBuilder(plan)
    else:
        terminals = graph.designation_for(sclass)
        builder = _SteinerBuilder(plan, terminals)
    if graph.edge_count == 0:
        accept = (sclass.kind == "steiner" and len(set(terminals)) == 1)
        return Zdd.terminal(0, (), accept)
    return _frontier_compile(graph, order, builder)
