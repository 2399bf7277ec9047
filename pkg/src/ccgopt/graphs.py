"""Edge-indexed graphs and strategy-class designations.

A graph carries the ground set of a congestion game: edges are numbered
1..n, each with a positive length, normalized so the longest edge has
length 1.  A designation (an origin/destination pair or a terminal set)
pins down which strategy family lives on the graph.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, GraphFormatError


@dataclass(frozen=True)
class StrategyClass:
    """Which combinatorial family to compile from a graph.

    kind is one of "paths" (simple source-target paths), "hamilton"
    (Hamiltonian cycles), or "steiner" (trees spanning every terminal).
    """

    kind: str

    KINDS = ("paths", "hamilton", "steiner")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown strategy class {self.kind!r}")


@dataclass
class Graph:
    """Undirected graph with 1-based edge ids and normalized lengths.

    edges[i] holds (u, v) for edge id i+1; vertices are integers in
    [0, vertex_count).  lengths are scaled so max(lengths) == 1.
    The designation is either ("od", s, t), ("terminals", tuple(vs)),
    or None.
    """

    vertex_count: int
    edges: list[tuple[int, int]]
    lengths: np.ndarray
    designation: tuple | None = None
    _adjacency: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.edges)
        self.lengths = np.asarray(self.lengths, dtype=float)
        if self.lengths.shape != (n,):
            raise ConfigurationError("one length per edge required")
        if n and np.any(self.lengths <= 0):
            raise ConfigurationError("edge lengths must be positive")
        if n:
            self.lengths = self.lengths / self.lengths.max()
        for u, v in self.edges:
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ConfigurationError(f"edge endpoint out of range: ({u}, {v})")
        if self.designation is not None:
            kind = self.designation[0]
            if kind == "od":
                s, t = self.designation[1], self.designation[2]
                if s == t:
                    raise ConfigurationError("od pair must have distinct endpoints")
                self._check_vertex(s)
                self._check_vertex(t)
            elif kind == "terminals":
                terms = self.designation[1]
                if not terms:
                    raise ConfigurationError("terminal set must be nonempty")
                for v in terms:
                    self._check_vertex(v)
            else:
                raise ConfigurationError(f"unknown designation {kind!r}")

    def _check_vertex(self, v):
        if not (0 <= v < self.vertex_count):
            raise ConfigurationError(f"vertex {v} out of range")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def adjacency(self) -> dict[int, list[tuple[int, int]]]:
        """vertex -> list of (edge_id, other_endpoint)."""
        if self._adjacency is None:
            adj = collections.defaultdict(list)
            for eid, (u, v) in enumerate(self.edges, start=1):
                adj[u].append((eid, v))
                adj[v].append((eid, u))
            self._adjacency = dict(adj)
        return self._adjacency

    def designation_for(self, sclass: StrategyClass):
        """Return the designation data required by a strategy class,
        raising if the graph's designation does not match."""
        if sclass.kind == "paths":
            if self.designation is None or self.designation[0] != "od":
                raise ConfigurationError("paths class requires an od designation")
            return self.designation[1], self.designation[2]
        if sclass.kind == "steiner":
            if self.designation is None or self.designation[0] != "terminals":
                raise ConfigurationError("steiner class requires a terminal set")
            return tuple(self.designation[1])
        return None


def bfs_edge_order(graph: Graph) -> tuple[int, ...]:
    """Deterministic variable order for ZDD construction.

    Runs a breadth-first search from the od source (or the first
    terminal, or vertex 0) and sorts edges by the BFS layer of their
    nearer endpoint, breaking ties by edge id.  Keeps search frontiers
    small on sparse, near-planar networks.
    """
    if graph.designation and graph.designation[0] == "od":
        start = graph.designation[1]
    elif graph.designation and graph.designation[0] == "terminals":
        start = graph.designation[1][0]
    else:
        start = 0
    layer = {start: 0}
    queue = collections.deque([start])
    adj = graph.adjacency()
    while queue:
        u = queue.popleft()
        for _, w in adj.get(u, ()):
            if w not in layer:
                layer[w] = layer[u] + 1
                queue.append(w)
    unreached = graph.vertex_count  # sorts after every reachable layer
    keys = []
    for eid, (u, v) in enumerate(graph.edges, start=1):
        lu = layer.get(u, unreached)
        lv = layer.get(v, unreached)
        keys.append((min(lu, lv), eid))
    keys.sort()
    return tuple(eid for _, eid in keys)


def load_graph(path) -> Graph:
    """Parse the line-oriented graph format.

    Header ``graph <vertex_count> <edge_count>``, one
    ``edge <id> <u> <v> <length>`` line per edge, then an optional
    ``od <s> <t>`` or ``terminals <v1> <v2> ...`` line.
    """
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())


def parse_graph(text: str) -> Graph:
    vertex_count = None
    edge_count = None
    edges = {}
    lengths = {}
    designation = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        try:
            if tag == "graph":
                if vertex_count is not None:
                    raise GraphFormatError("duplicate graph header", line_no)
                vertex_count, edge_count = int(parts[1]), int(parts[2])
            elif tag == "edge":
                eid = int(parts[1])
                u, v = int(parts[2]), int(parts[3])
                length = float(parts[4])
                if eid in edges:
                    raise GraphFormatError(f"duplicate edge id {eid}", line_no)
                edges[eid] = (u, v)
                lengths[eid] = length
            elif tag == "od":
                designation = ("od", int(parts[1]), int(parts[2]))
            elif tag == "terminals":
                designation = ("terminals", tuple(int(p) for p in parts[1:]))
            else:
                raise GraphFormatError(f"unknown record {tag!r}", line_no)
        except (IndexError, ValueError) as exc:
            raise GraphFormatError(f"malformed {tag!r} record: {exc}", line_no) from exc
    if vertex_count is None:
        raise GraphFormatError("missing graph header")
    if len(edges) != edge_count:
        raise GraphFormatError(
            f"header announces {edge_count} edges, found {len(edges)}")
    if sorted(edges) != list(range(1, len(edges) + 1)):
        raise GraphFormatError("edge ids must be exactly 1..n")
    ordered = [edges[i] for i in range(1, len(edges) + 1)]
    lens = [lengths[i] for i in range(1, len(edges) + 1)]
    try:
        return Graph(vertex_count, ordered, np.array(lens), designation)
    except ConfigurationError as exc:
        raise GraphFormatError(str(exc)) from exc


def write_graph(graph: Graph, path) -> None:
    lines = [f"graph {graph.vertex_count} {graph.edge_count}"]
    for eid, (u, v) in enumerate(graph.edges, start=1):
        lines.append(f"edge {eid} {u} {v} {float(graph.lengths[eid - 1])!r}")
    if graph.designation:
        if graph.designation[0] == "od":
            lines.append(f"od {graph.designation[1]} {graph.designation[2]}")
        else:
            lines.append("terminals " + " ".join(str(v) for v in graph.designation[1]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
