"""Finite multigraphs and the combinatorial primitives the other modules use.

Vertices are opaque hashable ids; edges are an ordered list of unordered
endpoint pairs.  Parallel edges are allowed and each list entry is a distinct
edge identity, so every per-edge map in the package keys on the edge index,
never on the endpoint pair.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque

from .errors import GraphError


class MultiGraph:
    """Immutable finite multigraph without loops."""

    __slots__ = ("vertices", "edges", "_index", "_pairs", "_incident")

    def __init__(self, vertices, edges):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise GraphError("duplicate vertex id")
        self._index = {v: i for i, v in enumerate(self.vertices)}
        norm = []
        pairs = []
        for entry in edges:
            u, v = entry
            if u == v:
                raise GraphError(f"loop edge at {u!r}")
            if u not in self._index or v not in self._index:
                raise GraphError(f"edge endpoint not a declared vertex: {(u, v)!r}")
            norm.append((u, v))
            pairs.append((self._index[u], self._index[v]))
        self.edges = tuple(norm)
        self._pairs = tuple(pairs)
        incident = [[] for _ in self.vertices]
        for j, (a, b) in enumerate(pairs):
            incident[a].append(j)
            incident[b].append(j)
        self._incident = tuple(tuple(js) for js in incident)

    # -- basics ------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def index(self, v) -> int:
        try:
            return self._index[v]
        except KeyError:
            raise GraphError(f"unknown vertex: {v!r}") from None

    def edge_pair_indices(self, j: int) -> tuple[int, int]:
        return self._pairs[j]

    def incident_by_index(self, i: int) -> tuple[int, ...]:
        return self._incident[i]

    def incident_edges(self, v) -> tuple[int, ...]:
        return self._incident[self.index(v)]

    def degree(self, v) -> int:
        """Number of edge entries containing v, parallel edges counted separately."""
        return len(self._incident[self.index(v)])

    def other_endpoint_index(self, j: int, i: int) -> int:
        a, b = self._pairs[j]
        return b if a == i else a

    # -- distances ---------------------------------------------------------

    def hop_distances_from(self, sources) -> list[int]:
        """BFS hop counts from a set of vertex ids; -1 marks unreachable."""
        dist = [-1] * self.n_vertices
        queue = deque()
        for v in sources:
            i = self.index(v)
            if dist[i] < 0:
                dist[i] = 0
                queue.append(i)
        while queue:
            i = queue.popleft()
            for j in self._incident[i]:
                k = self.other_endpoint_index(j, i)
                if dist[k] < 0:
                    dist[k] = dist[i] + 1
                    queue.append(k)
        return dist

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        dist = self.hop_distances_from([self.vertices[0]])
        return all(d >= 0 for d in dist)

    def graph_distance(self, A, B) -> int:
        """Shortest-path edge count between the vertex sets A and B."""
        A, B = list(A), list(B)
        if not A or not B:
            raise GraphError("graph_distance requires nonempty vertex sets")
        dist = self.hop_distances_from(A)
        best = None
        for v in B:
            d = dist[self.index(v)]
            if d >= 0 and (best is None or d < best):
                best = d
        if best is None:
            raise GraphError("disconnected")
        return best

    # -- predicates ----------------------------------------------------------

    def is_independent(self, A) -> bool:
        """True iff no edge joins two members of A."""
        idx = {self.index(v) for v in A}
        return not any(a in idx and b in idx for a, b in self._pairs)

    # -- automorphisms -------------------------------------------------------

    def _adjacency_multiplicity(self):
        mult = [dict() for _ in self.vertices]
        for a, b in self._pairs:
            mult[a][b] = mult[a].get(b, 0) + 1
            mult[b][a] = mult[b].get(a, 0) + 1
        return mult

    def automorphisms(self, max_vertices: int = 64) -> list[dict]:
        """All vertex bijections preserving edge multiplicities.

        Plain backtracking with degree pruning; intended for the small
        generator graphs this package works with.
        """
        n = self.n_vertices
        if n > max_vertices:
            raise GraphError("too large for exhaustive automorphism search")
        mult = self._adjacency_multiplicity()
        degs = [len(inc) for inc in self._incident]
        # Assign high-degree vertices first so contradictions surface early.
        order = sorted(range(n), key=lambda i: (-degs[i], i))
        image = [-1] * n
        used = [False] * n
        found: list[dict] = []

        def extend(pos: int) -> None:
            if pos == n:
                found.append({self.vertices[i]: self.vertices[image[i]] for i in range(n)})
                return
            i = order[pos]
            for cand in range(n):
                if used[cand] or degs[cand] != degs[i]:
                    continue
                ok = True
                for prev_pos in range(pos):
                    k = order[prev_pos]
                    if mult[i].get(k, 0) != mult[cand].get(image[k], 0):
                        ok = False
                        break
                if not ok:
                    continue
                image[i] = cand
                used[cand] = True
                extend(pos + 1)
                used[cand] = False
                image[i] = -1

        extend(0)
        found.sort(key=lambda m: tuple(self._index[m[v]] for v in self.vertices))
        return found

    # -- node-weighted shortest path ------------------------------------------

    def node_weighted_shortest_path(self, weights, s, t) -> float:
        """Minimum over s-t paths of the sum of the path vertices' weights.

        Both endpoint weights are included once each; for s == t the value is
        weights[s].  All weights must be positive.
        """
        si, ti = self.index(s), self.index(t)
        w = [None] * self.n_vertices
        for v, val in weights.items():
            if val <= 0:
                raise GraphError(f"nonpositive weight at {v!r}")
            w[self.index(v)] = float(val)
        if any(x is None for x in w):
            raise GraphError("weights must cover every vertex")
        dist = [None] * self.n_vertices
        heap = [(w[si], si)]
        while heap:
            d, i = heapq.heappop(heap)
            if dist[i] is not None:
                continue
            dist[i] = d
            if i == ti:
                return d
            for j in self._incident[i]:
                k = self.other_endpoint_index(j, i)
                if dist[k] is None:
                    heapq.heappush(heap, (d + w[k], k))
        raise GraphError("disconnected")

    # -- misc -----------------------------------------------------------------

    def edge_label(self, j: int) -> str:
        u, v = self.edges[j]
        return f"{u}-{v}#{j}"

    def __repr__(self):
        return f"MultiGraph({self.n_vertices} vertices, {self.n_edges} edges)"


def complete_graph(ids) -> MultiGraph:
    ids = list(ids)
    return MultiGraph(ids, [(u, v) for u, v in itertools.combinations(ids, 2)])
