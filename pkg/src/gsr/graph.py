"""Undirected simple graphs, the graph families used for measurement design,
and the structural queries (induced connectivity, BFS trees, radius).

Nodes are the integers ``0..n-1``. Graphs are immutable once built.
"""

from __future__ import annotations

import heapq
from collections import deque
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


class GraphError(ValueError):
    """Raised for malformed graphs or invalid generator parameters."""


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


class Graph:
    """Immutable undirected simple graph on nodes ``0..n-1``."""

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        if n < 0:
            raise GraphError(f"node count must be non-negative, got {n}")
        seen: set[tuple[int, int]] = set()
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            e = _edge(u, v)
            if e in seen:
                raise GraphError(f"duplicate edge {e}")
            seen.add(e)
            adj[u].append(v)
            adj[v].append(u)
        self.n = n
        self.edges = frozenset(seen)
        self._adj = tuple(tuple(sorted(a)) for a in adj)

    def neighbors(self, v: int) -> tuple[int, ...]:
        """Neighbors of ``v`` in ascending id order."""
        return self._adj[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return _edge(u, v) in self.edges

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def adjacency(self) -> dict[int, set[int]]:
        """A fresh mutable adjacency dict (used by the reduction algorithm)."""
        return {v: set(a) for v, a in enumerate(self._adj)}

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(self.n, list(self.edges) + list(extra))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self.n == other.n and self.edges == other.edges

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.num_edges})"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def gen_line(n: int) -> Graph:
    if n < 2:
        raise GraphError("line needs n >= 2")
    return Graph(n, ((i, i + 1) for i in range(n - 1)))


def gen_ring(n: int) -> Graph:
    if n < 3:
        # n = 2 would duplicate the single edge
        raise GraphError("ring needs n >= 3")
    return Graph(n, ((i, (i + 1) % n) for i in range(n)))


def gen_complete(n: int) -> Graph:
    if n < 1:
        raise GraphError("complete graph needs n >= 1")
    return Graph(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def gen_star(leaves: int) -> Graph:
    """Node 0 is the center."""
    if leaves < 1:
        raise GraphError("star needs at least one leaf")
    return Graph(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def gen_g4(n: int) -> Graph:
    """Ring where every node also links to the nodes two steps away."""
    return gen_g4_minus(n, ())


def gen_g4_minus(n: int, deleted_chords: Iterable[int]) -> Graph:
    """``gen_g4(n)`` with the chord ``(i-1, i+1) mod n`` removed for each listed ``i``."""
    if n < 5:
        raise GraphError("G4 needs n >= 5")
    deleted = list(deleted_chords)
    if len(set(deleted)) != len(deleted):
        raise GraphError(f"duplicate chord ids in {deleted}")
    for i in deleted:
        if not 0 <= i < n:
            raise GraphError(f"chord id {i} out of range")
    removed = {_edge((i - 1) % n, (i + 1) % n) for i in deleted}
    edges = {_edge(i, (i + 1) % n) for i in range(n)}
    edges |= {_edge(i, (i + 2) % n) for i in range(n)} - removed
    return Graph(n, edges)


def grid_node(side: int, row: int, col: int) -> int:
    return row * side + col


def gen_grid(side: int) -> Graph:
    """``side x side`` grid; node ``r*side + c`` sits at row ``r``, column ``c``."""
    if side < 2:
        raise GraphError("grid needs side >= 2")
    edges = []
    for r in range(side):
        for c in range(side):
            v = grid_node(side, r, c)
            if c + 1 < side:
                edges.append((v, v + 1))
            if r + 1 < side:
                edges.append((v, v + side))
    return Graph(side * side, edges)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _prufer_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    if n == 1:
        return []
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2).tolist()
    degree = [1] * n
    for v in seq:
        degree[v] += 1
    heap = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(heap)
    edges = []
    for v in seq:
        leaf = heapq.heappop(heap)
        edges.append((leaf, v))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(heap, v)
    edges.append((heapq.heappop(heap), heapq.heappop(heap)))
    return edges


def _recursive_tree_edges(n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    # attach each new node to a uniformly chosen earlier one, then relabel
    perm = rng.permutation(n)
    edges = []
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((int(perm[i]), int(perm[j])))
    return edges


TREE_METHODS = ("prufer", "recursive")


def gen_tree_random(n: int, seed=0, method: str = "prufer") -> Graph:
    """Random tree on ``n`` nodes.

    ``method="prufer"`` draws uniformly over labeled trees (random Prüfer
    sequence). ``method="recursive"`` grows a random recursive tree, where
    node ``i`` attaches to a uniform earlier node; its depth is logarithmic.
    """
    if n < 1:
        raise GraphError("tree needs n >= 1")
    rng = _rng(seed)
    if method == "prufer":
        edges = _prufer_tree_edges(n, rng)
    elif method == "recursive":
        edges = _recursive_tree_edges(n, rng)
    else:
        raise GraphError(f"unknown tree method {method!r}; choose from {TREE_METHODS}")
    return Graph(n, edges)


def gen_er(n: int, p: float, seed=0) -> Graph:
    """Erdős–Rényi G(n, p)."""
    if n < 1:
        raise GraphError("ER graph needs n >= 1")
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"p must lie in [0, 1], got {p}")
    rng = _rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p
    return Graph(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def gen_ba(n: int, m0: int, m: int, seed=0, tree_method: str = "prufer") -> Graph:
    """Barabási–Albert graph grown from a random tree on ``m0`` nodes.

    Each new node links to ``m`` distinct existing nodes chosen with
    probability proportional to their current degree.
    """
    if m0 < 1 or m < 1:
        raise GraphError("BA needs m0 >= 1 and m >= 1")
    if m > m0:
        raise GraphError(f"m={m} exceeds the seed tree size m0={m0}")
    if n < m0:
        raise GraphError(f"n={n} smaller than seed tree size m0={m0}")
    rng = _rng(seed)
    edges = gen_tree_random(m0, rng, method=tree_method).sorted_edges()
    # one entry per edge endpoint, so a uniform pick is degree-proportional
    ends: list[int] = [v for e in edges for v in e]
    for v in range(m0, n):
        targets: set[int] = set()
        while len(targets) < m:
            if ends:
                targets.add(ends[int(rng.integers(0, len(ends)))])
            else:
                targets.add(int(rng.integers(0, v)))
        for t in sorted(targets):
            edges.append((t, v))
            ends.extend((t, v))
    return Graph(n, edges)


def add_random_edges(g: Graph, count: int, seed=0) -> Graph:
    """Add ``count`` uniformly chosen links that are not already present."""
    max_edges = g.n * (g.n - 1) // 2
    if g.num_edges + count > max_edges:
        raise GraphError("not enough free node pairs")
    rng = _rng(seed)
    new: set[tuple[int, int]] = set()
    while len(new) < count:
        u, v = rng.integers(0, g.n, size=2).tolist()
        if u == v:
            continue
        e = _edge(u, v)
        if e in g.edges or e in new:
            continue
        new.add(e)
    return g.with_edges(sorted(new))


# ---------------------------------------------------------------------------
# structural queries
# ---------------------------------------------------------------------------

def _adj_of(g) -> Mapping[int, Iterable[int]]:
    return g._adj if isinstance(g, Graph) else g


def is_connected(g, nodes: Iterable[int]) -> bool:
    """True iff ``nodes`` induce a connected subgraph of ``g``.

    ``g`` may be a :class:`Graph` or a mapping ``node -> neighbors``.
    """
    s = set(nodes)
    if not s:
        raise GraphError("connectivity of the empty node set is undefined")
    adj = _adj_of(g)
    start = next(iter(s))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w in s and w not in seen:
                seen.add(w)
                stack.append(w)
    return len(seen) == len(s)


def is_hub(g, hub: Iterable[int], target: Iterable[int]) -> bool:
    """``hub`` induces a connected subgraph and every target node has a neighbor in it."""
    hub = set(hub)
    if not hub or not is_connected(g, hub):
        return False
    adj = _adj_of(g)
    return all(any(w in hub for w in adj[u]) for u in target)


def components(g: Graph) -> list[list[int]]:
    """Connected components, each sorted, ordered by smallest member."""
    seen = [False] * g.n
    out = []
    for s in range(g.n):
        if seen[s]:
            continue
        seen[s] = True
        comp = [s]
        queue = deque([s])
        while queue:
            v = queue.popleft()
            for w in g.neighbors(v):
                if not seen[w]:
                    seen[w] = True
                    comp.append(w)
                    queue.append(w)
        out.append(sorted(comp))
    return out


def induced_subgraph(g: Graph, nodes: Sequence[int]) -> tuple[Graph, list[int]]:
    """Induced subgraph relabeled to ``0..len(nodes)-1``.

    Returns the subgraph and the list mapping new ids back to ``g``'s ids.
    """
    order = sorted(set(nodes))
    index = {v: i for i, v in enumerate(order)}
    edges = [(index[u], index[v]) for u, v in g.edges if u in index and v in index]
    return Graph(len(order), edges), order


def bfs_distances(g, root: int) -> dict[int, int]:
    adj = _adj_of(g)
    dist = {root: 0}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def bfs_spanning_tree(g, root: int) -> dict[int, int | None]:
    """BFS tree as a parent map (``root -> None``); neighbors visited in ascending id order."""
    adj = _adj_of(g)
    parent: dict[int, int | None] = {root: None}
    queue = deque([root])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in parent:
                parent[w] = v
                queue.append(w)
    n = len(adj) if isinstance(g, Graph) else len(g)
    if len(parent) != n:
        raise GraphError("graph is disconnected; no spanning tree")
    return parent


def _csr(nodes: Sequence[int], adj: Mapping[int, Iterable[int]]) -> csr_matrix:
    index = {v: i for i, v in enumerate(nodes)}
    rows, cols = [], []
    for v in nodes:
        i = index[v]
        for w in adj[v]:
            rows.append(i)
            cols.append(index[w])
    size = len(nodes)
    return csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(size, size))


def _nodes_adj(g) -> tuple[list[int], Mapping[int, Iterable[int]]]:
    adj = _adj_of(g)
    nodes = list(range(len(adj))) if isinstance(g, Graph) else sorted(adj)
    if not nodes:
        raise GraphError("empty graph")
    return nodes, adj


def eccentricities(g) -> dict[int, int]:
    """Eccentricity of every node (all-pairs BFS); raises on disconnected input."""
    nodes, adj = _nodes_adj(g)
    dist = shortest_path(_csr(nodes, adj), method="D", directed=False, unweighted=True)
    if np.isinf(dist).any():
        raise GraphError("graph is disconnected; eccentricity undefined")
    return dict(zip(nodes, dist.max(axis=1).astype(int).tolist()))


def radius_and_center(g, batch: int = 8) -> tuple[int, int]:
    """``(R, u)`` with ``u`` the smallest-id node of minimum eccentricity.

    Runs BFS only from nodes that could still beat the best radius found,
    pruning with ``max(d(a,v), ecc(a) - d(a,v)) <= ecc(v) <= ecc(a) + d(a,v)``.
    """
    nodes, adj = _nodes_adj(g)
    size = len(nodes)
    mat = _csr(nodes, adj)
    lower = np.zeros(size)
    upper = np.full(size, np.inf)
    exact = np.full(size, -1.0)
    best = np.inf
    while True:
        open_ = np.flatnonzero((exact < 0) & (lower <= best))
        if open_.size == 0:
            break
        # smallest lower bound first; ties by id
        pick = open_[np.argsort(lower[open_], kind="stable")[:batch]]
        dist = shortest_path(mat, method="D", directed=False, unweighted=True, indices=pick)
        if np.isinf(dist).any():
            raise GraphError("graph is disconnected; eccentricity undefined")
        for a, d in zip(pick, dist):
            ecc = d.max()
            exact[a] = ecc
            best = min(best, ecc)
            np.maximum(lower, np.maximum(d, ecc - d), out=lower)
            np.minimum(upper, ecc + d, out=upper)
        done = (exact < 0) & (lower == upper)
        exact[done] = lower[done]
        if done.any():
            best = min(best, lower[done].min())
    radius = int(best)
    center = nodes[int(np.flatnonzero(exact == best)[0])]
    return radius, center


def is_tree(g: Graph) -> bool:
    return g.n >= 1 and g.num_edges == g.n - 1 and is_connected(g, range(g.n))


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def dumps_graph(g: Graph) -> str:
    lines = [f"n {g.n}"] + [f"{u} {v}" for u, v in g.sorted_edges()]
    return "\n".join(lines) + "\n"


def loads_graph(text: str) -> Graph:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if n is None:
            if len(parts) != 2 or parts[0] != "n":
                raise GraphError(f"line {lineno}: expected 'n <count>' header")
            n = int(parts[1])
            continue
        if len(parts) != 2:
            raise GraphError(f"line {lineno}: expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    if n is None:
        raise GraphError("missing 'n <count>' header")
    return Graph(n, edges)


def save_graph(g: Graph, path) -> None:
    Path(path).write_text(dumps_graph(g))


def load_graph(path) -> Graph:
    return loads_graph(Path(path).read_text())
