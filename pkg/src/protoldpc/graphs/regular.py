"""Regular graphs with socket slots, and girth-preserving transformations.

A :class:`RegularGraph` stores an explicit edge list (parallel edges are
allowed, self-loops are not) and, per vertex, the ``degree`` edge ids
occupying its sockets.  For bipartite graphs an optional per-edge colour in
``1..degree`` gives a proper edge colouring, so both endpoints agree on the
colour of every edge.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, maximum_bipartite_matching


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class RegularGraph:
    """Regular (multi)graph with per-vertex socket order.

    Attributes
    ----------
    edges : (E, 2) int array
        Endpoints; for bipartite graphs column 0 is the left endpoint.
    sockets : (n, degree) int array
        ``sockets[v, s]`` is the edge id in socket ``s`` of ``v``.  When
        colours are present, socket ``s`` holds the edge of colour ``s + 1``.
    left : (n,) bool array or None
        Side indicator for bipartite graphs.
    colors : (E,) int array or None
    """

    edges: np.ndarray
    sockets: np.ndarray
    left: Optional[np.ndarray] = None
    colors: Optional[np.ndarray] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def vertex_count(self) -> int:
        return self.sockets.shape[0]

    @property
    def degree(self) -> int:
        return self.sockets.shape[1]

    @property
    def bipartite(self) -> bool:
        return self.left is not None

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> np.ndarray:
        """``(n, degree)`` neighbour in each socket."""
        ends = self.edges[self.sockets]  # (n, degree, 2)
        v = np.arange(self.vertex_count)[:, None]
        return np.where(ends[..., 0] == v, ends[..., 1], ends[..., 0])

    def left_vertices(self) -> np.ndarray:
        if self.left is None:
            raise GraphError("graph is not bipartite")
        return np.flatnonzero(self.left)

    def right_vertices(self) -> np.ndarray:
        if self.left is None:
            raise GraphError("graph is not bipartite")
        return np.flatnonzero(~self.left)

    def coloring_is_proper(self) -> bool:
        if self.colors is None:
            return False
        cols = self.colors[self.sockets]
        return bool(
            (cols.min() >= 1)
            and (cols.max() <= self.degree)
            and all(len(set(row)) == self.degree for row in cols.tolist())
        )

    def is_connected(self) -> bool:
        return connected_components(_csr(self.vertex_count, self.edges), directed=False)[0] == 1

    def component_count(self) -> int:
        return int(connected_components(_csr(self.vertex_count, self.edges), directed=False)[0])


def _csr(n: int, edges: np.ndarray) -> csr_matrix:
    data = np.ones(len(edges), dtype=np.int64)
    return csr_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n))


def graph_from_edges(
    n: int,
    edges,
    left: Optional[np.ndarray] = None,
    colors: Optional[np.ndarray] = None,
    name: str = "",
) -> RegularGraph:
    """Build a regular graph; sockets follow colour order, else edge order."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if (edges[:, 0] == edges[:, 1]).any():
        raise GraphError("self-loops are not supported")
    deg = np.bincount(edges.ravel(), minlength=n)
    if n == 0 or deg.min() != deg.max():
        raise GraphError("graph is not regular")
    d = int(deg[0])
    if left is not None:
        left = np.asarray(left, dtype=bool)
        if (left[edges[:, 0]] == left[edges[:, 1]]).any():
            raise GraphError("edge inside one side of the bipartition")
    ends = edges.ravel()
    eids = np.repeat(np.arange(len(edges)), 2)
    if colors is not None:
        colors = np.asarray(colors, dtype=np.int64)
        order = np.lexsort((colors[eids], ends))
    else:
        order = np.argsort(ends, kind="stable")
    sockets = eids[order].reshape(n, d)
    g = RegularGraph(edges, sockets, left, colors, name)
    if colors is not None and not g.coloring_is_proper():
        raise GraphError("edge colouring is not proper")
    return g


def cycle_graph(n: int) -> RegularGraph:
    edges = [(i, (i + 1) % n) for i in range(n)]
    left = None
    if n % 2 == 0:
        left = np.arange(n) % 2 == 0
        edges = [(a, b) if a % 2 == 0 else (b, a) for a, b in edges]
    return graph_from_edges(n, edges, left, name=f"C{n}")


def complete_bipartite(d: int) -> RegularGraph:
    edges = [(i, d + j) for i in range(d) for j in range(d)]
    left = np.arange(2 * d) < d
    return graph_from_edges(2 * d, edges, left, name=f"K{d},{d}")


# -- girth --------------------------------------------------------------------


def girth_of_edges(n: int, edges) -> float:
    """Length of the shortest cycle, or ``inf`` for a forest.

    Parallel edges form 2-cycles and self-loops 1-cycles.  Runs a BFS from
    every vertex that never walks back along the edge it arrived by, and cuts
    each search once it cannot beat the best cycle found so far.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        return math.inf
    if (edges[:, 0] == edges[:, 1]).any():
        return 1
    inc: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for e, (a, b) in enumerate(edges.tolist()):
        inc[a].append((b, e))
        inc[b].append((a, e))
    best = math.inf
    dist = [-1] * n
    via = [-1] * n
    for root in range(n):
        if not inc[root]:
            continue
        touched = [root]
        dist[root] = 0
        via[root] = -1
        queue = deque([root])
        while queue:
            u = queue.popleft()
            du = dist[u]
            if 2 * du + 1 >= best:
                break
            for w, e in inc[u]:
                if e == via[u]:
                    continue
                if dist[w] < 0:
                    dist[w] = du + 1
                    via[w] = e
                    touched.append(w)
                    queue.append(w)
                else:
                    cyc = du + dist[w] + 1
                    if cyc < best:
                        best = cyc
        for v in touched:
            dist[v] = -1
        if best <= 2:
            break
    return best


def girth(g) -> float:
    """Girth of a :class:`RegularGraph` or Tanner graph."""
    if isinstance(g, RegularGraph):
        return girth_of_edges(g.vertex_count, g.edges)
    n, edges = g.as_graph()
    return girth_of_edges(n, edges)


def bipartite_moore_bound(d: int, g: int) -> int:
    """Minimum vertices per side of a d-regular bipartite graph with girth >= g."""
    if g <= 4:
        return d
    k = (g - 1) // 2 if g % 2 else g // 2 - 1
    # tree of depth k around an edge (even g) or a vertex (odd g)
    if g % 2 == 0:
        total = 2 * sum((d - 1) ** i for i in range(k + 1))
    else:
        total = 1 + d * sum((d - 1) ** i for i in range(k))
    return (total + 1) // 2


# -- transformations ----------------------------------------------------------


def double_cover(g: RegularGraph) -> RegularGraph:
    """Bipartite double cover: left copy ``x``, right copy ``f(y)`` per edge.

    Each edge ``{x, y}`` yields ``(x, f(y))`` and ``(y, f(x))``.  Every new
    edge is coloured by the socket it used at its left endpoint; the colouring
    is kept when it comes out proper (it does for Cayley graphs with
    generator-ordered sockets) and dropped otherwise.
    """
    n, d = g.vertex_count, g.degree
    adj = g.adjacency
    src = np.repeat(np.arange(n), d)
    dst = adj.ravel() + n
    cols = np.tile(np.arange(1, d + 1), n)
    edges = np.stack([src, dst], axis=1)
    left = np.arange(2 * n) < n
    name = f"dc({g.name})" if g.name else "double_cover"
    try:
        return graph_from_edges(2 * n, edges, left, cols, name)
    except GraphError:
        return graph_from_edges(2 * n, edges, left, None, name)


def split_to_degree(g: RegularGraph, d: int) -> RegularGraph:
    """Split each vertex into ``degree / d`` vertices of degree ``d``.

    Sockets are dealt out in blocks of ``d`` in socket order (which is colour
    order on coloured graphs).  Vertex ``v`` becomes ``v*k .. v*k + k - 1``.
    A colour ``s`` becomes ``(s - 1) % d + 1`` in block ``(s - 1) // d``,
    which keeps the colouring proper.
    """
    if d < 1 or g.degree % d:
        raise GraphError(f"d={d} does not divide degree {g.degree}")
    k = g.degree // d
    if k == 1:
        return g
    n = g.vertex_count
    ends = np.empty_like(g.edges)
    # socket position of every (edge, endpoint)
    pos = np.empty((g.edge_count, 2), dtype=np.int64)
    owner = np.repeat(np.arange(n), g.degree)
    eids = g.sockets.ravel()
    side = (g.edges[eids, 0] != owner).astype(np.int64)
    pos[eids, side] = np.tile(np.arange(g.degree), n)
    ends[:, 0] = g.edges[:, 0] * k + pos[:, 0] // d
    ends[:, 1] = g.edges[:, 1] * k + pos[:, 1] // d
    left = None if g.left is None else np.repeat(g.left, k)
    colors = None if g.colors is None else (g.colors - 1) % d + 1
    return graph_from_edges(n * k, ends, left, colors, f"split{d}({g.name})")


def edge_coloring(g: RegularGraph) -> RegularGraph:
    """Proper ``degree``-edge-colouring of a regular bipartite graph.

    An existing proper colouring is returned unchanged.  Otherwise colour
    classes are peeled off as perfect matchings; a regular bipartite graph
    always has one, and what remains is again regular.
    """
    if not g.bipartite:
        raise GraphError("edge colouring needs a bipartite graph")
    if g.colors is not None and g.coloring_is_proper():
        return g
    L, R = g.left_vertices(), g.right_vertices()
    if len(L) != len(R):
        raise GraphError("regular bipartite graph must have equal sides")
    li = np.full(g.vertex_count, -1)
    li[L] = np.arange(len(L))
    ri = np.full(g.vertex_count, -1)
    ri[R] = np.arange(len(R))
    a = li[g.edges[:, 0]]
    b = ri[g.edges[:, 1]]
    # pool of unused edge ids per (left, right) pair
    pool: dict[tuple[int, int], list[int]] = {}
    for e, key in enumerate(zip(a.tolist(), b.tolist())):
        pool.setdefault(key, []).append(e)
    colors = np.zeros(g.edge_count, dtype=np.int64)
    for color in range(1, g.degree + 1):
        keys = list(pool)
        rows = np.array([k[0] for k in keys])
        cols = np.array([k[1] for k in keys])
        m = csr_matrix((np.ones(len(keys)), (rows, cols)), shape=(len(L), len(R)))
        match = maximum_bipartite_matching(m, perm_type="column")
        if (match < 0).any():
            raise GraphError("no perfect matching; graph is not regular bipartite")
        for u, w in enumerate(match.tolist()):
            ids = pool[(u, w)]
            colors[ids.pop()] = color
            if not ids:
                del pool[(u, w)]
    return graph_from_edges(g.vertex_count, g.edges, g.left, colors, g.name)


def random_regular_bipartite(
    d: int,
    half_size: int,
    girth_floor: int = 4,
    seed: int = 0,
    attempts: int = 100,
) -> RegularGraph:
    """d-regular bipartite graph as a union of ``d`` random permutations.

    Permutation ``k`` supplies colour ``k + 1``.  Each permutation is built one
    left vertex at a time: the image is drawn uniformly from the unused right
    vertices lying at distance at least ``girth_floor - 1`` from it, so no
    cycle shorter than the floor is ever closed.  A permutation that runs out
    of candidates restarts the whole graph.  ``attempts`` caps the total
    number of permutation draws.
    """
    if d < 1 or half_size < 1:
        raise GraphError("need d >= 1 and half_size >= 1")
    if girth_floor > 2 and half_size < bipartite_moore_bound(d, girth_floor):
        raise GraphError(
            f"girth {girth_floor} impossible for d={d} with {half_size} vertices per side"
        )
    rng = np.random.default_rng(seed)
    n = 2 * half_size
    left = np.arange(n) < half_size
    reach = max(girth_floor - 2, 0)
    draws = 0
    while draws < attempts:
        adj: list[list[int]] = [[] for _ in range(n)]
        perms: list[np.ndarray] = []
        while len(perms) < d and draws < attempts:
            draws += 1
            p = _draw_permutation(adj, half_size, reach, rng)
            if p is None:
                break
            perms.append(p)
            for u, v in enumerate(p):
                adj[u].append(int(v) + half_size)
                adj[int(v) + half_size].append(u)
        if len(perms) == d:
            edges = _perm_edges(perms, half_size)
            colors = np.repeat(np.arange(1, d + 1), half_size)
            return graph_from_edges(
                n, edges, left, colors, f"rand(d={d},n={half_size},seed={seed})"
            )
    raise GraphError(
        f"girth floor {girth_floor} not reached for d={d}, half_size={half_size} "
        f"within the attempt budget"
    )


def _draw_permutation(adj, half, reach, rng):
    """One girth-respecting permutation on top of ``adj``, or None.

    Left vertices are matched in random order.  When every allowed image is
    taken, a taken one is stolen and its owner goes back in the queue.
    """
    n = 2 * half
    adj = [set(a) for a in adj]
    owner = np.full(half, -1, dtype=np.int64)
    p = np.full(half, -1, dtype=np.int64)
    queue = [int(u) for u in rng.permutation(half)]
    budget = 50 * half + 100
    while queue:
        budget -= 1
        if budget < 0:
            return None
        u = queue.pop()
        blocked = np.zeros(n, dtype=bool)
        if reach > 0:
            # vertices within ``reach`` hops would close a cycle below the floor
            blocked[u] = True
            frontier = [u]
            for _ in range(reach):
                nxt = []
                for a in frontier:
                    for c in adj[a]:
                        if not blocked[c]:
                            blocked[c] = True
                            nxt.append(c)
                frontier = nxt
                if not frontier:
                    break
        allowed = ~blocked[half:]
        ok = np.flatnonzero(allowed & (owner < 0))
        if ok.size == 0:
            ok = np.flatnonzero(allowed)
            if ok.size == 0:
                return None
        v = int(ok[rng.integers(ok.size)])
        prev = int(owner[v])
        if prev >= 0:
            adj[prev].discard(v + half)
            adj[v + half].discard(prev)
            p[prev] = -1
            queue.append(prev)
        owner[v] = u
        p[u] = v
        adj[u].add(v + half)
        adj[v + half].add(u)
    return p


def _perm_edges(perms: list[np.ndarray], half: int) -> np.ndarray:
    src = np.tile(np.arange(half), len(perms))
    dst = np.concatenate(perms) + half
    return np.stack([src, dst], axis=1)


# -- edge-list text -------------------------------------------------------------


def graph_to_text(g: RegularGraph) -> str:
    """Header ``vertices degree bipartite{0|1}``, then one ``u v [color]`` per edge."""
    lines = [f"{g.vertex_count} {g.degree} {int(g.bipartite)}"]
    if g.bipartite:
        lines.append("left " + " ".join(str(v) for v in g.left_vertices()))
    for e, (a, b) in enumerate(g.edges.tolist()):
        if g.colors is not None:
            lines.append(f"{a} {b} {int(g.colors[e])}")
        else:
            lines.append(f"{a} {b}")
    return "\n".join(lines) + "\n"


def graph_from_text(text: str) -> RegularGraph:
    lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or len(lines[0]) != 3:
        raise GraphError("missing '<vertices> <degree> <bipartite>' header")
    n, d, bip = (int(t) for t in lines[0])
    body = lines[1:]
    left = None
    if bip:
        if not body or body[0][0] != "left":
            raise GraphError("bipartite graph needs a 'left' line")
        left = np.zeros(n, dtype=bool)
        left[[int(t) for t in body[0][1:]]] = True
        body = body[1:]
    edges = np.array([[int(r[0]), int(r[1])] for r in body], dtype=np.int64)
    colors = None
    if body and all(len(r) == 3 for r in body):
        colors = np.array([int(r[2]) for r in body], dtype=np.int64)
    g = graph_from_edges(n, edges, left, colors)
    if g.degree != d:
        raise GraphError(f"header degree {d} does not match edges ({g.degree})")
    return g


def write_graph(g: RegularGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(graph_to_text(g))


def read_graph(path: Union[str, Path]) -> RegularGraph:
    return graph_from_text(Path(path).read_text())
