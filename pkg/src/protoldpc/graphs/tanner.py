"""Node splitting of coloured bipartite graphs into protograph liftings.

Socket colours ``1..d`` are grouped by two partitions: ``P`` on the
variable (left) side and ``Q`` on the check (right) side.  Splitting every
left vertex by ``P`` and every right vertex by ``Q`` turns a d-regular
bipartite graph into a Tanner graph that lifts the protograph with
``B[j, i] = |P_i & Q_j|``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix

from ..protograph import BaseMatrix, MatrixLike, Protograph, as_protograph
from .regular import GraphError, RegularGraph


@dataclass(frozen=True)
class SocketPartition:
    """Partitions ``P`` (variable side) and ``Q`` (check side) of colours 1..d."""

    d: int
    P: tuple[frozenset, ...]
    Q: tuple[frozenset, ...]

    def __post_init__(self):
        P = tuple(frozenset(int(s) for s in part) for part in self.P)
        Q = tuple(frozenset(int(s) for s in part) for part in self.Q)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)
        full = set(range(1, self.d + 1))
        for name, parts in (("P", P), ("Q", Q)):
            if any(not part for part in parts):
                raise ValueError(f"{name} contains an empty block")
            if sum(len(part) for part in parts) != self.d or set().union(*parts) != full:
                raise ValueError(f"{name} is not a partition of 1..{self.d}")

    @property
    def l(self) -> int:
        return len(self.P)

    @property
    def r(self) -> int:
        return len(self.Q)

    def variable_of(self) -> np.ndarray:
        """Index ``i`` of the block ``P_i`` holding each colour (position = colour - 1)."""
        out = np.empty(self.d, dtype=np.int64)
        for i, part in enumerate(self.P):
            out[[s - 1 for s in part]] = i
        return out

    def check_of(self) -> np.ndarray:
        out = np.empty(self.d, dtype=np.int64)
        for j, part in enumerate(self.Q):
            out[[s - 1 for s in part]] = j
        return out

    def to_dict(self) -> dict:
        return {"d": self.d, "P": [sorted(p) for p in self.P], "Q": [sorted(q) for q in self.Q]}


def protograph_to_partitions(p: Union[Protograph, MatrixLike]) -> SocketPartition:
    """Colour protograph edge ``e`` with ``e + 1`` and group colours by endpoint."""
    p = as_protograph(p)
    P = [set() for _ in range(p.num_variables)]
    Q = [set() for _ in range(p.num_checks)]
    for e, c, v in p.edges:
        P[v].add(e + 1)
        Q[c].add(e + 1)
    if any(not part for part in P) or any(not part for part in Q):
        raise ValueError("every variable and check needs at least one edge")
    return SocketPartition(p.num_edges, tuple(P), tuple(Q))


def partitions_to_matrix(sp: SocketPartition) -> BaseMatrix:
    """``B[j, i] = |P_i & Q_j|``."""
    B = np.array([[len(Pi & Qj) for Pi in sp.P] for Qj in sp.Q], dtype=np.int64)
    return BaseMatrix(B)


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite variable/check graph, optionally tagged with its protograph.

    ``edges[k] = (variable, check, edge_type)``; the type is the 0-based
    protograph edge (socket colour minus one), or -1 when unknown.
    ``variable_group`` / ``check_group`` give the protograph node each
    Tanner node copies.
    """

    variable_count: int
    check_count: int
    edges: np.ndarray
    variable_group: Optional[np.ndarray] = None
    check_group: Optional[np.ndarray] = None
    copies: int = 0
    girth_lower_bound: Optional[float] = None
    lineage: dict = field(default_factory=dict, compare=False)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def variable_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 0], minlength=self.variable_count)

    def check_degrees(self) -> np.ndarray:
        return np.bincount(self.edges[:, 1], minlength=self.check_count)

    def as_graph(self) -> tuple[int, np.ndarray]:
        """Vertex count and edge list with checks numbered after variables."""
        e = np.stack([self.edges[:, 0], self.edges[:, 1] + self.variable_count], axis=1)
        return self.variable_count + self.check_count, e

    def parity_check(self) -> csr_matrix:
        """Sparse check-by-variable incidence (entries count parallel edges)."""
        data = np.ones(self.edge_count, dtype=np.int64)
        return csr_matrix(
            (data, (self.edges[:, 1], self.edges[:, 0])),
            shape=(self.check_count, self.variable_count),
        )

    def with_edges(self, edges: np.ndarray) -> "TannerGraph":
        return TannerGraph(
            self.variable_count,
            self.check_count,
            np.asarray(edges, dtype=np.int64),
            self.variable_group,
            self.check_group,
            self.copies,
            self.girth_lower_bound,
            dict(self.lineage),
        )


def node_split(g: RegularGraph, sp: SocketPartition) -> TannerGraph:
    """Split left vertices by ``P`` and right vertices by ``Q``.

    Left vertex number ``k`` (in vertex order) becomes variables
    ``i * half + k``, one per block ``P_i``; checks are numbered the same
    way.  Edge ``(v, c)`` of colour ``s`` joins the sub-vertices owning ``s``.
    """
    if not g.bipartite:
        raise GraphError("node splitting needs a bipartite graph")
    if g.colors is None or not g.coloring_is_proper():
        raise GraphError("node splitting needs a proper socket colouring")
    if sp.d != g.degree:
        raise GraphError(f"partition covers {sp.d} colours, graph degree is {g.degree}")
    L, R = g.left_vertices(), g.right_vertices()
    if len(L) != len(R):
        raise GraphError("unequal bipartition")
    half = len(L)
    rank = np.empty(g.vertex_count, dtype=np.int64)
    rank[L] = np.arange(half)
    rank[R] = np.arange(half)
    var_of, chk_of = sp.variable_of(), sp.check_of()
    s = g.colors - 1
    edges = np.stack(
        [
            var_of[s] * half + rank[g.edges[:, 0]],
            chk_of[s] * half + rank[g.edges[:, 1]],
            s,
        ],
        axis=1,
    )
    order = np.lexsort((edges[:, 1], edges[:, 0]))
    return TannerGraph(
        variable_count=sp.l * half,
        check_count=sp.r * half,
        edges=edges[order],
        variable_group=np.repeat(np.arange(sp.l), half),
        check_group=np.repeat(np.arange(sp.r), half),
        copies=half,
        # splitting never shortens a cycle, so the source girth carries over
        girth_lower_bound=g.meta.get("girth"),
        lineage={"source": g.name, **sp.to_dict()},
    )


@dataclass(frozen=True)
class LiftingCheck:
    passed: bool
    problems: tuple[str, ...] = ()

    def __bool__(self):
        return self.passed


def verify_lifting(t: TannerGraph, b: MatrixLike) -> LiftingCheck:
    """Is ``t`` a copy-and-permute lifting of base matrix ``b``?

    Every node group must hold the same number ``T`` of copies; each edge
    type must be a perfect matching between one variable group ``i`` and
    one check group ``j``; and exactly ``B[j, i]`` types must join them.
    """
    B = BaseMatrix.coerce(b).entries
    problems: list[str] = []
    if t.variable_group is None or t.check_group is None:
        return LiftingCheck(False, ("node groups unknown",))
    if (t.edges[:, 2] < 0).any():
        return LiftingCheck(False, ("edge types unknown",))
    vcounts = np.bincount(t.variable_group, minlength=B.shape[1])
    ccounts = np.bincount(t.check_group, minlength=B.shape[0])
    if len(vcounts) != B.shape[1] or len(ccounts) != B.shape[0]:
        return LiftingCheck(False, ("group count does not match base matrix shape",))
    sizes = set(vcounts.tolist()) | set(ccounts.tolist())
    if len(sizes) != 1:
        return LiftingCheck(False, (f"unequal group sizes {sorted(sizes)}",))
    T = sizes.pop()
    found = np.zeros_like(B)
    order = np.argsort(t.edges[:, 2], kind="stable")
    types, starts = np.unique(t.edges[order, 2], return_index=True)
    for typ, chunk in zip(types, np.split(order, starts[1:])):
        ev = t.edges[chunk, 0]
        ec = t.edges[chunk, 1]
        gv = np.unique(t.variable_group[ev])
        gc = np.unique(t.check_group[ec])
        if len(gv) != 1 or len(gc) != 1:
            problems.append(f"type {typ} spans several node groups")
            continue
        if len(chunk) != T or len(np.unique(ev)) != T or len(np.unique(ec)) != T:
            problems.append(f"type {typ} is not a perfect matching")
            continue
        found[gc[0], gv[0]] += 1
    if not problems and not np.array_equal(found, B):
        problems.append("edge-type counts differ from the base matrix")
    if t.edge_count != int(B.sum()) * T:
        problems.append(f"{t.edge_count} edges, expected {int(B.sum()) * T}")
    return LiftingCheck(not problems, tuple(problems))


# -- alist ---------------------------------------------------------------------


def to_alist(t: TannerGraph) -> str:
    """MacKay alist text; neighbour lists ascending, 1-indexed, zero-padded."""
    n, m = t.variable_count, t.check_count
    vdeg, cdeg = t.variable_degrees(), t.check_degrees()
    dv, dc = int(vdeg.max(initial=0)), int(cdeg.max(initial=0))
    by_var: list[list[int]] = [[] for _ in range(n)]
    by_chk: list[list[int]] = [[] for _ in range(m)]
    for v, c in sorted(map(tuple, t.edges[:, :2].tolist())):
        by_var[v].append(c + 1)
        by_chk[c].append(v + 1)
    for c in by_chk:
        c.sort()
    lines = [f"{n} {m}", f"{dv} {dc}", " ".join(map(str, vdeg)), " ".join(map(str, cdeg))]
    lines += [" ".join(map(str, row + [0] * (dv - len(row)))) for row in by_var]
    lines += [" ".join(map(str, row + [0] * (dc - len(row)))) for row in by_chk]
    return "\n".join(lines) + "\n"


class AlistError(ValueError):
    pass


def from_alist(text: str) -> TannerGraph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        nums = [[int(x) for x in r] for r in rows]
    except ValueError as exc:
        raise AlistError("non-integer token in alist") from exc
    if len(nums) < 4 or len(nums[0]) != 2 or len(nums[1]) != 2:
        raise AlistError("alist header is incomplete")
    n, m = nums[0]
    vdeg, cdeg = nums[2], nums[3]
    if len(vdeg) != n or len(cdeg) != m:
        raise AlistError("degree lines do not match the declared sizes")
    if len(nums) != 4 + n + m:
        raise AlistError(f"expected {4 + n + m} lines, found {len(nums)}")
    edges = []
    for v in range(n):
        nb = [c for c in nums[4 + v] if c != 0]
        if len(nb) != vdeg[v] or any(not 1 <= c <= m for c in nb):
            raise AlistError(f"variable {v + 1}: neighbour list does not match its degree")
        edges += [(v, c - 1) for c in nb]
    from_checks = []
    for c in range(m):
        nb = [v for v in nums[4 + n + c] if v != 0]
        if len(nb) != cdeg[c] or any(not 1 <= v <= n for v in nb):
            raise AlistError(f"check {c + 1}: neighbour list does not match its degree")
        from_checks += [(v - 1, c) for v in nb]
    if sorted(edges) != sorted(from_checks):
        raise AlistError("variable and check views disagree")
    arr = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    arr = np.hstack([arr, np.full((len(arr), 1), -1, dtype=np.int64)])
    return TannerGraph(n, m, arr)


def write_alist(t: TannerGraph, path: Union[str, Path]) -> None:
    Path(path).write_text(to_alist(t))


def read_alist(path: Union[str, Path]) -> TannerGraph:
    return from_alist(Path(path).read_text())


def lift_with_permutations(
    b: MatrixLike, perms: Sequence[Sequence[int]]
) -> TannerGraph:
    """Explicit copy-and-permute lifting: edge type ``e`` joins ``(v, t)`` to ``(c, perms[e][t])``."""
    p = as_protograph(b)
    perms = [np.asarray(pi, dtype=np.int64) for pi in perms]
    if len(perms) != p.num_edges:
        raise ValueError(f"need {p.num_edges} permutations, got {len(perms)}")
    T = len(perms[0])
    rows = []
    for e, c, v in p.edges:
        pi = perms[e]
        if sorted(pi.tolist()) != list(range(T)):
            raise ValueError(f"entry {e} is not a permutation of 0..{T - 1}")
        for t in range(T):
            rows.append((v * T + t, c * T + int(pi[t]), e))
    return TannerGraph(
        p.num_variables * T,
        p.num_checks * T,
        np.array(rows, dtype=np.int64),
        np.repeat(np.arange(p.num_variables), T),
        np.repeat(np.arange(p.num_checks), T),
        T,
    )
