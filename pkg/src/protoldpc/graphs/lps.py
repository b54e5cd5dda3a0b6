"""LPS Cayley graphs X^{p,q} over PGL(2, q) / PSL(2, q).

Generators come from the ``p + 1`` integer quaternions
``a0^2 + a1^2 + a2^2 + a3^2 = p`` with ``a0 > 0`` odd and ``a1, a2, a3``
even, each mapped to

    [[a0 + i a1,  a2 + i a3],
     [-a2 + i a3, a0 - i a1]]   (mod q, i^2 = -1).

Group elements are 2x2 matrices mod ``q`` taken up to scalars and stored
with their first non-zero entry scaled to 1.  Both primes must be 1 mod 4.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from itertools import product

import numpy as np

from .regular import GraphError, RegularGraph, graph_from_edges

Mat = tuple[int, int, int, int]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    return all(n % f for f in range(3, r + 1, 2))


def is_quadratic_residue(a: int, q: int) -> bool:
    """Exhaustive: is ``a`` a non-zero square mod ``q``."""
    a %= q
    return a != 0 and any((x * x) % q == a for x in range(1, q))


@dataclass(frozen=True)
class LpsParams:
    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if p == q:
            raise GraphError("p and q must be distinct")
        for name, v in (("p", p), ("q", q)):
            if v <= 2 or not is_prime(v):
                raise GraphError(f"{name}={v} is not an odd prime")
            if v % 4 != 1:
                raise GraphError(f"{name}={v} must be 1 mod 4 for this construction")
        if not q > 2 * math.sqrt(p):
            raise GraphError(f"need q > 2*sqrt(p); got p={p}, q={q}")

    @property
    def residue_case(self) -> bool:
        return is_quadratic_residue(self.p, self.q)

    @property
    def vertex_count(self) -> int:
        n = self.q * (self.q**2 - 1)
        return n // 2 if self.residue_case else n

    @property
    def girth_bound(self) -> float:
        """Lower bound on girth: 2 log_p q, or 4 log_p q - log_p 4 if bipartite."""
        lg = math.log(self.q, self.p)
        return 2 * lg if self.residue_case else 4 * lg - math.log(4, self.p)


def _sqrt_minus_one(q: int) -> int:
    return next(i for i in range(1, q) if (i * i) % q == q - 1)


def _normalize(m: Mat, q: int) -> Mat:
    lead = next(v for v in m if v % q)
    inv = pow(lead, -1, q)
    return tuple((v * inv) % q for v in m)  # type: ignore[return-value]


def _mul(a: Mat, b: Mat, q: int) -> Mat:
    return (
        (a[0] * b[0] + a[1] * b[2]) % q,
        (a[0] * b[1] + a[1] * b[3]) % q,
        (a[2] * b[0] + a[3] * b[2]) % q,
        (a[2] * b[1] + a[3] * b[3]) % q,
    )


def quaternion_solutions(p: int) -> list[tuple[int, int, int, int]]:
    r = math.isqrt(p)
    odd = [a for a in range(1, r + 1, 2)]
    even = [a for a in range(-r, r + 1) if a % 2 == 0]
    sols = [
        (a0, a1, a2, a3)
        for a0, a1, a2, a3 in product(odd, even, even, even)
        if a0 * a0 + a1 * a1 + a2 * a2 + a3 * a3 == p
    ]
    return sorted(sols)


def lps_generators(params: LpsParams) -> tuple[list[Mat], list[int]]:
    """Normalised generator matrices and, per generator, the index of its inverse."""
    p, q = params.p, params.q
    i = _sqrt_minus_one(q)
    sols = quaternion_solutions(p)
    if len(sols) != p + 1:
        raise GraphError(f"expected {p + 1} quaternions of norm {p}, found {len(sols)}")
    gens = [
        _normalize(((a0 + i * a1) % q, (a2 + i * a3) % q, (-a2 + i * a3) % q, (a0 - i * a1) % q), q)
        for a0, a1, a2, a3 in sols
    ]
    if len(set(gens)) != len(gens):
        raise GraphError("generators collide mod q")
    index = {g: k for k, g in enumerate(gens)}
    # the conjugate quaternion is the inverse up to the scalar p
    inverse = [
        index[_normalize(((a0 - i * a1) % q, (-a2 - i * a3) % q, (a2 - i * a3) % q, (a0 + i * a1) % q), q)]
        for a0, a1, a2, a3 in sols
    ]
    return gens, inverse


def lps_generate(params: LpsParams) -> RegularGraph:
    """Build X^{p,q}.

    Vertices are numbered in lexicographic order of their normalised
    matrices.  In the non-residue case the graph is bipartite (left side:
    square determinant), and edge ``(g, g s_k)`` with ``g`` on the left gets
    colour ``k + 1``.  In the residue case the graph is not bipartite; socket
    ``k`` of every vertex ``g`` holds the edge to ``g s_k``, so the double
    cover inherits a proper colouring.
    """
    p, q = params.p, params.q
    gens, inverse = lps_generators(params)
    identity: Mat = (1, 0, 0, 1)
    seen = {identity}
    queue = deque([identity])
    while queue:
        g = queue.popleft()
        for s in gens:
            h = _normalize(_mul(g, s, q), q)
            if h not in seen:
                seen.add(h)
                queue.append(h)
    verts = sorted(seen)
    if len(verts) != params.vertex_count:
        raise GraphError(f"generated {len(verts)} vertices, expected {params.vertex_count}")
    idx = {v: n for n, v in enumerate(verts)}
    nbr = np.array(
        [[idx[_normalize(_mul(g, s, q), q)] for s in gens] for g in verts], dtype=np.int64
    )
    n, d = len(verts), p + 1
    meta = {
        "p": p,
        "q": q,
        "residue_case": params.residue_case,
        "girth_bound": params.girth_bound,
        "generators": [list(g) for g in gens],
    }
    name = f"X({p},{q})"

    if not params.residue_case:
        squares = {(x * x) % q for x in range(1, q)}
        left = np.array([((m[0] * m[3] - m[1] * m[2]) % q) in squares for m in verts])
        L = np.flatnonzero(left)
        edges = np.stack([np.repeat(L, d), nbr[L].ravel()], axis=1)
        colors = np.tile(np.arange(1, d + 1), len(L))
        g = graph_from_edges(n, edges, left, colors, name)
        return RegularGraph(g.edges, g.sockets, g.left, g.colors, name, meta)

    edges = []
    sockets = np.full((n, d), -1, dtype=np.int64)
    for u in range(n):
        for k in range(d):
            w = int(nbr[u, k])
            if (u, k) < (w, inverse[k]):
                sockets[u, k] = sockets[w, inverse[k]] = len(edges)
                edges.append((u, w))
    if (sockets < 0).any():
        raise GraphError("inconsistent generator inverses")
    return RegularGraph(np.array(edges, dtype=np.int64), sockets, None, None, name, meta)


def find_lps_params(d: int, max_p: int = 200, max_vertices: int = 200_000) -> LpsParams:
    """Smallest usable ``(p, q)`` whose degree ``p + 1`` is a multiple of ``d``.

    With ``p = 1 mod 4`` the degree ``p + 1`` is ``2 mod 4``, so no pair exists
    when ``4 | d``.
    """
    if d % 4 == 0:
        raise GraphError(
            f"no LPS degree p+1 with p = 1 mod 4 is divisible by d={d}; "
            "use a random source (--source random) instead"
        )
    for p in range(5, max_p + 1, 4):
        if not is_prime(p) or (p + 1) % d:
            continue
        q = 5
        while True:
            if q != p and is_prime(q) and q > 2 * math.sqrt(p):
                params = LpsParams(p, q)
                if params.vertex_count <= max_vertices:
                    return params
                break
            q += 4
    raise GraphError(
        f"no LPS pair found for d={d} with p <= {max_p} and at most {max_vertices} vertices; "
        "use a random source (--source random) instead"
    )
