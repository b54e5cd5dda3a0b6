"""Base matrices, protographs and their derived edge structures.

A base matrix ``B`` has one row per check node and one column per variable
node; ``B[c, v]`` counts the parallel edges between check ``c`` and variable
``v``.  Every parallel edge is its own edge type.

All indices in this package are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Union

import numpy as np

MatrixLike = Union["BaseMatrix", np.ndarray, Iterable[Iterable[int]]]


class MatrixFormatError(ValueError):
    """Raised when base-matrix text cannot be parsed."""


@dataclass(frozen=True)
class BaseMatrix:
    """Non-negative integer matrix of edge multiplicities.

    The entries are stored as a read-only ``int64`` array.
    """

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.int64, copy=True)
        if arr.ndim != 2:
            raise ValueError(f"base matrix must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("base matrix needs at least one row and one column")
        if (arr < 0).any():
            raise ValueError("base matrix entries must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @classmethod
    def coerce(cls, matrix: MatrixLike) -> "BaseMatrix":
        if isinstance(matrix, BaseMatrix):
            return matrix
        if isinstance(matrix, Protograph):
            return matrix.base
        return cls(np.asarray(matrix))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    @property
    def edge_count(self) -> int:
        return int(self.entries.sum())

    def key(self) -> bytes:
        """Hashable content key (shape plus entries)."""
        return np.array(self.shape, dtype=np.int64).tobytes() + self.entries.tobytes()

    def __eq__(self, other):
        if not isinstance(other, BaseMatrix):
            return NotImplemented
        return self.shape == other.shape and bool((self.entries == other.entries).all())

    def __hash__(self):
        return hash(self.key())

    def tolist(self) -> list[list[int]]:
        return self.entries.tolist()

    def to_text(self) -> str:
        lines = [f"{self.rows} {self.cols}"]
        lines += [" ".join(str(int(v)) for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BaseMatrix":
        """Parse ``rows cols`` followed by ``rows`` lines of integers.

        Lines starting with ``#`` and blank lines are ignored.
        """
        lines = [ln.strip() for ln in text.splitlines()]
        lines = [ln for ln in lines if ln and not ln.startswith("#")]
        if not lines:
            raise MatrixFormatError("empty base-matrix file")
        header = lines[0].split()
        if len(header) != 2:
            raise MatrixFormatError(f"header must be '<rows> <cols>', got {lines[0]!r}")
        try:
            rows, cols = int(header[0]), int(header[1])
        except ValueError as exc:
            raise MatrixFormatError(f"non-integer header {lines[0]!r}") from exc
        body = lines[1:]
        if len(body) != rows:
            raise MatrixFormatError(f"expected {rows} matrix rows, found {len(body)}")
        data = []
        for lineno, ln in enumerate(body, start=2):
            parts = ln.split()
            if len(parts) != cols:
                raise MatrixFormatError(
                    f"row {lineno - 1}: expected {cols} entries, found {len(parts)}"
                )
            try:
                row = [int(p) for p in parts]
            except ValueError as exc:
                raise MatrixFormatError(f"row {lineno - 1}: non-integer entry") from exc
            if any(v < 0 for v in row):
                raise MatrixFormatError(f"row {lineno - 1}: negative entry")
            data.append(row)
        try:
            return cls(np.array(data, dtype=np.int64).reshape(rows, cols))
        except ValueError as exc:
            raise MatrixFormatError(str(exc)) from exc


def read_base_matrix(path: Union[str, Path]) -> BaseMatrix:
    return BaseMatrix.from_text(Path(path).read_text())


def write_base_matrix(matrix: MatrixLike, path: Union[str, Path]) -> None:
    Path(path).write_text(BaseMatrix.coerce(matrix).to_text())


@dataclass(frozen=True)
class Protograph:
    """A base matrix expanded into typed edges.

    Attributes
    ----------
    base : BaseMatrix
    edge_check, edge_variable : np.ndarray
        Endpoints of each edge type, in row-major ``(check, variable)`` order
        with parallel copies adjacent.
    check_adjacency, variable_adjacency : tuple of tuples
        For edge ``e``, the other edges sharing its check (resp. variable).
        An edge is never its own neighbour.
    """

    base: BaseMatrix
    edge_check: np.ndarray = field(repr=False)
    edge_variable: np.ndarray = field(repr=False)
    check_adjacency: tuple = field(repr=False)
    variable_adjacency: tuple = field(repr=False)

    @property
    def num_checks(self) -> int:
        return self.base.rows

    @property
    def num_variables(self) -> int:
        return self.base.cols

    @property
    def num_edges(self) -> int:
        return len(self.edge_check)

    @property
    def edges(self) -> list[tuple[int, int, int]]:
        """``(edge_id, check, variable)`` triples."""
        return [
            (e, int(c), int(v))
            for e, (c, v) in enumerate(zip(self.edge_check, self.edge_variable))
        ]

    def edges_at_check(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.edge_check == c)

    def edges_at_variable(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.edge_variable == v)


def protograph_from_matrix(matrix: MatrixLike) -> Protograph:
    """Expand a base matrix into its typed edge list and neighbour sets."""
    base = BaseMatrix.coerce(matrix)
    if base.edge_count == 0:
        raise ValueError("base matrix has no edges")
    B = base.entries
    checks, variables = np.nonzero(B)
    mult = B[checks, variables]
    edge_check = np.repeat(checks, mult)
    edge_variable = np.repeat(variables, mult)
    edge_check.setflags(write=False)
    edge_variable.setflags(write=False)

    ids = np.arange(len(edge_check))
    by_check = {c: ids[edge_check == c] for c in range(base.rows)}
    by_var = {v: ids[edge_variable == v] for v in range(base.cols)}
    check_adj = tuple(
        tuple(int(j) for j in by_check[c] if j != e) for e, c in enumerate(edge_check)
    )
    var_adj = tuple(
        tuple(int(j) for j in by_var[v] if j != e) for e, v in enumerate(edge_variable)
    )
    return Protograph(base, edge_check, edge_variable, check_adj, var_adj)


def as_protograph(p: Union[Protograph, MatrixLike]) -> Protograph:
    return p if isinstance(p, Protograph) else protograph_from_matrix(p)


def design_rate(p: Union[Protograph, MatrixLike]) -> Fraction:
    """Designed rate ``1 - |C|/|V|`` as an exact fraction."""
    base = BaseMatrix.coerce(p)
    return 1 - Fraction(base.rows, base.cols)


@dataclass(frozen=True)
class DegreeProfile:
    variable_degrees: tuple[int, ...]
    check_degrees: tuple[int, ...]
    l_min: int
    d_max_check: int
    # variables of degree 0 or 1; accepted, but they never reach zero erasure
    low_degree_variables: tuple[int, ...] = ()
    empty_checks: tuple[int, ...] = ()

    @property
    def num_edges(self) -> int:
        return sum(self.variable_degrees)


def degree_profile(p: Union[Protograph, MatrixLike]) -> DegreeProfile:
    B = BaseMatrix.coerce(p).entries
    vdeg = tuple(int(x) for x in B.sum(axis=0))
    cdeg = tuple(int(x) for x in B.sum(axis=1))
    return DegreeProfile(
        variable_degrees=vdeg,
        check_degrees=cdeg,
        l_min=min(vdeg),
        d_max_check=max(cdeg),
        low_degree_variables=tuple(v for v, d in enumerate(vdeg) if d < 2),
        empty_checks=tuple(c for c, d in enumerate(cdeg) if d == 0),
    )


@dataclass(frozen=True)
class ChainCheck:
    """Outcome of the degree-two chain check; ``offending_checks`` are 0-based."""

    passed: bool
    offending_checks: tuple[int, ...]

    def __bool__(self):
        return self.passed


def degree_two_load(p: Union[Protograph, MatrixLike]) -> np.ndarray:
    """Per check, the number of edges (with multiplicity) to degree-2 variables."""
    B = BaseMatrix.coerce(p).entries
    deg2 = B.sum(axis=0) == 2
    return B[:, deg2].sum(axis=1)


def check_chain_constraint(p: Union[Protograph, MatrixLike]) -> ChainCheck:
    """At most one edge from each check may reach a degree-two variable.

    A degree-two variable attached to one check by a double edge loads that
    check twice and fails.
    """
    load = degree_two_load(p)
    bad = tuple(int(c) for c in np.flatnonzero(load > 1))
    return ChainCheck(passed=not bad, offending_checks=bad)
