from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from protoldpc.protograph import (
    BaseMatrix,
    MatrixFormatError,
    check_chain_constraint,
    degree_profile,
    degree_two_load,
    design_rate,
    protograph_from_matrix,
    read_base_matrix,
    write_base_matrix,
)

matrices = st.tuples(st.integers(1, 4), st.integers(1, 5)).flatmap(
    lambda s: arrays(np.int64, s, elements=st.integers(0, 3))
).filter(lambda a: a.sum() > 0)


def test_fig1a_counts(fig1a):
    p = protograph_from_matrix(fig1a)
    assert (p.num_edges, p.num_checks, p.num_variables) == (10, 3, 4)


def test_single_edge_has_no_neighbours():
    p = protograph_from_matrix([[1]])
    assert p.num_edges == 1
    assert p.check_adjacency == ((),)
    assert p.variable_adjacency == ((),)


def test_regular_33_neighbourhoods():
    p = protograph_from_matrix([[3, 3]])
    assert p.num_edges == 6
    assert all(len(a) == 5 for a in p.check_adjacency)
    assert all(len(a) == 2 for a in p.variable_adjacency)


def test_edge_order_is_row_major_with_multiplicity():
    p = protograph_from_matrix([[0, 2], [1, 0]])
    assert p.edges == [(0, 0, 1), (1, 0, 1), (2, 1, 0)]


def test_all_zero_matrix_rejected():
    with pytest.raises(ValueError):
        protograph_from_matrix([[0, 0], [0, 0]])


@pytest.mark.parametrize("bad", [[[-1, 1]], np.zeros((0, 2)), [1, 2, 3]])
def test_base_matrix_invariants(bad):
    with pytest.raises(ValueError):
        BaseMatrix(np.asarray(bad))


def test_base_matrix_is_read_only():
    b = BaseMatrix(np.array([[1, 2]]))
    with pytest.raises(ValueError):
        b.entries[0, 0] = 5


def test_design_rates(fig1a, eq8):
    assert design_rate(fig1a) == Fraction(1, 4)
    assert design_rate(eq8) == Fraction(1, 2)
    assert design_rate(np.ones((3, 3), dtype=int)) == 0


def test_degree_profile_eq8(eq8):
    prof = degree_profile(eq8)
    assert prof.variable_degrees == (3, 3, 3, 3, 18, 2, 5, 2)
    assert prof.check_degrees == (14, 7, 9, 9)
    assert prof.l_min == 2 and prof.d_max_check == 14


def test_degree_profile_small(fig1a):
    prof = degree_profile([[3, 3]])
    assert prof.variable_degrees == (3, 3) and prof.check_degrees == (6,)
    prof = degree_profile(fig1a)
    assert prof.variable_degrees == (2, 3, 3, 2)
    assert prof.check_degrees == (3, 4, 3)


def test_low_degree_columns_flagged():
    prof = degree_profile([[1, 0, 2], [0, 0, 1]])
    assert prof.low_degree_variables == (0, 1)
    assert prof.empty_checks == ()


def test_chain_constraint_optimized_matrices(eq7, eq8):
    assert check_chain_constraint(eq8)
    assert check_chain_constraint(eq7)


def test_chain_constraint_double_edge_fails():
    # variable 0 has degree 2, both edges on check 0
    res = check_chain_constraint([[2, 1], [0, 3]])
    assert not res
    assert res.offending_checks == (0,)


def test_chain_constraint_mutated_eq8(eq8):
    b = eq8.copy()
    b[2, 6] = 1
    res = check_chain_constraint(b)
    assert not res.passed
    assert 2 in res.offending_checks


@given(matrices)
def test_edge_counts_agree(b):
    p = protograph_from_matrix(b)
    prof = degree_profile(p)
    assert sum(prof.variable_degrees) == sum(prof.check_degrees) == p.num_edges


@given(matrices)
def test_adjacency_matches_brute_force(b):
    p = protograph_from_matrix(b)
    E = p.num_edges
    for e in range(E):
        same_c = {j for j in range(E) if j != e and p.edge_check[j] == p.edge_check[e]}
        same_v = {j for j in range(E) if j != e and p.edge_variable[j] == p.edge_variable[e]}
        assert set(p.check_adjacency[e]) == same_c
        assert set(p.variable_adjacency[e]) == same_v
        assert e not in p.check_adjacency[e]


@given(matrices)
def test_adjacency_symmetric(b):
    p = protograph_from_matrix(b)
    for i, nb in enumerate(p.check_adjacency):
        for j in nb:
            assert i in p.check_adjacency[j]
    for i, nb in enumerate(p.variable_adjacency):
        for j in nb:
            assert i in p.variable_adjacency[j]


@given(matrices)
def test_deterministic_edge_order(b):
    assert protograph_from_matrix(b).edges == protograph_from_matrix(b.copy()).edges


@given(matrices)
def test_chain_pass_implies_load_bound(b):
    res = check_chain_constraint(b)
    deg2 = b.sum(axis=0) == 2
    manual = b[:, deg2].sum(axis=1)
    assert np.array_equal(degree_two_load(b), manual)
    assert res.passed == bool((manual <= 1).all())


def test_text_round_trip(tmp_path, eq7):
    path = tmp_path / "m.txt"
    write_base_matrix(eq7, path)
    assert read_base_matrix(path) == BaseMatrix(eq7)


def test_text_comments_and_blank_lines():
    b = BaseMatrix.from_text("# note\n2 2\n\n1 0\n# mid\n0 1\n")
    assert b.tolist() == [[1, 0], [0, 1]]


@pytest.mark.parametrize(
    "text",
    ["", "2\n1 1\n", "2 2\n1 1\n", "1 2\n1\n", "1 2\n1 a\n", "1 2\n1 -1\n", "x y\n"],
)
def test_text_parse_errors(text):
    with pytest.raises(MatrixFormatError):
        BaseMatrix.from_text(text)


def test_equality_and_hash():
    a, b = BaseMatrix([[1, 2]]), BaseMatrix(np.array([[1, 2]]))
    assert a == b and hash(a) == hash(b)
    assert BaseMatrix([[1, 2]]) != BaseMatrix([[1], [2]])
