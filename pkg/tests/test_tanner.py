import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from protoldpc.graphs.regular import (
    complete_bipartite,
    edge_coloring,
    girth,
    random_regular_bipartite,
)
from protoldpc.graphs.tanner import (
    AlistError,
    SocketPartition,
    TannerGraph,
    from_alist,
    lift_with_permutations,
    node_split,
    partitions_to_matrix,
    protograph_to_partitions,
    read_alist,
    to_alist,
    verify_lifting,
    write_alist,
)
from protoldpc.protograph import BaseMatrix, design_rate, read_base_matrix

matrices = st.tuples(st.integers(1, 3), st.integers(1, 4)).flatmap(
    lambda s: arrays(np.int64, s, elements=st.integers(0, 3))
).filter(lambda a: (a.sum(axis=0) > 0).all() and (a.sum(axis=1) > 0).all())


def test_printed_example_partitions(data_dir):
    P = ({1, 2}, {3, 4, 5}, {6, 7, 8}, {9, 10, 11, 12})
    Q = ({1, 3, 6, 9, 10, 11}, {2, 4, 5, 7, 8, 12})
    B = partitions_to_matrix(SocketPartition(12, P, Q))
    assert B.tolist() == [[1, 1, 1, 3], [1, 2, 2, 1]]
    assert B == read_base_matrix(data_dir / "partition_example.txt")
    assert design_rate(B) == 0.5


def test_partition_file_matches(data_dir):
    B = read_base_matrix(data_dir / "partition_example.txt")
    sp = protograph_to_partitions(B)
    assert partitions_to_matrix(sp) == B
    assert design_rate(B) == pytest.approx(0.5)


def test_partition_validation():
    with pytest.raises(ValueError):
        SocketPartition(3, ({1, 2},), ({1, 2, 3},))
    with pytest.raises(ValueError):
        SocketPartition(2, ({1, 2}, set()), ({1, 2},))
    with pytest.raises(ValueError):
        SocketPartition(2, ({1, 2},), ({1, 3},))


def test_single_entry():
    sp = protograph_to_partitions([[1]])
    assert sp.d == 1 and sp.P == (frozenset({1}),) and sp.Q == (frozenset({1}),)
    assert partitions_to_matrix(sp).tolist() == [[1]]


@given(matrices)
def test_partition_round_trip(b):
    sp = protograph_to_partitions(b)
    assert sp.d == b.sum()
    assert partitions_to_matrix(sp) == BaseMatrix(b)


def test_node_split_regular_33(lifted33, x513):
    t = lifted33
    assert (t.variable_count, t.check_count, t.copies) == (2184, 1092, 1092)
    assert t.edge_count == x513.edge_count
    assert (t.variable_degrees() == 3).all() and (t.check_degrees() == 6).all()
    assert verify_lifting(t, [[3, 3]])


def test_node_split_preserves_girth_on_k66():
    g = edge_coloring(complete_bipartite(6))
    sp = protograph_to_partitions([[1, 2, 0], [1, 0, 2]])
    t = node_split(g, sp)
    assert verify_lifting(t, [[1, 2, 0], [1, 0, 2]])
    assert girth(t) >= girth(g)


def test_node_split_needs_matching_degree(x513):
    with pytest.raises(Exception):
        node_split(x513, protograph_to_partitions([[1, 1]]))


@settings(max_examples=15, deadline=None)
@given(matrices, st.integers(0, 10**6))
def test_node_split_random_sources(b, seed):
    sp = protograph_to_partitions(b)
    half = sp.d + 5
    g = random_regular_bipartite(sp.d, half, girth_floor=4, seed=seed)
    t = node_split(g, sp)
    res = verify_lifting(t, b)
    assert res, res.problems
    assert girth(t) >= girth(g)
    assert np.array_equal(
        np.bincount(t.variable_group, weights=t.variable_degrees()) / half, b.sum(axis=0)
    )


def test_verify_detects_redirected_edge(lifted33):
    e = lifted33.edges.copy()
    e[0, 1] = (e[0, 1] + 1) % lifted33.check_count
    res = verify_lifting(lifted33.with_edges(e), [[3, 3]])
    assert not res and res.problems


def test_verify_detects_wrong_matrix(lifted33):
    assert not verify_lifting(lifted33, [[2, 4]])
    assert not verify_lifting(lifted33, [[3, 3], [0, 0]])


def test_verify_needs_groups():
    t = TannerGraph(2, 1, np.array([[0, 0, 0], [1, 0, 1]]))
    assert not verify_lifting(t, [[1, 1]])


@settings(max_examples=25, deadline=None)
@given(matrices, st.integers(1, 6), st.integers(0, 10**6))
def test_explicit_liftings_pass(b, T, seed):
    rng = np.random.default_rng(seed)
    perms = [rng.permutation(T) for _ in range(int(b.sum()))]
    t = lift_with_permutations(b, perms)
    assert verify_lifting(t, b)


def test_identity_lifting_fig1a(fig1a):
    t = lift_with_permutations(fig1a, [[0, 1]] * int(fig1a.sum()))
    assert verify_lifting(t, fig1a)
    assert t.variable_count == 8 and t.check_count == 6


def test_lifting_rejects_non_permutation(fig1a):
    with pytest.raises(ValueError):
        lift_with_permutations(fig1a, [[0, 0]] * int(fig1a.sum()))


def test_alist_round_trip(tmp_path, lifted33):
    path = tmp_path / "c.alist"
    write_alist(lifted33, path)
    back = read_alist(path)
    assert (back.variable_count, back.check_count) == (2184, 1092)
    a = sorted(map(tuple, lifted33.edges[:, :2].tolist()))
    assert sorted(map(tuple, back.edges[:, :2].tolist())) == a
    assert to_alist(back) == path.read_text()


def test_alist_hand_example():
    t = TannerGraph(3, 2, np.array([[0, 0, -1], [1, 0, -1], [1, 1, -1], [2, 1, -1]]))
    assert to_alist(t) == "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n"


@pytest.mark.parametrize(
    "text",
    [
        "",
        "3 2\n1 2\n",
        "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n",
        "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 4\n",
        "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 3\n2 3\n",
        "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 x\n2 0\n1 2\n2 3\n",
    ],
)
def test_alist_malformed(text):
    with pytest.raises(AlistError):
        from_alist(text)
