import pytest
from hypothesis import given

from aqtree.topology import (
    InvalidTopology,
    TreeNetwork,
    build_line,
    build_star,
    build_tree,
    path_to_root,
    random_tree,
)
from conftest import rng, trees


def test_line_of_three():
    net = build_line(3, 1)
    assert net.parent == (1, 2, None)
    assert net.root == 2
    assert net.edges() == [0, 1]


def test_single_node_line():
    net = build_line(1, 1)
    assert net.root == 0
    assert net.edges() == []


def test_line_of_twenty():
    net = build_line(20, 2)
    assert len(net.edges()) == 19
    assert net.capacity == 2
    assert net.root == 19


@pytest.mark.parametrize("n,c", [(0, 1), (3, 0)])
def test_line_rejects_bad_arguments(n, c):
    with pytest.raises(ValueError):
        build_line(n, c)


def test_two_cycle_is_invalid():
    with pytest.raises(InvalidTopology):
        build_tree([1, 0, None], 1)


def test_two_roots_is_invalid():
    with pytest.raises(InvalidTopology):
        build_tree([None, None, 0], 1)


def test_self_loop_and_range():
    with pytest.raises(InvalidTopology):
        build_tree([0, None], 1)
    with pytest.raises(InvalidTopology):
        build_tree([5, None], 1)


def test_star():
    net = build_star(4, 2)
    assert net.root == 0
    assert all(net.parent[v] == 0 for v in range(1, 5))
    assert sorted(net.children[0]) == [1, 2, 3, 4]


def test_random_tree_is_seeded():
    assert random_tree(30, 1, rng(4)) == random_tree(30, 1, rng(4))


@given(trees())
def test_every_path_reaches_the_root(net: TreeNetwork):
    for v in range(net.n):
        path = path_to_root(net, v)
        assert path[-1] == net.root
        assert len(path) == net.depth[v] + 1


@given(trees())
def test_scan_order_sorted_by_depth_then_id(net):
    order = net.scan_order()
    assert sorted(order) == list(range(net.n))
    assert order == sorted(order, key=lambda v: (net.depth[v], v))


@given(trees())
def test_subtree_matrix_marks_route_edges(net):
    m = net.subtree_matrix()
    for u in range(net.n):
        route = set(path_to_root(net, u)[:-1])
        assert {e for e in range(net.n) if m[u, e]} == route
