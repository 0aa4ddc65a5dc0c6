import pytest
from hypothesis import given

from aqtree import oracles
from aqtree.policies import (
    INVERTED_PRIORITY,
    FIE,
    PathKind,
    fie_activation_paths,
    fie_decide,
    get_policy,
    greedy_decide,
    local_downhill_decide,
    local_fie_decide,
)
from aqtree.topology import build_line
from conftest import configurations


def hand_state():
    # v1..v6 hold (0,2,1,0,3,1), the sink is id 6
    return build_line(7, 1), [0, 2, 1, 0, 3, 1, 0]


def test_all_empty_gives_no_paths():
    net = build_line(5, 2)
    ap = fie_activation_paths(net, [0] * 5)
    assert ap.paths == ()
    assert fie_decide(net, [0] * 5) == frozenset()


def test_flat_line_of_ones():
    net = build_line(3, 1)
    ap = fie_activation_paths(net, [1, 1, 0])
    assert [(p.kind, p.nodes) for p in ap.paths] == [(PathKind.FLAT, (0, 1, 2))]
    assert ap.activated == {0, 1}


def test_hand_worked_paths_and_forwarders():
    net, loads = hand_state()
    ap = fie_activation_paths(net, loads)
    kinds = {p.kind: p.nodes for p in ap.paths}
    assert kinds[PathKind.DOWNHILL_TO_SINK] == (4, 5, 6)
    assert kinds[PathKind.DOWNHILL_TO_EMPTY] == (1, 2, 3)
    assert fie_decide(net, loads) == {1, 2, 4, 5}
    # the empty terminal is on a path but has nothing to send
    assert 3 in ap.nodes and 3 not in ap.activated


def test_single_tall_node_next_to_sink():
    net = build_line(2, 2)
    ap = fie_activation_paths(net, [5, 0])
    assert [(p.kind, p.nodes) for p in ap.paths] == [(PathKind.DOWNHILL_TO_SINK, (0, 1))]
    assert ap.activated == {0}


@pytest.mark.parametrize("own,parent,want", [(1, 0, True), (1, 1, False), (0, 0, False), (2, None, True)])
def test_local_fie_rule(own, parent, want):
    assert local_fie_decide(own, parent) is want


@pytest.mark.parametrize("own,parent,want", [(2, 1, True), (1, 1, False), (1, None, True), (0, None, False)])
def test_local_downhill_rule(own, parent, want):
    assert local_downhill_decide(own, parent) is want


def test_greedy_rule():
    assert greedy_decide(3) and not greedy_decide(0)


def test_unknown_policy_name():
    with pytest.raises(ValueError):
        get_policy("lifo")


@given(configurations(max_n=9))
def test_fie_paths_pass_the_exhaustive_oracle(case):
    net, loads = case
    ap = fie_activation_paths(net, loads)
    assert oracles.activation_path_problems(net, loads, ap, maximality=True) == []


@given(configurations(max_n=9))
def test_forwarders_hold_packets_and_avoid_the_sink(case):
    net, loads = case
    fw = fie_decide(net, loads)
    assert net.root not in fw
    assert all(loads[v] > 0 for v in fw)


def test_inverted_priority_is_caught_by_the_oracle():
    net, loads = hand_state()
    # a flat run that could swallow the downhill path's nodes once flats go first
    loads = [0, 1, 1, 2, 1, 1, 0]
    good = fie_activation_paths(net, loads)
    bad = FIE(INVERTED_PRIORITY).paths(net, loads)
    assert oracles.activation_path_problems(net, loads, good) == []
    assert oracles.activation_path_problems(net, loads, bad) != []
